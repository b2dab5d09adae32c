#pragma once

#include <stdexcept>
#include <string>

namespace fedtn {

// Failure taxonomy. Standard exception types cover most contract
// violations; the types below carry extra context:
//
//   std::length_error     capacity (qubit limits, oversubscribed partitions)
//   std::out_of_range     bad qubit / index arguments
//   std::invalid_argument broken call contracts (shape or size mismatch)
//   std::domain_error     values outside their mathematical domain
//   parse_error           malformed input row, carries 1-based line number
//   format_error          structurally broken file or missing metadata
//   numeric_error         non-finite values reaching the optimizer

struct parse_error : std::runtime_error {
  int line;
  parse_error(const std::string& msg, int line_number)
      : std::runtime_error(msg + " (line " + std::to_string(line_number) + ")"),
        line(line_number) {}
};

struct format_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fedtn
