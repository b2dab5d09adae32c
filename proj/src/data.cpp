#include "fedtn/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "fedtn/rng.hpp"

namespace fedtn::data {

namespace {

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string strip_cr(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == '\n')) s.pop_back();
  return s;
}

bool is_integer_token(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

double parse_pixel(const std::string& token, int line_no) {
  if (token.empty()) {
    throw parse_error("empty pixel value", line_no);
  }
  if (is_integer_token(token)) {
    return clamp01(std::stod(token) / 255.0);
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return clamp01(v);
  } catch (const std::exception&) {
    throw parse_error("bad pixel value '" + token + "'", line_no);
  }
}

int parse_label(const std::string& token, int line_no) {
  if (token == "0") return 0;
  if (token == "1") return 1;
  throw parse_error("label must be 0 or 1, got '" + token + "'", line_no);
}

// `# w=W h=H` shape comment
bool parse_shape_comment(const std::string& line, int* w, int* h) {
  if (line.empty() || line[0] != '#') return false;
  int pw = 0, ph = 0;
  const auto wpos = line.find("w=");
  const auto hpos = line.find("h=");
  if (wpos == std::string::npos || hpos == std::string::npos) return false;
  pw = std::atoi(line.c_str() + wpos + 2);
  ph = std::atoi(line.c_str() + hpos + 2);
  if (pw <= 0 || ph <= 0) return false;
  *w = pw;
  *h = ph;
  return true;
}

std::string format_pixel(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  std::string s(buf);
  // keep a decimal marker so a reload does not re-divide by 255
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
    s += ".0";
  }
  return s;
}

}  // namespace

long Dataset::count_label(int label) const {
  return std::count_if(samples.begin(), samples.end(),
                       [label](const ImageSample& s) { return s.label == label; });
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw format_error("cannot open " + path.string());
  }
  Dataset d;
  d.name = path.stem().string();

  std::string line;
  int line_no = 0;
  int width = 0, height = 0;
  bool have_shape = false;

  // optional shape comment, then the header
  if (!std::getline(in, line)) {
    throw format_error(path.string() + " is empty");
  }
  ++line_no;
  line = strip_cr(line);
  if (parse_shape_comment(line, &width, &height)) {
    have_shape = true;
    if (!std::getline(in, line)) {
      throw format_error(path.string() + " has no header row");
    }
    ++line_no;
    line = strip_cr(line);
  }
  auto header = split_fields(line);
  if (header.empty() || header[0] != "label") {
    throw format_error(path.string() + " header must start with 'label'");
  }
  const int n_pixels = static_cast<int>(header.size()) - 1;
  if (n_pixels < 1) {
    throw format_error(path.string() + " header has no pixel columns");
  }
  if (have_shape) {
    if (width * height != n_pixels) {
      throw format_error(path.string() + ": shape comment says " +
                         std::to_string(width * height) + " pixels, header has " +
                         std::to_string(n_pixels));
    }
  } else {
    const int side = static_cast<int>(std::lround(std::sqrt(double(n_pixels))));
    if (side * side != n_pixels) {
      throw format_error(path.string() +
                         ": no shape comment and pixel count is not square");
    }
    width = height = side;
  }

  long row = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (static_cast<int>(fields.size()) != n_pixels + 1) {
      throw parse_error("expected " + std::to_string(n_pixels + 1) + " fields, got " +
                        std::to_string(fields.size()), line_no);
    }
    ImageSample s;
    s.label = parse_label(fields[0], line_no);
    s.pixels.resize(height, width);
    for (int k = 0; k < n_pixels; ++k) {
      s.pixels(k / width, k % width) = parse_pixel(fields[k + 1], line_no);
    }
    s.id = d.name + "#" + std::to_string(row);
    d.samples.push_back(std::move(s));
    ++row;
  }
  return d;
}

void save_csv(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw format_error("cannot write " + path.string());
  }
  const int h = d.height(), w = d.width();
  out << "# w=" << w << " h=" << h << "\n";
  out << "label";
  for (int k = 0; k < h * w; ++k) out << ",p" << k;
  out << "\n";
  for (const auto& s : d.samples) {
    out << s.label;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        out << ',' << format_pixel(s.pixels(r, c));
      }
    }
    out << "\n";
  }
}

namespace {

// whitespace/comment-aware integer reader for the PGM header
long pgm_read_int(const std::string& bytes, std::size_t* pos,
                  const std::string& file) {
  std::size_t i = *pos;
  while (i < bytes.size()) {
    if (bytes[i] == '#') {
      while (i < bytes.size() && bytes[i] != '\n') ++i;
    } else if (std::isspace(static_cast<unsigned char>(bytes[i]))) {
      ++i;
    } else {
      break;
    }
  }
  if (i >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[i]))) {
    throw format_error(file + ": malformed PGM header");
  }
  long v = 0;
  while (i < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[i]))) {
    v = v * 10 + (bytes[i] - '0');
    ++i;
  }
  *pos = i;
  return v;
}

ImageSample load_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw format_error("cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string bytes = buf.str();
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw format_error(path.string() + ": not a binary (P5) PGM file");
  }
  std::size_t pos = 2;
  const long w = pgm_read_int(bytes, &pos, path.string());
  const long h = pgm_read_int(bytes, &pos, path.string());
  const long maxval = pgm_read_int(bytes, &pos, path.string());
  if (w < 1 || h < 1 || maxval < 1 || maxval > 65535) {
    throw format_error(path.string() + ": bad PGM dimensions");
  }
  ++pos;  // single whitespace after maxval
  const int bytes_per = maxval < 256 ? 1 : 2;
  if (pos + static_cast<std::size_t>(w) * h * bytes_per > bytes.size()) {
    throw format_error(path.string() + ": truncated PGM data");
  }
  ImageSample s;
  s.pixels.resize(h, w);
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      const std::size_t k = pos + (r * w + c) * bytes_per;
      long raw = static_cast<unsigned char>(bytes[k]);
      if (bytes_per == 2) {
        raw = (raw << 8) | static_cast<unsigned char>(bytes[k + 1]);
      }
      s.pixels(r, c) = static_cast<double>(raw) / static_cast<double>(maxval);
    }
  }
  s.id = path.filename().string();
  return s;
}

}  // namespace

Dataset load_pgm_dir(const std::filesystem::path& dir,
                     const std::filesystem::path& labels_csv) {
  std::ifstream in(labels_csv);
  if (!in) {
    throw format_error("cannot open " + labels_csv.string());
  }
  std::map<std::string, int> labels;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != 2) {
      throw parse_error("labels file expects 'filename,label'", line_no);
    }
    if (line_no == 1 && fields[1] != "0" && fields[1] != "1") continue;  // header
    if (fields[1] != "0" && fields[1] != "1") {
      throw format_error(labels_csv.string() + ": label for '" + fields[0] +
                         "' must be 0 or 1");
    }
    labels[fields[0]] = fields[1] == "1" ? 1 : 0;
  }

  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename() < b.filename(); });

  Dataset d;
  d.name = dir.filename().string();
  if (files.empty()) {
    std::cerr << "warning: no .pgm files in " << dir.string() << "\n";
    return d;
  }
  for (const auto& f : files) {
    const std::string name = f.filename().string();
    auto it = labels.find(name);
    if (it == labels.end()) {
      throw format_error("no label for '" + name + "' in " + labels_csv.string());
    }
    ImageSample s = load_pgm(f);
    s.label = it->second;
    if (!d.samples.empty() && (s.pixels.rows() != d.samples.front().pixels.rows() ||
                               s.pixels.cols() != d.samples.front().pixels.cols())) {
      throw format_error(name + ": image shape differs from the rest of the set");
    }
    d.samples.push_back(std::move(s));
  }
  return d;
}

ImageSample downscale(const ImageSample& img, int out_h, int out_w) {
  const int in_h = static_cast<int>(img.pixels.rows());
  const int in_w = static_cast<int>(img.pixels.cols());
  if (out_h < 1 || out_w < 1) {
    throw std::invalid_argument("downscale target must be at least 1x1");
  }
  if (out_h > in_h || out_w > in_w) {
    throw std::invalid_argument("downscale target exceeds source size");
  }
  const double sy = static_cast<double>(in_h) / out_h;
  const double sx = static_cast<double>(in_w) / out_w;
  ImageSample out;
  out.label = img.label;
  out.id = img.id;
  out.pixels.resize(out_h, out_w);
  for (int oy = 0; oy < out_h; ++oy) {
    const double y0 = oy * sy, y1 = (oy + 1) * sy;
    const int r0 = static_cast<int>(std::floor(y0));
    const int r1 = std::min(in_h, static_cast<int>(std::ceil(y1)));
    for (int ox = 0; ox < out_w; ++ox) {
      const double x0 = ox * sx, x1 = (ox + 1) * sx;
      const int c0 = static_cast<int>(std::floor(x0));
      const int c1 = std::min(in_w, static_cast<int>(std::ceil(x1)));
      double acc = 0.0;
      for (int r = r0; r < r1; ++r) {
        const double wy = std::min(y1, double(r + 1)) - std::max(y0, double(r));
        if (wy <= 0.0) continue;
        for (int c = c0; c < c1; ++c) {
          const double wx = std::min(x1, double(c + 1)) - std::max(x0, double(c));
          if (wx <= 0.0) continue;
          acc += wy * wx * img.pixels(r, c);
        }
      }
      out.pixels(oy, ox) = acc / (sy * sx);
    }
  }
  return out;
}

SplitResult train_val_test_split(const Dataset& d, double f_train, double f_val,
                                 double f_test, std::uint64_t seed) {
  if (d.empty()) {
    throw std::invalid_argument("cannot split an empty dataset");
  }
  if (f_train < 0 || f_val < 0 || f_test < 0 ||
      std::abs(f_train + f_val + f_test - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must be non-negative and sum to 1");
  }
  Rng rng(seed);
  SplitResult out;
  out.train.name = d.name + "/train";
  out.val.name = d.name + "/val";
  out.test.name = d.name + "/test";
  for (int label = 0; label <= 1; ++label) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < d.samples.size(); ++i) {
      if (d.samples[i].label == label) pool.push_back(i);
    }
    rng.shuffle(pool);
    const long n = static_cast<long>(pool.size());
    const long n_val = static_cast<long>(std::floor(f_val * n));
    const long n_test = static_cast<long>(std::floor(f_test * n));
    const long n_train = n - n_val - n_test;  // remainder goes to train
    for (long k = 0; k < n; ++k) {
      const ImageSample& s = d.samples[pool[k]];
      if (k < n_train) {
        out.train.samples.push_back(s);
      } else if (k < n_train + n_val) {
        out.val.samples.push_back(s);
      } else {
        out.test.samples.push_back(s);
      }
    }
  }
  return out;
}

std::vector<Dataset> partition(const Dataset& d, const PartitionSpec& spec) {
  const std::size_t n_clients = spec.n_clients();
  if (n_clients == 0) {
    throw std::invalid_argument("partition spec names no clients");
  }
  if (!spec.use_counts()) {
    double sum = 0.0;
    for (double f : spec.fractions) {
      if (f < 0.0 || f > 1.0) {
        throw std::invalid_argument("partition fractions must lie in [0, 1]");
      }
      sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument("partition fractions must sum to 1");
    }
  }

  Rng rng(spec.seed);
  std::vector<Dataset> out(n_clients);
  for (std::size_t c = 0; c < n_clients; ++c) {
    out[c].name = "H" + std::to_string(c + 1);
  }

  auto assign_from_pool = [&](const std::vector<std::size_t>& pool,
                              const std::vector<long>& wanted, int label) {
    std::size_t next = 0;
    for (std::size_t c = 0; c < n_clients; ++c) {
      if (wanted[c] > static_cast<long>(pool.size() - next)) {
        throw std::length_error("partition oversubscribed: client H" +
                                std::to_string(c + 1) + " wants " +
                                std::to_string(wanted[c]) + " label-" +
                                std::to_string(label) + " samples, only " +
                                std::to_string(pool.size() - next) + " left");
      }
      for (long k = 0; k < wanted[c]; ++k) {
        out[c].samples.push_back(d.samples[pool[next++]]);
      }
    }
  };

  if (spec.use_counts() || spec.stratified) {
    for (int label = 0; label <= 1; ++label) {
      std::vector<std::size_t> pool;
      for (std::size_t i = 0; i < d.samples.size(); ++i) {
        if (d.samples[i].label == label) pool.push_back(i);
      }
      rng.shuffle(pool);
      std::vector<long> wanted(n_clients, 0);
      if (spec.use_counts()) {
        for (std::size_t c = 0; c < n_clients; ++c) {
          wanted[c] = label == 0 ? spec.counts[c].n_label0 : spec.counts[c].n_label1;
        }
      } else {
        long assigned = 0;
        for (std::size_t c = 0; c < n_clients; ++c) {
          wanted[c] = static_cast<long>(std::floor(spec.fractions[c] * pool.size()));
          assigned += wanted[c];
        }
        long rem = static_cast<long>(pool.size()) - assigned;
        for (std::size_t c = 0; rem > 0; ++c, --rem) wanted[c] += 1;
      }
      assign_from_pool(pool, wanted, label);
    }
  } else {
    std::vector<std::size_t> pool(d.samples.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    rng.shuffle(pool);
    std::vector<long> wanted(n_clients, 0);
    long assigned = 0;
    for (std::size_t c = 0; c < n_clients; ++c) {
      wanted[c] = static_cast<long>(std::floor(spec.fractions[c] * pool.size()));
      assigned += wanted[c];
    }
    long rem = static_cast<long>(pool.size()) - assigned;
    for (std::size_t c = 0; rem > 0; ++c, --rem) wanted[c] += 1;
    std::size_t next = 0;
    for (std::size_t c = 0; c < n_clients; ++c) {
      for (long k = 0; k < wanted[c]; ++k) {
        out[c].samples.push_back(d.samples[pool[next++]]);
      }
    }
  }
  return out;
}

Dataset synth_blobs(int n, int h, int w, double noise_sd, std::uint64_t seed) {
  if (h < 4 || w < 4) {
    throw std::invalid_argument("synth_blobs needs h, w >= 4");
  }
  Rng rng(seed);
  Dataset d;
  d.name = "synth";
  d.samples.reserve(n);
  for (int i = 0; i < n; ++i) {
    ImageSample s;
    s.label = i % 2;
    s.id = "synth#" + std::to_string(i);
    s.pixels.resize(h, w);
    for (int r = 0; r < h; ++r) {
      const bool in_top = r < h / 2;
      const bool bright = (s.label == 1) ? in_top : !in_top;
      const double base = bright ? 0.9 : 0.1;
      for (int c = 0; c < w; ++c) {
        s.pixels(r, c) = clamp01(base + noise_sd * rng.normal());
      }
    }
    d.samples.push_back(std::move(s));
  }
  return d;
}

}  // namespace fedtn::data
