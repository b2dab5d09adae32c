#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fedtn/model.hpp"
#include "support/oracles.hpp"

using namespace fedtn;
using namespace fedtn::model;

namespace {

constexpr double kPi = 3.14159265358979323846;

qtn::CircuitTemplate ttn4() {
  return qtn::build_ttn(4, {qtn::BlockType::Simple, 1});
}

Eigen::MatrixXd random_image(Rng& rng, int h, int w) {
  Eigen::MatrixXd img(h, w);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) img(r, c) = rng.uniform01();
  }
  return img;
}

data::ImageSample make_sample(Eigen::MatrixXd img, int label, const char* id) {
  return {std::move(img), label, id};
}

}  // namespace

TEST_CASE("init_params determinism and shapes") {
  const auto tmpl = ttn4();
  auto a = init_params(tmpl, HeadKind::Dense, 16, 99);
  auto b = init_params(tmpl, HeadKind::Dense, 16, 99);
  CHECK(a.quantum == b.quantum);
  CHECK(a.head_weights == b.head_weights);
  CHECK(a.head_bias == 0.0);

  auto c = init_params(tmpl, HeadKind::Dense, 16, 100);
  CHECK(a.quantum != c.quantum);

  auto gap = init_params(tmpl, HeadKind::Gap, 16, 99);
  CHECK(gap.head_weights.size() == 0);
  CHECK(total_param_count(gap) == qtn::param_count(tmpl));
  CHECK(total_param_count(a) == qtn::param_count(tmpl) + 16 + 1);

  const double limit = std::sqrt(6.0 / 17.0);
  CHECK(a.quantum.cwiseAbs().maxCoeff() <= kPi);
  CHECK(a.head_weights.cwiseAbs().maxCoeff() <= limit);
}

TEST_CASE("forward: identity circuit on a zero image saturates the gap head") {
  auto p = init_params(ttn4(), HeadKind::Gap, 4, 1);
  p.quantum.setZero();
  const Eigen::MatrixXd img = Eigen::MatrixXd::Zero(4, 4);
  auto pred = forward(p, img);
  for (int k = 0; k < 4; ++k) {
    CHECK(pred.patch_expectations[k] == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(pred.probability == 1.0 - 1e-7);
}

TEST_CASE("forward: zeroed dense head gives probability one half") {
  Rng rng(5);
  auto p = init_params(ttn4(), HeadKind::Dense, 4, 2);
  p.head_weights.setZero();
  p.head_bias = 0.0;
  auto pred = forward(p, random_image(rng, 4, 4));
  CHECK(pred.probability == 0.5);
}

TEST_CASE("forward matches a straight-line dense-matrix pipeline") {
  Rng rng(31);
  const auto tmpl = ttn4();
  for (auto head : {HeadKind::Dense, HeadKind::Gap}) {
    auto p = init_params(tmpl, head, 4, 7 + static_cast<int>(head));
    const Eigen::MatrixXd img = random_image(rng, 4, 4);
    auto pred = forward(p, img);

    const Eigen::MatrixXcd unitary = oracles::dense_unitary(tmpl.seq, p.quantum);
    Eigen::VectorXd z(4);
    int k = 0;
    for (int pr = 0; pr < 2; ++pr) {
      for (int pc = 0; pc < 2; ++pc, ++k) {
        qtn::Patch patch;
        patch.side = 2;
        patch.pixels.resize(4);
        for (int u = 0; u < 2; ++u) {
          for (int v = 0; v < 2; ++v) {
            patch.pixels[u * 2 + v] = img(pr * 2 + u, pc * 2 + v);
          }
        }
        Eigen::VectorXcd amps = unitary * qtn::encode_patch(patch).amplitudes;
        double e = 0.0;
        for (Eigen::Index i = 0; i < amps.size(); ++i) {
          const double prob = std::norm(amps[i]);
          e += ((i >> tmpl.readout_qubit) & 1) ? -prob : prob;
        }
        z[k] = e;
      }
    }
    double expected;
    if (head == HeadKind::Dense) {
      expected = 1.0 / (1.0 + std::exp(-(p.head_weights.dot(z) + p.head_bias)));
    } else {
      expected = (1.0 + z.mean()) / 2.0;
    }
    CHECK((pred.patch_expectations - z).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(pred.probability == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("forward rejects mismatched shapes") {
  auto p = init_params(ttn4(), HeadKind::Gap, 4, 3);
  CHECK_THROWS_AS(forward(p, Eigen::MatrixXd::Zero(5, 4)), std::invalid_argument);
  CHECK_THROWS_AS(forward(p, Eigen::MatrixXd::Zero(8, 8)), std::invalid_argument);
}

TEST_CASE("loss at a forced 0.5 prediction is ln 2") {
  Rng rng(17);
  auto p = init_params(ttn4(), HeadKind::Dense, 4, 4);
  p.head_weights.setZero();
  p.head_bias = 0.0;
  std::vector<data::ImageSample> batch = {
      make_sample(random_image(rng, 4, 4), 1, "a")};
  auto lg = loss_and_grad(p, batch, 0.0);
  CHECK(lg.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("constructed zero-data-gradient batch leaves only the decay term") {
  Rng rng(23);
  auto p = init_params(ttn4(), HeadKind::Dense, 4, 5);
  p.head_weights.setZero();
  p.head_bias = 0.0;
  const Eigen::MatrixXd img = random_image(rng, 4, 4);
  std::vector<data::ImageSample> batch = {make_sample(img, 0, "a"),
                                          make_sample(img, 1, "b")};
  const double lambda = 1e-4;
  auto lg = loss_and_grad(p, batch, lambda);
  const Eigen::VectorXd expected = lambda * flatten(p);
  CHECK(lg.grad == expected);
}

TEST_CASE("analytic gradient matches finite differences of the loss") {
  Rng rng(301);
  std::vector<data::ImageSample> batch = {
      make_sample(random_image(rng, 4, 4), 1, "a"),
      make_sample(random_image(rng, 4, 4), 0, "b"),
      make_sample(random_image(rng, 4, 4), 1, "c")};
  for (auto head : {HeadKind::Dense, HeadKind::Gap}) {
    auto p = init_params(ttn4(), head, 4, 11 + static_cast<int>(head));
    for (double lambda : {0.0, 1e-4}) {
      auto lg = loss_and_grad(p, batch, lambda);
      CHECK(lg.loss ==
            doctest::Approx(oracles::model_loss(p, batch, lambda)).epsilon(1e-12));
      auto fd = oracles::fd_model_grad(p, batch, lambda);
      for (Eigen::Index j = 0; j < fd.size(); ++j) {
        const double scale = std::max(std::abs(fd[j]), 1e-7 / 1e-5);
        CHECK(std::abs(lg.grad[j] - fd[j]) / scale < 1e-5);
      }
    }
  }
}

TEST_CASE("full-model gradient check across topologies and blocks") {
  Rng rng(404);
  int cases = 0;
  for (auto topology : {qtn::TopologyKind::Mps, qtn::TopologyKind::Ttn,
                        qtn::TopologyKind::Mera}) {
    for (auto block : {qtn::BlockKind{qtn::BlockType::Simple, 1},
                       qtn::BlockKind{qtn::BlockType::StronglyEntangling, 2}}) {
      const auto tmpl = qtn::build_topology(topology, 4, block);
      for (auto head : {HeadKind::Dense, HeadKind::Gap}) {
        for (int rep = 0; rep < 2; ++rep) {
          auto p = init_params(tmpl, head, 4, 1000 + cases);
          std::vector<data::ImageSample> batch = {
              make_sample(random_image(rng, 4, 4),
                          static_cast<int>(rng.next_below(2)), "x")};
          auto lg = loss_and_grad(p, batch, 1e-4);
          auto fd = oracles::fd_model_grad(p, batch, 1e-4);
          for (Eigen::Index j = 0; j < fd.size(); ++j) {
            const double scale = std::max(std::abs(fd[j]), 1e-2);
            CHECK(std::abs(lg.grad[j] - fd[j]) / scale < 1e-5);
          }
          ++cases;
        }
      }
    }
  }
  CHECK(cases >= 20);
}

TEST_CASE("gap head is invariant under patch permutations") {
  // permuting the image patches permutes z; the gap probability only sees
  // the mean
  Rng rng(71);
  auto p = init_params(ttn4(), HeadKind::Gap, 4, 8);
  Eigen::MatrixXd img = random_image(rng, 4, 4);
  auto base = forward(p, img);

  Eigen::MatrixXd swapped = img;
  swapped.block(0, 0, 2, 2) = img.block(2, 2, 2, 2);
  swapped.block(2, 2, 2, 2) = img.block(0, 0, 2, 2);
  auto perm = forward(p, swapped);
  CHECK(std::abs(base.probability - perm.probability) < 1e-12);
}

TEST_CASE("probability stays clamped and expectations bounded") {
  Rng rng(88);
  for (int rep = 0; rep < 5; ++rep) {
    auto p = init_params(ttn4(), HeadKind::Dense, 4, rep);
    p.head_weights.setConstant(50.0);  // saturate the sigmoid
    auto pred = forward(p, random_image(rng, 4, 4));
    CHECK(pred.probability >= 1e-7);
    CHECK(pred.probability <= 1.0 - 1e-7);
    CHECK(pred.patch_expectations.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
  }
}

TEST_CASE("loss is non-negative with clamped probabilities") {
  Rng rng(99);
  auto p = init_params(ttn4(), HeadKind::Gap, 4, 12);
  std::vector<data::ImageSample> batch = {
      make_sample(random_image(rng, 4, 4), 0, "a"),
      make_sample(random_image(rng, 4, 4), 1, "b")};
  auto lg = loss_and_grad(p, batch, 1e-4);
  CHECK(lg.loss >= 0.0);
}

TEST_CASE("bad labels are rejected") {
  Rng rng(111);
  auto p = init_params(ttn4(), HeadKind::Gap, 4, 13);
  std::vector<data::ImageSample> batch = {make_sample(random_image(rng, 4, 4), 2, "a")};
  CHECK_THROWS_AS(loss_and_grad(p, batch, 0.0), std::domain_error);
}

TEST_CASE("flatten and unflatten round-trip") {
  auto p = init_params(ttn4(), HeadKind::Dense, 4, 21);
  auto flat = flatten(p);
  ModelParams q = p;
  q.quantum.setZero();
  q.head_weights.setZero();
  q.head_bias = -1.0;
  unflatten(q, flat);
  CHECK(q.quantum == p.quantum);
  CHECK(q.head_weights == p.head_weights);
  CHECK(q.head_bias == p.head_bias);
}
