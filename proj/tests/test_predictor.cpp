#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "jepa/predictor.hpp"

using namespace jepa;

namespace {

PredictorConfig small_cfg() { return {8, 16, 2}; }

Mat<double> random_batch(Rng& rng, Index rows, Index cols) {
  Mat<double> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  return m;
}

}  // namespace

TEST_CASE("severed action projection makes both actions identical") {
  const PredictorConfig cfg = small_cfg();
  auto p = make_predictor_params<double>(cfg);
  Rng rng(1);
  init_predictor(p, rng);
  p.wa.setZero();

  Rng br(2);
  const Mat<double> x = random_batch(br, 5, cfg.d_emb);
  PredictorCache<double> c;
  Mat<double> left, right;
  predictor_forward(p, x, std::vector<int>(5, 0), c, left);
  predictor_forward(p, x, std::vector<int>(5, 1), c, right);
  CHECK(left == right);
}

TEST_CASE("all-zero weights output the final bias") {
  const PredictorConfig cfg = small_cfg();
  auto p = make_predictor_params<double>(cfg);
  Rng rng(3);
  fill_truncated_normal(p.b2, rng, 1.0);

  Rng br(4);
  const Mat<double> x = random_batch(br, 3, cfg.d_emb);
  PredictorCache<double> c;
  Mat<double> out;
  predictor_forward(p, x, {0, 1, 0}, c, out);
  for (Index b = 0; b < out.rows(); ++b)
    CHECK((out.row(b) - p.b2.row(0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("random predictors distinguish the two actions") {
  const PredictorConfig cfg = small_cfg();
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto p = make_predictor_params<double>(cfg);
    init_predictor(p, rng);
    Rng br(static_cast<std::uint64_t>(trial) + 17);
    const Mat<double> x = random_batch(br, 1, cfg.d_emb);
    PredictorCache<double> c;
    Mat<double> left, right;
    predictor_forward(p, x, {0}, c, left);
    predictor_forward(p, x, {1}, c, right);
    CHECK((left - right).norm() > 0.0);
  }
}

TEST_CASE("the action enters exactly as a hidden-layer offset") {
  const PredictorConfig cfg = small_cfg();
  auto p = make_predictor_params<double>(cfg);
  Rng rng(6);
  init_predictor(p, rng);

  Rng br(7);
  const Mat<double> x = random_batch(br, 1, cfg.d_emb);
  PredictorCache<double> c0, c1;
  Mat<double> out;
  predictor_forward(p, x, {0}, c0, out);
  predictor_forward(p, x, {1}, c1, out);
  const Mat<double> diff = c1.pre - c0.pre;
  const Mat<double> want = p.wa.row(1) - p.wa.row(0);
  CHECK((diff.row(0) - want.row(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("output width equals the embedding width") {
  const PredictorConfig cfg{64, 128, 2};
  auto p = make_predictor_params<float>(cfg);
  Rng rng(8);
  init_predictor(p, rng);
  Vec<float> e = Vec<float>::Ones(64);
  const Vec<float> out = predict(p, e, Action::Left);
  CHECK(out.size() == 64);
}

TEST_CASE("predictor gradients match central finite differences everywhere") {
  const PredictorConfig cfg = small_cfg();
  auto p = make_predictor_params<double>(cfg);
  Rng rng(9);
  init_predictor(p, rng);
  fill_truncated_normal(p.b1, rng, 0.1);
  fill_truncated_normal(p.b2, rng, 0.1);

  Rng br(10);
  const Mat<double> x = random_batch(br, 4, cfg.d_emb);
  const std::vector<int> actions{0, 1, 1, 0};
  const Mat<double> target = random_batch(br, 4, cfg.d_emb);

  auto loss = [&](const PredictorParams<double>& q) {
    PredictorCache<double> c;
    Mat<double> out;
    predictor_forward(q, x, actions, c, out);
    return 0.5 * (out - target).squaredNorm();
  };

  // analytic
  PredictorCache<double> c;
  Mat<double> out;
  predictor_forward(p, x, actions, c, out);
  auto g = make_predictor_params<double>(cfg);
  Mat<double> d_x;
  predictor_backward(p, c, Mat<double>(out - target), g, d_x);

  std::vector<Mat<double>*> pt, gt;
  visit_predictor_tensors(p, "p", [&](const std::string&, Mat<double>& m) { pt.push_back(&m); });
  visit_predictor_tensors(g, "g", [&](const std::string&, Mat<double>& m) { gt.push_back(&m); });

  const double h = 1e-6;
  for (std::size_t t = 0; t < pt.size(); ++t) {
    for (Index i = 0; i < pt[t]->size(); ++i) {
      const double orig = pt[t]->data()[i];
      pt[t]->data()[i] = orig + h;
      const double up = loss(p);
      pt[t]->data()[i] = orig - h;
      const double dn = loss(p);
      pt[t]->data()[i] = orig;
      const double fd = (up - dn) / (2 * h);
      const double an = gt[t]->data()[i];
      CHECK(std::abs(fd - an) <= 1e-3 * std::max(1.0, std::abs(fd)));
    }
  }

  // input gradient too
  for (Index i = 0; i < 4; ++i) {
    Mat<double> xp = x;
    xp(i, 2) += h;
    PredictorCache<double> cc;
    Mat<double> o2;
    predictor_forward(p, xp, actions, cc, o2);
    const double up = 0.5 * (o2 - target).squaredNorm();
    xp(i, 2) -= 2 * h;
    predictor_forward(p, xp, actions, cc, o2);
    const double dn = 0.5 * (o2 - target).squaredNorm();
    const double fd = (up - dn) / (2 * h);
    CHECK(std::abs(fd - d_x(i, 2)) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}
