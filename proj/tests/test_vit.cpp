#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "jepa/vit.hpp"

using namespace jepa;

namespace {

FramePtr random_frame(Rng& rng, int n) {
  auto f = std::make_shared<Frame>(n, n);
  for (Index i = 0; i < f->size(); ++i) f->data()[i] = static_cast<float>(rng.uniform());
  return f;
}

ObservationWindow random_window(Rng& rng, int n) {
  return {WindowKind::X, {random_frame(rng, n), random_frame(rng, n), random_frame(rng, n)}};
}

EncoderConfig tiny_config() {
  EncoderConfig c;
  c.image_size = 28;
  c.patch_size = 14;
  c.d_emb = 8;
  c.depth = 1;
  c.heads = 2;
  return c;
}

}  // namespace

TEST_CASE("patchify produces 108 projected tokens per default window") {
  const EncoderConfig cfg;  // 84/14 grid, 3 frames
  CHECK(cfg.tokens() == 3 * (84 / 14) * (84 / 14));
  CHECK(cfg.tokens() == 108);
  CHECK(cfg.seq_len() == 109);

  auto p = make_encoder_params<float>(cfg);
  Rng rng(1);
  init_encoder(p, rng);

  Rng fr(2);
  const ObservationWindow w = random_window(fr, 84);
  std::vector<const ObservationWindow*> batch{&w};
  Mat<float> tokens;
  patchify(cfg, p, batch, tokens);
  CHECK(tokens.rows() == 108);
  CHECK(tokens.cols() == 64);
}

TEST_CASE("zero frames map every token to the projection bias") {
  const EncoderConfig cfg = tiny_config();
  auto p = make_encoder_params<double>(cfg);
  Rng rng(3);
  init_encoder(p, rng);
  fill_truncated_normal(p.patch_b, rng, 0.5);

  auto z = std::make_shared<Frame>(Frame::Zero(28, 28));
  const ObservationWindow w{WindowKind::X, {z, z, z}};
  std::vector<const ObservationWindow*> batch{&w};
  Mat<double> tokens;
  patchify(cfg, p, batch, tokens);
  for (Index n = 0; n < tokens.rows(); ++n) {
    CHECK((tokens.row(n) - p.patch_b.row(0)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("patch projection is linear in the pixels") {
  const EncoderConfig cfg = tiny_config();
  auto p = make_encoder_params<double>(cfg);
  Rng rng(4);
  init_encoder(p, rng);
  fill_truncated_normal(p.patch_b, rng, 0.5);

  Rng fr(5);
  const ObservationWindow w = random_window(fr, 28);
  ObservationWindow w2;
  w2.kind = WindowKind::X;
  for (int t = 0; t < 3; ++t)
    w2.frames[static_cast<std::size_t>(t)] =
        std::make_shared<Frame>(2.0f * *w.frames[static_cast<std::size_t>(t)]);

  std::vector<const ObservationWindow*> b1{&w}, b2{&w2};
  Mat<double> t1, t2;
  patchify(cfg, p, b1, t1);
  patchify(cfg, p, b2, t2);
  const Mat<double> lhs = t2.rowwise() - p.patch_b.row(0);
  const Mat<double> rhs = 2.0 * (t1.rowwise() - p.patch_b.row(0));
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("positional encodings are additive table lookups") {
  const EncoderConfig cfg;
  auto p = make_encoder_params<float>(cfg);
  Rng rng(6);
  init_encoder(p, rng);

  const Vec<float> a = positional_encoding(p, 0, 0, 0);
  const Vec<float> b = positional_encoding(p, 0, 0, 1);
  const Vec<float> want = (p.pos_time.row(1) - p.pos_time.row(0)).transpose();
  CHECK(((b - a) - want).cwiseAbs().maxCoeff() < 1e-6f);

  // deterministic lookup
  const Vec<float> again = positional_encoding(p, 0, 0, 0);
  CHECK(a == again);

  CHECK_THROWS_AS(positional_encoding(p, 6, 0, 0), UsageError);
  CHECK_THROWS_AS(positional_encoding(p, 0, -1, 0), UsageError);
  CHECK_THROWS_AS(positional_encoding(p, 0, 0, 3), UsageError);
}

TEST_CASE("the 108 positional encodings are pairwise distinct after init") {
  const EncoderConfig cfg;
  auto p = make_encoder_params<float>(cfg);
  Rng rng(7);
  init_encoder(p, rng);
  Mat<float> pos;
  build_pos_table(cfg, p, pos);
  REQUIRE(pos.rows() == 108);
  double min_dist = 1e30;
  for (Index i = 0; i < pos.rows(); ++i)
    for (Index j = i + 1; j < pos.rows(); ++j)
      min_dist = std::min(min_dist, static_cast<double>((pos.row(i) - pos.row(j)).norm()));
  CHECK(min_dist > 0.0);
}

TEST_CASE("encode is deterministic and 64-dimensional") {
  const EncoderConfig cfg;
  auto p = make_encoder_params<float>(cfg);
  Rng rng(8);
  init_encoder(p, rng);
  Rng fr(9);
  const ObservationWindow w = random_window(fr, 84);
  const Vec<float> e1 = encode(cfg, p, w);
  const Vec<float> e2 = encode(cfg, p, w);
  CHECK(e1.size() == 64);
  CHECK(e1 == e2);
  CHECK(e1.allFinite());
}

TEST_CASE("swapping patches together with their positions leaves the embedding unchanged") {
  const EncoderConfig cfg;
  auto p = make_encoder_params<float>(cfg);
  Rng rng(10);
  init_encoder(p, rng);
  Rng fr(11);
  const ObservationWindow w = random_window(fr, 84);
  std::vector<const ObservationWindow*> batch{&w};

  EncoderCache<float> c;
  Mat<float> base;
  encoder_forward(cfg, p, batch, c, base);

  // rebuild the sequence, swap two token rows (token + its positional term
  // move together), rerun the transformer
  EncoderCache<float> c2;
  Mat<float> tokens, pos;
  patchify(cfg, p, batch, tokens);
  build_pos_table(cfg, p, pos);
  c2.batch = 1;
  c2.seq.resize(cfg.seq_len(), cfg.d_emb);
  c2.seq.row(0) = p.cls.row(0);
  c2.seq.middleRows(1, cfg.tokens()) = tokens + pos;
  c2.seq.row(1 + 17).swap(c2.seq.row(1 + 93));
  Mat<float> swapped;
  transformer_forward(cfg, p, c2, swapped);

  CHECK((swapped - base).cwiseAbs().maxCoeff() < 1e-5f);
}

TEST_CASE("zeroing last-layer patch outputs does not change the embedding") {
  const EncoderConfig cfg;
  auto p = make_encoder_params<float>(cfg);
  Rng rng(12);
  init_encoder(p, rng);
  Rng fr(13);
  const ObservationWindow w = random_window(fr, 84);
  std::vector<const ObservationWindow*> batch{&w, &w};
  EncoderCache<float> c;
  Mat<float> out;
  encoder_forward(cfg, p, batch, c, out);

  Mat<float> ablated = c.x_last;
  for (Index b = 0; b < 2; ++b)
    for (Index t = 1; t < cfg.seq_len(); ++t) ablated.row(b * cfg.seq_len() + t).setZero();
  const Mat<float> readout = cls_readout(cfg, p, ablated, 2);
  CHECK(readout == out);
}
