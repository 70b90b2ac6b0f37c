#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "jepa/core.hpp"
#include "jepa/frame_history.hpp"
#include "jepa/rng.hpp"

namespace jepa {

// Spatio-temporal vision transformer over a 3-frame window. Each frame is
// cut into patch_size x patch_size patches, linearly projected to d_emb,
// tagged with additive learned (row, col, time) positional encodings, and
// prepended with a learnable classification token. The embedding is the
// normalized last-layer output at the classification position.
struct EncoderConfig {
  int image_size = 84;
  int patch_size = 14;
  int frames_per_window = 3;
  int d_emb = 64;
  int depth = 4;
  int heads = 4;
  int mlp_ratio = 2;

  int grid() const { return image_size / patch_size; }
  int patches_per_frame() const { return grid() * grid(); }
  int tokens() const { return frames_per_window * patches_per_frame(); }
  int seq_len() const { return tokens() + 1; }
  int head_dim() const { return d_emb / heads; }
  int mlp_hidden() const { return mlp_ratio * d_emb; }
  int patch_dim() const { return patch_size * patch_size; }

  void validate() const {
    if (image_size <= 0 || patch_size <= 0 || image_size % patch_size != 0)
      throw ConfigError("encoder: image_size must be a positive multiple of patch_size");
    if (d_emb <= 0 || heads <= 0 || d_emb % heads != 0)
      throw ConfigError("encoder: d_emb must be divisible by heads");
    if (depth <= 0 || mlp_ratio <= 0)
      throw ConfigError("encoder: depth and mlp_ratio must be positive");
    if (frames_per_window != 3)
      throw ConfigError("encoder: windows are frame triples");
  }
};

template <class S>
struct LayerNormParams {
  Mat<S> gamma, beta;  // both 1 x d
};

template <class S>
struct AttentionParams {
  Mat<S> wq, bq, wk, bk, wv, bv, wo, bo;
};

template <class S>
struct MlpParams {
  Mat<S> w1, b1, w2, b2;
};

template <class S>
struct BlockParams {
  LayerNormParams<S> ln1;
  AttentionParams<S> attn;
  LayerNormParams<S> ln2;
  MlpParams<S> mlp;
};

template <class S>
struct EncoderParams {
  Mat<S> patch_w;   // patch_dim x d
  Mat<S> patch_b;   // 1 x d
  Mat<S> cls;       // 1 x d
  Mat<S> pos_row;   // grid x d
  Mat<S> pos_col;   // grid x d
  Mat<S> pos_time;  // frames x d
  std::vector<BlockParams<S>> blocks;
  LayerNormParams<S> final_ln;
};

// Enumerates every tensor with a stable name. P may be const or mutable.
template <class P, class F>
void visit_tensors(P& p, const std::string& prefix, F&& f) {
  f(prefix + ".patch_w", p.patch_w);
  f(prefix + ".patch_b", p.patch_b);
  f(prefix + ".cls", p.cls);
  f(prefix + ".pos_row", p.pos_row);
  f(prefix + ".pos_col", p.pos_col);
  f(prefix + ".pos_time", p.pos_time);
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    auto& b = p.blocks[i];
    const std::string bp = prefix + ".blk" + std::to_string(i);
    f(bp + ".ln1.g", b.ln1.gamma);
    f(bp + ".ln1.b", b.ln1.beta);
    f(bp + ".attn.wq", b.attn.wq);
    f(bp + ".attn.bq", b.attn.bq);
    f(bp + ".attn.wk", b.attn.wk);
    f(bp + ".attn.bk", b.attn.bk);
    f(bp + ".attn.wv", b.attn.wv);
    f(bp + ".attn.bv", b.attn.bv);
    f(bp + ".attn.wo", b.attn.wo);
    f(bp + ".attn.bo", b.attn.bo);
    f(bp + ".ln2.g", b.ln2.gamma);
    f(bp + ".ln2.b", b.ln2.beta);
    f(bp + ".mlp.w1", b.mlp.w1);
    f(bp + ".mlp.b1", b.mlp.b1);
    f(bp + ".mlp.w2", b.mlp.w2);
    f(bp + ".mlp.b2", b.mlp.b2);
  }
  f(prefix + ".final_ln.g", p.final_ln.gamma);
  f(prefix + ".final_ln.b", p.final_ln.beta);
}

template <class S>
EncoderParams<S> make_encoder_params(const EncoderConfig& cfg) {
  cfg.validate();
  const int d = cfg.d_emb;
  const int h = cfg.mlp_hidden();
  EncoderParams<S> p;
  p.patch_w = Mat<S>::Zero(cfg.patch_dim(), d);
  p.patch_b = Mat<S>::Zero(1, d);
  p.cls = Mat<S>::Zero(1, d);
  p.pos_row = Mat<S>::Zero(cfg.grid(), d);
  p.pos_col = Mat<S>::Zero(cfg.grid(), d);
  p.pos_time = Mat<S>::Zero(cfg.frames_per_window, d);
  p.blocks.resize(static_cast<std::size_t>(cfg.depth));
  for (auto& b : p.blocks) {
    b.ln1 = {Mat<S>::Ones(1, d), Mat<S>::Zero(1, d)};
    b.attn = {Mat<S>::Zero(d, d), Mat<S>::Zero(1, d), Mat<S>::Zero(d, d),
              Mat<S>::Zero(1, d), Mat<S>::Zero(d, d), Mat<S>::Zero(1, d),
              Mat<S>::Zero(d, d), Mat<S>::Zero(1, d)};
    b.ln2 = {Mat<S>::Ones(1, d), Mat<S>::Zero(1, d)};
    b.mlp = {Mat<S>::Zero(d, h), Mat<S>::Zero(1, h), Mat<S>::Zero(h, d),
             Mat<S>::Zero(1, d)};
  }
  p.final_ln = {Mat<S>::Ones(1, d), Mat<S>::Zero(1, d)};
  return p;
}

template <class S>
void fill_truncated_normal(Mat<S>& m, Rng& rng, double stddev) {
  for (Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<S>(rng.truncated_normal(stddev));
  }
}

// Truncated normal (std 0.02) for projections, tables and the class token;
// zero biases; unit layer-norm gains.
template <class S>
void init_encoder(EncoderParams<S>& p, Rng& rng, double stddev = 0.02) {
  fill_truncated_normal(p.patch_w, rng, stddev);
  fill_truncated_normal(p.cls, rng, stddev);
  fill_truncated_normal(p.pos_row, rng, stddev);
  fill_truncated_normal(p.pos_col, rng, stddev);
  fill_truncated_normal(p.pos_time, rng, stddev);
  for (auto& b : p.blocks) {
    fill_truncated_normal(b.attn.wq, rng, stddev);
    fill_truncated_normal(b.attn.wk, rng, stddev);
    fill_truncated_normal(b.attn.wv, rng, stddev);
    fill_truncated_normal(b.attn.wo, rng, stddev);
    fill_truncated_normal(b.mlp.w1, rng, stddev);
    fill_truncated_normal(b.mlp.w2, rng, stddev);
  }
}

template <class S, class P>
void zero_tensors(P& p) {
  visit_tensors(p, "", [](const std::string&, Mat<S>& m) { m.setZero(); });
}

inline constexpr double kLayerNormEps = 1e-5;

// y = gamma .* (x - mean) / sqrt(var + eps) + beta, per row.
template <class S>
void layer_norm_forward(const Mat<S>& x, const Mat<S>& gamma, const Mat<S>& beta,
                        Mat<S>& xhat, Vec<S>& rstd, Mat<S>& out) {
  const Vec<S> mu = x.rowwise().mean();
  xhat = x.colwise() - mu;
  rstd = (xhat.array().square().rowwise().mean() + S(kLayerNormEps)).rsqrt();
  xhat = (xhat.array().colwise() * rstd.array()).matrix();
  out = ((xhat.array().rowwise() * gamma.row(0).array()).rowwise() +
         beta.row(0).array())
            .matrix();
}

template <class S>
void layer_norm_backward(const Mat<S>& d_out, const Mat<S>& xhat,
                         const Vec<S>& rstd, const Mat<S>& gamma, Mat<S>& d_x,
                         Mat<S>& d_gamma, Mat<S>& d_beta) {
  d_gamma += (d_out.array() * xhat.array()).colwise().sum().matrix();
  d_beta += d_out.colwise().sum();
  const Mat<S> dxhat = (d_out.array().rowwise() * gamma.row(0).array()).matrix();
  const Vec<S> m1 = dxhat.rowwise().mean();
  const Vec<S> m2 = (dxhat.array() * xhat.array()).rowwise().mean();
  d_x = (((dxhat.colwise() - m1).array() -
          (xhat.array().colwise() * m2.array()))
             .colwise() *
         rstd.array())
            .matrix();
}

// Tanh-form GELU; dydx is the exact derivative of the same expression.
template <class S>
void gelu_forward(const Mat<S>& x, Mat<S>& y, Mat<S>& dydx) {
  const S c = S(0.7978845608028654);  // sqrt(2/pi)
  const S a = S(0.044715);
  const auto xa = x.array();
  const Mat<S> th = (c * (xa + a * xa.cube())).tanh().matrix();
  y = (S(0.5) * xa * (S(1) + th.array())).matrix();
  dydx = (S(0.5) * (S(1) + th.array()) +
          S(0.5) * xa * (S(1) - th.array().square()) * c *
              (S(1) + S(3) * a * xa.square()))
             .matrix();
}

template <class S>
struct EncoderCache {
  Index batch = 0;
  Mat<S> patches;  // patch_dim x (B*tokens), one patch per column
  Mat<S> pos;      // tokens x d
  Mat<S> tok;      // (B*tokens) x d, patch tokens before pos/cls
  Mat<S> seq;      // (B*seq) x d, transformer input

  struct Block {
    Mat<S> x_in;
    Mat<S> xhat1;
    Vec<S> rstd1;
    Mat<S> q, k, v;
    Mat<S> probs;  // (B*heads*seq) x seq
    Mat<S> attn_cat;
    Mat<S> x_mid;
    Mat<S> xhat2;
    Vec<S> rstd2;
    Mat<S> mlp_pre, mlp_act, mlp_dact;
  };
  std::vector<Block> blocks;
  Mat<S> x_last;     // (B*seq) x d, output of the final block
  Mat<S> cls_xhat;   // B x d
  Vec<S> cls_rstd;   // B

  // reusable scratch, forward and backward
  Mat<S> s_y, s_attn_out;
  Mat<S> b_dx, b_dmid, b_dcat, b_dq, b_dk, b_dv, b_dy, b_dln, b_dact, b_dpre,
      b_yrec, b_dtok, b_dprob, b_dscore;
};

// Collects the pixels of every patch of every window into columns of
// `patches`, token order (t, i, j) lexicographic within each sample.
template <class S>
void gather_patches(const EncoderConfig& cfg,
                    const std::vector<const ObservationWindow*>& windows,
                    Mat<S>& patches) {
  const int P = cfg.patch_size;
  const int g = cfg.grid();
  const Index B = static_cast<Index>(windows.size());
  patches.resize(cfg.patch_dim(), B * cfg.tokens());
  Index col = 0;
  for (Index b = 0; b < B; ++b) {
    for (int t = 0; t < cfg.frames_per_window; ++t) {
      const Frame& fr = *windows[static_cast<std::size_t>(b)]->frames[static_cast<std::size_t>(t)];
      if (fr.rows() != cfg.image_size || fr.cols() != cfg.image_size)
        throw ConfigError("encoder: window frame size does not match config");
      for (int i = 0; i < g; ++i) {
        for (int j = 0; j < g; ++j) {
          for (int pc = 0; pc < P; ++pc) {
            patches.col(col).segment(static_cast<Index>(pc) * P, P) =
                fr.block(i * P, j * P + pc, P, 1).template cast<S>();
          }
          ++col;
        }
      }
    }
  }
}

// Patch tokens: linear projection of each patch, no positional term.
template <class S>
void patchify(const EncoderConfig& cfg, const EncoderParams<S>& p,
              const std::vector<const ObservationWindow*>& windows,
              Mat<S>& tokens, Mat<S>* patches_out = nullptr) {
  Mat<S> local;
  Mat<S>& patches = patches_out ? *patches_out : local;
  gather_patches(cfg, windows, patches);
  tokens.noalias() = patches.transpose() * p.patch_w;
  tokens.rowwise() += p.patch_b.row(0);
}

// Learned additive positional encoding: row_table[i] + col_table[j] + time_table[t].
template <class S>
Vec<S> positional_encoding(const EncoderParams<S>& p, int i, int j, int t) {
  if (i < 0 || i >= p.pos_row.rows() || j < 0 || j >= p.pos_col.rows() ||
      t < 0 || t >= p.pos_time.rows())
    throw UsageError("positional_encoding: index out of range");
  return (p.pos_row.row(i) + p.pos_col.row(j) + p.pos_time.row(t)).transpose();
}

template <class S>
void build_pos_table(const EncoderConfig& cfg, const EncoderParams<S>& p, Mat<S>& pos) {
  const int g = cfg.grid();
  pos.resize(cfg.tokens(), cfg.d_emb);
  Index n = 0;
  for (int t = 0; t < cfg.frames_per_window; ++t)
    for (int i = 0; i < g; ++i)
      for (int j = 0; j < g; ++j) {
        pos.row(n++) = p.pos_row.row(i) + p.pos_col.row(j) + p.pos_time.row(t);
      }
}

// Transformer over a prebuilt sequence (cache.seq, cache.batch set).
// Pre-norm blocks; the embedding is the final-layer-norm of the class row.
template <class S>
void transformer_forward(const EncoderConfig& cfg, const EncoderParams<S>& p,
                         EncoderCache<S>& c, Mat<S>& s_out) {
  const Index B = c.batch;
  const Index T = cfg.seq_len();
  const int d = cfg.d_emb;
  const int H = cfg.heads;
  const int dh = cfg.head_dim();
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));

  c.blocks.resize(static_cast<std::size_t>(cfg.depth));
  c.blocks[0].x_in = c.seq;
  for (int kb = 0; kb < cfg.depth; ++kb) {
    auto& bc = c.blocks[static_cast<std::size_t>(kb)];
    const auto& bp = p.blocks[static_cast<std::size_t>(kb)];

    layer_norm_forward(bc.x_in, bp.ln1.gamma, bp.ln1.beta, bc.xhat1, bc.rstd1, c.s_y);
    bc.q.noalias() = c.s_y * bp.attn.wq;
    bc.q.rowwise() += bp.attn.bq.row(0);
    bc.k.noalias() = c.s_y * bp.attn.wk;
    bc.k.rowwise() += bp.attn.bk.row(0);
    bc.v.noalias() = c.s_y * bp.attn.wv;
    bc.v.rowwise() += bp.attn.bv.row(0);

    bc.probs.resize(B * H * T, T);
    bc.attn_cat.resize(B * T, d);
    for (Index b = 0; b < B; ++b) {
      for (int h = 0; h < H; ++h) {
        auto Q = bc.q.block(b * T, h * dh, T, dh);
        auto K = bc.k.block(b * T, h * dh, T, dh);
        auto V = bc.v.block(b * T, h * dh, T, dh);
        auto P = bc.probs.middleRows((b * H + h) * T, T);
        P.noalias() = Q * K.transpose();
        P *= scale;
        const Vec<S> mx = P.rowwise().maxCoeff();
        P.colwise() -= mx;  // keep exp on a plain array so it vectorizes
        P = P.array().exp().matrix();
        const Vec<S> sums = P.rowwise().sum();
        P = (P.array().colwise() / sums.array()).matrix();
        bc.attn_cat.block(b * T, h * dh, T, dh).noalias() = P * V;
      }
    }
    c.s_attn_out.noalias() = bc.attn_cat * bp.attn.wo;
    c.s_attn_out.rowwise() += bp.attn.bo.row(0);
    bc.x_mid = bc.x_in + c.s_attn_out;

    layer_norm_forward(bc.x_mid, bp.ln2.gamma, bp.ln2.beta, bc.xhat2, bc.rstd2, c.s_y);
    bc.mlp_pre.noalias() = c.s_y * bp.mlp.w1;
    bc.mlp_pre.rowwise() += bp.mlp.b1.row(0);
    gelu_forward(bc.mlp_pre, bc.mlp_act, bc.mlp_dact);

    Mat<S>& x_out = (kb + 1 < cfg.depth)
                        ? c.blocks[static_cast<std::size_t>(kb) + 1].x_in
                        : c.x_last;
    x_out.noalias() = bc.mlp_act * bp.mlp.w2;
    x_out.rowwise() += bp.mlp.b2.row(0);
    x_out += bc.x_mid;
  }

  // Classification-token readout.
  Mat<S> cls_rows(B, d);
  for (Index b = 0; b < B; ++b) cls_rows.row(b) = c.x_last.row(b * T);
  layer_norm_forward(cls_rows, p.final_ln.gamma, p.final_ln.beta, c.cls_xhat,
                     c.cls_rstd, s_out);
}

// Readout alone: final layer norm applied to the class rows of a last-layer
// token matrix. Patch rows do not contribute.
template <class S>
Mat<S> cls_readout(const EncoderConfig& cfg, const EncoderParams<S>& p,
                   const Mat<S>& x_last, Index batch) {
  const Index T = cfg.seq_len();
  Mat<S> cls_rows(batch, cfg.d_emb);
  for (Index b = 0; b < batch; ++b) cls_rows.row(b) = x_last.row(b * T);
  Mat<S> xhat, out;
  Vec<S> rstd;
  layer_norm_forward(cls_rows, p.final_ln.gamma, p.final_ln.beta, xhat, rstd, out);
  return out;
}

// Full forward: windows -> embeddings (batch x d_emb). The cache holds every
// intermediate needed by encoder_backward.
template <class S>
void encoder_forward(const EncoderConfig& cfg, const EncoderParams<S>& p,
                     const std::vector<const ObservationWindow*>& windows,
                     EncoderCache<S>& c, Mat<S>& s_out) {
  if (windows.empty()) throw UsageError("encoder_forward: empty batch");
  const Index B = static_cast<Index>(windows.size());
  const Index T = cfg.seq_len();
  const Index N = cfg.tokens();
  c.batch = B;

  patchify(cfg, p, windows, c.tok, &c.patches);
  build_pos_table(cfg, p, c.pos);
  c.seq.resize(B * T, cfg.d_emb);
  for (Index b = 0; b < B; ++b) {
    c.seq.row(b * T) = p.cls.row(0);
    c.seq.middleRows(b * T + 1, N) = c.tok.middleRows(b * N, N) + c.pos;
  }
  transformer_forward(cfg, p, c, s_out);
}

// Transformer backward from the embedding gradient; accumulates parameter
// gradients into g and returns the gradient at the sequence input.
template <class S>
void transformer_backward(const EncoderConfig& cfg, const EncoderParams<S>& p,
                          EncoderCache<S>& c, const Mat<S>& d_s,
                          EncoderParams<S>& g, Mat<S>& d_seq) {
  const Index B = c.batch;
  const Index T = cfg.seq_len();
  const int d = cfg.d_emb;
  const int H = cfg.heads;
  const int dh = cfg.head_dim();
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));

  Mat<S> d_cls(B, d);
  layer_norm_backward(d_s, c.cls_xhat, c.cls_rstd, p.final_ln.gamma, d_cls,
                      g.final_ln.gamma, g.final_ln.beta);
  c.b_dx.setZero(B * T, d);
  for (Index b = 0; b < B; ++b) c.b_dx.row(b * T) = d_cls.row(b);

  for (int kb = cfg.depth - 1; kb >= 0; --kb) {
    auto& bc = c.blocks[static_cast<std::size_t>(kb)];
    const auto& bp = p.blocks[static_cast<std::size_t>(kb)];
    auto& gb = g.blocks[static_cast<std::size_t>(kb)];

    // x_out = x_mid + mlp(ln2(x_mid)); d_out = b_dx
    gb.mlp.w2.noalias() += bc.mlp_act.transpose() * c.b_dx;
    gb.mlp.b2 += c.b_dx.colwise().sum();
    c.b_dact.noalias() = c.b_dx * bp.mlp.w2.transpose();
    c.b_dpre = (c.b_dact.array() * bc.mlp_dact.array()).matrix();
    c.b_yrec = ((bc.xhat2.array().rowwise() * bp.ln2.gamma.row(0).array())
                    .rowwise() +
                bp.ln2.beta.row(0).array())
                   .matrix();
    gb.mlp.w1.noalias() += c.b_yrec.transpose() * c.b_dpre;
    gb.mlp.b1 += c.b_dpre.colwise().sum();
    c.b_dy.noalias() = c.b_dpre * bp.mlp.w1.transpose();
    layer_norm_backward(c.b_dy, bc.xhat2, bc.rstd2, bp.ln2.gamma, c.b_dln,
                        gb.ln2.gamma, gb.ln2.beta);
    c.b_dmid = c.b_dx + c.b_dln;

    // x_mid = x_in + wo(attn_cat); d_attn_out = b_dmid
    gb.attn.wo.noalias() += bc.attn_cat.transpose() * c.b_dmid;
    gb.attn.bo += c.b_dmid.colwise().sum();
    c.b_dcat.noalias() = c.b_dmid * bp.attn.wo.transpose();

    c.b_dq.setZero(B * T, d);
    c.b_dk.setZero(B * T, d);
    c.b_dv.setZero(B * T, d);
    c.b_dprob.resize(T, T);
    c.b_dscore.resize(T, T);
    for (Index b = 0; b < B; ++b) {
      for (int h = 0; h < H; ++h) {
        auto Q = bc.q.block(b * T, h * dh, T, dh);
        auto K = bc.k.block(b * T, h * dh, T, dh);
        auto V = bc.v.block(b * T, h * dh, T, dh);
        auto P = bc.probs.middleRows((b * H + h) * T, T);
        auto d_out = c.b_dcat.block(b * T, h * dh, T, dh);
        c.b_dprob.noalias() = d_out * V.transpose();
        c.b_dv.block(b * T, h * dh, T, dh).noalias() = P.transpose() * d_out;
        const Vec<S> rs = (P.array() * c.b_dprob.array()).rowwise().sum();
        c.b_dprob.colwise() -= rs;
        c.b_dscore = (P.array() * c.b_dprob.array()).matrix();
        c.b_dq.block(b * T, h * dh, T, dh).noalias() = c.b_dscore * K * scale;
        c.b_dk.block(b * T, h * dh, T, dh).noalias() =
            c.b_dscore.transpose() * Q * scale;
      }
    }
    c.b_yrec = ((bc.xhat1.array().rowwise() * bp.ln1.gamma.row(0).array())
                    .rowwise() +
                bp.ln1.beta.row(0).array())
                   .matrix();
    gb.attn.wq.noalias() += c.b_yrec.transpose() * c.b_dq;
    gb.attn.bq += c.b_dq.colwise().sum();
    gb.attn.wk.noalias() += c.b_yrec.transpose() * c.b_dk;
    gb.attn.bk += c.b_dk.colwise().sum();
    gb.attn.wv.noalias() += c.b_yrec.transpose() * c.b_dv;
    gb.attn.bv += c.b_dv.colwise().sum();
    c.b_dy.noalias() = c.b_dq * bp.attn.wq.transpose();
    c.b_dy.noalias() += c.b_dk * bp.attn.wk.transpose();
    c.b_dy.noalias() += c.b_dv * bp.attn.wv.transpose();
    layer_norm_backward(c.b_dy, bc.xhat1, bc.rstd1, bp.ln1.gamma, c.b_dln,
                        gb.ln1.gamma, gb.ln1.beta);
    c.b_dx = c.b_dmid + c.b_dln;
  }
  d_seq = c.b_dx;
}

// Full backward: embedding gradient -> parameter gradients (accumulated).
template <class S>
void encoder_backward(const EncoderConfig& cfg, const EncoderParams<S>& p,
                      EncoderCache<S>& c, const Mat<S>& d_s, EncoderParams<S>& g) {
  const Index B = c.batch;
  const Index T = cfg.seq_len();
  const Index N = cfg.tokens();
  Mat<S> d_seq;
  transformer_backward(cfg, p, c, d_s, g, d_seq);

  c.b_dtok.resize(B * N, cfg.d_emb);
  for (Index b = 0; b < B; ++b) {
    g.cls += d_seq.row(b * T);
    c.b_dtok.middleRows(b * N, N) = d_seq.middleRows(b * T + 1, N);
  }
  g.patch_b += c.b_dtok.colwise().sum();
  g.patch_w.noalias() += c.patches * c.b_dtok;

  Mat<S> tok_sum = c.b_dtok.middleRows(0, N);
  for (Index b = 1; b < B; ++b) tok_sum += c.b_dtok.middleRows(b * N, N);
  const int grid = cfg.grid();
  Index n = 0;
  for (int t = 0; t < cfg.frames_per_window; ++t)
    for (int i = 0; i < grid; ++i)
      for (int j = 0; j < grid; ++j) {
        g.pos_row.row(i) += tok_sum.row(n);
        g.pos_col.row(j) += tok_sum.row(n);
        g.pos_time.row(t) += tok_sum.row(n);
        ++n;
      }
}

// Single-window convenience wrapper.
template <class S>
Vec<S> encode(const EncoderConfig& cfg, const EncoderParams<S>& p,
              const ObservationWindow& w) {
  EncoderCache<S> cache;
  Mat<S> out;
  std::vector<const ObservationWindow*> batch{&w};
  encoder_forward(cfg, p, batch, cache, out);
  return out.row(0).transpose();
}

}  // namespace jepa
