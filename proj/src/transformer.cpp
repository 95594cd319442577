#include <algorithm>
#include <cmath>

#include "ea/model.hpp"

namespace ea {

namespace {

constexpr double kLnEps = 1e-5;

enum class MaskKind { FULL, CAUSAL, CAUSAL_PREFIX_BIDIR };

struct MaskSpec {
  MaskKind kind = MaskKind::FULL;
  int prefix_len = 0;

  bool allowed(int i, int j) const {
    switch (kind) {
      case MaskKind::FULL: return true;
      case MaskKind::CAUSAL: return j <= i;
      case MaskKind::CAUSAL_PREFIX_BIDIR: return j <= i || (i < prefix_len && j < prefix_len);
    }
    return true;
  }
};

void layer_norm_fwd(const Matrix& x, const Matrix& g, const Matrix& b, Matrix& out,
                    LayerNormCache& cache) {
  const size_t n = x.rows(), d = x.cols();
  out.resize(n, d);
  cache.normed.resize(n, d);
  cache.rstd.resize(n);
  const double* gp = g.row(0);
  const double* bp = b.row(0);
  for (size_t i = 0; i < n; ++i) {
    const double* xi = x.row(i);
    double mean = 0.0;
    for (size_t j = 0; j < d; ++j) mean += xi[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (size_t j = 0; j < d; ++j) {
      double c = xi[j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);
    double rstd = 1.0 / std::sqrt(var + kLnEps);
    cache.rstd[i] = rstd;
    double* ni = cache.normed.row(i);
    double* oi = out.row(i);
    for (size_t j = 0; j < d; ++j) {
      ni[j] = (xi[j] - mean) * rstd;
      oi[j] = ni[j] * gp[j] + bp[j];
    }
  }
}

// dx is accumulated; dg/db are accumulated.
void layer_norm_bwd(const Matrix& dy, const LayerNormCache& cache, const Matrix& g, Matrix& dx,
                    Matrix& dg, Matrix& db) {
  const size_t n = dy.rows(), d = dy.cols();
  const double* gp = g.row(0);
  double* dgp = dg.row(0);
  double* dbp = db.row(0);
  for (size_t i = 0; i < n; ++i) {
    const double* dyi = dy.row(i);
    const double* ni = cache.normed.row(i);
    double* dxi = dx.row(i);
    double sum_dyg = 0.0, sum_dyg_n = 0.0;
    for (size_t j = 0; j < d; ++j) {
      double dyg = dyi[j] * gp[j];
      sum_dyg += dyg;
      sum_dyg_n += dyg * ni[j];
    }
    const double inv_d = 1.0 / static_cast<double>(d);
    const double rstd = cache.rstd[i];
    for (size_t j = 0; j < d; ++j) {
      double dyg = dyi[j] * gp[j];
      dxi[j] += rstd * (dyg - inv_d * sum_dyg - ni[j] * inv_d * sum_dyg_n);
      dgp[j] += dyi[j] * ni[j];
      dbp[j] += dyi[j];
    }
  }
}

void make_dropout_mask(Matrix& mask, size_t rows, size_t cols, double p, Rng* rng) {
  if (rng == nullptr || p <= 0.0) {
    mask = Matrix();
    return;
  }
  mask.resize(rows, cols);
  const double keep_scale = 1.0 / (1.0 - p);
  for (size_t i = 0; i < mask.size(); ++i)
    mask.data()[i] = rng->uniform_real() < p ? 0.0 : keep_scale;
}

void apply_mask(Matrix& x, const Matrix& mask) {
  if (mask.empty()) return;
  for (size_t i = 0; i < x.size(); ++i) x.data()[i] *= mask.data()[i];
}

// Queries come from x_q (already normalized); keys/values from x_kv.
void attention_fwd(const ModelConfig& cfg, const ParamStore& params, const std::string& base,
                   const Matrix& x_q, const Matrix& x_kv, const MaskSpec& mask,
                   AttentionCache& cache, Matrix& out) {
  const int d = cfg.hidden_dim, heads = cfg.heads, dk = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  const size_t lq = x_q.rows(), lk = x_kv.rows();

  matmul_nn(x_q, params.at(base + ".wq"), cache.q);
  matmul_nn(x_kv, params.at(base + ".wk"), cache.k);
  matmul_nn(x_kv, params.at(base + ".wv"), cache.v);

  cache.probs.assign(heads, Matrix());
  cache.concat.resize(lq, d);
  for (int h = 0; h < heads; ++h) {
    const int off = h * dk;
    Matrix& p = cache.probs[h];
    p.resize(lq, lk);
    for (size_t i = 0; i < lq; ++i) {
      const double* qi = cache.q.row(i) + off;
      double* pi = p.row(i);
      double mx = -1e300;
      for (size_t j = 0; j < lk; ++j) {
        if (!mask.allowed(static_cast<int>(i), static_cast<int>(j))) {
          pi[j] = -1e300;
          continue;
        }
        const double* kj = cache.k.row(j) + off;
        double s = 0.0;
        for (int t = 0; t < dk; ++t) s += qi[t] * kj[t];
        pi[j] = s * scale;
        mx = std::max(mx, pi[j]);
      }
      double sum = 0.0;
      for (size_t j = 0; j < lk; ++j) {
        if (pi[j] <= -1e299) {
          pi[j] = 0.0;
        } else {
          pi[j] = std::exp(pi[j] - mx);
          sum += pi[j];
        }
      }
      double inv = 1.0 / sum;
      for (size_t j = 0; j < lk; ++j) pi[j] *= inv;

      double* ci = cache.concat.row(i) + off;
      std::fill(ci, ci + dk, 0.0);
      for (size_t j = 0; j < lk; ++j) {
        if (pi[j] == 0.0) continue;
        axpy(pi[j], cache.v.row(j) + off, ci, dk);
      }
    }
  }
  matmul_nn(cache.concat, params.at(base + ".wo"), out);
}

// dx_q / dx_kv accumulate.
void attention_bwd(const ModelConfig& cfg, const ParamStore& params, const std::string& base,
                   const Matrix& x_q, const Matrix& x_kv, const MaskSpec& mask,
                   const AttentionCache& cache, const Matrix& dout, Matrix& dx_q, Matrix& dx_kv,
                   ParamStore& grads) {
  const int d = cfg.hidden_dim, heads = cfg.heads, dk = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  const size_t lq = x_q.rows(), lk = x_kv.rows();
  (void)mask;

  Matrix dconcat;
  matmul_nt(dout, params.at(base + ".wo"), dconcat);
  matmul_tn_acc(cache.concat, dout, grads.at(base + ".wo"));

  Matrix dq(lq, d), dkm(lk, d), dv(lk, d);
  Matrix dp(lq, lk), ds(lq, lk);
  for (int h = 0; h < heads; ++h) {
    const int off = h * dk;
    const Matrix& p = cache.probs[h];

    for (size_t i = 0; i < lq; ++i) {
      const double* dci = dconcat.row(i) + off;
      const double* pi = p.row(i);
      double* dpi = dp.row(i);
      for (size_t j = 0; j < lk; ++j) {
        if (pi[j] == 0.0) {
          dpi[j] = 0.0;
          continue;
        }
        const double* vj = cache.v.row(j) + off;
        double s = 0.0;
        for (int t = 0; t < dk; ++t) s += dci[t] * vj[t];
        dpi[j] = s;
        axpy(pi[j], dci, dv.row(j) + off, dk);
      }
      // softmax backward: ds = p .* (dp - sum(p .* dp))
      double dot = 0.0;
      for (size_t j = 0; j < lk; ++j) dot += pi[j] * dpi[j];
      double* dsi = ds.row(i);
      for (size_t j = 0; j < lk; ++j) dsi[j] = pi[j] * (dpi[j] - dot);

      double* dqi = dq.row(i) + off;
      const double* qi = cache.q.row(i) + off;
      for (size_t j = 0; j < lk; ++j) {
        if (dsi[j] == 0.0) continue;
        double w = dsi[j] * scale;
        axpy(w, cache.k.row(j) + off, dqi, dk);
        axpy(w, qi, dkm.row(j) + off, dk);
      }
    }
  }

  Matrix tmp;
  matmul_nt(dq, params.at(base + ".wq"), tmp);
  add_inplace(dx_q, tmp);
  matmul_tn_acc(x_q, dq, grads.at(base + ".wq"));

  matmul_nt(dkm, params.at(base + ".wk"), tmp);
  add_inplace(dx_kv, tmp);
  matmul_tn_acc(x_kv, dkm, grads.at(base + ".wk"));

  matmul_nt(dv, params.at(base + ".wv"), tmp);
  add_inplace(dx_kv, tmp);
  matmul_tn_acc(x_kv, dv, grads.at(base + ".wv"));
}

void ffn_fwd(const ParamStore& params, const std::string& base, const Matrix& x_ln, FfnCache& cache,
             Matrix& out) {
  const Matrix& w1 = params.at(base + ".w1");
  const Matrix& b1 = params.at(base + ".b1");
  const Matrix& w2 = params.at(base + ".w2");
  const Matrix& b2 = params.at(base + ".b2");
  matmul_nn(x_ln, w1, cache.h_pre);
  for (size_t i = 0; i < cache.h_pre.rows(); ++i) {
    double* r = cache.h_pre.row(i);
    for (size_t j = 0; j < cache.h_pre.cols(); ++j) r[j] += b1(0, j);
  }
  cache.h = cache.h_pre;
  for (size_t i = 0; i < cache.h.size(); ++i)
    if (cache.h.data()[i] < 0.0) cache.h.data()[i] = 0.0;
  matmul_nn(cache.h, w2, out);
  for (size_t i = 0; i < out.rows(); ++i) {
    double* r = out.row(i);
    for (size_t j = 0; j < out.cols(); ++j) r[j] += b2(0, j);
  }
}

void ffn_bwd(const ParamStore& params, const std::string& base, const Matrix& x_ln,
             const FfnCache& cache, const Matrix& dout, Matrix& dx_ln, ParamStore& grads) {
  Matrix dh;
  matmul_nt(dout, params.at(base + ".w2"), dh);
  matmul_tn_acc(cache.h, dout, grads.at(base + ".w2"));
  {
    double* db2 = grads.at(base + ".b2").row(0);
    for (size_t i = 0; i < dout.rows(); ++i) {
      const double* r = dout.row(i);
      for (size_t j = 0; j < dout.cols(); ++j) db2[j] += r[j];
    }
  }
  for (size_t i = 0; i < dh.size(); ++i)
    if (cache.h_pre.data()[i] <= 0.0) dh.data()[i] = 0.0;
  Matrix tmp;
  matmul_nt(dh, params.at(base + ".w1"), tmp);
  add_inplace(dx_ln, tmp);
  matmul_tn_acc(x_ln, dh, grads.at(base + ".w1"));
  {
    double* db1 = grads.at(base + ".b1").row(0);
    for (size_t i = 0; i < dh.rows(); ++i) {
      const double* r = dh.row(i);
      for (size_t j = 0; j < dh.cols(); ++j) db1[j] += r[j];
    }
  }
}

}  // namespace

void Transformer::encode(const EncoderInput& input, EncoderCache& cache, Rng* dropout_rng) const {
  const int d = cfg_.hidden_dim;
  const size_t n = input.ids.size();
  require(n > 0, "encode: empty input");
  require(input.src_len <= cfg_.max_src_len, "encode: source longer than max_src_len");
  const double emb_scale = std::sqrt(static_cast<double>(d));

  cache.input = input;
  cache.embedded.resize(n, d);
  const Matrix& tok = params_.at("tok_emb");
  const Matrix& pos = params_.at("pos_src");
  const Matrix& rel = params_.at("rel_cand");
  const Matrix& type = params_.at("type_emb");
  for (size_t i = 0; i < n; ++i) {
    require(input.ids[i] >= 0 && input.ids[i] < cfg_.vocab_size, "encode: id out of range");
    require(input.pos_ids[i] >= 0 && input.pos_ids[i] < cfg_.max_src_len, "encode: position overflow");
    double* xi = cache.embedded.row(i);
    const double* ti = tok.row(input.ids[i]);
    const double* pi = pos.row(input.pos_ids[i]);
    for (int j = 0; j < d; ++j) xi[j] = ti[j] * emb_scale + pi[j];
    if (input.rel_ids[i] >= 0) {
      require(input.rel_ids[i] < cfg_.max_prefix_len, "encode: relative position overflow");
      axpy(1.0, rel.row(input.rel_ids[i]), xi, d);
    }
    if (cfg_.use_type_embeddings) axpy(1.0, type.row(input.type_tags[i]), xi, d);
  }
  make_dropout_mask(cache.emb_drop_mask, n, d, cfg_.dropout, dropout_rng);
  apply_mask(cache.embedded, cache.emb_drop_mask);

  cache.layers.assign(cfg_.layers, EncLayerCache());
  Matrix x = cache.embedded;
  MaskSpec full{MaskKind::FULL, 0};
  for (int l = 0; l < cfg_.layers; ++l) {
    EncLayerCache& lc = cache.layers[l];
    const std::string base = "enc" + std::to_string(l);
    lc.x_in = x;

    Matrix attn_out;
    layer_norm_fwd(x, params_.at(base + ".ln1.g"), params_.at(base + ".ln1.b"), lc.attn.x_ln,
                   lc.attn.ln);
    attention_fwd(cfg_, params_, base + ".attn", lc.attn.x_ln, lc.attn.x_ln, full, lc.attn, attn_out);
    make_dropout_mask(lc.attn.drop_mask, n, d, cfg_.dropout, dropout_rng);
    apply_mask(attn_out, lc.attn.drop_mask);
    add_inplace(attn_out, x);
    lc.x_mid = std::move(attn_out);

    Matrix ffn_out;
    layer_norm_fwd(lc.x_mid, params_.at(base + ".ln2.g"), params_.at(base + ".ln2.b"), lc.ffn.x_ln,
                   lc.ffn.ln);
    ffn_fwd(params_, base + ".ff", lc.ffn.x_ln, lc.ffn, ffn_out);
    make_dropout_mask(lc.ffn.drop_mask, n, d, cfg_.dropout, dropout_rng);
    apply_mask(ffn_out, lc.ffn.drop_mask);
    add_inplace(ffn_out, lc.x_mid);
    x = std::move(ffn_out);
  }
  layer_norm_fwd(x, params_.at("enc_ln.g"), params_.at("enc_ln.b"), cache.states, cache.final_ln);
}

void Transformer::decode(const DecoderInput& input, const Matrix& enc_states, DecoderCache& cache,
                         Rng* dropout_rng) const {
  const int d = cfg_.hidden_dim;
  const size_t n = input.ids.size();
  require(n > 0, "decode: empty input");
  require(input.prefix_len <= cfg_.max_prefix_len, "decode: prefix longer than max_prefix_len");
  require(static_cast<int>(n) - input.prefix_len <= cfg_.max_tgt_len,
          "decode: target longer than max_tgt_len");
  const double emb_scale = std::sqrt(static_cast<double>(d));

  cache.input = input;
  cache.embedded.resize(n, d);
  const Matrix& tok = params_.at("tok_emb");
  const Matrix& pos_ce = params_.at("pos_ce");
  const Matrix& pos_e = params_.at("pos_e");
  for (size_t i = 0; i < n; ++i) {
    require(input.ids[i] >= 0 && input.ids[i] < cfg_.vocab_size, "decode: id out of range");
    double* xi = cache.embedded.row(i);
    const double* ti = tok.row(input.ids[i]);
    const Matrix& pt = input.segment[i] == 0 ? pos_ce : pos_e;
    const double* pi = pt.row(input.position_ids[i]);
    for (int j = 0; j < d; ++j) xi[j] = ti[j] * emb_scale + pi[j];
  }
  make_dropout_mask(cache.emb_drop_mask, n, d, cfg_.dropout, dropout_rng);
  apply_mask(cache.embedded, cache.emb_drop_mask);

  MaskSpec self_mask{cfg_.prefix_bidirectional ? MaskKind::CAUSAL_PREFIX_BIDIR : MaskKind::CAUSAL,
                     input.prefix_len};
  MaskSpec full{MaskKind::FULL, 0};

  cache.layers.assign(cfg_.layers, DecLayerCache());
  Matrix x = cache.embedded;
  for (int l = 0; l < cfg_.layers; ++l) {
    DecLayerCache& lc = cache.layers[l];
    const std::string base = "dec" + std::to_string(l);
    lc.x_in = x;

    Matrix attn_out;
    layer_norm_fwd(x, params_.at(base + ".ln1.g"), params_.at(base + ".ln1.b"), lc.self_attn.x_ln,
                   lc.self_attn.ln);
    attention_fwd(cfg_, params_, base + ".self", lc.self_attn.x_ln, lc.self_attn.x_ln, self_mask,
                  lc.self_attn, attn_out);
    make_dropout_mask(lc.self_attn.drop_mask, n, d, cfg_.dropout, dropout_rng);
    apply_mask(attn_out, lc.self_attn.drop_mask);
    add_inplace(attn_out, x);
    lc.x_mid1 = std::move(attn_out);

    Matrix cross_out;
    layer_norm_fwd(lc.x_mid1, params_.at(base + ".ln2.g"), params_.at(base + ".ln2.b"),
                   lc.cross_attn.x_ln, lc.cross_attn.ln);
    attention_fwd(cfg_, params_, base + ".cross", lc.cross_attn.x_ln, enc_states, full,
                  lc.cross_attn, cross_out);
    make_dropout_mask(lc.cross_attn.drop_mask, n, d, cfg_.dropout, dropout_rng);
    apply_mask(cross_out, lc.cross_attn.drop_mask);
    add_inplace(cross_out, lc.x_mid1);
    lc.x_mid2 = std::move(cross_out);

    Matrix ffn_out;
    layer_norm_fwd(lc.x_mid2, params_.at(base + ".ln3.g"), params_.at(base + ".ln3.b"), lc.ffn.x_ln,
                   lc.ffn.ln);
    ffn_fwd(params_, base + ".ff", lc.ffn.x_ln, lc.ffn, ffn_out);
    make_dropout_mask(lc.ffn.drop_mask, n, d, cfg_.dropout, dropout_rng);
    apply_mask(ffn_out, lc.ffn.drop_mask);
    add_inplace(ffn_out, lc.x_mid2);
    x = std::move(ffn_out);
  }
  layer_norm_fwd(x, params_.at("dec_ln.g"), params_.at("dec_ln.b"), cache.hidden, cache.final_ln);
  // Output projection is tied to the token embedding table.
  matmul_nt(cache.hidden, params_.at("tok_emb"), cache.logits);
}

double Transformer::loss(const Matrix& logits, const std::vector<int>& labels,
                         const std::vector<uint8_t>& loss_mask, Matrix* dlogits, bool* all_masked) {
  require(logits.rows() == labels.size() && labels.size() == loss_mask.size(),
          "loss: misaligned inputs");
  size_t m = 0;
  for (uint8_t b : loss_mask) m += b;
  if (dlogits) dlogits->resize(logits.rows(), logits.cols());
  if (all_masked) *all_masked = (m == 0);
  if (m == 0) return 0.0;

  const double inv_m = 1.0 / static_cast<double>(m);
  double total = 0.0;
  const size_t v = logits.cols();
  for (size_t i = 0; i < logits.rows(); ++i) {
    if (!loss_mask[i]) continue;  // masked rows stay exactly zero in dlogits
    const double* zi = logits.row(i);
    double mx = zi[0];
    for (size_t j = 1; j < v; ++j) mx = std::max(mx, zi[j]);
    double sum = 0.0;
    for (size_t j = 0; j < v; ++j) sum += std::exp(zi[j] - mx);
    double lse = mx + std::log(sum);
    total += lse - zi[labels[i]];
    if (dlogits) {
      double* di = dlogits->row(i);
      double inv_sum = 1.0 / sum;
      for (size_t j = 0; j < v; ++j) di[j] = std::exp(zi[j] - mx) * inv_sum * inv_m;
      di[labels[i]] -= inv_m;
    }
  }
  return total * inv_m;
}

void Transformer::backward(const EncoderCache& enc, const DecoderCache& dec, const Matrix& dlogits,
                           ParamStore& grads) const {
  const int d = cfg_.hidden_dim;
  const double emb_scale = std::sqrt(static_cast<double>(d));
  const size_t n_dec = dec.input.ids.size();
  const size_t n_enc = enc.input.ids.size();

  // logits = hidden * tok_emb^T
  Matrix dhidden;
  matmul_nn(dlogits, params_.at("tok_emb"), dhidden);
  matmul_tn_acc(dlogits, dec.hidden, grads.at("tok_emb"));

  Matrix dx(n_dec, d);
  layer_norm_bwd(dhidden, dec.final_ln, params_.at("dec_ln.g"), dx, grads.at("dec_ln.g"),
                 grads.at("dec_ln.b"));

  Matrix denc_states(n_enc, d);
  MaskSpec self_mask{cfg_.prefix_bidirectional ? MaskKind::CAUSAL_PREFIX_BIDIR : MaskKind::CAUSAL,
                     dec.input.prefix_len};
  MaskSpec full{MaskKind::FULL, 0};

  for (int l = cfg_.layers - 1; l >= 0; --l) {
    const DecLayerCache& lc = dec.layers[l];
    const std::string base = "dec" + std::to_string(l);

    // y = x_mid2 + Drop(FFN(LN3(x_mid2)))
    Matrix dffn_out = dx;
    apply_mask(dffn_out, lc.ffn.drop_mask);
    Matrix dx_ln(n_dec, d);
    ffn_bwd(params_, base + ".ff", lc.ffn.x_ln, lc.ffn, dffn_out, dx_ln, grads);
    layer_norm_bwd(dx_ln, lc.ffn.ln, params_.at(base + ".ln3.g"), dx, grads.at(base + ".ln3.g"),
                   grads.at(base + ".ln3.b"));

    // x_mid2 = x_mid1 + Drop(Cross(LN2(x_mid1), enc))
    Matrix dcross_out = dx;
    apply_mask(dcross_out, lc.cross_attn.drop_mask);
    Matrix dq_ln(n_dec, d);
    attention_bwd(cfg_, params_, base + ".cross", lc.cross_attn.x_ln, enc.states, full,
                  lc.cross_attn, dcross_out, dq_ln, denc_states, grads);
    layer_norm_bwd(dq_ln, lc.cross_attn.ln, params_.at(base + ".ln2.g"), dx,
                   grads.at(base + ".ln2.g"), grads.at(base + ".ln2.b"));

    // x_mid1 = x_in + Drop(Self(LN1(x_in)))
    Matrix dself_out = dx;
    apply_mask(dself_out, lc.self_attn.drop_mask);
    Matrix dself_ln(n_dec, d);
    attention_bwd(cfg_, params_, base + ".self", lc.self_attn.x_ln, lc.self_attn.x_ln, self_mask,
                  lc.self_attn, dself_out, dself_ln, dself_ln, grads);
    layer_norm_bwd(dself_ln, lc.self_attn.ln, params_.at(base + ".ln1.g"), dx,
                   grads.at(base + ".ln1.g"), grads.at(base + ".ln1.b"));
  }

  // decoder embedding
  apply_mask(dx, dec.emb_drop_mask);
  {
    Matrix& dtok = grads.at("tok_emb");
    Matrix& dce = grads.at("pos_ce");
    Matrix& de = grads.at("pos_e");
    for (size_t i = 0; i < n_dec; ++i) {
      const double* di = dx.row(i);
      axpy(emb_scale, di, dtok.row(dec.input.ids[i]), d);
      Matrix& pt = dec.input.segment[i] == 0 ? dce : de;
      axpy(1.0, di, pt.row(dec.input.position_ids[i]), d);
    }
  }

  // encoder stack
  Matrix dex(n_enc, d);
  layer_norm_bwd(denc_states, enc.final_ln, params_.at("enc_ln.g"), dex, grads.at("enc_ln.g"),
                 grads.at("enc_ln.b"));
  for (int l = cfg_.layers - 1; l >= 0; --l) {
    const EncLayerCache& lc = enc.layers[l];
    const std::string base = "enc" + std::to_string(l);

    Matrix dffn_out = dex;
    apply_mask(dffn_out, lc.ffn.drop_mask);
    Matrix dx_ln(n_enc, d);
    ffn_bwd(params_, base + ".ff", lc.ffn.x_ln, lc.ffn, dffn_out, dx_ln, grads);
    layer_norm_bwd(dx_ln, lc.ffn.ln, params_.at(base + ".ln2.g"), dex, grads.at(base + ".ln2.g"),
                   grads.at(base + ".ln2.b"));

    Matrix dattn_out = dex;
    apply_mask(dattn_out, lc.attn.drop_mask);
    Matrix dattn_ln(n_enc, d);
    attention_bwd(cfg_, params_, base + ".attn", lc.attn.x_ln, lc.attn.x_ln, full, lc.attn,
                  dattn_out, dattn_ln, dattn_ln, grads);
    layer_norm_bwd(dattn_ln, lc.attn.ln, params_.at(base + ".ln1.g"), dex, grads.at(base + ".ln1.g"),
                   grads.at(base + ".ln1.b"));
  }

  apply_mask(dex, enc.emb_drop_mask);
  {
    Matrix& dtok = grads.at("tok_emb");
    Matrix& dpos = grads.at("pos_src");
    Matrix& drel = grads.at("rel_cand");
    Matrix& dtype = grads.at("type_emb");
    for (size_t i = 0; i < n_enc; ++i) {
      const double* di = dex.row(i);
      axpy(emb_scale, di, dtok.row(enc.input.ids[i]), d);
      axpy(1.0, di, dpos.row(enc.input.pos_ids[i]), d);
      if (enc.input.rel_ids[i] >= 0) axpy(1.0, di, drel.row(enc.input.rel_ids[i]), d);
      if (cfg_.use_type_embeddings) axpy(1.0, di, dtype.row(enc.input.type_tags[i]), d);
    }
  }
}

Matrix Transformer::mean_cross_attention(const DecoderCache& cache) {
  require(!cache.layers.empty(), "cross attention: empty cache");
  const auto& probs = cache.layers.back().cross_attn.probs;
  require(!probs.empty(), "cross attention: missing probabilities");
  Matrix mean(probs[0].rows(), probs[0].cols());
  for (const auto& p : probs) add_inplace(mean, p);
  scale_inplace(mean, 1.0 / static_cast<double>(probs.size()));
  return mean;
}

}  // namespace ea
