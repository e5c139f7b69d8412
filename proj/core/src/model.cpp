#include "t3s/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace t3s {

namespace {

using nlohmann::json;

constexpr double kLayerNormEps = 1e-5;

void softmax_inplace(double* row, int n) {
  double mx = row[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, row[i]);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    row[i] = std::exp(row[i] - mx);
    sum += row[i];
  }
  for (int i = 0; i < n; ++i) row[i] /= sum;
}

std::vector<double> make_dropout_mask(std::size_t n, double rate, Rng& rng) {
  std::vector<double> mask(n, 1.0);
  if (rate <= 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < n; ++i) {
    mask[i] = (rng.uniform() < rate) ? 0.0 : keep_scale;
  }
  return mask;
}

}  // namespace

PeVariant pe_variant_from_string(std::string_view s) {
  if (s == "none" || s == "nope") return PeVariant::NoPe;
  if (s == "linear") return PeVariant::LinearPe;
  if (s == "calendar") return PeVariant::CalendarPe;
  if (s == "thermal") return PeVariant::ThermalPe;
  throw ValidationError("unknown positional encoding '" + std::string(s) + "'");
}

std::string_view to_string(PeVariant variant) {
  switch (variant) {
    case PeVariant::NoPe: return "none";
    case PeVariant::LinearPe: return "linear";
    case PeVariant::CalendarPe: return "calendar";
    case PeVariant::ThermalPe: return "thermal";
  }
  return "?";
}

void ModelConfig::validate() const {
  if (channels < 1) throw ValidationError("model: channels must be >= 1");
  if (d_model < 1 || n_head < 1 || d_model % n_head != 0) {
    throw ValidationError("model: d_model must be divisible by n_head");
  }
  if (d_model % 2 != 0) throw ValidationError("model: d_model must be even");
  if (hidden < 1) throw ValidationError("model: hidden width must be >= 1");
  if (n_classes < 2) throw ValidationError("model: need at least 2 classes");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw ValidationError("model: dropout_rate must be in [0, 1)");
  }
  if (seq_length < 1) throw ValidationError("model: seq_length must be >= 1");
}

std::vector<ParamView> trainable_arrays(ClassifierParams& p) {
  return {
      {"embed_w", &p.embed_w}, {"embed_b", &p.embed_b},
      {"key_w", &p.key_w},     {"query", &p.query},
      {"value_w", &p.value_w}, {"out_w", &p.out_w},
      {"out_b", &p.out_b},     {"ln_gain", &p.ln_gain},
      {"ln_bias", &p.ln_bias}, {"mlp_w1", &p.mlp_w1},
      {"mlp_b1", &p.mlp_b1},   {"mlp_w2", &p.mlp_w2},
      {"mlp_b2", &p.mlp_b2},
  };
}

ClassifierParams init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  const int d = config.d_model;
  const int c = config.channels;
  ClassifierParams p;
  p.config = config;
  Rng rng(derive_seed(seed, stream_id("init")));

  auto fill_normal = [&](std::vector<double>& v, std::size_t n, double sd) {
    v.resize(n);
    for (auto& x : v) x = rng.normal() * sd;
  };

  fill_normal(p.embed_w, static_cast<std::size_t>(d) * c, 1.0 / std::sqrt(c));
  p.embed_b.assign(static_cast<std::size_t>(d), 0.0);
  fill_normal(p.key_w, static_cast<std::size_t>(d) * d, 1.0 / std::sqrt(d));
  fill_normal(p.query, static_cast<std::size_t>(config.n_head) * config.head_dim(),
              1.0 / std::sqrt(config.head_dim()));
  fill_normal(p.value_w, static_cast<std::size_t>(d) * d, 1.0 / std::sqrt(d));
  fill_normal(p.out_w, static_cast<std::size_t>(d) * d, 1.0 / std::sqrt(d));
  p.out_b.assign(static_cast<std::size_t>(d), 0.0);
  p.ln_gain.assign(static_cast<std::size_t>(d), 1.0);
  p.ln_bias.assign(static_cast<std::size_t>(d), 0.0);
  fill_normal(p.mlp_w1, static_cast<std::size_t>(config.hidden) * d,
              1.0 / std::sqrt(d));
  p.mlp_b1.assign(static_cast<std::size_t>(config.hidden), 0.0);
  fill_normal(p.mlp_w2, static_cast<std::size_t>(config.n_classes) * config.hidden,
              1.0 / std::sqrt(config.hidden));
  p.mlp_b2.assign(static_cast<std::size_t>(config.n_classes), 0.0);

  p.feat_mean.assign(static_cast<std::size_t>(c), 0.0);
  p.feat_std.assign(static_cast<std::size_t>(c), 1.0);
  return p;
}

ClassifierParams zeros_like(const ClassifierParams& params) {
  ClassifierParams z;
  z.config = params.config;
  ClassifierParams& src = const_cast<ClassifierParams&>(params);
  auto src_views = trainable_arrays(src);
  auto dst_views = trainable_arrays(z);
  for (std::size_t i = 0; i < src_views.size(); ++i) {
    dst_views[i].data->assign(src_views[i].data->size(), 0.0);
  }
  z.feat_mean = params.feat_mean;
  z.feat_std = params.feat_std;
  return z;
}

std::vector<double> positional_encoding(PeVariant variant,
                                        std::span<const double> raw_positions,
                                        int d_model) {
  if (d_model % 2 != 0) {
    throw ValidationError("positional_encoding: d_model must be even");
  }
  auto l = raw_positions.size();
  std::vector<double> pe(l * static_cast<std::size_t>(d_model), 0.0);
  if (variant == PeVariant::NoPe) return pe;

  const double scale =
      (variant == PeVariant::ThermalPe) ? 1.0 / kThermalPeDivisor : 1.0;
  for (std::size_t i = 0; i < l; ++i) {
    double pos = raw_positions[i] * scale;
    double* row = pe.data() + i * d_model;
    for (int k = 0; k < d_model / 2; ++k) {
      double freq = std::pow(10000.0, -2.0 * k / d_model);
      double angle = pos * freq;
      row[2 * k] = std::sin(angle);
      row[2 * k + 1] = std::cos(angle);
    }
  }
  return pe;
}

std::vector<double> forward(const ClassifierParams& params, const Batch& batch,
                            bool train_mode, std::uint64_t dropout_seed,
                            ForwardCache* cache) {
  const ModelConfig& cfg = params.config;
  const int b = batch.b, l = batch.l, c = batch.c;
  const int d = cfg.d_model, nh = cfg.n_head, dk = cfg.head_dim();
  const int hid = cfg.hidden, k = cfg.n_classes;
  if (c != cfg.channels) throw ValidationError("forward: channel mismatch");
  if (batch.x.size() != static_cast<std::size_t>(b) * l * c ||
      batch.positions.size() != static_cast<std::size_t>(b) * l ||
      batch.valid.size() != static_cast<std::size_t>(b) * l ||
      batch.labels.size() != static_cast<std::size_t>(b)) {
    throw ValidationError("forward: batch shape mismatch");
  }
  for (int s = 0; s < b; ++s) {
    bool any = false;
    for (int t = 0; t < l; ++t) any = any || batch.valid[s * l + t];
    if (!any) {
      throw ValidationError("forward: sequence " + std::to_string(s) +
                            " has no valid timestep");
    }
  }

  ForwardCache local;
  ForwardCache& cc = cache ? *cache : local;
  cc.embedded.assign(static_cast<std::size_t>(b) * l * d, 0.0);
  cc.values.assign(static_cast<std::size_t>(b) * l * d, 0.0);
  cc.attention.assign(static_cast<std::size_t>(b) * nh * l, 0.0);
  cc.attn_out.assign(static_cast<std::size_t>(b) * d, 0.0);
  cc.proj.assign(static_cast<std::size_t>(b) * d, 0.0);
  cc.ln_norm.assign(static_cast<std::size_t>(b) * d, 0.0);
  cc.ln_inv_sigma.assign(static_cast<std::size_t>(b), 0.0);
  cc.ln_out.assign(static_cast<std::size_t>(b) * d, 0.0);
  cc.mlp_pre.assign(static_cast<std::size_t>(b) * hid, 0.0);
  cc.mlp_act.assign(static_cast<std::size_t>(b) * hid, 0.0);

  const bool use_dropout = train_mode && cfg.dropout_rate > 0.0;
  if (use_dropout) {
    Rng rng(derive_seed(dropout_seed, stream_id("dropout")));
    cc.proj_drop_mask =
        make_dropout_mask(static_cast<std::size_t>(b) * d, cfg.dropout_rate, rng);
    cc.mlp_drop_mask =
        make_dropout_mask(static_cast<std::size_t>(b) * hid, cfg.dropout_rate, rng);
  } else {
    cc.proj_drop_mask.assign(static_cast<std::size_t>(b) * d, 1.0);
    cc.mlp_drop_mask.assign(static_cast<std::size_t>(b) * hid, 1.0);
  }

  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
  std::vector<double> logits(static_cast<std::size_t>(b) * k, 0.0);
  std::vector<double> scores(static_cast<std::size_t>(l), 0.0);
  std::vector<double> keys(static_cast<std::size_t>(l) * d, 0.0);

  for (int s = 0; s < b; ++s) {
    const std::uint8_t* valid = batch.valid.data() + static_cast<std::size_t>(s) * l;
    double* emb = cc.embedded.data() + static_cast<std::size_t>(s) * l * d;
    double* val = cc.values.data() + static_cast<std::size_t>(s) * l * d;

    // per-timestep embedding + positional encoding (valid slots only)
    std::vector<double> pos(static_cast<std::size_t>(l));
    for (int t = 0; t < l; ++t) pos[t] = batch.positions[s * l + t];
    auto pe = positional_encoding(cfg.pe, pos, d);
    for (int t = 0; t < l; ++t) {
      if (!valid[t]) continue;
      const double* xt = batch.x.data() + (static_cast<std::size_t>(s) * l + t) * c;
      double* et = emb + static_cast<std::size_t>(t) * d;
      for (int i = 0; i < d; ++i) {
        double acc = params.embed_b[i];
        const double* wrow = params.embed_w.data() + static_cast<std::size_t>(i) * c;
        for (int j = 0; j < c; ++j) acc += wrow[j] * xt[j];
        et[i] = acc + pe[static_cast<std::size_t>(t) * d + i];
      }
    }

    // keys and values (valid slots only)
    for (int t = 0; t < l; ++t) {
      if (!valid[t]) continue;
      const double* et = emb + static_cast<std::size_t>(t) * d;
      double* kt = keys.data() + static_cast<std::size_t>(t) * d;
      double* vt = val + static_cast<std::size_t>(t) * d;
      for (int i = 0; i < d; ++i) {
        double ka = 0.0, va = 0.0;
        const double* krow = params.key_w.data() + static_cast<std::size_t>(i) * d;
        const double* vrow = params.value_w.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) {
          ka += krow[j] * et[j];
          va += vrow[j] * et[j];
        }
        kt[i] = ka;
        vt[i] = va;
      }
    }

    // master-query attention per head
    double* head_out = cc.attn_out.data() + static_cast<std::size_t>(s) * d;
    for (int h = 0; h < nh; ++h) {
      const double* q = params.query.data() + static_cast<std::size_t>(h) * dk;
      double mx = -std::numeric_limits<double>::infinity();
      for (int t = 0; t < l; ++t) {
        if (!valid[t]) continue;
        const double* kt = keys.data() + static_cast<std::size_t>(t) * d + h * dk;
        double sc = 0.0;
        for (int r = 0; r < dk; ++r) sc += q[r] * kt[r];
        sc *= inv_sqrt_dk;
        scores[t] = sc;
        mx = std::max(mx, sc);
      }
      double denom = 0.0;
      for (int t = 0; t < l; ++t) {
        if (!valid[t]) continue;
        denom += std::exp(scores[t] - mx);
      }
      double* attn = cc.attention.data() +
                     (static_cast<std::size_t>(s) * nh + h) * l;
      for (int t = 0; t < l; ++t) {
        if (!valid[t]) continue;
        attn[t] = std::exp(scores[t] - mx) / denom;
      }
      double* oh = head_out + static_cast<std::size_t>(h) * dk;
      for (int t = 0; t < l; ++t) {
        if (!valid[t]) continue;
        const double* vt = val + static_cast<std::size_t>(t) * d + h * dk;
        for (int r = 0; r < dk; ++r) oh[r] += attn[t] * vt[r];
      }
    }

    // output projection, dropout, layer norm
    double* proj = cc.proj.data() + static_cast<std::size_t>(s) * d;
    for (int i = 0; i < d; ++i) {
      double acc = params.out_b[i];
      const double* wrow = params.out_w.data() + static_cast<std::size_t>(i) * d;
      for (int j = 0; j < d; ++j) acc += wrow[j] * head_out[j];
      proj[i] = acc * cc.proj_drop_mask[static_cast<std::size_t>(s) * d + i];
    }
    double mu = 0.0;
    for (int i = 0; i < d; ++i) mu += proj[i];
    mu /= d;
    double var = 0.0;
    for (int i = 0; i < d; ++i) {
      double dvi = proj[i] - mu;
      var += dvi * dvi;
    }
    var /= d;
    double inv_sigma = 1.0 / std::sqrt(var + kLayerNormEps);
    cc.ln_inv_sigma[s] = inv_sigma;
    double* norm = cc.ln_norm.data() + static_cast<std::size_t>(s) * d;
    double* y = cc.ln_out.data() + static_cast<std::size_t>(s) * d;
    for (int i = 0; i < d; ++i) {
      norm[i] = (proj[i] - mu) * inv_sigma;
      y[i] = params.ln_gain[i] * norm[i] + params.ln_bias[i];
    }

    // MLP head
    double* pre = cc.mlp_pre.data() + static_cast<std::size_t>(s) * hid;
    double* act = cc.mlp_act.data() + static_cast<std::size_t>(s) * hid;
    for (int i = 0; i < hid; ++i) {
      double acc = params.mlp_b1[i];
      const double* wrow = params.mlp_w1.data() + static_cast<std::size_t>(i) * d;
      for (int j = 0; j < d; ++j) acc += wrow[j] * y[j];
      pre[i] = acc;
      double a = acc > 0.0 ? acc : 0.0;
      act[i] = a * cc.mlp_drop_mask[static_cast<std::size_t>(s) * hid + i];
    }
    double* lg = logits.data() + static_cast<std::size_t>(s) * k;
    for (int i = 0; i < k; ++i) {
      double acc = params.mlp_b2[i];
      const double* wrow = params.mlp_w2.data() + static_cast<std::size_t>(i) * hid;
      for (int j = 0; j < hid; ++j) acc += wrow[j] * act[j];
      lg[i] = acc;
    }
  }
  return logits;
}

double loss_and_grad(const ClassifierParams& params, const Batch& batch,
                     std::uint64_t dropout_seed, ClassifierParams& grads) {
  const ModelConfig& cfg = params.config;
  const int b = batch.b, l = batch.l, c = batch.c;
  const int d = cfg.d_model, nh = cfg.n_head, dk = cfg.head_dim();
  const int hid = cfg.hidden, k = cfg.n_classes;

  ForwardCache cc;
  auto logits = forward(params, batch, /*train_mode=*/true, dropout_seed, &cc);

  // mean cross-entropy and dlogits
  double loss = 0.0;
  std::vector<double> dlogits(logits.size());
  for (int s = 0; s < b; ++s) {
    double* lg = logits.data() + static_cast<std::size_t>(s) * k;
    int label = batch.labels[s];
    if (label < 0 || label >= k) {
      throw ValidationError("loss: label out of range");
    }
    double mx = lg[0];
    for (int i = 1; i < k; ++i) mx = std::max(mx, lg[i]);
    double denom = 0.0;
    for (int i = 0; i < k; ++i) denom += std::exp(lg[i] - mx);
    double log_denom = std::log(denom);
    loss += -(lg[label] - mx - log_denom);
    double* dl = dlogits.data() + static_cast<std::size_t>(s) * k;
    for (int i = 0; i < k; ++i) {
      double p = std::exp(lg[i] - mx) / denom;
      dl[i] = (p - (i == label ? 1.0 : 0.0)) / b;
    }
  }
  loss /= b;
  if (!std::isfinite(loss)) {
    throw ValidationError("loss: non-finite value encountered");
  }

  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
  std::vector<double> keys(static_cast<std::size_t>(l) * d);
  std::vector<double> d_emb(static_cast<std::size_t>(l) * d);
  std::vector<double> d_val(static_cast<std::size_t>(l) * d);
  std::vector<double> d_attn(static_cast<std::size_t>(l));
  std::vector<double> d_score(static_cast<std::size_t>(l));

  for (int s = 0; s < b; ++s) {
    const std::uint8_t* valid = batch.valid.data() + static_cast<std::size_t>(s) * l;
    const double* emb = cc.embedded.data() + static_cast<std::size_t>(s) * l * d;
    const double* val = cc.values.data() + static_cast<std::size_t>(s) * l * d;
    const double* head_out = cc.attn_out.data() + static_cast<std::size_t>(s) * d;
    const double* norm = cc.ln_norm.data() + static_cast<std::size_t>(s) * d;
    const double* y = cc.ln_out.data() + static_cast<std::size_t>(s) * d;
    const double* pre = cc.mlp_pre.data() + static_cast<std::size_t>(s) * hid;
    const double* act = cc.mlp_act.data() + static_cast<std::size_t>(s) * hid;
    const double* dl = dlogits.data() + static_cast<std::size_t>(s) * k;

    // MLP head backward
    std::vector<double> d_act(static_cast<std::size_t>(hid), 0.0);
    for (int i = 0; i < k; ++i) {
      double g = dl[i];
      grads.mlp_b2[i] += g;
      double* wgrad = grads.mlp_w2.data() + static_cast<std::size_t>(i) * hid;
      const double* wrow = params.mlp_w2.data() + static_cast<std::size_t>(i) * hid;
      for (int j = 0; j < hid; ++j) {
        wgrad[j] += g * act[j];
        d_act[j] += g * wrow[j];
      }
    }
    std::vector<double> d_y(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < hid; ++i) {
      double g = d_act[i] * cc.mlp_drop_mask[static_cast<std::size_t>(s) * hid + i];
      if (pre[i] <= 0.0) g = 0.0;
      if (g == 0.0) continue;
      grads.mlp_b1[i] += g;
      double* wgrad = grads.mlp_w1.data() + static_cast<std::size_t>(i) * d;
      const double* wrow = params.mlp_w1.data() + static_cast<std::size_t>(i) * d;
      for (int j = 0; j < d; ++j) {
        wgrad[j] += g * y[j];
        d_y[j] += g * wrow[j];
      }
    }

    // layer norm backward
    double mean_g = 0.0, mean_gn = 0.0;
    std::vector<double> gvec(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      grads.ln_gain[i] += d_y[i] * norm[i];
      grads.ln_bias[i] += d_y[i];
      gvec[i] = d_y[i] * params.ln_gain[i];
      mean_g += gvec[i];
      mean_gn += gvec[i] * norm[i];
    }
    mean_g /= d;
    mean_gn /= d;
    const double inv_sigma = cc.ln_inv_sigma[s];
    std::vector<double> d_proj(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      double g = inv_sigma * (gvec[i] - mean_g - norm[i] * mean_gn);
      d_proj[i] = g * cc.proj_drop_mask[static_cast<std::size_t>(s) * d + i];
    }

    // output projection backward
    std::vector<double> d_head(static_cast<std::size_t>(d), 0.0);
    for (int i = 0; i < d; ++i) {
      double g = d_proj[i];
      grads.out_b[i] += g;
      double* wgrad = grads.out_w.data() + static_cast<std::size_t>(i) * d;
      const double* wrow = params.out_w.data() + static_cast<std::size_t>(i) * d;
      for (int j = 0; j < d; ++j) {
        wgrad[j] += g * head_out[j];
        d_head[j] += g * wrow[j];
      }
    }

    // recompute keys for this sequence (valid slots only)
    for (int t = 0; t < l; ++t) {
      if (!valid[t]) continue;
      const double* et = emb + static_cast<std::size_t>(t) * d;
      double* kt = keys.data() + static_cast<std::size_t>(t) * d;
      for (int i = 0; i < d; ++i) {
        double acc = 0.0;
        const double* krow = params.key_w.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) acc += krow[j] * et[j];
        kt[i] = acc;
      }
    }

    std::fill(d_emb.begin(), d_emb.end(), 0.0);
    std::fill(d_val.begin(), d_val.end(), 0.0);

    // attention backward per head
    for (int h = 0; h < nh; ++h) {
      const double* attn = cc.attention.data() +
                           (static_cast<std::size_t>(s) * nh + h) * l;
      const double* dh = d_head.data() + static_cast<std::size_t>(h) * dk;
      const double* q = params.query.data() + static_cast<std::size_t>(h) * dk;
      double dot = 0.0;
      for (int t = 0; t < l; ++t) {
        if (!valid[t]) continue;
        const double* vt = val + static_cast<std::size_t>(t) * d + h * dk;
        double da = 0.0;
        for (int r = 0; r < dk; ++r) {
          da += dh[r] * vt[r];
          d_val[static_cast<std::size_t>(t) * d + h * dk + r] += attn[t] * dh[r];
        }
        d_attn[t] = da;
        dot += attn[t] * da;
      }
      double* qgrad = grads.query.data() + static_cast<std::size_t>(h) * dk;
      for (int t = 0; t < l; ++t) {
        if (!valid[t]) continue;
        double ds = attn[t] * (d_attn[t] - dot) * inv_sqrt_dk;
        d_score[t] = ds;
        const double* kt = keys.data() + static_cast<std::size_t>(t) * d + h * dk;
        for (int r = 0; r < dk; ++r) qgrad[r] += ds * kt[r];
      }
      // d_key rows feed key_w grads and d_emb
      for (int t = 0; t < l; ++t) {
        if (!valid[t]) continue;
        double ds = d_score[t];
        if (ds == 0.0) continue;
        const double* et = emb + static_cast<std::size_t>(t) * d;
        double* de = d_emb.data() + static_cast<std::size_t>(t) * d;
        for (int r = 0; r < dk; ++r) {
          double dkr = ds * q[r];
          int row = h * dk + r;
          double* kgrad = grads.key_w.data() + static_cast<std::size_t>(row) * d;
          const double* krow = params.key_w.data() + static_cast<std::size_t>(row) * d;
          for (int j = 0; j < d; ++j) {
            kgrad[j] += dkr * et[j];
            de[j] += dkr * krow[j];
          }
        }
      }
    }

    // value projection backward and embedding grads
    for (int t = 0; t < l; ++t) {
      if (!valid[t]) continue;
      const double* et = emb + static_cast<std::size_t>(t) * d;
      const double* dv = d_val.data() + static_cast<std::size_t>(t) * d;
      double* de = d_emb.data() + static_cast<std::size_t>(t) * d;
      for (int i = 0; i < d; ++i) {
        double g = dv[i];
        if (g == 0.0) continue;
        double* vgrad = grads.value_w.data() + static_cast<std::size_t>(i) * d;
        const double* vrow = params.value_w.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) {
          vgrad[j] += g * et[j];
          de[j] += g * vrow[j];
        }
      }
      const double* xt = batch.x.data() + (static_cast<std::size_t>(s) * l + t) * c;
      for (int i = 0; i < d; ++i) {
        double g = de[i];
        if (g == 0.0) continue;
        grads.embed_b[i] += g;
        double* wgrad = grads.embed_w.data() + static_cast<std::size_t>(i) * c;
        for (int j = 0; j < c; ++j) wgrad[j] += g * xt[j];
      }
    }
  }
  return loss;
}

std::vector<double> predict_proba(const ClassifierParams& params,
                                  const Batch& batch) {
  auto logits = forward(params, batch, /*train_mode=*/false, 0);
  const int k = params.config.n_classes;
  for (int s = 0; s < batch.b; ++s) {
    softmax_inplace(logits.data() + static_cast<std::size_t>(s) * k, k);
  }
  return logits;
}

std::vector<double> mc_dropout_predict(const ClassifierParams& params,
                                       const Batch& batch, int n_members,
                                       double rate, std::uint64_t seed) {
  if (n_members < 1) {
    throw ValidationError("mc_dropout_predict: need at least one member");
  }
  if (rate < 0.0 || rate >= 1.0) {
    throw ValidationError("mc_dropout_predict: rate must be in [0, 1)");
  }
  if (rate == 0.0) return predict_proba(params, batch);

  ClassifierParams stochastic = params;
  stochastic.config.dropout_rate = rate;
  const int k = params.config.n_classes;
  std::vector<double> mean(static_cast<std::size_t>(batch.b) * k, 0.0);
  for (int m = 0; m < n_members; ++m) {
    auto logits = forward(stochastic, batch, /*train_mode=*/true,
                          derive_seed(seed, stream_id("mc-member"), m));
    for (int s = 0; s < batch.b; ++s) {
      softmax_inplace(logits.data() + static_cast<std::size_t>(s) * k, k);
    }
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += logits[i];
  }
  for (auto& v : mean) v /= n_members;
  return mean;
}

std::vector<double> uncertainty(std::span<const double> probs, int n_classes) {
  if (n_classes < 1 || probs.size() % n_classes != 0) {
    throw ValidationError("uncertainty: shape mismatch");
  }
  auto n = probs.size() / n_classes;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double mx = probs[i * n_classes];
    for (int j = 1; j < n_classes; ++j) {
      mx = std::max(mx, probs[i * n_classes + j]);
    }
    out[i] = 1.0 - mx;
  }
  return out;
}

long long forward_mac_count(const ModelConfig& cfg) {
  const long long l = cfg.seq_length, d = cfg.d_model, c = cfg.channels;
  const long long hid = cfg.hidden, k = cfg.n_classes;
  long long per_step = d * c       // embedding
                       + 2 * d * d  // key and value projections
                       + d          // scores (n_head * head_dim)
                       + d;         // attention-weighted sum
  return l * per_step + d * d  // output projection
         + 2 * d               // layer norm scale + gain
         + hid * d + k * hid;  // MLP head
}

double onecycle_lr(long long step, long long total_steps,
                   const TrainOptions& opts) {
  if (total_steps < 1) throw ValidationError("onecycle_lr: no steps");
  long long warmup = std::llround(opts.warmup_fraction * total_steps);
  warmup = std::clamp<long long>(warmup, 1, total_steps);
  if (step < warmup) {
    return opts.lr_base + (opts.lr_max - opts.lr_base) *
                              static_cast<double>(step) / warmup;
  }
  if (total_steps == warmup) return opts.lr_max;
  const double lr_end = opts.lr_base / 100.0;
  double tau = static_cast<double>(step - warmup) /
               static_cast<double>(total_steps - warmup);
  return lr_end + (opts.lr_max - lr_end) * 0.5 *
                      (1.0 + std::cos(std::numbers::pi * tau));
}

PixelSet build_pixel_set(std::span<const TrainCube> cubes, SamplerKind sampler,
                         PeVariant pe, int seq_length,
                         const std::vector<std::vector<int>>* pixel_subset,
                         const SelectionOptions& sel_opts) {
  if (cubes.empty()) throw ValidationError("build_pixel_set: no cubes");
  if (pixel_subset && pixel_subset->size() != cubes.size()) {
    throw ValidationError("build_pixel_set: pixel_subset size mismatch");
  }

  PixelSet set;
  set.l = seq_length;
  set.c = cubes[0].cube->c;

  for (std::size_t ci = 0; ci < cubes.size(); ++ci) {
    const DataCube& cube = *cubes[ci].cube;
    if (cube.c != set.c) {
      throw ValidationError("build_pixel_set: channel count differs across cubes");
    }
    auto input = make_sampler_input(cube, *cubes[ci].thermal);
    auto sel = run_sampler(sampler, input, seq_length, sel_opts);

    std::vector<double> pos_source(static_cast<std::size_t>(cube.t), 0.0);
    switch (pe) {
      case PeVariant::CalendarPe:
        for (int t = 0; t < cube.t; ++t) pos_source[t] = input.obs_days[t];
        break;
      case PeVariant::ThermalPe:
        for (int t = 0; t < cube.t; ++t) pos_source[t] = input.obs_gdd[t];
        break;
      case PeVariant::LinearPe:
      case PeVariant::NoPe:
        break;  // slot index assigned after gathering
    }
    auto gathered = apply_selection(cube, sel, pos_source);
    if (pe == PeVariant::LinearPe || pe == PeVariant::NoPe) {
      for (int t = 0; t < gathered.l; ++t) gathered.positions[t] = t;
    }

    std::vector<int> pixels;
    if (pixel_subset) {
      pixels = (*pixel_subset)[ci];
    } else {
      for (int p = 0; p < cube.h * cube.w; ++p) {
        if (cube.labels[static_cast<std::size_t>(p)] != kIgnoreLabel) {
          pixels.push_back(p);
        }
      }
    }

    auto xy = static_cast<std::size_t>(cube.h) * cube.w;
    for (int p : pixels) {
      auto lab = cube.labels[static_cast<std::size_t>(p)];
      if (lab == kIgnoreLabel) {
        throw ValidationError("build_pixel_set: subset contains unlabeled pixel");
      }
      set.labels.push_back(lab);
      for (int t = 0; t < gathered.l; ++t) {
        set.positions.push_back(gathered.positions[t]);
        set.valid.push_back(gathered.valid[t]);
        for (int ch = 0; ch < gathered.c; ++ch) {
          set.x.push_back(to_reflectance(
              gathered.reflectance[(static_cast<std::size_t>(t) * gathered.c + ch) * xy +
                                   static_cast<std::size_t>(p)]));
        }
      }
    }
  }
  set.n = static_cast<int>(set.labels.size());
  return set;
}

Batch make_batch(const PixelSet& set, std::span<const int> rows,
                 std::span<const double> feat_mean,
                 std::span<const double> feat_std) {
  if (feat_mean.size() != static_cast<std::size_t>(set.c) ||
      feat_std.size() != static_cast<std::size_t>(set.c)) {
    throw ValidationError("make_batch: standardization shape mismatch");
  }
  Batch batch;
  batch.b = static_cast<int>(rows.size());
  batch.l = set.l;
  batch.c = set.c;
  batch.x.resize(static_cast<std::size_t>(batch.b) * set.l * set.c);
  batch.positions.resize(static_cast<std::size_t>(batch.b) * set.l);
  batch.valid.resize(static_cast<std::size_t>(batch.b) * set.l);
  batch.labels.resize(static_cast<std::size_t>(batch.b));

  for (int i = 0; i < batch.b; ++i) {
    int row = rows[static_cast<std::size_t>(i)];
    if (row < 0 || row >= set.n) throw ValidationError("make_batch: row out of range");
    batch.labels[i] = set.labels[static_cast<std::size_t>(row)];
    for (int t = 0; t < set.l; ++t) {
      auto src = static_cast<std::size_t>(row) * set.l + t;
      auto dst = static_cast<std::size_t>(i) * set.l + t;
      batch.positions[dst] = set.positions[src];
      batch.valid[dst] = set.valid[src];
      for (int ch = 0; ch < set.c; ++ch) {
        double v = 0.0;
        if (set.valid[src]) {
          v = (set.x[src * set.c + ch] - feat_mean[ch]) / feat_std[ch];
        }
        batch.x[dst * set.c + ch] = v;
      }
    }
  }
  return batch;
}

namespace {

// mean/std per channel over valid slots
void standardization_stats(const PixelSet& set, std::vector<double>& mean,
                           std::vector<double>& sd) {
  mean.assign(static_cast<std::size_t>(set.c), 0.0);
  sd.assign(static_cast<std::size_t>(set.c), 0.0);
  std::vector<double> sq(static_cast<std::size_t>(set.c), 0.0);
  long long count = 0;
  for (int row = 0; row < set.n; ++row) {
    for (int t = 0; t < set.l; ++t) {
      auto slot = static_cast<std::size_t>(row) * set.l + t;
      if (!set.valid[slot]) continue;
      ++count;
      for (int ch = 0; ch < set.c; ++ch) {
        double v = set.x[slot * set.c + ch];
        mean[ch] += v;
        sq[ch] += v * v;
      }
    }
  }
  if (count == 0) throw ValidationError("standardization: no valid slots");
  for (int ch = 0; ch < set.c; ++ch) {
    mean[ch] /= static_cast<double>(count);
    double var = sq[ch] / static_cast<double>(count) - mean[ch] * mean[ch];
    sd[ch] = std::sqrt(std::max(var, 0.0));
    if (sd[ch] < 1e-8) sd[ch] = 1e-8;
  }
}

std::vector<int> sample_indices(std::vector<int> pool, std::size_t count,
                                Rng& rng) {
  if (count >= pool.size()) return pool;
  for (std::size_t i = 0; i < count; ++i) {
    auto j = i + static_cast<std::size_t>(
                     rng.next_u64() % (pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

TrainResult train(const ModelConfig& config, std::span<const TrainCube> cubes,
                  SamplerKind sampler, const TrainOptions& opts) {
  config.validate();
  if (cubes.empty()) throw ValidationError("train: empty training set");
  if (!(opts.label_fraction > 0.0 && opts.label_fraction <= 1.0)) {
    throw ValidationError("train: label_fraction must be in (0, 1]");
  }
  if (opts.batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
  if (opts.epochs < 1) throw ValidationError("train: epochs must be >= 1");

  // Pixel subsets are derived from the seed only, never from the sampler, so
  // methods compared under one seed see identical training pixels.
  std::vector<std::vector<int>> subsets(cubes.size());
  for (std::size_t ci = 0; ci < cubes.size(); ++ci) {
    const DataCube& cube = *cubes[ci].cube;
    std::vector<int> pool;
    for (int p = 0; p < cube.h * cube.w; ++p) {
      if (cube.labels[static_cast<std::size_t>(p)] != kIgnoreLabel) {
        pool.push_back(p);
      }
    }
    if (pool.empty()) throw ValidationError("train: cube has no labeled pixels");
    if (opts.label_fraction < 1.0) {
      auto keep = static_cast<std::size_t>(
          std::max<long long>(1, std::llround(opts.label_fraction *
                                              static_cast<double>(pool.size()))));
      Rng rng(derive_seed(opts.seed, stream_id("label-subset"), ci));
      pool = sample_indices(std::move(pool), keep, rng);
    }
    if (opts.max_pixels_per_cube > 0 &&
        pool.size() > static_cast<std::size_t>(opts.max_pixels_per_cube)) {
      Rng rng(derive_seed(opts.seed, stream_id("pixel-cap"), ci));
      pool = sample_indices(std::move(pool),
                            static_cast<std::size_t>(opts.max_pixels_per_cube), rng);
    }
    subsets[ci] = std::move(pool);
  }

  auto set = build_pixel_set(cubes, sampler, config.pe, config.seq_length,
                             &subsets);
  if (set.n == 0) throw ValidationError("train: no training pixels");

  ClassifierParams params = init_params(config, opts.seed);
  standardization_stats(set, params.feat_mean, params.feat_std);

  ClassifierParams grads = zeros_like(params);
  auto param_views = trainable_arrays(params);
  auto grad_views = trainable_arrays(grads);
  std::vector<std::vector<double>> adam_m(param_views.size());
  std::vector<std::vector<double>> adam_v(param_views.size());
  for (std::size_t i = 0; i < param_views.size(); ++i) {
    adam_m[i].assign(param_views[i].data->size(), 0.0);
    adam_v[i].assign(param_views[i].data->size(), 0.0);
  }

  const long long steps_per_epoch =
      (set.n + opts.batch_size - 1) / opts.batch_size;
  const long long total_steps = steps_per_epoch * opts.epochs;

  std::vector<HistoryRow> history;
  std::vector<int> order(static_cast<std::size_t>(set.n));
  std::iota(order.begin(), order.end(), 0);

  long long step = 0;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(opts.seed, stream_id("shuffle"), epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      auto j = static_cast<std::size_t>(shuffle_rng.next_u64() % i);
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss = 0.0;
    long long epoch_correct = 0, epoch_samples = 0, epoch_steps = 0;
    double lr = opts.lr_base;
    for (int start = 0; start < set.n; start += opts.batch_size) {
      int count = std::min(opts.batch_size, set.n - start);
      auto batch = make_batch(
          set, std::span<const int>(order.data() + start,
                                    static_cast<std::size_t>(count)),
          params.feat_mean, params.feat_std);

      for (auto& view : grad_views) {
        std::fill(view.data->begin(), view.data->end(), 0.0);
      }
      std::vector<double> logits;
      double loss = 0.0;
      try {
        ForwardCache cache;
        loss = loss_and_grad(params, batch,
                             derive_seed(opts.seed, stream_id("step"), step),
                             grads);
        logits = forward(params, batch, /*train_mode=*/false, 0);
      } catch (const ValidationError& e) {
        throw TrainingDiverged(
            "training aborted at step " + std::to_string(step) + ": " + e.what(),
            history);
      }

      lr = onecycle_lr(step, total_steps, opts);
      ++step;
      const double b1 = opts.adam_beta1, b2 = opts.adam_beta2;
      const double bias1 = 1.0 - std::pow(b1, static_cast<double>(step));
      const double bias2 = 1.0 - std::pow(b2, static_cast<double>(step));
      for (std::size_t pi = 0; pi < param_views.size(); ++pi) {
        auto& pv = *param_views[pi].data;
        auto& gv = *grad_views[pi].data;
        auto& mv = adam_m[pi];
        auto& vv = adam_v[pi];
        for (std::size_t j = 0; j < pv.size(); ++j) {
          mv[j] = b1 * mv[j] + (1.0 - b1) * gv[j];
          vv[j] = b2 * vv[j] + (1.0 - b2) * gv[j] * gv[j];
          double mhat = mv[j] / bias1;
          double vhat = vv[j] / bias2;
          pv[j] -= lr * mhat / (std::sqrt(vhat) + opts.adam_eps);
        }
      }

      epoch_loss += loss;
      ++epoch_steps;
      const int k = config.n_classes;
      for (int si = 0; si < batch.b; ++si) {
        const double* lg = logits.data() + static_cast<std::size_t>(si) * k;
        int arg = 0;
        for (int i = 1; i < k; ++i) {
          if (lg[i] > lg[arg]) arg = i;
        }
        epoch_correct += (arg == batch.labels[si]);
        ++epoch_samples;
      }
    }

    HistoryRow row;
    row.epoch = epoch;
    row.loss = epoch_loss / static_cast<double>(epoch_steps);
    row.accuracy =
        static_cast<double>(epoch_correct) / static_cast<double>(epoch_samples);
    row.lr = lr;
    history.push_back(row);
  }

  TrainResult result;
  result.params = std::move(params);
  result.history = std::move(history);
  result.steps = step;
  return result;
}

// ---- checkpoints ----

namespace {

void write_f64_le(std::ofstream& out, std::span<const double> values) {
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    char buf[8];
    for (int i = 0; i < 8; ++i) {
      buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    }
    out.write(buf, 8);
  }
}

std::vector<double> read_f64_le(std::ifstream& in, std::size_t count) {
  std::vector<double> out(count);
  std::vector<char> buf(count * 8);
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!in) throw IoError("checkpoint: short read on params.f64");
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t bits = 0;
    for (int j = 0; j < 8; ++j) {
      bits |= static_cast<std::uint64_t>(
                  static_cast<unsigned char>(buf[i * 8 + j]))
              << (8 * j);
    }
    out[i] = std::bit_cast<double>(bits);
  }
  return out;
}

json config_to_json(const ModelConfig& cfg) {
  return json{{"channels", cfg.channels},
              {"d_model", cfg.d_model},
              {"n_head", cfg.n_head},
              {"hidden", cfg.hidden},
              {"n_classes", cfg.n_classes},
              {"pe", std::string(to_string(cfg.pe))},
              {"dropout_rate", cfg.dropout_rate},
              {"seq_length", cfg.seq_length}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig cfg;
  cfg.channels = j.at("channels").get<int>();
  cfg.d_model = j.at("d_model").get<int>();
  cfg.n_head = j.at("n_head").get<int>();
  cfg.hidden = j.at("hidden").get<int>();
  cfg.n_classes = j.at("n_classes").get<int>();
  cfg.pe = pe_variant_from_string(j.at("pe").get<std::string>());
  cfg.dropout_rate = j.at("dropout_rate").get<double>();
  cfg.seq_length = j.at("seq_length").get<int>();
  return cfg;
}

}  // namespace

std::string history_csv(std::span<const HistoryRow> history) {
  std::ostringstream ss;
  ss << "epoch,loss,accuracy,lr\n";
  for (const auto& row : history) {
    ss << row.epoch << ',' << fmt_g(row.loss) << ',' << fmt_g(row.accuracy)
       << ',' << fmt_g(row.lr) << '\n';
  }
  return ss.str();
}

void save_checkpoint(const Checkpoint& ckpt,
                     const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  ClassifierParams& params = const_cast<ClassifierParams&>(ckpt.params);
  auto views = trainable_arrays(params);

  json manifest;
  manifest["format_version"] = 1;
  manifest["config"] = config_to_json(params.config);
  manifest["standardization"] = {{"mean", params.feat_mean},
                                 {"std", params.feat_std}};
  manifest["seed"] = ckpt.seed;
  manifest["epoch"] = ckpt.epoch;
  manifest["sampler"] = ckpt.sampler;
  manifest["dtype"] = "f64le";
  json arrays = json::array();
  std::size_t offset = 0;
  for (const auto& view : views) {
    arrays.push_back({{"name", view.name},
                      {"count", view.data->size()},
                      {"offset", offset}});
    offset += view.data->size();
  }
  manifest["params"] = arrays;
  write_text_file((directory / "manifest.json").string(),
                  manifest.dump(2) + "\n");

  std::ofstream out(directory / "params.f64", std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("checkpoint: cannot write params.f64");
  for (const auto& view : views) write_f64_le(out, *view.data);
  if (!out) throw IoError("checkpoint: write failed");

  write_text_file((directory / "history.csv").string(),
                  history_csv(ckpt.history));
}

Checkpoint load_checkpoint(const std::filesystem::path& directory) {
  json manifest;
  try {
    manifest = json::parse(read_text_file((directory / "manifest.json").string()));
  } catch (const json::exception& e) {
    throw IoError("checkpoint: manifest parse error: " + std::string(e.what()));
  }
  if (manifest.value("format_version", -1) != 1) {
    throw IoError("checkpoint: unsupported format_version");
  }

  Checkpoint ckpt;
  try {
    ckpt.params.config = config_from_json(manifest.at("config"));
    ckpt.params.feat_mean =
        manifest.at("standardization").at("mean").get<std::vector<double>>();
    ckpt.params.feat_std =
        manifest.at("standardization").at("std").get<std::vector<double>>();
    ckpt.seed = manifest.at("seed").get<std::uint64_t>();
    ckpt.epoch = manifest.at("epoch").get<int>();
    ckpt.sampler = manifest.value("sampler", "");
  } catch (const json::exception& e) {
    throw IoError("checkpoint: manifest field error: " + std::string(e.what()));
  }

  auto views = trainable_arrays(ckpt.params);
  std::ifstream in(directory / "params.f64", std::ios::binary);
  if (!in) throw IoError("checkpoint: missing params.f64");
  const auto& arrays = manifest.at("params");
  if (arrays.size() != views.size()) {
    throw IoError("checkpoint: parameter array count mismatch");
  }
  // sizes in the manifest are authoritative; shapes re-derived from config
  ClassifierParams reference = init_params(ckpt.params.config, 0);
  auto ref_views = trainable_arrays(reference);
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& entry = arrays[i];
    if (entry.at("name").get<std::string>() != views[i].name) {
      throw IoError("checkpoint: unexpected parameter order");
    }
    auto count = entry.at("count").get<std::size_t>();
    if (count != ref_views[i].data->size()) {
      throw IoError("checkpoint: array '" + views[i].name + "' has wrong size");
    }
    *views[i].data = read_f64_le(in, count);
  }
  return ckpt;
}

}  // namespace t3s
