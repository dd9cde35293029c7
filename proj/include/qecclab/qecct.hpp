#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qecclab/codes.hpp"
#include "qecclab/noise.hpp"
#include "qecclab/optim.hpp"
#include "qecclab/tensor.hpp"

namespace qecclab {

enum class BinMode : std::uint8_t { sigmoid = 0, ste = 1 };

inline const char* bin_mode_name(BinMode m) { return m == BinMode::sigmoid ? "sigmoid" : "ste"; }

/// Decoder transformer hyperparameters and loss weights.
struct QecctConfig {
  int layers = 6;         // N
  int dim = 128;          // d
  int heads = 8;
  int pooling_layer = 0;  // 0 resolves to floor(N/2) at build time
  int ffn_mult = 4;
  double lambda_ber = 0.5;
  double lambda_ler = 1.0;
  double lambda_g = 0.5;
  BinMode bin_mode = BinMode::sigmoid;
  bool use_g_omega = true;  // false: constant-ones initial estimate
  bool use_mask = true;     // false: dense self-attention

  int resolved_pooling() const { return pooling_layer > 0 ? pooling_layer : std::max(1, layers / 2); }

  void validate() const {
    if (layers < 1) throw std::invalid_argument("qecct: layers must be >= 1");
    if (dim < 1 || heads < 1 || dim % heads != 0)
      throw std::invalid_argument("qecct: dim must be a positive multiple of heads");
    int p = resolved_pooling();
    if (p < 1 || p > layers) throw std::invalid_argument("qecct: pooling layer out of range");
    if (lambda_ber < 0 || lambda_ler < 0 || lambda_g < 0)
      throw std::invalid_argument("qecct: loss weights must be nonnegative");
  }
};

template <class T>
struct ModelOutput {
  Tensor<T> noise_logits;   // (B, n_err)
  Tensor<T> g_logits;       // (B*T, n_err) per-round initial estimates
  Tensor<T> g_mean_logits;  // (B, n_err), the Eq.-style pooled estimate
  Tensor<T> pooled;         // (B, S, d) mid-network embedding after pooling
  int batch = 0;
  int rounds = 1;
};

template <class T>
struct LossParts {
  Tensor<T> total, ber, ler, g;
};

namespace detail {

/// Syndrome bits of a batch as one (B*T, n_s) float tensor, row b*T + t.
template <class T>
Tensor<T> syndrome_rows(const StabilizerCode& code, std::span<const SyndromeRun> batch) {
  const std::size_t bt = batch.size() * static_cast<std::size_t>(batch.front().T);
  Tensor<T> out = Tensor<T>::zeros({bt, code.n_s});
  auto v = out.values();
  std::size_t row = 0;
  for (const auto& run : batch)
    for (int t = 0; t < run.T; ++t, ++row)
      for (std::size_t i = 0; i < code.n_s; ++i)
        if (run.syndromes[t].get(i)) v[row * code.n_s + i] = T(1);
  return out;
}

template <class T>
Tensor<T> error_targets(const StabilizerCode& code, std::span<const SyndromeRun> batch) {
  Tensor<T> out = Tensor<T>::zeros({batch.size(), code.n_err});
  auto v = out.values();
  for (std::size_t b = 0; b < batch.size(); ++b) {
    BitVector e = code.error_vector(batch[b].cumulative_error);
    for (std::size_t i = 0; i < code.n_err; ++i)
      if (e.get(i)) v[b * code.n_err + i] = T(1);
  }
  return out;
}

template <class T>
Tensor<T> logical_targets(const StabilizerCode& code, std::span<const SyndromeRun> batch) {
  Tensor<T> out = Tensor<T>::zeros({batch.size(), code.n_log});
  auto v = out.values();
  for (std::size_t b = 0; b < batch.size(); ++b) {
    BitVector l = gf2_matvec(code.logicals, code.error_vector(batch[b].cumulative_error));
    for (std::size_t i = 0; i < code.n_log; ++i)
      if (l.get(i)) v[b * code.n_log + i] = T(1);
  }
  return out;
}

inline int common_rounds(std::span<const SyndromeRun> batch) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  int t = batch.front().T;
  for (const auto& run : batch)
    if (run.T != t) throw std::invalid_argument("batch mixes different round counts");
  return t;
}

}  // namespace detail

/// Shared three-term objective: BER and pooled-estimator terms on logits,
/// the logical term through the differentiable XOR projection of the binned
/// soft prediction.
template <class T>
LossParts<T> decoder_loss(const StabilizerCode& code, const QecctConfig& cfg,
                          const ModelOutput<T>& out, std::span<const SyndromeRun> batch) {
  Tensor<T> targets = detail::error_targets<T>(code, batch);
  Tensor<T> log_targets = detail::logical_targets<T>(code, batch);

  LossParts<T> parts;
  parts.ber = bce_with_logits(out.noise_logits, targets);
  Tensor<T> soft = sigmoid(out.noise_logits);
  if (cfg.bin_mode == BinMode::ste) soft = ste_round(soft);
  parts.ler = bce_probs(xor_projection(soft, code.logicals), log_targets);
  parts.g = bce_with_logits(out.g_mean_logits, targets);
  parts.total = add(add(scale(parts.ber, T(cfg.lambda_ber)), scale(parts.ler, T(cfg.lambda_ler))),
                    scale(parts.g, T(cfg.lambda_g)));
  return parts;
}

/// The syndrome-conditioned transformer decoder: a shallow initial noise
/// estimator feeds a masked transformer over the n_err + n_s input positions;
/// repeated measurements run the first half of the stack independently per
/// round and are averaged at the pooling layer; the head reduces embeddings
/// to one scalar per position and maps positions to noise logits.
template <class T>
class QecctModel {
 public:
  QecctModel(const StabilizerCode& code, QecctConfig cfg, std::uint64_t seed)
      : code_(std::make_shared<StabilizerCode>(code)), cfg_(cfg), mask_(build_mask(code)) {
    cfg_.validate();
    const std::size_t s = code.n_err + code.n_s;
    const std::size_t d = static_cast<std::size_t>(cfg_.dim);
    const std::size_t hidden = 5 * code.n_s;
    Rng rng(derive_seed(seed, 0x71c7));

    params_.add("embed.weight", normal_init<T>({s, d}, 1.0 / std::sqrt(static_cast<double>(d)), rng));
    if (cfg_.use_g_omega) {
      params_.add("g.fc1.weight", xavier_uniform<T>({code.n_s, hidden}, code.n_s, hidden, rng));
      params_.add("g.fc1.bias", Tensor<T>::zeros({hidden}));
      params_.add("g.fc2.weight", xavier_uniform<T>({hidden, code.n_err}, hidden, code.n_err, rng));
      params_.add("g.fc2.bias", Tensor<T>::zeros({code.n_err}));
    }
    for (int l = 0; l < cfg_.layers; ++l) {
      std::string p = "layer" + std::to_string(l) + ".";
      params_.add(p + "ln1.gamma", Tensor<T>::constant({d}, T(1)));
      params_.add(p + "ln1.beta", Tensor<T>::zeros({d}));
      for (const char* name : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"})
        params_.add(p + name, xavier_uniform<T>({d, d}, d, d, rng));
      for (const char* name : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"})
        params_.add(p + name, Tensor<T>::zeros({d}));
      params_.add(p + "ln2.gamma", Tensor<T>::constant({d}, T(1)));
      params_.add(p + "ln2.beta", Tensor<T>::zeros({d}));
      const std::size_t f = d * static_cast<std::size_t>(cfg_.ffn_mult);
      params_.add(p + "ffn.w1", xavier_uniform<T>({d, f}, d, f, rng));
      params_.add(p + "ffn.b1", Tensor<T>::zeros({f}));
      params_.add(p + "ffn.w2", xavier_uniform<T>({f, d}, f, d, rng));
      params_.add(p + "ffn.b2", Tensor<T>::zeros({d}));
    }
    params_.add("final_ln.gamma", Tensor<T>::constant({d}, T(1)));
    params_.add("final_ln.beta", Tensor<T>::zeros({d}));
    params_.add("head.reduce.weight", xavier_uniform<T>({d, 1}, d, 1, rng));
    params_.add("head.reduce.bias", Tensor<T>::zeros({1}));
    params_.add("head.out.weight", xavier_uniform<T>({s, code.n_err}, s, code.n_err, rng));
    params_.add("head.out.bias", Tensor<T>::zeros({code.n_err}));
  }

  const QecctConfig& config() const { return cfg_; }
  const StabilizerCode& code() const { return *code_; }
  const AttentionMask& mask() const { return mask_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }

  /// Initial noise estimate from raw syndrome bits: two affine maps with a
  /// GELU between, hidden width 5 n_s.
  Tensor<T> g_omega(const Tensor<T>& s_bits) const {
    if (s_bits.rank() != 2 || s_bits.dim(1) != code_->n_s)
      throw std::invalid_argument("g_omega: expected (rows, n_s) syndrome bits");
    if (!cfg_.use_g_omega)
      return Tensor<T>::constant({s_bits.dim(0), code_->n_err}, T(1));
    auto& p = const_cast<ParamStore<T>&>(params_);
    Tensor<T> h = gelu(add_bias(matmul(s_bits, *p.find("g.fc1.weight")), *p.find("g.fc1.bias")));
    return add_bias(matmul(h, *p.find("g.fc2.weight")), *p.find("g.fc2.bias"));
  }

  ModelOutput<T> forward(std::span<const SyndromeRun> batch) const {
    const int rounds = detail::common_rounds(batch);
    const std::size_t b = batch.size();
    const std::size_t s = code_->n_err + code_->n_s;
    const std::size_t d = static_cast<std::size_t>(cfg_.dim);

    ModelOutput<T> out;
    out.batch = static_cast<int>(b);
    out.rounds = rounds;

    Tensor<T> s_bits = detail::syndrome_rows<T>(*code_, batch);  // (B*T, n_s)
    Tensor<T> bipolar = Tensor<T>::zeros(s_bits.shape());
    {
      auto sv = s_bits.values();
      auto bv = bipolar.values();
      for (std::size_t i = 0; i < sv.size(); ++i) bv[i] = T(1) - T(2) * sv[i];
    }
    out.g_logits = g_omega(s_bits);
    Tensor<T> x = embed_scale(concat_last(out.g_logits, bipolar), *param("embed.weight"));

    const int pool_at = cfg_.resolved_pooling();
    for (int l = 0; l < pool_at; ++l) x = block(x, l);
    x = mean_axis(reshape(x, {b, static_cast<std::size_t>(rounds), s, d}), 1);
    out.pooled = x;
    for (int l = pool_at; l < cfg_.layers; ++l) x = block(x, l);

    x = layer_norm(x, *param("final_ln.gamma"), *param("final_ln.beta"));
    Tensor<T> reduced = reshape(
        add_bias(matmul(x, *param("head.reduce.weight")), *param("head.reduce.bias")), {b, s});
    out.noise_logits =
        add_bias(matmul(reduced, *param("head.out.weight")), *param("head.out.bias"));
    out.g_mean_logits =
        mean_axis(reshape(out.g_logits, {b, static_cast<std::size_t>(rounds), code_->n_err}), 1);
    return out;
  }

  LossParts<T> loss(const ModelOutput<T>& out, std::span<const SyndromeRun> batch) const {
    return decoder_loss(*code_, cfg_, out, batch);
  }

  /// Hard decisions from a forward pass: logits thresholded at zero.
  std::vector<BitVector> decisions(const ModelOutput<T>& out) const {
    std::vector<BitVector> hats;
    auto v = out.noise_logits.values();
    for (int bi = 0; bi < out.batch; ++bi) {
      BitVector hat(code_->n_err);
      for (std::size_t i = 0; i < code_->n_err; ++i)
        if (v[bi * code_->n_err + i] > T(0)) hat.set(i, true);
      hats.push_back(std::move(hat));
    }
    return hats;
  }

 private:
  const Tensor<T>* param(const std::string& name) const {
    auto* t = const_cast<ParamStore<T>&>(params_).find(name);
    if (!t) throw std::logic_error("missing parameter " + name);
    return t;
  }

  Tensor<T> block(const Tensor<T>& x, int l) const {
    const std::string p = "layer" + std::to_string(l) + ".";
    const std::size_t b = x.dim(0), s = x.dim(1), d = x.dim(2);
    const std::size_t h = static_cast<std::size_t>(cfg_.heads), dh = d / h;

    Tensor<T> a = layer_norm(x, *param(p + "ln1.gamma"), *param(p + "ln1.beta"));
    auto heads_of = [&](const char* w, const char* bias) {
      Tensor<T> proj = add_bias(matmul(a, *param(p + w)), *param(p + bias));
      return swap_axes_1_2(reshape(proj, {b, s, h, dh}));  // (B, h, S, dh)
    };
    Tensor<T> q = heads_of("attn.wq", "attn.bq");
    Tensor<T> k = heads_of("attn.wk", "attn.bk");
    Tensor<T> v = heads_of("attn.wv", "attn.bv");
    Tensor<T> scores = scale(matmul_transb(q, k), T(1) / std::sqrt(static_cast<T>(dh)));
    Tensor<T> probs = masked_softmax(scores, cfg_.use_mask ? &mask_.bits : nullptr);
    Tensor<T> ctx = reshape(swap_axes_1_2(matmul(probs, v)), {b, s, d});
    Tensor<T> attn = add_bias(matmul(ctx, *param(p + "attn.wo")), *param(p + "attn.bo"));
    Tensor<T> y = add(x, attn);

    Tensor<T> f = layer_norm(y, *param(p + "ln2.gamma"), *param(p + "ln2.beta"));
    Tensor<T> ff = add_bias(
        matmul(gelu(add_bias(matmul(f, *param(p + "ffn.w1")), *param(p + "ffn.b1"))),
               *param(p + "ffn.w2")),
        *param(p + "ffn.b2"));
    return add(y, ff);
  }

  std::shared_ptr<StabilizerCode> code_;
  QecctConfig cfg_;
  AttentionMask mask_;
  ParamStore<T> params_;
};

/// Fully connected baseline with the same input, losses and mid-stack
/// averaging over repeated measurements.
struct MlpConfig {
  int depth = 10;
  int width = 256;
  double lambda_ber = 0.5;
  double lambda_ler = 1.0;
  double lambda_g = 0.5;
  BinMode bin_mode = BinMode::sigmoid;
  bool use_g_omega = true;

  void validate() const {
    if (depth < 1 || width < 1) throw std::invalid_argument("mlp: bad depth/width");
  }

  QecctConfig loss_view() const {
    QecctConfig cfg;
    cfg.lambda_ber = lambda_ber;
    cfg.lambda_ler = lambda_ler;
    cfg.lambda_g = lambda_g;
    cfg.bin_mode = bin_mode;
    return cfg;
  }
};

template <class T>
class MlpModel {
 public:
  MlpModel(const StabilizerCode& code, MlpConfig cfg, std::uint64_t seed)
      : code_(std::make_shared<StabilizerCode>(code)), cfg_(cfg) {
    cfg_.validate();
    const std::size_t s = code.n_err + code.n_s;
    const std::size_t w = static_cast<std::size_t>(cfg_.width);
    const std::size_t hidden = 5 * code.n_s;
    Rng rng(derive_seed(seed, 0x371b));
    if (cfg_.use_g_omega) {
      params_.add("g.fc1.weight", xavier_uniform<T>({code.n_s, hidden}, code.n_s, hidden, rng));
      params_.add("g.fc1.bias", Tensor<T>::zeros({hidden}));
      params_.add("g.fc2.weight", xavier_uniform<T>({hidden, code.n_err}, hidden, code.n_err, rng));
      params_.add("g.fc2.bias", Tensor<T>::zeros({code.n_err}));
    }
    for (int l = 0; l < cfg_.depth; ++l) {
      std::size_t in = l == 0 ? s : w;
      std::size_t out = l == cfg_.depth - 1 ? code.n_err : w;
      std::string p = "fc" + std::to_string(l) + ".";
      params_.add(p + "weight", xavier_uniform<T>({in, out}, in, out, rng));
      params_.add(p + "bias", Tensor<T>::zeros({out}));
    }
  }

  const MlpConfig& config() const { return cfg_; }
  const StabilizerCode& code() const { return *code_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }

  ModelOutput<T> forward(std::span<const SyndromeRun> batch) const {
    const int rounds = detail::common_rounds(batch);
    const std::size_t b = batch.size();

    ModelOutput<T> out;
    out.batch = static_cast<int>(b);
    out.rounds = rounds;

    Tensor<T> s_bits = detail::syndrome_rows<T>(*code_, batch);
    Tensor<T> bipolar = Tensor<T>::zeros(s_bits.shape());
    {
      auto sv = s_bits.values();
      auto bv = bipolar.values();
      for (std::size_t i = 0; i < sv.size(); ++i) bv[i] = T(1) - T(2) * sv[i];
    }
    out.g_logits = g_omega(s_bits);
    Tensor<T> x = concat_last(out.g_logits, bipolar);  // (B*T, S)

    const int pool_at = cfg_.depth >= 2 ? std::max(1, cfg_.depth / 2) : 1;
    for (int l = 0; l < cfg_.depth; ++l) {
      auto* t = const_cast<ParamStore<T>&>(params_).find("fc" + std::to_string(l) + ".weight");
      auto* bias = const_cast<ParamStore<T>&>(params_).find("fc" + std::to_string(l) + ".bias");
      x = add_bias(matmul(x, *t), *bias);
      if (l + 1 < cfg_.depth) x = gelu(x);
      if (l + 1 == pool_at) {
        const std::size_t width_now = x.dim(1);
        x = mean_axis(reshape(x, {b, static_cast<std::size_t>(rounds), width_now}), 1);
        out.pooled = x;
      }
    }
    out.noise_logits = x;
    out.g_mean_logits =
        mean_axis(reshape(out.g_logits, {b, static_cast<std::size_t>(rounds), code_->n_err}), 1);
    return out;
  }

  LossParts<T> loss(const ModelOutput<T>& out, std::span<const SyndromeRun> batch) const {
    return decoder_loss(*code_, cfg_.loss_view(), out, batch);
  }

  std::vector<BitVector> decisions(const ModelOutput<T>& out) const {
    std::vector<BitVector> hats;
    auto v = out.noise_logits.values();
    for (int bi = 0; bi < out.batch; ++bi) {
      BitVector hat(code_->n_err);
      for (std::size_t i = 0; i < code_->n_err; ++i)
        if (v[bi * code_->n_err + i] > T(0)) hat.set(i, true);
      hats.push_back(std::move(hat));
    }
    return hats;
  }

 private:
  Tensor<T> g_omega(const Tensor<T>& s_bits) const {
    if (!cfg_.use_g_omega) return Tensor<T>::constant({s_bits.dim(0), code_->n_err}, T(1));
    auto& p = const_cast<ParamStore<T>&>(params_);
    Tensor<T> h = gelu(add_bias(matmul(s_bits, *p.find("g.fc1.weight")), *p.find("g.fc1.bias")));
    return add_bias(matmul(h, *p.find("g.fc2.weight")), *p.find("g.fc2.bias"));
  }

  std::shared_ptr<StabilizerCode> code_;
  MlpConfig cfg_;
  ParamStore<T> params_;
};

}  // namespace qecclab
