#include "qecclab/qecct.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "support/gradcheck.hpp"
#include "support/oracles.hpp"

using namespace qecclab;
namespace qt = qecclab::testing;

namespace {

StabilizerCode toy_code() {
  BitMatrix h(1, 2);
  h.set(0, 0, true);
  h.set(0, 1, true);
  BitMatrix l(1, 2);
  l.set(0, 0, true);
  return make_custom_code(h, l);
}

SyndromeRun run_from_error(const StabilizerCode& code, const PauliError& e) {
  SyndromeRun run;
  run.T = 1;
  run.cumulative_error = e;
  run.syndromes.push_back(syndrome(code, e));
  run.measurement_errors.emplace_back(code.n_s);
  return run;
}

// ---------------------------------------------------------------------------
// Plain-loop reference forward pass, independent of the tensor engine.
// ---------------------------------------------------------------------------

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

Mat param_matrix(const ParamStore<double>& params, const std::string& name, std::size_t rows,
                 std::size_t cols) {
  const Tensor<double>* t = const_cast<ParamStore<double>&>(params).find(name);
  if (!t) throw std::logic_error("missing " + name);
  Mat m(rows, Vec(cols));
  auto v = t->values();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m[r][c] = v[r * cols + c];
  return m;
}

Vec param_vector(const ParamStore<double>& params, const std::string& name, std::size_t len) {
  const Tensor<double>* t = const_cast<ParamStore<double>&>(params).find(name);
  Vec out(len);
  auto v = t->values();
  for (std::size_t i = 0; i < len; ++i) out[i] = v[i];
  return out;
}

Vec affine(const Vec& x, const Mat& w, const Vec& b) {
  Vec out(b);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += x[i] * w[i][j];
  return out;
}

double ref_gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

Vec layer_norm_row(const Vec& x, const Vec& gamma, const Vec& beta, double eps = 1e-5) {
  double mean = 0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    out[i] = gamma[i] * (x[i] - mean) / std::sqrt(var + eps) + beta[i];
  return out;
}

/// Reference QECCT forward for one perfect-measurement sample.
Vec reference_forward(const QecctModel<double>& model, const SyndromeRun& run) {
  const StabilizerCode& code = model.code();
  const QecctConfig& cfg = model.config();
  const auto& params = model.params();
  const std::size_t ns = code.n_s, ne = code.n_err, S = ne + ns;
  const std::size_t d = static_cast<std::size_t>(cfg.dim);
  const std::size_t h = static_cast<std::size_t>(cfg.heads), dh = d / h;

  Vec s_bits(ns);
  for (std::size_t i = 0; i < ns; ++i) s_bits[i] = run.syndromes[0].get(i) ? 1.0 : 0.0;

  // g_omega
  Vec g(ne, 1.0);
  if (cfg.use_g_omega) {
    Mat w1 = param_matrix(params, "g.fc1.weight", ns, 5 * ns);
    Vec b1 = param_vector(params, "g.fc1.bias", 5 * ns);
    Mat w2 = param_matrix(params, "g.fc2.weight", 5 * ns, ne);
    Vec b2 = param_vector(params, "g.fc2.bias", ne);
    Vec hidden = affine(s_bits, w1, b1);
    for (double& v : hidden) v = ref_gelu(v);
    g = affine(hidden, w2, b2);
  }

  Vec scalars(S);
  for (std::size_t i = 0; i < ne; ++i) scalars[i] = g[i];
  for (std::size_t i = 0; i < ns; ++i) scalars[ne + i] = 1.0 - 2.0 * s_bits[i];

  Mat emb = param_matrix(params, "embed.weight", S, d);
  Mat x(S, Vec(d));
  for (std::size_t i = 0; i < S; ++i)
    for (std::size_t j = 0; j < d; ++j) x[i][j] = scalars[i] * emb[i][j];

  const AttentionMask& mask = model.mask();
  for (int l = 0; l < cfg.layers; ++l) {
    std::string p = "layer" + std::to_string(l) + ".";
    Vec ln1g = param_vector(params, p + "ln1.gamma", d), ln1b = param_vector(params, p + "ln1.beta", d);
    Mat wq = param_matrix(params, p + "attn.wq", d, d), wk = param_matrix(params, p + "attn.wk", d, d);
    Mat wv = param_matrix(params, p + "attn.wv", d, d), wo = param_matrix(params, p + "attn.wo", d, d);
    Vec bq = param_vector(params, p + "attn.bq", d), bk = param_vector(params, p + "attn.bk", d);
    Vec bv = param_vector(params, p + "attn.bv", d), bo = param_vector(params, p + "attn.bo", d);

    Mat q(S), k(S), v(S), a(S);
    for (std::size_t i = 0; i < S; ++i) {
      a[i] = layer_norm_row(x[i], ln1g, ln1b);
      q[i] = affine(a[i], wq, bq);
      k[i] = affine(a[i], wk, bk);
      v[i] = affine(a[i], wv, bv);
    }
    Mat ctx(S, Vec(d, 0.0));
    for (std::size_t head = 0; head < h; ++head) {
      std::size_t off = head * dh;
      for (std::size_t i = 0; i < S; ++i) {
        Vec score(S, -1e9);
        double mx = -1e300;
        for (std::size_t j = 0; j < S; ++j) {
          if (cfg.use_mask && !mask.bits.get(i, j)) continue;
          double dot = 0;
          for (std::size_t kk = 0; kk < dh; ++kk) dot += q[i][off + kk] * k[j][off + kk];
          score[j] = dot / std::sqrt(static_cast<double>(dh));
          mx = std::max(mx, score[j]);
        }
        double z = 0;
        Vec prob(S, 0.0);
        for (std::size_t j = 0; j < S; ++j) {
          prob[j] = std::exp(score[j] - mx);
          z += prob[j];
        }
        for (std::size_t j = 0; j < S; ++j) {
          double pj = prob[j] / z;
          for (std::size_t kk = 0; kk < dh; ++kk) ctx[i][off + kk] += pj * v[j][off + kk];
        }
      }
    }
    for (std::size_t i = 0; i < S; ++i) {
      Vec attn = affine(ctx[i], wo, bo);
      for (std::size_t j = 0; j < d; ++j) x[i][j] += attn[j];
    }

    Vec ln2g = param_vector(params, p + "ln2.gamma", d), ln2b = param_vector(params, p + "ln2.beta", d);
    std::size_t f = d * static_cast<std::size_t>(cfg.ffn_mult);
    Mat w1 = param_matrix(params, p + "ffn.w1", d, f);
    Vec b1 = param_vector(params, p + "ffn.b1", f);
    Mat w2 = param_matrix(params, p + "ffn.w2", f, d);
    Vec b2 = param_vector(params, p + "ffn.b2", d);
    for (std::size_t i = 0; i < S; ++i) {
      Vec hidden = affine(layer_norm_row(x[i], ln2g, ln2b), w1, b1);
      for (double& hv : hidden) hv = ref_gelu(hv);
      Vec ff = affine(hidden, w2, b2);
      for (std::size_t j = 0; j < d; ++j) x[i][j] += ff[j];
    }
  }

  Vec fg = param_vector(params, "final_ln.gamma", d), fb = param_vector(params, "final_ln.beta", d);
  Mat rw = param_matrix(params, "head.reduce.weight", d, 1);
  double rb = param_vector(params, "head.reduce.bias", 1)[0];
  Vec reduced(S);
  for (std::size_t i = 0; i < S; ++i) {
    Vec nrm = layer_norm_row(x[i], fg, fb);
    double acc = rb;
    for (std::size_t j = 0; j < d; ++j) acc += nrm[j] * rw[j][0];
    reduced[i] = acc;
  }
  Mat ow = param_matrix(params, "head.out.weight", S, ne);
  Vec ob = param_vector(params, "head.out.bias", ne);
  return affine(reduced, ow, ob);
}

TEST(GOmega, ShapesMatchPaperDescription) {
  StabilizerCode code = build_toric(2).sector_view(Sector::x);  // n_s = 4, n_err = 8
  QecctConfig cfg;
  cfg.layers = 1;
  cfg.dim = 8;
  cfg.heads = 2;
  QecctModel<double> model(code, cfg, 7);
  auto* w1 = model.params().find("g.fc1.weight");
  auto* w2 = model.params().find("g.fc2.weight");
  ASSERT_NE(w1, nullptr);
  ASSERT_NE(w2, nullptr);
  EXPECT_EQ(w1->shape(), (Shape{4, 20}));  // n_s -> 5 n_s
  EXPECT_EQ(w2->shape(), (Shape{20, 8}));  // 5 n_s -> n_err
  auto s = Tensor<double>::zeros({3, 4});
  EXPECT_EQ(model.g_omega(s).shape(), (Shape{3, 8}));
  EXPECT_THROW(model.g_omega(Tensor<double>::zeros({3, 5})), std::invalid_argument);
}

TEST(GOmega, ZeroOutputLayerGivesZeroLogits) {
  StabilizerCode code = build_toric(2).sector_view(Sector::x);
  QecctConfig cfg;
  cfg.layers = 1;
  cfg.dim = 8;
  cfg.heads = 2;
  QecctModel<double> model(code, cfg, 7);
  for (auto& v : model.params().find("g.fc2.weight")->values()) v = 0.0;
  for (auto& v : model.params().find("g.fc2.bias")->values()) v = 0.0;
  Rng rng(3);
  auto s = qt::random_tensor({5, 4}, rng, 0, 1);
  Tensor<double> g = model.g_omega(s);
  for (double v : g.values()) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(QecctForward, MatchesStraightLineReference) {
  for (bool use_g : {true, false}) {
    StabilizerCode code = toy_code();
    QecctConfig cfg;
    cfg.layers = 2;
    cfg.dim = 4;
    cfg.heads = 2;
    cfg.ffn_mult = 2;
    cfg.use_g_omega = use_g;
    QecctModel<double> model(code, cfg, 42);

    PauliError e(code.n);
    e.x.set(0, true);
    SyndromeRun run = run_from_error(code, e);
    auto out = model.forward(std::span(&run, 1));
    Vec expect = reference_forward(model, run);
    ASSERT_EQ(out.noise_logits.size(), expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i)
      EXPECT_NEAR(out.noise_logits.values()[i], expect[i], 1e-12) << "use_g=" << use_g;
  }
}

TEST(QecctForward, ReferenceAgreesOnLatticeCode) {
  StabilizerCode code = build_toric(2).sector_view(Sector::x);
  QecctConfig cfg;
  cfg.layers = 2;
  cfg.dim = 8;
  cfg.heads = 2;
  QecctModel<double> model(code, cfg, 11);
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    PauliError e(code.n);
    for (std::size_t i = 0; i < code.n; ++i)
      if (rng.bernoulli(0.2)) e.x.set(i, true);
    SyndromeRun run = run_from_error(code, e);
    auto out = model.forward(std::span(&run, 1));
    Vec expect = reference_forward(model, run);
    for (std::size_t i = 0; i < expect.size(); ++i)
      ASSERT_NEAR(out.noise_logits.values()[i], expect[i], 1e-11);
  }
}

TEST(QecctForward, MaskBlocksInformationFlow) {
  // One layer, constant initial estimate: flipping one syndrome bit changes a
  // single input position, so mid-network embeddings of positions the mask
  // separates from it must stay bit-identical.
  StabilizerCode code = build_toric(3).sector_view(Sector::x);
  QecctConfig cfg;
  cfg.layers = 1;
  cfg.dim = 8;
  cfg.heads = 2;
  cfg.use_g_omega = false;
  QecctModel<double> model(code, cfg, 9);
  const AttentionMask& mask = model.mask();
  const std::size_t S = code.n_err + code.n_s;
  const std::size_t d = 8;

  SyndromeRun base;
  base.T = 1;
  base.cumulative_error = PauliError(code.n);
  base.syndromes.emplace_back(code.n_s);
  base.measurement_errors.emplace_back(code.n_s);

  const std::size_t flip_check = 2;
  SyndromeRun changed = base;
  changed.syndromes[0].set(flip_check, true);

  auto a = model.forward(std::span(&base, 1));
  auto b = model.forward(std::span(&changed, 1));
  const std::size_t changed_pos = code.n_err + flip_check;

  int shielded = 0, exposed = 0;
  for (std::size_t pos = 0; pos < S; ++pos) {
    if (pos == changed_pos) continue;
    bool connected = mask.bits.get(pos, changed_pos);
    bool identical = true;
    for (std::size_t j = 0; j < d; ++j)
      identical &= a.pooled.values()[pos * d + j] == b.pooled.values()[pos * d + j];
    if (!connected) {
      EXPECT_TRUE(identical) << "masked-out position " << pos << " saw the change";
      ++shielded;
    } else if (!identical) {
      ++exposed;
    }
  }
  EXPECT_GT(shielded, 0);
  EXPECT_GT(exposed, 0);
}

TEST(QecctForward, PoolingInvariantUnderRoundPermutation) {
  StabilizerCode code = build_toric(2).sector_view(Sector::x);
  QecctConfig cfg;
  cfg.layers = 2;
  cfg.dim = 8;
  cfg.heads = 2;
  QecctModel<double> model(code, cfg, 13);
  Rng rng(17);
  SyndromeRun run = sample_faulty_run(code, NoiseChannel::independent, 0.1, 0.1, 4, rng);

  SyndromeRun permuted = run;
  std::swap(permuted.syndromes[0], permuted.syndromes[3]);
  std::swap(permuted.syndromes[1], permuted.syndromes[2]);
  std::swap(permuted.measurement_errors[0], permuted.measurement_errors[3]);
  std::swap(permuted.measurement_errors[1], permuted.measurement_errors[2]);

  auto a = model.forward(std::span(&run, 1));
  auto b = model.forward(std::span(&permuted, 1));
  for (std::size_t i = 0; i < a.noise_logits.size(); ++i)
    EXPECT_NEAR(a.noise_logits.values()[i], b.noise_logits.values()[i], 1e-9);
}

TEST(QecctForward, SingleRoundPoolingIsExactIdentity) {
  // With T = 1 the pooling layer's placement cannot matter: the mean over one
  // round copies values bit for bit.
  StabilizerCode code = build_toric(2).sector_view(Sector::x);
  QecctConfig early, late;
  early.layers = late.layers = 2;
  early.dim = late.dim = 8;
  early.heads = late.heads = 2;
  early.pooling_layer = 1;
  late.pooling_layer = 2;
  QecctModel<float> a(code, early, 21);
  QecctModel<float> b(code, late, 21);

  Rng rng(23);
  std::vector<SyndromeRun> batch;
  for (int i = 0; i < 4; ++i)
    batch.push_back(sample_faulty_run(code, NoiseChannel::independent, 0.1, 0.0, 1, rng));
  auto oa = a.forward(batch);
  auto ob = b.forward(batch);
  for (std::size_t i = 0; i < oa.noise_logits.size(); ++i)
    ASSERT_EQ(oa.noise_logits.values()[i], ob.noise_logits.values()[i]);
}

TEST(QecctLoss, DegenerateWeightsReduceToPlainBce) {
  StabilizerCode code = toy_code();
  QecctConfig cfg;
  cfg.layers = 1;
  cfg.dim = 4;
  cfg.heads = 2;
  cfg.lambda_ber = 1.0;
  cfg.lambda_ler = 0.0;
  cfg.lambda_g = 0.0;
  QecctModel<double> model(code, cfg, 3);
  PauliError e(code.n);
  e.x.set(1, true);
  SyndromeRun run = run_from_error(code, e);
  auto out = model.forward(std::span(&run, 1));
  auto parts = model.loss(out, std::span(&run, 1));
  EXPECT_DOUBLE_EQ(parts.total.item(), parts.ber.item());

  // Hand-computed plain BCE over the two coordinates.
  double expect = 0;
  for (std::size_t i = 0; i < 2; ++i) {
    double z = out.noise_logits.values()[i];
    double y = i == 1 ? 1.0 : 0.0;
    expect += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  }
  expect /= 2;
  EXPECT_NEAR(parts.ber.item(), expect, 1e-12);
}

TEST(QecctLoss, DefaultWeightsMatchHandComputedSum) {
  StabilizerCode code = toy_code();
  QecctConfig cfg;
  cfg.layers = 1;
  cfg.dim = 4;
  cfg.heads = 2;  // default lambdas: 0.5, 1.0, 0.5
  QecctModel<double> model(code, cfg, 5);
  PauliError e(code.n);
  e.x.set(0, true);
  SyndromeRun run = run_from_error(code, e);
  auto out = model.forward(std::span(&run, 1));
  auto parts = model.loss(out, std::span(&run, 1));

  auto bce_logit = [](double z, double y) {
    return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  };
  double ber = 0, g = 0;
  for (std::size_t i = 0; i < 2; ++i) {
    double y = i == 0 ? 1.0 : 0.0;
    ber += bce_logit(out.noise_logits.values()[i], y);
    g += bce_logit(out.g_mean_logits.values()[i], y);
  }
  ber /= 2;
  g /= 2;
  // Logical target: L = [1 0] applied to (1,0) -> 1.
  double p0 = 1.0 / (1.0 + std::exp(-out.noise_logits.values()[0]));
  double xorp = 0.5 - 0.5 * (1.0 - 2.0 * p0);
  double clamped = std::min(std::max(xorp, 1e-7), 1.0 - 1e-7);
  double ler = -std::log(clamped);
  EXPECT_NEAR(parts.ber.item(), ber, 1e-12);
  EXPECT_NEAR(parts.g.item(), g, 1e-12);
  EXPECT_NEAR(parts.ler.item(), ler, 1e-12);
  EXPECT_NEAR(parts.total.item(), 0.5 * ber + 1.0 * ler + 0.5 * g, 1e-12);
}

TEST(QecctLoss, PerfectPredictionDrivesLossToZero) {
  StabilizerCode code = build_toric(2).sector_view(Sector::x);
  QecctConfig cfg;
  cfg.layers = 1;
  cfg.dim = 8;
  cfg.heads = 2;
  QecctModel<double> model(code, cfg, 31);
  Rng rng(33);
  PauliError e(code.n);
  for (std::size_t i = 0; i < code.n; ++i)
    if (rng.bernoulli(0.3)) e.x.set(i, true);
  SyndromeRun run = run_from_error(code, e);
  auto out = model.forward(std::span(&run, 1));

  double prev = 1e300;
  for (double scale_logits : {2.0, 5.0, 12.0, 30.0}) {
    ModelOutput<double> crafted = out;
    crafted.noise_logits = Tensor<double>::zeros({1, code.n_err});
    for (std::size_t i = 0; i < code.n_err; ++i)
      crafted.noise_logits.values()[i] = (e.x.get(i) ? 1.0 : -1.0) * scale_logits;
    crafted.g_mean_logits = crafted.noise_logits;
    double loss = model.loss(crafted, std::span(&run, 1)).total.item();
    EXPECT_LT(loss, prev);
    prev = loss;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(QecctLoss, SteModeUsesHardForwardWithGradients) {
  StabilizerCode code = toy_code();
  QecctConfig cfg;
  cfg.layers = 1;
  cfg.dim = 4;
  cfg.heads = 2;
  cfg.bin_mode = BinMode::ste;
  QecctModel<double> model(code, cfg, 55);
  PauliError e(code.n);
  e.x.set(0, true);
  SyndromeRun run = run_from_error(code, e);
  auto out = model.forward(std::span(&run, 1));
  auto parts = model.loss(out, std::span(&run, 1));

  // Hard rounding means the LER term sees exact bits; the logical target is 1.
  bool bit0 = out.noise_logits.values()[0] > 0.0;
  double expected_p = bit0 ? 1.0 - 1e-7 : 1e-7;
  EXPECT_NEAR(parts.ler.item(), -std::log(expected_p), 1e-6);

  model.params().zero_grads();
  backward(parts.total);
  EXPECT_GT(model.params().grad_norm(), 0.0);
}

TEST(QecctModel, DeterministicConstructionAndForward) {
  StabilizerCode code = build_toric(2).sector_view(Sector::x);
  QecctConfig cfg;
  cfg.layers = 2;
  cfg.dim = 8;
  cfg.heads = 2;
  QecctModel<float> a(code, cfg, 99), b(code, cfg, 99);
  for (std::size_t i = 0; i < a.params().items.size(); ++i) {
    auto va = a.params().items[i].second.values();
    auto vb = b.params().items[i].second.values();
    ASSERT_EQ(std::memcmp(va.data(), vb.data(), va.size() * sizeof(float)), 0);
  }
  Rng rng(1);
  SyndromeRun run = sample_perfect_run(code, NoiseChannel::independent, 0.1, rng);
  auto oa = a.forward(std::span(&run, 1));
  auto ob = b.forward(std::span(&run, 1));
  for (std::size_t i = 0; i < oa.noise_logits.size(); ++i)
    ASSERT_EQ(oa.noise_logits.values()[i], ob.noise_logits.values()[i]);
}

TEST(QecctModel, FullGradientCheckOnToyCode) {
  StabilizerCode code = toy_code();
  QecctConfig cfg;
  cfg.layers = 1;
  cfg.dim = 4;
  cfg.heads = 2;
  cfg.ffn_mult = 2;
  QecctModel<double> model(code, cfg, 77);
  std::vector<SyndromeRun> batch;
  for (int i = 0; i < 2; ++i) {
    PauliError e(code.n);
    if (i == 0) e.x.set(0, true);
    batch.push_back(run_from_error(code, e));
  }
  auto make_loss = [&] { return model.loss(model.forward(batch), batch).total; };
  for (auto& [name, t] : model.params().items)
    qt::check_gradient(make_loss, t, 1e-4);
}

TEST(MlpBaseline, DepthOneZeroWeightsGivesConstantLogits) {
  StabilizerCode code = build_toric(2).sector_view(Sector::x);
  MlpConfig cfg;
  cfg.depth = 1;
  cfg.width = 16;
  MlpModel<double> model(code, cfg, 5);
  for (auto& v : model.params().find("fc0.weight")->values()) v = 0.0;
  auto* bias = model.params().find("fc0.bias");
  for (std::size_t i = 0; i < bias->size(); ++i) bias->values()[i] = 0.25 * (i + 1);

  Rng rng(7);
  std::vector<SyndromeRun> batch;
  for (int i = 0; i < 3; ++i)
    batch.push_back(sample_perfect_run(code, NoiseChannel::independent, 0.2, rng));
  auto out = model.forward(batch);
  for (int b = 0; b < 3; ++b)
    for (std::size_t i = 0; i < code.n_err; ++i)
      EXPECT_DOUBLE_EQ(out.noise_logits.values()[b * code.n_err + i], 0.25 * (i + 1));
}

TEST(MlpBaseline, GradientCheck) {
  StabilizerCode code = toy_code();
  MlpConfig cfg;
  cfg.depth = 3;
  cfg.width = 6;
  MlpModel<double> model(code, cfg, 12);
  std::vector<SyndromeRun> batch;
  PauliError e(code.n);
  e.x.set(1, true);
  batch.push_back(run_from_error(code, e));
  auto make_loss = [&] { return model.loss(model.forward(batch), batch).total; };
  for (auto& [name, t] : model.params().items)
    qt::check_gradient(make_loss, t, 1e-4);
}

TEST(MlpBaseline, PoolsRepeatedMeasurements) {
  StabilizerCode code = build_toric(2).sector_view(Sector::x);
  MlpConfig cfg;
  cfg.depth = 4;
  cfg.width = 12;
  MlpModel<double> model(code, cfg, 3);
  Rng rng(4);
  SyndromeRun run = sample_faulty_run(code, NoiseChannel::independent, 0.1, 0.1, 3, rng);
  SyndromeRun permuted = run;
  std::rotate(permuted.syndromes.begin(), permuted.syndromes.begin() + 1, permuted.syndromes.end());
  auto a = model.forward(std::span(&run, 1));
  auto b = model.forward(std::span(&permuted, 1));
  for (std::size_t i = 0; i < a.noise_logits.size(); ++i)
    EXPECT_NEAR(a.noise_logits.values()[i], b.noise_logits.values()[i], 1e-9);
}

}  // namespace
