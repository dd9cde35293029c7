#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "qecclab/mwpm.hpp"
#include "qecclab/qecct.hpp"

namespace qecclab {

enum class ModelKind : std::uint8_t { qecct = 0, mlp = 1 };
enum class DecoderKind : std::uint8_t { mwpm = 0, qecct = 1, mlp = 2, identity = 3, oracle = 4 };

inline const char* decoder_name(DecoderKind d) {
  switch (d) {
    case DecoderKind::mwpm: return "mwpm";
    case DecoderKind::qecct: return "qecct";
    case DecoderKind::mlp: return "mlp";
    case DecoderKind::identity: return "identity";
    default: return "oracle";
  }
}

inline DecoderKind parse_decoder(const std::string& s) {
  if (s == "mwpm") return DecoderKind::mwpm;
  if (s == "qecct") return DecoderKind::qecct;
  if (s == "mlp") return DecoderKind::mlp;
  if (s == "identity") return DecoderKind::identity;
  if (s == "oracle") return DecoderKind::oracle;
  throw std::invalid_argument("unknown decoder: " + s);
}

struct CodeSpec {
  CodeFamily family = CodeFamily::toric;
  int L = 4;
  Sector sector = Sector::joint;
};

inline StabilizerCode make_code(const CodeSpec& spec) {
  StabilizerCode code =
      spec.family == CodeFamily::toric ? build_toric(spec.L) : build_surface(spec.L);
  if (spec.sector != Sector::joint) code = code.sector_view(spec.sector);
  return code;
}

/// Noise configuration for training/evaluation. q < 0 means "same as p",
/// matching the faulty-measurement experiments.
struct ChannelSpec {
  NoiseChannel type = NoiseChannel::independent;
  double q = 0.0;
  int T = 1;

  double resolved_q(double p) const { return q < 0 ? p : q; }
};

struct TrainConfig {
  CodeSpec code;
  ChannelSpec channel;
  double p_min = 0.05;
  double p_max = 0.15;
  ModelKind kind = ModelKind::qecct;
  QecctConfig qecct;
  MlpConfig mlp;
  int batch = 512;
  int steps_per_epoch = 5000;
  int epochs = 1;
  std::uint64_t seed = 1;
  double lr0 = 5e-4;
  double lr_min = 5e-7;
  int log_every = 50;

  void validate() const {
    if (batch < 1) throw std::invalid_argument("train: batch must be >= 1");
    if (steps_per_epoch < 1 || epochs < 1) throw std::invalid_argument("train: bad step counts");
    if (!(p_min > 0.0) || !(p_max < 1.0) || p_min > p_max)
      throw std::invalid_argument("train: p range must lie inside (0,1)");
    if (channel.T < 1) throw std::invalid_argument("train: T must be >= 1");
  }
};

struct StepLog {
  std::int64_t step = 0;
  int epoch = 0;
  double total = 0, ber = 0, ler = 0, g = 0;
  double grad_norm = 0;
  double lr = 0;
};

struct TrainResult {
  std::vector<StepLog> logs;
  std::vector<double> epoch_mean_loss;
  bool aborted = false;
  std::string checkpoint_path;
  std::string metrics_path;
};

namespace detail {

inline std::vector<SyndromeRun> sample_batch(const StabilizerCode& code, const TrainConfig& cfg,
                                             std::int64_t step) {
  Rng rng(derive_seed(derive_seed(cfg.seed, 0xb47c), static_cast<std::uint64_t>(step)));
  double p = rng.uniform(cfg.p_min, cfg.p_max);
  double q = cfg.channel.resolved_q(p);
  std::vector<SyndromeRun> batch;
  batch.reserve(cfg.batch);
  for (int i = 0; i < cfg.batch; ++i)
    batch.push_back(sample_faulty_run(code, cfg.channel.type, p, q, cfg.channel.T, rng));
  return batch;
}

inline void append_log(std::ofstream& os, const StepLog& log) {
  if (!os.is_open()) return;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%lld,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                static_cast<long long>(log.step), log.epoch, log.total, log.ber, log.ler, log.g,
                log.grad_norm, log.lr);
  os << buf;
}

}  // namespace detail

/// One optimization run: per step, draw a physical error rate uniformly from
/// the configured range, sample a fresh minibatch of syndrome runs, take an
/// Adam step on the three-term objective under the cosine schedule. Metrics
/// land in an append-only CSV; a checkpoint is written at every epoch end. A
/// non-finite loss aborts training and keeps the last epoch checkpoint.
template <class Model>
TrainResult run_training(Model& model, const StabilizerCode& code, const TrainConfig& cfg,
                         const std::string& out_dir = "") {
  cfg.validate();
  TrainResult result;
  AdamOptimizer<float> adam;
  CosineSchedule sched{cfg.lr0, cfg.lr_min,
                       static_cast<std::int64_t>(cfg.steps_per_epoch) * cfg.epochs};

  std::ofstream metrics;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    result.metrics_path = out_dir + "/metrics.csv";
    metrics.open(result.metrics_path, std::ios::app);
    if (metrics.tellp() == 0) metrics << "step,epoch,loss,loss_ber,loss_ler,loss_g,grad_norm,lr\n";
  }

  std::int64_t step = 0;
  for (int epoch = 0; epoch < cfg.epochs && !result.aborted; ++epoch) {
    double epoch_loss = 0;
    int epoch_steps = 0;
    for (int s = 0; s < cfg.steps_per_epoch; ++s) {
      double lr = sched.at(step);
      std::vector<SyndromeRun> batch = detail::sample_batch(code, cfg, step);
      try {
        auto out = model.forward(batch);
        auto parts = model.loss(out, batch);
        model.params().zero_grads();
        backward(parts.total);
        StepLog log{step, epoch, parts.total.item(), parts.ber.item(), parts.ler.item(),
                    parts.g.item(), model.params().grad_norm(), lr};
        adam.step(model.params(), lr);
        epoch_loss += log.total;
        ++epoch_steps;
        if (step % cfg.log_every == 0 || s + 1 == cfg.steps_per_epoch) {
          result.logs.push_back(log);
          detail::append_log(metrics, log);
        }
      } catch (const NumericError&) {
        result.aborted = true;
        break;
      }
      ++step;
    }
    if (epoch_steps > 0) result.epoch_mean_loss.push_back(epoch_loss / epoch_steps);
    if (!out_dir.empty() && !result.aborted) {
      result.checkpoint_path = out_dir + "/checkpoint.qckpt";
      save_checkpoint(out_dir + "/checkpoint_epoch" + std::to_string(epoch) + ".qckpt",
                      model.params());
      save_checkpoint(result.checkpoint_path, model.params());
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Monte-Carlo evaluation
// ---------------------------------------------------------------------------

struct WilsonInterval {
  double lo = 0, hi = 0;
};

/// 95% Wilson score interval (z defaults to the two-sided 0.95 quantile).
inline WilsonInterval wilson_interval(std::uint64_t failures, std::uint64_t n,
                                      double z = 1.959963984540054) {
  if (n == 0) return {0.0, 1.0};
  double phat = static_cast<double>(failures) / static_cast<double>(n);
  double z2 = z * z;
  double denom = 1.0 + z2 / static_cast<double>(n);
  double center = (phat + z2 / (2.0 * static_cast<double>(n))) / denom;
  double half = z * std::sqrt(phat * (1.0 - phat) / static_cast<double>(n) +
                              z2 / (4.0 * static_cast<double>(n) * static_cast<double>(n))) /
                denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct EvalPoint {
  double p = 0, q = 0;
  int T = 1;
  std::uint64_t samples = 0, failures = 0;
  std::uint64_t bit_errors = 0, bits = 0;
  std::vector<std::uint64_t> coordinate_failures;  // per logical coordinate
  double seconds = 0;

  double ler() const { return samples ? static_cast<double>(failures) / samples : 0.0; }
  double ber() const { return bits ? static_cast<double>(bit_errors) / bits : 0.0; }
  WilsonInterval ler_interval() const { return wilson_interval(failures, samples); }
};

struct DecodeReport {
  std::string decoder;
  CodeFamily family = CodeFamily::toric;
  int L = 0;
  Sector sector = Sector::joint;
  NoiseChannel channel = NoiseChannel::independent;
  std::uint64_t seed = 0;
  std::vector<EvalPoint> points;
};

struct EvalRequest {
  DecoderKind decoder = DecoderKind::mwpm;
  CodeSpec code;
  NoiseChannel channel = NoiseChannel::independent;
  std::vector<double> p_list;
  double q = 0.0;  // < 0: q = p
  int T = 1;
  std::uint64_t n_samples = 10000;
  std::uint64_t seed = 1;
  int threads = 1;
  int eval_batch = 256;
  const QecctModel<float>* qecct = nullptr;
  const MlpModel<float>* mlp = nullptr;
};

namespace detail {

struct EvalCounts {
  std::uint64_t failures = 0, bit_errors = 0;
  std::vector<std::uint64_t> coordinate_failures;
};

template <class DecodeFn>
EvalCounts eval_chunk(const StabilizerCode& code, const EvalRequest& req, double p, double q,
                      std::size_t point_index, std::uint64_t begin, std::uint64_t end,
                      DecodeFn&& decode) {
  EvalCounts counts;
  counts.coordinate_failures.assign(code.n_log, 0);
  std::vector<SyndromeRun> block;
  std::vector<std::uint64_t> indices;
  const std::size_t block_size =
      req.decoder == DecoderKind::qecct || req.decoder == DecoderKind::mlp
          ? static_cast<std::size_t>(req.eval_batch)
          : 1;
  for (std::uint64_t i = begin; i < end;) {
    block.clear();
    indices.clear();
    for (; i < end && block.size() < block_size; ++i) {
      Rng rng(derive_seed(req.seed, point_index * req.n_samples + i));
      block.push_back(sample_faulty_run(code, req.channel, p, q, req.T, rng));
      indices.push_back(i);
    }
    std::vector<BitVector> hats = decode(block);
    for (std::size_t k = 0; k < block.size(); ++k) {
      BitVector truth = code.error_vector(block[k].cumulative_error);
      BitVector diff = hats[k] ^ truth;
      counts.bit_errors += diff.popcount();
      BitVector logical = gf2_matvec(code.logicals, diff);
      if (logical.any()) ++counts.failures;
      for (std::size_t c = 0; c < code.n_log; ++c)
        if (logical.get(c)) ++counts.coordinate_failures[c];
    }
  }
  return counts;
}

}  // namespace detail

/// Monte-Carlo BER/LER estimate per physical error rate. Per-sample seeds
/// derive from the sample index, so sharded runs reproduce single-threaded
/// counts exactly. Neural decoders threshold logits at zero; a logical error
/// is any flipped logical coordinate of the residual.
inline DecodeReport evaluate(const EvalRequest& req) {
  if (req.n_samples < 1) throw std::invalid_argument("evaluate: n_samples must be >= 1");
  StabilizerCode code = make_code(req.code);
  if ((req.decoder == DecoderKind::qecct && !req.qecct) ||
      (req.decoder == DecoderKind::mlp && !req.mlp))
    throw std::invalid_argument("evaluate: missing model checkpoint");

  DecodeReport report;
  report.decoder = decoder_name(req.decoder);
  report.family = req.code.family;
  report.L = req.code.L;
  report.sector = req.code.sector;
  report.channel = req.channel;
  report.seed = req.seed;

  auto decode_block = [&](const std::vector<SyndromeRun>& block) {
    std::vector<BitVector> hats;
    switch (req.decoder) {
      case DecoderKind::identity:
        hats.assign(block.size(), BitVector(code.n_err));
        break;
      case DecoderKind::oracle:
        for (const auto& run : block) hats.push_back(code.error_vector(run.cumulative_error));
        break;
      case DecoderKind::mwpm:
        for (const auto& run : block) {
          PauliError e = run.T == 1 ? decode_mwpm(code, run.syndromes[0])
                                    : decode_mwpm_spacetime(code, run);
          hats.push_back(code.error_vector(e));
        }
        break;
      case DecoderKind::qecct: {
        auto out = req.qecct->forward(block);
        hats = req.qecct->decisions(out);
        break;
      }
      case DecoderKind::mlp: {
        auto out = req.mlp->forward(block);
        hats = req.mlp->decisions(out);
        break;
      }
    }
    return hats;
  };

  for (std::size_t pi = 0; pi < req.p_list.size(); ++pi) {
    const double p = req.p_list[pi];
    const double q = req.q < 0 ? p : req.q;
    EvalPoint point;
    point.p = p;
    point.q = q;
    point.T = req.T;
    point.samples = req.n_samples;
    point.bits = req.n_samples * code.n_err;
    point.coordinate_failures.assign(code.n_log, 0);

    auto start = std::chrono::steady_clock::now();
    const int workers = std::max(1, req.threads);
    std::vector<detail::EvalCounts> counts(workers);
    if (workers == 1) {
      counts[0] = detail::eval_chunk(code, req, p, q, pi, 0, req.n_samples, decode_block);
    } else {
      std::vector<std::thread> pool;
      const std::uint64_t chunk = (req.n_samples + workers - 1) / workers;
      for (int w = 0; w < workers; ++w) {
        const std::uint64_t begin = std::min<std::uint64_t>(w * chunk, req.n_samples);
        const std::uint64_t end = std::min<std::uint64_t>(begin + chunk, req.n_samples);
        pool.emplace_back([&, w, begin, end] {
          counts[w] = detail::eval_chunk(code, req, p, q, pi, begin, end, decode_block);
        });
      }
      for (auto& t : pool) t.join();
    }
    for (const auto& c : counts) {
      point.failures += c.failures;
      point.bit_errors += c.bit_errors;
      for (std::size_t k = 0; k < code.n_log; ++k)
        point.coordinate_failures[k] += c.coordinate_failures.empty() ? 0 : c.coordinate_failures[k];
    }
    point.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    report.points.push_back(std::move(point));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Threshold estimation
// ---------------------------------------------------------------------------

struct LerCurve {
  int L = 0;
  std::vector<std::pair<double, double>> points;  // (p, ler), sorted by p
};

struct ThresholdEstimate {
  bool found = false;
  double p = 0;
  double spread = 0;
  std::vector<double> crossings;
};

namespace detail {

inline std::optional<double> interp_log(const LerCurve& curve, double p) {
  for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
    auto [p0, l0] = curve.points[i];
    auto [p1, l1] = curve.points[i + 1];
    if (p < p0 || p > p1) continue;
    if (l0 <= 0 || l1 <= 0) return std::nullopt;
    if (p1 == p0) return std::log(l0);
    double t = (p - p0) / (p1 - p0);
    return (1 - t) * std::log(l0) + t * std::log(l1);
  }
  return std::nullopt;
}

}  // namespace detail

/// Crossing of LER(p) curves across lattice sizes: for every pair of sizes,
/// linearly interpolate log-LER on the overlapping grid and solve each sign
/// change; the estimate is the median crossing, the spread the full range.
/// Non-crossing curves yield found = false rather than an error.
inline ThresholdEstimate estimate_threshold(std::vector<LerCurve> curves) {
  if (curves.size() < 2) throw std::invalid_argument("estimate_threshold: need >= 2 lattice sizes");
  for (auto& c : curves) {
    if (c.points.size() < 3)
      throw std::invalid_argument("estimate_threshold: need >= 3 points per curve");
    std::sort(c.points.begin(), c.points.end());
  }
  std::sort(curves.begin(), curves.end(), [](const auto& a, const auto& b) { return a.L < b.L; });

  ThresholdEstimate est;
  for (std::size_t a = 0; a < curves.size(); ++a)
    for (std::size_t b = a + 1; b < curves.size(); ++b) {
      std::vector<double> grid;
      for (const auto& [p, l] : curves[a].points) grid.push_back(p);
      for (const auto& [p, l] : curves[b].points) grid.push_back(p);
      std::sort(grid.begin(), grid.end());
      grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

      double prev_p = 0, prev_diff = 0;
      bool have_prev = false;
      for (double p : grid) {
        auto la = detail::interp_log(curves[a], p);
        auto lb = detail::interp_log(curves[b], p);
        if (!la || !lb) continue;
        double diff = *la - *lb;
        if (have_prev && (prev_diff < 0) != (diff < 0) && prev_diff != diff) {
          double t = prev_diff / (prev_diff - diff);
          est.crossings.push_back(prev_p + t * (p - prev_p));
        } else if (diff == 0) {
          est.crossings.push_back(p);
        }
        prev_p = p;
        prev_diff = diff;
        have_prev = true;
      }
    }
  if (est.crossings.empty()) return est;
  std::sort(est.crossings.begin(), est.crossings.end());
  est.found = true;
  est.p = est.crossings[est.crossings.size() / 2];
  if (est.crossings.size() % 2 == 0)
    est.p = 0.5 * (est.crossings[est.crossings.size() / 2 - 1] + est.p);
  est.spread = est.crossings.back() - est.crossings.front();
  return est;
}

inline std::vector<LerCurve> curves_from_reports(std::span<const DecodeReport> reports) {
  std::vector<LerCurve> curves;
  for (const auto& r : reports) {
    LerCurve* curve = nullptr;
    for (auto& c : curves)
      if (c.L == r.L) curve = &c;
    if (!curve) {
      curves.push_back({r.L, {}});
      curve = &curves.back();
    }
    for (const auto& pt : r.points) curve->points.emplace_back(pt.p, pt.ler());
  }
  for (auto& c : curves) std::sort(c.points.begin(), c.points.end());
  return curves;
}

}  // namespace qecclab
