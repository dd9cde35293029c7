#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qecclab/config.hpp"
#include "qecclab/report.hpp"
#include "qecclab/selftest.hpp"
#include "qecclab/svg.hpp"
#include "qecclab/version.hpp"

namespace qecclab::cli {

namespace detail {

inline CodeSpec parse_code_spec(const std::string& s) {
  CodeSpec spec;
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  if (parts.size() < 2 || parts.size() > 3)
    throw std::invalid_argument("code spec must be family:L or family:L:sector, got " + s);
  spec.family = qecclab::detail::parse_family(parts[0]);
  spec.L = std::stoi(parts[1]);
  spec.sector = parts.size() == 3 ? qecclab::detail::parse_sector(parts[2]) : Sector::joint;
  return spec;
}

inline std::string code_spec_string(const CodeSpec& spec) {
  std::string out = std::string(family_name(spec.family)) + ":" + std::to_string(spec.L);
  if (spec.sector != Sector::joint) out += std::string(":") + sector_name(spec.sector);
  return out;
}

inline int env_threads() {
  const char* env = std::getenv("QECC_THREADS");
  if (!env) return 1;
  int t = std::atoi(env);
  return t >= 1 ? t : 1;
}

inline std::string join_args(int argc, const char* const* argv) {
  std::string out;
  for (int i = 1; i < argc; ++i) {
    if (i > 1) out += ' ';
    out += argv[i];
  }
  return out;
}

/// Replay record written next to every run output.
inline void write_manifest(const std::string& path, const std::string& command,
                           const std::string& args, std::uint64_t seed, std::uint64_t code_hash,
                           const std::string& config_echo = "") {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << "qecc-lab manifest v1\n";
  os << "version=" << kVersion << "\n";
  os << "command=" << command << "\n";
  os << "args=" << args << "\n";
  os << "seed=" << seed << "\n";
  os << "code_hash=" << code_hash << "\n";
  if (!config_echo.empty()) {
    os << "[config]\n";
    os << config_echo;
    if (config_echo.back() != '\n') os << "\n";
  }
}

struct NeuralBundle {
  TrainConfig train_cfg;
  std::unique_ptr<QecctModel<float>> qecct;
  std::unique_ptr<MlpModel<float>> mlp;
};

inline NeuralBundle load_neural(const std::string& config_path, const std::string& checkpoint_path,
                                ModelKind kind) {
  NeuralBundle bundle;
  ConfigText cfg = ConfigText::load(config_path);
  bundle.train_cfg = parse_train_config(cfg);
  StabilizerCode code = make_code(bundle.train_cfg.code);
  if (kind == ModelKind::qecct) {
    bundle.qecct =
        std::make_unique<QecctModel<float>>(code, bundle.train_cfg.qecct, bundle.train_cfg.seed);
    load_checkpoint(checkpoint_path, bundle.qecct->params());
  } else {
    bundle.mlp =
        std::make_unique<MlpModel<float>>(code, bundle.train_cfg.mlp, bundle.train_cfg.seed);
    load_checkpoint(checkpoint_path, bundle.mlp->params());
  }
  return bundle;
}

}  // namespace detail

/// Entry point shared by the binary and the tests. Exit codes: 0 success,
/// 2 usage error, 1 runtime failure.
inline int dispatch(int argc, const char* const* argv) {
  CLI::App app{"qecc-lab: topological code decoding workbench"};
  app.require_subcommand(1);
  const std::string args_echo = detail::join_args(argc, argv);

  // ---- code export ----------------------------------------------------
  auto* code_cmd = app.add_subcommand("code", "construct stabilizer codes");
  code_cmd->require_subcommand(1);
  auto* export_cmd = code_cmd->add_subcommand("export", "write H, logicals, mask and geometry");
  std::string export_family = "toric", export_sector = "joint", export_out;
  int export_L = 2;
  export_cmd->add_option("--family", export_family, "toric|surface")->required();
  export_cmd->add_option("--L", export_L, "lattice length (>= 2)")->required();
  export_cmd->add_option("--sector", export_sector, "joint|x|z");
  export_cmd->add_option("--out", export_out, "output file")->required();
  export_cmd->callback([&] {
    CodeSpec spec = detail::parse_code_spec(export_family + ":" + std::to_string(export_L) + ":" +
                                            export_sector);
    StabilizerCode code = make_code(spec);
    std::ofstream os(export_out, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + export_out);
    write_code_file(os, code);
    detail::write_manifest(export_out + ".manifest", "code export", args_echo, 0, code.hash());
    std::cout << "wrote " << export_out << " (" << family_name(code.family) << " L=" << code.L
              << ", n=" << code.n << ", n_s=" << code.n_s << ")\n";
  });

  // ---- sample ----------------------------------------------------------
  auto* sample_cmd = app.add_subcommand("sample", "draw syndrome datasets");
  std::string sample_code = "toric:4", sample_channel = "independent", sample_out;
  double sample_p = 0.1, sample_q = 0.0;
  int sample_T = 1;
  std::uint64_t sample_n = 1000, sample_seed = 1;
  sample_cmd->add_option("--code", sample_code, "family:L[:sector]")->required();
  sample_cmd->add_option("--channel", sample_channel, "independent|depolarizing");
  sample_cmd->add_option("--p", sample_p, "physical error rate")->required();
  sample_cmd->add_option("--q", sample_q, "measurement error rate (-1: q = p)");
  sample_cmd->add_option("--T", sample_T, "measurement rounds");
  sample_cmd->add_option("--n-samples", sample_n, "record count")->required();
  sample_cmd->add_option("--seed", sample_seed, "rng seed");
  sample_cmd->add_option("--out", sample_out, "output dataset")->required();
  sample_cmd->callback([&] {
    CodeSpec spec = detail::parse_code_spec(sample_code);
    StabilizerCode code = make_code(spec);
    NoiseChannel ch = parse_channel(sample_channel);
    double q = sample_q < 0 ? sample_p : sample_q;
    DatasetWriter writer(sample_out, code, ch, sample_p, q, sample_T, sample_n);
    for (std::uint64_t i = 0; i < sample_n; ++i) {
      Rng rng(derive_seed(sample_seed, i));
      writer.add(sample_faulty_run(code, ch, sample_p, q, sample_T, rng));
    }
    if (!writer.good()) throw std::runtime_error("failed writing " + sample_out);
    detail::write_manifest(sample_out + ".manifest", "sample", args_echo, sample_seed, code.hash());
    std::cout << "wrote " << sample_n << " runs to " << sample_out << "\n";
  });

  // ---- decode mwpm -------------------------------------------------------
  auto* decode_cmd = app.add_subcommand("decode", "decode a dataset");
  decode_cmd->require_subcommand(1);
  auto* decode_mwpm_cmd = decode_cmd->add_subcommand("mwpm", "minimum-weight perfect matching");
  std::string decode_code = "toric:4", decode_dataset, decode_out;
  decode_mwpm_cmd->add_option("--code", decode_code, "family:L[:sector]")->required();
  decode_mwpm_cmd->add_option("--dataset", decode_dataset, "QSYN input")->required();
  decode_mwpm_cmd->add_option("--out", decode_out, "per-sample report csv")->required();
  decode_mwpm_cmd->callback([&] {
    CodeSpec spec = detail::parse_code_spec(decode_code);
    StabilizerCode code = make_code(spec);
    DatasetReader reader(decode_dataset);
    if (reader.header().code_hash != code.hash())
      throw std::invalid_argument("dataset was sampled from a different code");
    std::ofstream os(decode_out);
    if (!os) throw std::runtime_error("cannot open " + decode_out);
    os << "sample,correction_weight,logical_class,failure\n";
    for (std::uint64_t i = 0; i < reader.header().count; ++i) {
      SyndromeRun run = reader.next();
      PauliError hat =
          run.T == 1 ? decode_mwpm(code, run.syndromes[0]) : decode_mwpm_spacetime(code, run);
      BitVector hat_class = logical_projection(code, hat);
      BitVector true_class = logical_projection(code, run.cumulative_error);
      std::string cls;
      for (std::size_t k = 0; k < code.n_log; ++k) cls += hat_class.get(k) ? '1' : '0';
      os << i << ',' << code.error_vector(hat).popcount() << ',' << cls << ','
         << (hat_class == true_class ? 0 : 1) << "\n";
    }
    detail::write_manifest(decode_out + ".manifest", "decode mwpm", args_echo, 0, code.hash());
    std::cout << "decoded " << reader.header().count << " runs into " << decode_out << "\n";
  });

  // ---- train -------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "train a neural decoder");
  std::string train_config, train_out = "run";
  train_cmd->add_option("--config", train_config, "training config file")->required();
  train_cmd->add_option("--out", train_out, "output run directory");
  train_cmd->callback([&] {
    ConfigText cfg = ConfigText::load(train_config);
    TrainConfig tc = parse_train_config(cfg);
    StabilizerCode code = make_code(tc.code);
    std::filesystem::create_directories(train_out);
    std::string resolved = train_config_text(tc);
    {
      std::ofstream os(train_out + "/config.txt");
      os << resolved;
    }
    detail::write_manifest(train_out + "/manifest.txt", "train", args_echo, tc.seed, code.hash(),
                           resolved);
    TrainResult result;
    if (tc.kind == ModelKind::qecct) {
      QecctModel<float> model(code, tc.qecct, tc.seed);
      result = run_training(model, code, tc, train_out);
    } else {
      MlpModel<float> model(code, tc.mlp, tc.seed);
      result = run_training(model, code, tc, train_out);
    }
    if (result.aborted) {
      std::cerr << "training aborted on non-finite loss; last epoch checkpoint retained\n";
      throw std::runtime_error("numeric failure during training");
    }
    std::cout << "trained " << tc.steps_per_epoch * tc.epochs << " steps; checkpoint at "
              << result.checkpoint_path << "\n";
  });

  // ---- eval ----------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "Monte-Carlo BER/LER evaluation");
  std::string eval_decoder = "mwpm", eval_code, eval_channel = "independent";
  std::string eval_checkpoint, eval_config, eval_out;
  std::vector<double> eval_p;
  double eval_q = 0.0;
  int eval_T = 1;
  std::uint64_t eval_samples = 10000, eval_seed = 1;
  eval_cmd->add_option("--decoder", eval_decoder, "mwpm|qecct|mlp|identity")->required();
  eval_cmd->add_option("--code", eval_code, "family:L[:sector] (defaults to the model config)");
  eval_cmd->add_option("--channel", eval_channel, "independent|depolarizing");
  eval_cmd->add_option("--p", eval_p, "error rates (repeatable)")->required();
  eval_cmd->add_option("--q", eval_q, "measurement error rate (-1: q = p)");
  eval_cmd->add_option("--T", eval_T, "measurement rounds");
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "QCKPT file (neural decoders)");
  eval_cmd->add_option("--config", eval_config, "training config of the checkpoint");
  eval_cmd->add_option("--samples", eval_samples, "samples per point");
  eval_cmd->add_option("--seed", eval_seed, "rng seed");
  eval_cmd->add_option("--out", eval_out, "report csv")->required();
  eval_cmd->callback([&] {
    EvalRequest req;
    req.decoder = parse_decoder(eval_decoder);
    req.channel = parse_channel(eval_channel);
    req.p_list = eval_p;
    req.q = eval_q;
    req.T = eval_T;
    req.n_samples = eval_samples;
    req.seed = eval_seed;
    req.threads = detail::env_threads();

    detail::NeuralBundle bundle;
    if (req.decoder == DecoderKind::qecct || req.decoder == DecoderKind::mlp) {
      if (eval_checkpoint.empty() || eval_config.empty())
        throw std::invalid_argument("neural decoders need --checkpoint and --config");
      if (!std::filesystem::exists(eval_checkpoint))
        throw std::runtime_error("checkpoint not found: " + eval_checkpoint);
      ModelKind kind = req.decoder == DecoderKind::qecct ? ModelKind::qecct : ModelKind::mlp;
      bundle = detail::load_neural(eval_config, eval_checkpoint, kind);
      req.qecct = bundle.qecct.get();
      req.mlp = bundle.mlp.get();
      req.code = bundle.train_cfg.code;
    }
    if (!eval_code.empty()) req.code = detail::parse_code_spec(eval_code);
    if (eval_code.empty() && req.decoder != DecoderKind::qecct && req.decoder != DecoderKind::mlp)
      throw std::invalid_argument("--code is required for classical decoders");

    DecodeReport report = evaluate(req);
    write_report_csv(eval_out, report);
    detail::write_manifest(eval_out + ".manifest", "eval", args_echo, eval_seed,
                           make_code(req.code).hash());
    for (const auto& pt : report.points) {
      WilsonInterval ci = pt.ler_interval();
      std::printf("p=%.5g ler=%.5g [%.5g, %.5g] ber=%.5g (%llu samples)\n", pt.p, pt.ler(), ci.lo,
                  ci.hi, pt.ber(), static_cast<unsigned long long>(pt.samples));
    }
  });

  // ---- threshold ------------------------------------------------------------
  auto* threshold_cmd = app.add_subcommand("threshold", "estimate LER curve crossings");
  std::vector<std::string> threshold_in;
  std::string threshold_out;
  threshold_cmd->add_option("--in", threshold_in, "report csv files")->required();
  threshold_cmd->add_option("--out", threshold_out, "write the estimate to a file");
  threshold_cmd->callback([&] {
    std::vector<DecodeReport> reports;
    for (const auto& path : threshold_in)
      for (auto& r : read_report_csv(path)) reports.push_back(std::move(r));
    ThresholdEstimate est = estimate_threshold(curves_from_reports(reports));
    std::ostringstream os;
    if (est.found) {
      os << "threshold=" << format_double(est.p) << "\n";
      os << "spread=" << format_double(est.spread) << "\n";
      os << "crossings=";
      for (std::size_t i = 0; i < est.crossings.size(); ++i)
        os << (i ? " " : "") << format_double(est.crossings[i]);
      os << "\n";
    } else {
      os << "threshold=not-found\n";
    }
    std::cout << os.str();
    if (!threshold_out.empty()) {
      std::ofstream f(threshold_out);
      f << os.str();
    }
  });

  // ---- plot -------------------------------------------------------------------
  auto* plot_cmd = app.add_subcommand("plot", "render LER/BER curves as SVG");
  std::vector<std::string> plot_in;
  std::string plot_out, plot_metric = "ler";
  double plot_marker = -1;
  plot_cmd->add_option("--in", plot_in, "report csv files")->required();
  plot_cmd->add_option("--out", plot_out, "output svg")->required();
  plot_cmd->add_option("--metric", plot_metric, "ler|ber");
  plot_cmd->add_option("--threshold-marker", plot_marker, "vertical marker position");
  plot_cmd->callback([&] {
    std::vector<DecodeReport> reports;
    for (const auto& path : plot_in)
      for (auto& r : read_report_csv(path)) reports.push_back(std::move(r));
    PlotOptions opts;
    opts.metric = plot_metric;
    if (plot_metric == "ber") opts.title = "bit error rate vs physical error rate";
    if (plot_marker >= 0) opts.threshold_marker = plot_marker;
    std::string svg = render_curves(reports, opts);
    std::ofstream os(plot_out, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + plot_out);
    os << svg;
    std::cout << "wrote " << plot_out << " (" << reports.size() << " curves)\n";
  });

  // ---- selftest -----------------------------------------------------------------
  auto* selftest_cmd = app.add_subcommand("selftest", "run the built-in invariant suites");
  int selftest_rc = 0;
  selftest_cmd->callback([&] { selftest_rc = selftest::run_all(); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << app.help() << std::flush;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return selftest_rc;
}

}  // namespace qecclab::cli
