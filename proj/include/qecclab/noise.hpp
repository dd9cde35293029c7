#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qecclab/codes.hpp"
#include "qecclab/rng.hpp"

namespace qecclab {

enum class NoiseChannel : std::uint8_t { independent = 0, depolarizing = 1 };

inline const char* channel_name(NoiseChannel c) {
  return c == NoiseChannel::independent ? "independent" : "depolarizing";
}

inline NoiseChannel parse_channel(const std::string& s) {
  if (s == "independent") return NoiseChannel::independent;
  if (s == "depolarizing" || s == "depolarization") return NoiseChannel::depolarizing;
  throw std::invalid_argument("unknown channel: " + s);
}

/// Independent X/Z noise: every qubit gets an X component with probability p
/// and, independently, a Z component with probability p. Per qubit the X draw
/// happens before the Z draw, which pins the stream layout.
inline PauliError sample_independent(const StabilizerCode& code, double p, Rng& rng) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("sample_independent: p outside [0,1]");
  PauliError e(code.n);
  for (std::size_t i = 0; i < code.n; ++i) {
    if (rng.bernoulli(p)) e.x.set(i, true);
    if (rng.bernoulli(p)) e.z.set(i, true);
  }
  return e;
}

/// Depolarizing noise: identity with probability 1-p, otherwise X, Z or Y
/// with probability p/3 each (one uniform draw per qubit).
inline PauliError sample_depolarizing(const StabilizerCode& code, double p, Rng& rng) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("sample_depolarizing: p outside [0,1]");
  PauliError e(code.n);
  for (std::size_t i = 0; i < code.n; ++i) {
    double u = rng.next_double();
    if (u >= p) continue;
    if (u < p / 3.0) {
      e.x.set(i, true);
    } else if (u < 2.0 * p / 3.0) {
      e.z.set(i, true);
    } else {
      e.x.set(i, true);
      e.z.set(i, true);
    }
  }
  return e;
}

inline PauliError sample_error(const StabilizerCode& code, NoiseChannel ch, double p, Rng& rng) {
  return ch == NoiseChannel::independent ? sample_independent(code, p, rng)
                                         : sample_depolarizing(code, p, rng);
}

/// T rounds of syndrome extraction. Round t draws a fresh data error, then
/// measures the accumulated error with each syndrome bit flipped i.i.d. with
/// probability q: s_t = H(e_1 ⊕ ... ⊕ e_t) ⊕ m_t. T=1, q=0 is the perfect
/// measurement setting.
struct SyndromeRun {
  int T = 0;
  std::vector<BitVector> syndromes;
  std::vector<BitVector> measurement_errors;
  PauliError cumulative_error;
};

inline SyndromeRun sample_faulty_run(const StabilizerCode& code, NoiseChannel ch, double p,
                                     double q, int T, Rng& rng) {
  if (T < 1) throw std::invalid_argument("sample_faulty_run: T must be >= 1");
  if (q < 0.0 || q > 1.0) throw std::invalid_argument("sample_faulty_run: q outside [0,1]");
  SyndromeRun run;
  run.T = T;
  run.cumulative_error = PauliError(code.n);
  run.syndromes.reserve(T);
  run.measurement_errors.reserve(T);
  for (int t = 0; t < T; ++t) {
    run.cumulative_error ^= sample_error(code, ch, p, rng);
    BitVector s = syndrome(code, run.cumulative_error);
    BitVector m(code.n_s);
    if (q > 0.0)
      for (std::size_t i = 0; i < code.n_s; ++i)
        if (rng.bernoulli(q)) m.set(i, true);
    s ^= m;
    run.syndromes.push_back(std::move(s));
    run.measurement_errors.push_back(std::move(m));
  }
  return run;
}

/// Convenience for the perfect-measurement setting.
inline SyndromeRun sample_perfect_run(const StabilizerCode& code, NoiseChannel ch, double p,
                                      Rng& rng) {
  return sample_faulty_run(code, ch, p, 0.0, 1, rng);
}

/// "QSYN" dataset: header pinning the code and channel, then fixed-size
/// records (cumulative error, then per round syndrome and measurement-error
/// words).
struct DatasetHeader {
  std::uint64_t code_hash = 0;
  NoiseChannel channel = NoiseChannel::independent;
  double p = 0.0;
  double q = 0.0;
  int T = 1;
  std::uint64_t count = 0;
  std::uint32_t n = 0;
  std::uint32_t n_s = 0;
};

class DatasetWriter {
 public:
  DatasetWriter(const std::string& path, const StabilizerCode& code, NoiseChannel ch, double p,
                double q, int T, std::uint64_t count)
      : os_(path, std::ios::binary), n_(code.n), n_s_(code.n_s), t_(T) {
    if (!os_) throw std::runtime_error("cannot open " + path);
    io::write_magic(os_, "QSYN");
    io::write_u32(os_, 1);  // version
    io::write_u64(os_, code.hash());
    io::write_u32(os_, static_cast<std::uint32_t>(ch));
    io::write_f64(os_, p);
    io::write_f64(os_, q);
    io::write_u32(os_, static_cast<std::uint32_t>(T));
    io::write_u64(os_, count);
    io::write_u32(os_, static_cast<std::uint32_t>(code.n));
    io::write_u32(os_, static_cast<std::uint32_t>(code.n_s));
  }

  void add(const SyndromeRun& run) {
    if (run.T != t_) throw std::invalid_argument("dataset: run T differs from header");
    io::write_words(os_, run.cumulative_error.x.words());
    io::write_words(os_, run.cumulative_error.z.words());
    for (int t = 0; t < t_; ++t) {
      io::write_words(os_, run.syndromes[t].words());
      io::write_words(os_, run.measurement_errors[t].words());
    }
  }

  bool good() const { return static_cast<bool>(os_); }

 private:
  std::ofstream os_;
  std::size_t n_, n_s_;
  int t_;
};

class DatasetReader {
 public:
  explicit DatasetReader(const std::string& path) : is_(path, std::ios::binary) {
    if (!is_) throw std::runtime_error("cannot open " + path);
    io::expect_magic(is_, "QSYN");
    if (io::read_u32(is_) != 1) throw std::runtime_error("unsupported QSYN version");
    header_.code_hash = io::read_u64(is_);
    header_.channel = static_cast<NoiseChannel>(io::read_u32(is_));
    header_.p = io::read_f64(is_);
    header_.q = io::read_f64(is_);
    header_.T = static_cast<int>(io::read_u32(is_));
    header_.count = io::read_u64(is_);
    header_.n = io::read_u32(is_);
    header_.n_s = io::read_u32(is_);
  }

  const DatasetHeader& header() const { return header_; }

  SyndromeRun next() {
    SyndromeRun run;
    run.T = header_.T;
    run.cumulative_error = PauliError(header_.n);
    io::read_words(is_, run.cumulative_error.x.words());
    io::read_words(is_, run.cumulative_error.z.words());
    for (int t = 0; t < header_.T; ++t) {
      BitVector s(header_.n_s), m(header_.n_s);
      io::read_words(is_, s.words());
      io::read_words(is_, m.words());
      run.syndromes.push_back(std::move(s));
      run.measurement_errors.push_back(std::move(m));
    }
    return run;
  }

 private:
  std::ifstream is_;
  DatasetHeader header_;
};

}  // namespace qecclab
