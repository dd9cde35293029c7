#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "qecclab/bits.hpp"

namespace qecclab {

enum class CodeFamily : std::uint8_t { toric = 0, surface = 1, custom = 2 };
enum class Sector : std::uint8_t { joint = 0, x = 1, z = 2 };
enum class CheckType : std::uint8_t { x_check = 0, z_check = 1 };  // star vs plaquette

inline const char* family_name(CodeFamily f) {
  switch (f) {
    case CodeFamily::toric: return "toric";
    case CodeFamily::surface: return "surface";
    default: return "custom";
  }
}

inline const char* sector_name(Sector s) {
  switch (s) {
    case Sector::joint: return "joint";
    case Sector::x: return "x";
    default: return "z";
  }
}

/// One Pauli noise realization in binary symplectic form: bit i of `x` marks
/// an X component on qubit i, bit i of `z` a Z component; both set = Y.
struct PauliError {
  BitVector x, z;

  PauliError() = default;
  explicit PauliError(std::size_t n) : x(n), z(n) {}

  std::size_t n() const { return x.size(); }

  PauliError& operator^=(const PauliError& o) {
    x ^= o.x;
    z ^= o.z;
    return *this;
  }

  friend PauliError operator^(PauliError a, const PauliError& b) { return a ^= b; }
  bool operator==(const PauliError&) const = default;

  bool identity() const { return !x.any() && !z.any(); }
  std::size_t weight() const {  // qubits touched by any Pauli
    std::size_t c = 0;
    for (std::size_t i = 0; i < n(); ++i) c += (x.get(i) || z.get(i)) ? 1 : 0;
    return c;
  }
};

/// Position on the doubled lattice grid. For a toric code the grid is
/// (2L)x(2L) with periodic wraparound; for the planar surface code it is
/// (2L-1)x(2L-1). Qubits sit on cells with i+j even, checks on i+j odd.
struct GridCoord {
  int i = 0, j = 0;
  bool operator==(const GridCoord&) const = default;
};

/// A stabilizer code in block parity-check form, plus the lattice geometry
/// the matching decoder and mask construction need.
///
/// Column convention for joint codes (n_err = 2n): columns [0,n) address the
/// Z component of the error, columns [n,2n) the X component. X-type (star)
/// checks occupy the first row block and detect Z components; Z-type
/// (plaquette) checks occupy the second block and detect X components.
/// `logicals` rows are stored in detector form: row k applied to an error
/// vector yields the symplectic product of logical operator k with the error,
/// i.e. 1 exactly when the error flips that logical coordinate.
struct StabilizerCode {
  CodeFamily family = CodeFamily::custom;
  Sector sector = Sector::joint;
  int L = 0;
  std::size_t n = 0;      // physical qubits
  std::size_t n_s = 0;    // stabilizer checks (rows of H)
  std::size_t n_err = 0;  // error coordinates (columns of H)
  std::size_t n_log = 0;  // logical coordinates (rows of logicals)
  BitMatrix H;
  BitMatrix logicals;

  int grid_extent = 0;
  bool periodic = false;
  std::vector<GridCoord> qubit_at;                       // size n
  std::vector<CheckType> check_type;                     // size n_s
  std::vector<GridCoord> check_at;                       // size n_s
  std::vector<std::vector<std::uint32_t>> check_qubits;  // incident qubits per check

  /// Error vector in this code's column convention.
  BitVector error_vector(const PauliError& e) const {
    if (e.n() != n) throw std::invalid_argument("error size does not match code");
    if (sector == Sector::x) return e.x;
    if (sector == Sector::z) return e.z;
    BitVector v(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      if (e.z.get(i)) v.set(i, true);
      if (e.x.get(i)) v.set(n + i, true);
    }
    return v;
  }

  /// Inverse of error_vector for decoder outputs.
  PauliError error_from_vector(const BitVector& v) const {
    if (v.size() != n_err) throw std::invalid_argument("vector size does not match code");
    PauliError e(n);
    if (sector == Sector::x) {
      e.x = v;
    } else if (sector == Sector::z) {
      e.z = v;
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        if (v.get(i)) e.z.set(i, true);
        if (v.get(n + i)) e.x.set(i, true);
      }
    }
    return e;
  }

  /// Stabilizer generator `row` as the Pauli it applies (an X-type check is a
  /// product of X operators on its qubits, etc.). Only meaningful for joint
  /// codes built from a lattice.
  PauliError stabilizer_as_error(std::size_t row) const {
    PauliError e(n);
    for (std::uint32_t q : check_qubits.at(row)) {
      if (check_type[row] == CheckType::x_check)
        e.x.set(q, true);
      else
        e.z.set(q, true);
    }
    return e;
  }

  /// Logical operator `row` as a Pauli error (detector rows have their
  /// symplectic halves swapped relative to the operator support).
  PauliError logical_as_error(std::size_t row) const {
    if (sector != Sector::joint) throw std::invalid_argument("logical_as_error needs a joint code");
    PauliError e(n);
    for (std::size_t c = 0; c < n_err; ++c) {
      if (!logicals.get(row, c)) continue;
      if (c < n)
        e.x.set(c, true);  // detector on the Z half pairs with an X-support operator
      else
        e.z.set(c - n, true);
    }
    return e;
  }

  /// Fingerprint used by dataset/checkpoint headers to pin the code identity.
  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    h = fnv1a_u64(static_cast<std::uint64_t>(family), h);
    h = fnv1a_u64(static_cast<std::uint64_t>(sector), h);
    h = fnv1a_u64(static_cast<std::uint64_t>(L), h);
    h = fnv1a_u64(n, h);
    h = fnv1a_u64(n_s, h);
    h = fnv1a_u64(n_err, h);
    for (std::size_t r = 0; r < H.rows(); ++r)
      for (std::uint64_t w : H.row_words(r)) h = fnv1a_u64(w, h);
    for (std::size_t r = 0; r < logicals.rows(); ++r)
      for (std::uint64_t w : logicals.row_words(r)) h = fnv1a_u64(w, h);
    return h;
  }

  /// Restriction of a joint code to one Pauli sector: the checks that detect
  /// that sector's components and the logical detector rows supported there.
  StabilizerCode sector_view(Sector s) const {
    if (sector != Sector::joint) throw std::invalid_argument("sector_view needs a joint code");
    if (s == Sector::joint) return *this;
    // x sector: plaquette (z_check) rows acting on columns [n, 2n).
    // z sector: star (x_check) rows acting on columns [0, n).
    const bool want_x = (s == Sector::x);
    const std::size_t col0 = want_x ? n : 0;
    const CheckType keep = want_x ? CheckType::z_check : CheckType::x_check;

    StabilizerCode out;
    out.family = family;
    out.sector = s;
    out.L = L;
    out.n = n;
    out.n_err = n;
    out.grid_extent = grid_extent;
    out.periodic = periodic;
    out.qubit_at = qubit_at;

    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < n_s; ++r)
      if (check_type[r] == keep) rows.push_back(r);
    out.n_s = rows.size();
    out.H = BitMatrix(out.n_s, n);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      for (std::size_t c = 0; c < n; ++c)
        if (H.get(rows[k], col0 + c)) out.H.set(k, c, true);
      out.check_type.push_back(check_type[rows[k]]);
      out.check_at.push_back(check_at[rows[k]]);
      out.check_qubits.push_back(check_qubits[rows[k]]);
    }

    std::vector<std::size_t> lrows;
    for (std::size_t r = 0; r < n_log; ++r) {
      bool in_sector = false, outside = false;
      for (std::size_t c = 0; c < n_err; ++c)
        if (logicals.get(r, c)) ((c >= n) == want_x ? in_sector : outside) = true;
      if (in_sector && !outside) lrows.push_back(r);
    }
    out.n_log = lrows.size();
    out.logicals = BitMatrix(out.n_log, n);
    for (std::size_t k = 0; k < lrows.size(); ++k)
      for (std::size_t c = 0; c < n; ++c)
        if (logicals.get(lrows[k], col0 + c)) out.logicals.set(k, c, true);
    return out;
  }
};

/// Syndrome s = H e of one noise realization.
inline BitVector syndrome(const StabilizerCode& code, const PauliError& e) {
  return gf2_matvec(code.H, code.error_vector(e));
}

/// Logical coordinates flipped by e (symplectic pairing with each logical).
inline BitVector logical_projection(const StabilizerCode& code, const PauliError& e) {
  return gf2_matvec(code.logicals, code.error_vector(e));
}

namespace detail {

inline void add_check(StabilizerCode& code, std::size_t row, CheckType t, GridCoord at,
                      const std::vector<std::uint32_t>& qubits) {
  const std::size_t col0 = (t == CheckType::x_check) ? 0 : code.n;  // star rows detect Z components
  for (std::uint32_t q : qubits) code.H.set(row, col0 + q, true);
  code.check_type[row] = t;
  code.check_at[row] = at;
  code.check_qubits[row] = qubits;
}

}  // namespace detail

/// Toric code on an L x L periodic lattice: qubits on edges (horizontal edges
/// row-major first, then vertical edges row-major), one star check per vertex
/// and one plaquette check per face. All 2L^2 check rows are kept, including
/// the dependent row of each type, so H matches the lattice dimensions.
inline StabilizerCode build_toric(int L) {
  if (L < 2) throw std::invalid_argument("build_toric: L must be >= 2");
  const std::size_t l = static_cast<std::size_t>(L);
  StabilizerCode code;
  code.family = CodeFamily::toric;
  code.L = L;
  code.n = 2 * l * l;
  code.n_s = 2 * l * l;
  code.n_err = 2 * code.n;
  code.H = BitMatrix(code.n_s, code.n_err);
  code.grid_extent = 2 * L;
  code.periodic = true;
  code.qubit_at.resize(code.n);
  code.check_type.resize(code.n_s);
  code.check_at.resize(code.n_s);
  code.check_qubits.resize(code.n_s);

  auto h_edge = [&](int r, int c) { return static_cast<std::uint32_t>(((r % L) + L) % L * L + ((c % L) + L) % L); };
  auto v_edge = [&](int r, int c) {
    return static_cast<std::uint32_t>(l * l + ((r % L) + L) % L * L + ((c % L) + L) % L);
  };

  for (int r = 0; r < L; ++r)
    for (int c = 0; c < L; ++c) {
      code.qubit_at[h_edge(r, c)] = {2 * r, 2 * c + 1};
      code.qubit_at[v_edge(r, c)] = {2 * r + 1, 2 * c};
    }

  for (int r = 0; r < L; ++r)
    for (int c = 0; c < L; ++c) {
      std::size_t star_row = static_cast<std::size_t>(r) * l + c;
      detail::add_check(code, star_row, CheckType::x_check, {2 * r, 2 * c},
                        {h_edge(r, c), h_edge(r, c - 1), v_edge(r, c), v_edge(r - 1, c)});
      std::size_t plaq_row = l * l + static_cast<std::size_t>(r) * l + c;
      detail::add_check(code, plaq_row, CheckType::z_check, {2 * r + 1, 2 * c + 1},
                        {h_edge(r, c), h_edge(r + 1, c), v_edge(r, c), v_edge(r, c + 1)});
    }

  // Detector rows: two rows reacting to logical-Z flips (supported on the Z
  // columns via the X-loop operators), two reacting to logical-X flips.
  code.n_log = 4;
  code.logicals = BitMatrix(4, code.n_err);
  for (int c = 0; c < L; ++c) code.logicals.set(0, v_edge(0, c), true);          // X-loop along row 0
  for (int r = 0; r < L; ++r) code.logicals.set(1, h_edge(r, 0), true);          // X-loop along column 0
  for (int c = 0; c < L; ++c) code.logicals.set(2, code.n + h_edge(0, c), true); // Z-loop along row 0
  for (int r = 0; r < L; ++r) code.logicals.set(3, code.n + v_edge(r, 0), true); // Z-loop along column 0
  return code;
}

/// Unrotated planar surface code of distance L: qubits on the i+j even cells
/// of a (2L-1)x(2L-1) grid, star checks at (odd i, even j), plaquettes at
/// (even i, odd j). Boundary checks have weight 3; k = 1.
inline StabilizerCode build_surface(int L) {
  if (L < 2) throw std::invalid_argument("build_surface: L must be >= 2");
  const int g = 2 * L - 1;
  StabilizerCode code;
  code.family = CodeFamily::surface;
  code.L = L;
  code.grid_extent = g;
  code.periodic = false;

  std::vector<std::vector<int>> qubit_id(g, std::vector<int>(g, -1));
  for (int i = 0; i < g; ++i)
    for (int j = 0; j < g; ++j)
      if ((i + j) % 2 == 0) {
        qubit_id[i][j] = static_cast<int>(code.qubit_at.size());
        code.qubit_at.push_back({i, j});
      }
  code.n = code.qubit_at.size();
  code.n_err = 2 * code.n;

  auto neighbors = [&](int i, int j) {
    std::vector<std::uint32_t> out;
    const int di[4] = {-1, 1, 0, 0};
    const int dj[4] = {0, 0, -1, 1};
    for (int k = 0; k < 4; ++k) {
      int ni = i + di[k], nj = j + dj[k];
      if (ni < 0 || nj < 0 || ni >= g || nj >= g) continue;
      out.push_back(static_cast<std::uint32_t>(qubit_id[ni][nj]));
    }
    return out;
  };

  std::vector<std::pair<GridCoord, CheckType>> checks;
  for (int i = 1; i < g; i += 2)
    for (int j = 0; j < g; j += 2) checks.push_back({{i, j}, CheckType::x_check});
  for (int i = 0; i < g; i += 2)
    for (int j = 1; j < g; j += 2) checks.push_back({{i, j}, CheckType::z_check});

  code.n_s = checks.size();
  code.H = BitMatrix(code.n_s, code.n_err);
  code.check_type.resize(code.n_s);
  code.check_at.resize(code.n_s);
  code.check_qubits.resize(code.n_s);
  for (std::size_t r = 0; r < checks.size(); ++r)
    detail::add_check(code, r, checks[r].second, checks[r].first,
                      neighbors(checks[r].first.i, checks[r].first.j));

  // X-bar runs along the top row, Z-bar down the left column; they overlap in
  // exactly one qubit.
  code.n_log = 2;
  code.logicals = BitMatrix(2, code.n_err);
  for (int j = 0; j < g; j += 2) code.logicals.set(0, qubit_id[0][j], true);            // X-bar → flags logical-Z flips
  for (int i = 0; i < g; i += 2) code.logicals.set(1, code.n + qubit_id[i][0], true);   // Z-bar → flags logical-X flips
  return code;
}

/// Ad-hoc single-sector code from explicit matrices; used for toy fixtures.
inline StabilizerCode make_custom_code(const BitMatrix& h, const BitMatrix& logicals) {
  if (logicals.cols() != h.cols()) throw std::invalid_argument("make_custom_code: column mismatch");
  StabilizerCode code;
  code.family = CodeFamily::custom;
  code.sector = Sector::x;
  code.n = h.cols();
  code.n_s = h.rows();
  code.n_err = h.cols();
  code.n_log = logicals.rows();
  code.H = h;
  code.logicals = logicals;
  code.check_type.assign(code.n_s, CheckType::z_check);
  code.check_at.assign(code.n_s, GridCoord{});
  code.qubit_at.assign(code.n, GridCoord{});
  code.check_qubits.resize(code.n_s);
  for (std::size_t r = 0; r < code.n_s; ++r)
    for (std::size_t c = 0; c < code.n; ++c)
      if (h.get(r, c)) code.check_qubits[r].push_back(static_cast<std::uint32_t>(c));
  return code;
}

/// Symmetric self-attention mask over the n_err + n_s input positions. A pair
/// is connected when the parity-check matrix relates it: two error
/// coordinates sharing a check, an error coordinate and a check incident on
/// it, two checks sharing a coordinate, or the diagonal.
struct AttentionMask {
  std::size_t size = 0;
  BitMatrix bits;  // 1 = attention allowed
  std::string rule;

  double unmasked_fraction() const {
    std::size_t ones = 0;
    for (std::size_t r = 0; r < size; ++r) ones += bits.row_weight(r);
    return static_cast<double>(ones) / (static_cast<double>(size) * static_cast<double>(size));
  }
};

inline AttentionMask build_mask(const StabilizerCode& code) {
  const std::size_t ne = code.n_err, ns = code.n_s, s = ne + ns;
  AttentionMask mask;
  mask.size = s;
  mask.bits = BitMatrix(s, s);
  mask.rule = "pairs related through the parity-check matrix";

  std::vector<std::vector<std::uint32_t>> checks_of_col(ne);
  std::vector<std::vector<std::uint32_t>> cols_of_row(ns);
  for (std::size_t r = 0; r < ns; ++r)
    for (std::size_t c = 0; c < ne; ++c)
      if (code.H.get(r, c)) {
        checks_of_col[c].push_back(static_cast<std::uint32_t>(r));
        cols_of_row[r].push_back(static_cast<std::uint32_t>(c));
      }

  auto connect = [&](std::size_t a, std::size_t b) {
    mask.bits.set(a, b, true);
    mask.bits.set(b, a, true);
  };
  for (std::size_t i = 0; i < s; ++i) mask.bits.set(i, i, true);
  for (std::size_t r = 0; r < ns; ++r) {
    const auto& cols = cols_of_row[r];
    for (std::size_t a = 0; a < cols.size(); ++a) {
      connect(cols[a], ne + r);
      for (std::size_t b = a + 1; b < cols.size(); ++b) connect(cols[a], cols[b]);
    }
  }
  for (std::size_t c = 0; c < ne; ++c) {
    const auto& chks = checks_of_col[c];
    for (std::size_t a = 0; a < chks.size(); ++a)
      for (std::size_t b = a + 1; b < chks.size(); ++b) connect(ne + chks[a], ne + chks[b]);
  }
  return mask;
}

/// Code container written by `code export`: a human-readable text header
/// terminated by a blank line, then GF2M blocks for H, logicals and mask,
/// then a GEOM block with grid coordinates.
inline void write_code_file(std::ostream& os, const StabilizerCode& code) {
  os << "qecc-lab code v1\n";
  os << "family=" << family_name(code.family) << "\n";
  os << "sector=" << sector_name(code.sector) << "\n";
  os << "L=" << code.L << "\n";
  os << "n=" << code.n << "\n";
  os << "n_s=" << code.n_s << "\n";
  os << "n_err=" << code.n_err << "\n";
  os << "n_log=" << code.n_log << "\n";
  os << "hash=" << code.hash() << "\n";
  os << "\n";
  write_gf2m(os, code.H);
  write_gf2m(os, code.logicals);
  write_gf2m(os, build_mask(code).bits);
  io::write_magic(os, "GEOM");
  io::write_u32(os, static_cast<std::uint32_t>(code.n));
  io::write_u32(os, static_cast<std::uint32_t>(code.n_s));
  io::write_u32(os, static_cast<std::uint32_t>(code.grid_extent));
  io::write_u32(os, code.periodic ? 1 : 0);
  for (const auto& q : code.qubit_at) {
    io::write_u32(os, static_cast<std::uint32_t>(q.i));
    io::write_u32(os, static_cast<std::uint32_t>(q.j));
  }
  for (std::size_t r = 0; r < code.n_s; ++r) {
    io::write_u32(os, static_cast<std::uint32_t>(code.check_type[r]));
    io::write_u32(os, static_cast<std::uint32_t>(code.check_at[r].i));
    io::write_u32(os, static_cast<std::uint32_t>(code.check_at[r].j));
  }
}

}  // namespace qecclab
