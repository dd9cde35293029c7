#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace qecclab {

/// Dense bit vector packed into 64-bit words, little-endian bit order within
/// each word (bit i lives in word i/64 at position i%64). Padding bits past
/// `size()` are kept zero so equality and popcount work on raw words.
class BitVector {
 public:
  BitVector() = default;
  explicit BitVector(std::size_t len) : len_(len), words_((len + 63) / 64, 0) {}

  static BitVector zeros(std::size_t len) { return BitVector(len); }

  std::size_t size() const { return len_; }
  bool empty() const { return len_ == 0; }

  bool get(std::size_t i) const {
    check_index(i);
    return (words_[i >> 6] >> (i & 63)) & 1u;
  }

  void set(std::size_t i, bool v) {
    check_index(i);
    std::uint64_t m = std::uint64_t{1} << (i & 63);
    if (v)
      words_[i >> 6] |= m;
    else
      words_[i >> 6] &= ~m;
  }

  void flip(std::size_t i) {
    check_index(i);
    words_[i >> 6] ^= std::uint64_t{1} << (i & 63);
  }

  BitVector& operator^=(const BitVector& o) {
    if (o.len_ != len_) throw std::invalid_argument("BitVector xor: length mismatch");
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] ^= o.words_[w];
    return *this;
  }

  friend BitVector operator^(BitVector a, const BitVector& b) { return a ^= b; }

  bool operator==(const BitVector&) const = default;

  std::size_t popcount() const {
    std::size_t c = 0;
    for (std::uint64_t w : words_) c += std::popcount(w);
    return c;
  }

  bool any() const {
    for (std::uint64_t w : words_)
      if (w) return true;
    return false;
  }

  void clear() { std::fill(words_.begin(), words_.end(), 0); }

  std::span<const std::uint64_t> words() const { return words_; }
  std::span<std::uint64_t> words() { return words_; }

  /// Support of the vector as sorted indices.
  std::vector<std::size_t> ones() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < len_; ++i)
      if (get(i)) out.push_back(i);
    return out;
  }

 private:
  void check_index(std::size_t i) const {
    if (i >= len_) throw std::out_of_range("BitVector index " + std::to_string(i));
  }

  std::size_t len_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Row-major packed binary matrix over GF(2). Rows are independently packed
/// BitVector-style; padding bits in each row stay zero.
class BitMatrix {
 public:
  BitMatrix() = default;
  BitMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), wpr_((cols + 63) / 64), data_(rows * wpr_, 0) {}

  static BitMatrix identity(std::size_t n) {
    BitMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.set(i, i, true);
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  bool get(std::size_t r, std::size_t c) const {
    check(r, c);
    return (data_[r * wpr_ + (c >> 6)] >> (c & 63)) & 1u;
  }

  void set(std::size_t r, std::size_t c, bool v) {
    check(r, c);
    std::uint64_t m = std::uint64_t{1} << (c & 63);
    if (v)
      data_[r * wpr_ + (c >> 6)] |= m;
    else
      data_[r * wpr_ + (c >> 6)] &= ~m;
  }

  std::span<const std::uint64_t> row_words(std::size_t r) const {
    return {data_.data() + r * wpr_, wpr_};
  }

  BitVector row(std::size_t r) const {
    BitVector v(cols_);
    auto src = row_words(r);
    std::copy(src.begin(), src.end(), v.words().begin());
    return v;
  }

  void set_row(std::size_t r, const BitVector& v) {
    if (v.size() != cols_) throw std::invalid_argument("BitMatrix set_row: length mismatch");
    auto dst = data_.data() + r * wpr_;
    std::copy(v.words().begin(), v.words().end(), dst);
  }

  void row_xor(std::size_t dst, std::size_t src) {
    auto* d = data_.data() + dst * wpr_;
    const auto* s = data_.data() + src * wpr_;
    for (std::size_t w = 0; w < wpr_; ++w) d[w] ^= s[w];
  }

  void swap_rows(std::size_t a, std::size_t b) {
    if (a == b) return;
    auto* pa = data_.data() + a * wpr_;
    auto* pb = data_.data() + b * wpr_;
    for (std::size_t w = 0; w < wpr_; ++w) std::swap(pa[w], pb[w]);
  }

  std::size_t row_weight(std::size_t r) const {
    std::size_t c = 0;
    for (std::uint64_t w : row_words(r)) c += std::popcount(w);
    return c;
  }

  bool operator==(const BitMatrix&) const = default;

  /// Column indices of the ones in row r.
  std::vector<std::size_t> row_ones(std::size_t r) const {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < cols_; ++c)
      if (get(r, c)) out.push_back(c);
    return out;
  }

 private:
  void check(std::size_t r, std::size_t c) const {
    if (r >= rows_ || c >= cols_)
      throw std::out_of_range("BitMatrix index (" + std::to_string(r) + "," + std::to_string(c) + ")");
  }

  std::size_t rows_ = 0, cols_ = 0, wpr_ = 0;
  std::vector<std::uint64_t> data_;
};

/// s = M v over GF(2): bit r of the result is the parity of AND(M.row(r), v).
inline BitVector gf2_matvec(const BitMatrix& m, const BitVector& v) {
  if (v.size() != m.cols()) throw std::invalid_argument("gf2_matvec: dimension mismatch");
  BitVector out(m.rows());
  auto vw = v.words();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto rw = m.row_words(r);
    std::uint64_t acc = 0;
    for (std::size_t w = 0; w < rw.size(); ++w) acc ^= rw[w] & vw[w];
    if (std::popcount(acc) & 1) out.set(r, true);
  }
  return out;
}

/// Rank over GF(2) via Gaussian elimination on a copy.
inline std::size_t gf2_rank(const BitMatrix& m) {
  BitMatrix a = m;
  std::size_t r = 0;
  for (std::size_t c = 0; c < a.cols() && r < a.rows(); ++c) {
    std::size_t pivot = a.rows();
    for (std::size_t i = r; i < a.rows(); ++i)
      if (a.get(i, c)) {
        pivot = i;
        break;
      }
    if (pivot == a.rows()) continue;
    a.swap_rows(r, pivot);
    for (std::size_t i = 0; i < a.rows(); ++i)
      if (i != r && a.get(i, c)) a.row_xor(i, r);
    ++r;
  }
  return r;
}

/// acc ⊕ v, elementwise.
inline BitVector gf2_xor_acc(BitVector acc, const BitVector& v) { return acc ^= v; }

namespace io {

inline void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_f64(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64(os, bits);
}

inline std::uint32_t read_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (!is) throw std::runtime_error("unexpected end of stream");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{b[i]} << (8 * i);
  return v;
}

inline std::uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  if (!is) throw std::runtime_error("unexpected end of stream");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
  return v;
}

inline double read_f64(std::istream& is) {
  std::uint64_t bits = read_u64(is);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

inline void write_magic(std::ostream& os, const char (&m)[5]) { os.write(m, 4); }

inline void expect_magic(std::istream& is, const char (&m)[5]) {
  char b[4];
  is.read(b, 4);
  if (!is || std::memcmp(b, m, 4) != 0)
    throw std::runtime_error(std::string("bad magic, expected ") + m);
}

inline void write_words(std::ostream& os, std::span<const std::uint64_t> words) {
  for (std::uint64_t w : words) write_u64(os, w);
}

inline void read_words(std::istream& is, std::span<std::uint64_t> words) {
  for (auto& w : words) w = read_u64(is);
}

}  // namespace io

/// "GF2M" container: magic, u32 rows, u32 cols, then each row packed into
/// ceil(cols/64) little-endian u64 words.
inline void write_gf2m(std::ostream& os, const BitMatrix& m) {
  io::write_magic(os, "GF2M");
  io::write_u32(os, static_cast<std::uint32_t>(m.rows()));
  io::write_u32(os, static_cast<std::uint32_t>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r) io::write_words(os, m.row_words(r));
}

inline BitMatrix read_gf2m(std::istream& is) {
  io::expect_magic(is, "GF2M");
  std::uint32_t rows = io::read_u32(is);
  std::uint32_t cols = io::read_u32(is);
  BitMatrix m(rows, cols);
  BitVector scratch(cols);
  for (std::uint32_t r = 0; r < rows; ++r) {
    io::read_words(is, scratch.words());
    m.set_row(r, scratch);
  }
  return m;
}

/// FNV-1a over arbitrary bytes; used for code fingerprints in file headers.
inline std::uint64_t fnv1a(std::span<const unsigned char> bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a_u64(std::uint64_t v, std::uint64_t h) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  return fnv1a({b, 8}, h);
}

}  // namespace qecclab
