#include "qecclab/bits.hpp"

#include <gtest/gtest.h>

#include <sstream>

#include "qecclab/codes.hpp"
#include "support/oracles.hpp"

using namespace qecclab;
namespace qt = qecclab::testing;

namespace {

BitMatrix from_rows(std::initializer_list<std::initializer_list<int>> rows) {
  std::size_t r = rows.size(), c = rows.begin()->size();
  BitMatrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    std::size_t j = 0;
    for (int v : row) m.set(i, j++, v != 0);
    ++i;
  }
  return m;
}

BitVector vec(std::initializer_list<int> bits) {
  BitVector v(bits.size());
  std::size_t i = 0;
  for (int b : bits) v.set(i++, b != 0);
  return v;
}

TEST(BitVector, XorExamples) {
  EXPECT_EQ(gf2_xor_acc(vec({1, 0, 1}), vec({0, 0, 0})), vec({1, 0, 1}));
  EXPECT_EQ(gf2_xor_acc(vec({1, 0, 1}), vec({1, 0, 1})), vec({0, 0, 0}));
  EXPECT_EQ(gf2_xor_acc(vec({1, 1, 0}), vec({0, 1, 1})), vec({1, 0, 1}));
}

TEST(BitVector, XorLengthMismatchThrows) {
  BitVector a(3), b(4);
  EXPECT_THROW(a ^= b, std::invalid_argument);
}

TEST(BitVector, PaddingBitsStayZero) {
  Rng rng(7);
  for (std::size_t len : {1u, 63u, 64u, 65u, 130u}) {
    BitVector a = qt::random_bitvector(len, rng);
    BitVector b = qt::random_bitvector(len, rng);
    a ^= b;
    if (len % 64) {
      std::uint64_t pad = a.words().back() >> (len % 64);
      EXPECT_EQ(pad, 0u) << "len=" << len;
    }
    std::size_t manual = 0;
    for (std::size_t i = 0; i < len; ++i) manual += a.get(i);
    EXPECT_EQ(a.popcount(), manual);
  }
}

TEST(Gf2Matvec, SpecExamples) {
  EXPECT_EQ(gf2_matvec(BitMatrix::identity(2), vec({1, 0})), vec({1, 0}));
  EXPECT_EQ(gf2_matvec(from_rows({{1, 1}, {0, 1}}), vec({1, 1})), vec({0, 1}));
  Rng rng(3);
  BitMatrix any = qt::random_bitmatrix(5, 9, rng);
  EXPECT_EQ(gf2_matvec(any, BitVector(9)), BitVector(5));
}

TEST(Gf2Matvec, DimensionMismatchThrows) {
  EXPECT_THROW(gf2_matvec(BitMatrix::identity(3), BitVector(4)), std::invalid_argument);
}

TEST(Gf2Matvec, MatchesIntegerOracleExhaustivelyOverVectors) {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    std::size_t rows = 1 + rng.below(8), cols = 1 + rng.below(8);
    BitMatrix m = qt::random_bitmatrix(rows, cols, rng);
    auto mi = qt::to_int(m);
    for (std::uint64_t bits = 0; bits < (1ull << cols); ++bits) {
      qt::IntVector vi(cols);
      BitVector v(cols);
      for (std::size_t c = 0; c < cols; ++c) {
        vi[c] = (bits >> c) & 1;
        if (vi[c]) v.set(c, true);
      }
      EXPECT_EQ(qt::to_int(gf2_matvec(m, v)), qt::int_matvec_mod2(mi, vi));
    }
  }
}

TEST(Gf2Matvec, LinearityFuzz) {
  Rng rng(13);
  for (int trial = 0; trial < 10000; ++trial) {
    std::size_t rows = 1 + rng.below(20), cols = 1 + rng.below(90);
    BitMatrix m = qt::random_bitmatrix(rows, cols, rng, 0.3);
    BitVector u = qt::random_bitvector(cols, rng);
    BitVector v = qt::random_bitvector(cols, rng);
    ASSERT_EQ(gf2_matvec(m, u ^ v), gf2_matvec(m, u) ^ gf2_matvec(m, v));
  }
}

TEST(Gf2Rank, SpecExamples) {
  EXPECT_EQ(gf2_rank(BitMatrix::identity(3)), 3u);
  EXPECT_EQ(gf2_rank(BitMatrix(4, 6)), 0u);
}

TEST(Gf2Rank, ToricL2StarBlockHasRankThree) {
  StabilizerCode code = build_toric(2);
  StabilizerCode zsec = code.sector_view(Sector::z);  // star checks
  EXPECT_EQ(zsec.H.rows(), 4u);
  EXPECT_EQ(zsec.H.cols(), 8u);
  EXPECT_EQ(gf2_rank(zsec.H), 3u);
  EXPECT_EQ(gf2_rank(code.sector_view(Sector::x).H), 3u);
}

TEST(Gf2Rank, MatchesOracleAndInvariances) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t rows = 1 + rng.below(10), cols = 1 + rng.below(10);
    BitMatrix m = qt::random_bitmatrix(rows, cols, rng);
    std::size_t r = gf2_rank(m);
    EXPECT_EQ(r, static_cast<std::size_t>(qt::int_rank_mod2(qt::to_int(m))));
    EXPECT_LE(r, std::min(rows, cols));
    EXPECT_EQ(gf2_rank(m), r) << "rank must be idempotent";

    BitMatrix swapped = m;
    swapped.swap_rows(rng.below(rows), rng.below(rows));
    EXPECT_EQ(gf2_rank(swapped), r);

    if (rows >= 2) {
      BitMatrix xored = m;
      std::size_t a = rng.below(rows), b = rng.below(rows);
      if (a != b) {
        xored.row_xor(a, b);
        EXPECT_EQ(gf2_rank(xored), r);
      }
    }
  }
}

TEST(Gf2mFormat, RoundTripAndLayout) {
  Rng rng(23);
  BitMatrix m = qt::random_bitmatrix(5, 70, rng);
  std::stringstream ss;
  write_gf2m(ss, m);
  // 4 magic + 8 dims + 5 rows * 2 words * 8 bytes
  EXPECT_EQ(ss.str().size(), 4u + 8u + 5u * 2u * 8u);
  EXPECT_EQ(ss.str().substr(0, 4), "GF2M");
  BitMatrix back = read_gf2m(ss);
  EXPECT_EQ(back, m);
}

TEST(Gf2mFormat, BitExactGoldenBytes) {
  // Little-endian words, bit i of a row at word i/64, position i%64.
  BitMatrix m(1, 9);
  m.set(0, 0, true);
  m.set(0, 8, true);
  std::stringstream ss;
  write_gf2m(ss, m);
  std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 4u + 8u + 8u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 0x01u);  // bit 0 -> byte 0
  EXPECT_EQ(static_cast<unsigned char>(bytes[13]), 0x01u);  // bit 8 -> byte 1
}

TEST(Gf2mFormat, BadMagicThrows) {
  std::stringstream ss;
  ss << "NOPE";
  EXPECT_THROW(read_gf2m(ss), std::runtime_error);
}

}  // namespace
