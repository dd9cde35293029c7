#include "qecclab/mwpm.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace qecclab;

namespace {

TEST(DefectGraphMatching, WrapsBlossomWithSpecTypes) {
  DefectGraph g;
  g.nodes = {{.at = {0, 0}}, {.at = {0, 2}}, {.at = {2, 0}}, {.at = {2, 2}}};
  g.edges = {{0, 1, 1}, {2, 3, 1}, {0, 2, 2}, {0, 3, 2}, {1, 2, 2}, {1, 3, 2}};
  Matching m = min_weight_perfect_matching(g);
  EXPECT_EQ(m.total_weight, 2);

  DefectGraph odd;
  odd.nodes = {{.at = {0, 0}}, {.at = {0, 2}}, {.at = {2, 0}}};
  odd.edges = {{0, 1, 1}, {1, 2, 1}, {0, 2, 1}};
  EXPECT_THROW(min_weight_perfect_matching(odd), std::invalid_argument);
}

TEST(DecodeMwpm, ZeroSyndromeGivesZeroCorrection) {
  StabilizerCode code = build_toric(4);
  EXPECT_TRUE(decode_mwpm(code, BitVector(code.n_s)).identity());
  EXPECT_THROW(decode_mwpm(code, BitVector(3)), std::invalid_argument);
}

TEST(DecodeMwpm, SingleErrorRecoveredExactly) {
  StabilizerCode code = build_toric(4);
  for (std::size_t q = 0; q < code.n; ++q) {
    PauliError e(code.n);
    e.x.set(q, true);
    PauliError hat = decode_mwpm(code, syndrome(code, e));
    EXPECT_EQ(hat, e) << "X error on qubit " << q;

    PauliError ez(code.n);
    ez.z.set(q, true);
    EXPECT_EQ(decode_mwpm(code, syndrome(code, ez)), ez) << "Z error on qubit " << q;
  }
}

TEST(DecodeMwpm, SingleErrorRecoveredExactlyOnSurface) {
  StabilizerCode code = build_surface(3);
  for (std::size_t q = 0; q < code.n; ++q) {
    for (bool xerr : {true, false}) {
      PauliError e(code.n);
      (xerr ? e.x : e.z).set(q, true);
      PauliError hat = decode_mwpm(code, syndrome(code, e));
      // Correction must reproduce the syndrome; single errors touching the
      // boundary may legitimately be fixed through the boundary instead.
      EXPECT_EQ(syndrome(code, hat), syndrome(code, e));
      EXPECT_LE(hat.weight(), e.weight());
    }
  }
}

TEST(DecodeMwpm, SyndromeValidityOnRandomErrors) {
  struct Case {
    StabilizerCode code;
    NoiseChannel ch;
    double p;
  };
  std::vector<Case> cases;
  cases.push_back({build_toric(6), NoiseChannel::independent, 0.05});
  cases.push_back({build_toric(4), NoiseChannel::depolarizing, 0.12});
  cases.push_back({build_surface(4), NoiseChannel::independent, 0.08});
  cases.push_back({build_surface(3), NoiseChannel::depolarizing, 0.12});
  std::uint64_t stream = 0;
  for (const auto& c : cases) {
    Rng rng(derive_seed(2024, stream++));
    for (int trial = 0; trial < 10000; ++trial) {
      PauliError e = sample_error(c.code, c.ch, c.p, rng);
      BitVector s = syndrome(c.code, e);
      PauliError hat = decode_mwpm(c.code, s);
      ASSERT_EQ(syndrome(c.code, hat), s)
          << channel_name(c.ch) << " " << family_name(c.code.family) << " trial " << trial;
    }
  }
}

TEST(DecodeMwpm, SectorCodesDecodeTheirOwnSyndromes) {
  StabilizerCode joint = build_toric(4);
  StabilizerCode xsec = joint.sector_view(Sector::x);
  Rng rng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    PauliError e(joint.n);
    for (std::size_t i = 0; i < joint.n; ++i)
      if (rng.bernoulli(0.08)) e.x.set(i, true);
    BitVector s = syndrome(xsec, e);
    PauliError hat = decode_mwpm(xsec, s);
    ASSERT_EQ(syndrome(xsec, hat), s);
    ASSERT_FALSE(hat.z.any());
  }
}

TEST(DecodeMwpm, BelowThresholdLerShrinksWithDistance) {
  // p = 0.05 independent noise sits below the matching threshold, so the
  // logical error rate must drop from L=4 to L=6 (3-sigma separated).
  const int trials = 100000;
  const double p = 0.05;
  int fails4 = 0, fails6 = 0;
  for (int Lpass = 0; Lpass < 2; ++Lpass) {
    StabilizerCode code = build_toric(Lpass == 0 ? 4 : 6);
    int& fails = Lpass == 0 ? fails4 : fails6;
    Rng rng(derive_seed(31337, Lpass));
    for (int trial = 0; trial < trials; ++trial) {
      PauliError e = sample_independent(code, p, rng);
      PauliError hat = decode_mwpm(code, syndrome(code, e));
      if (logical_projection(code, e ^ hat).any()) ++fails;
    }
  }
  double p4 = fails4 / static_cast<double>(trials);
  double p6 = fails6 / static_cast<double>(trials);
  double sigma = std::sqrt(p4 * (1 - p4) / trials + p6 * (1 - p6) / trials);
  EXPECT_GT(fails4, 0);
  EXPECT_LT(p6 + 3 * sigma, p4) << "LER(6)=" << p6 << " LER(4)=" << p4;
}

TEST(DecodeMwpmSpacetime, AllZeroRunDecodesToNothing) {
  StabilizerCode code = build_toric(4);
  SyndromeRun run;
  run.T = 3;
  for (int t = 0; t < 3; ++t) {
    run.syndromes.emplace_back(code.n_s);
    run.measurement_errors.emplace_back(code.n_s);
  }
  run.cumulative_error = PauliError(code.n);
  EXPECT_TRUE(decode_mwpm_spacetime(code, run).identity());
}

TEST(DecodeMwpmSpacetime, SingleRoundEqualsStaticDecoder) {
  StabilizerCode code = build_toric(4);
  Rng rng(23);
  for (int trial = 0; trial < 2000; ++trial) {
    SyndromeRun run = sample_faulty_run(code, NoiseChannel::independent, 0.08, 0.0, 1, rng);
    EXPECT_EQ(decode_mwpm_spacetime(code, run), decode_mwpm(code, run.syndromes.back()));
  }
}

TEST(DecodeMwpmSpacetime, NoiselessMeasurementsStayValid) {
  // With q = 0 the returned correction must reproduce the syndrome of the
  // accumulated error, i.e. the final-round syndrome.
  for (int L : {4, 6}) {
    StabilizerCode code = build_toric(L);
    Rng rng(derive_seed(404, L));
    for (int trial = 0; trial < 3000; ++trial) {
      SyndromeRun run = sample_faulty_run(code, NoiseChannel::independent, 0.04, 0.0, L, rng);
      PauliError hat = decode_mwpm_spacetime(code, run);
      ASSERT_EQ(syndrome(code, hat), syndrome(code, run.cumulative_error));
      ASSERT_EQ(syndrome(code, hat), run.syndromes.back());
    }
  }
}

TEST(DecodeMwpmSpacetime, SingleMeasurementFlipYieldsNoCorrection) {
  StabilizerCode code = build_toric(4);
  for (int flip_round = 0; flip_round < 4; ++flip_round) {
    for (std::size_t check : {std::size_t{0}, std::size_t{9}, code.n_s - 1}) {
      SyndromeRun run;
      run.T = 4;
      run.cumulative_error = PauliError(code.n);
      for (int t = 0; t < 4; ++t) {
        BitVector s(code.n_s), m(code.n_s);
        if (t == flip_round) {
          s.set(check, true);
          m.set(check, true);
        }
        run.syndromes.push_back(s);
        run.measurement_errors.push_back(m);
      }
      EXPECT_TRUE(decode_mwpm_spacetime(code, run).identity())
          << "flip at round " << flip_round << " check " << check;
    }
  }
}

TEST(DecodeMwpmSpacetime, FaultyRunsOnSurfaceCodeStayFeasible) {
  StabilizerCode code = build_surface(3);
  Rng rng(71);
  for (int trial = 0; trial < 1000; ++trial) {
    SyndromeRun run = sample_faulty_run(code, NoiseChannel::depolarizing, 0.05, 0.05, 3, rng);
    PauliError hat = decode_mwpm_spacetime(code, run);  // must not throw
    EXPECT_EQ(hat.n(), code.n);
  }
}

TEST(DecodeMwpmSpacetime, FaultyToricRunsStayFeasible) {
  StabilizerCode code = build_toric(4);
  Rng rng(73);
  for (int trial = 0; trial < 1000; ++trial) {
    SyndromeRun run = sample_faulty_run(code, NoiseChannel::independent, 0.05, 0.05, 4, rng);
    PauliError hat = decode_mwpm_spacetime(code, run);
    EXPECT_EQ(hat.n(), code.n);
  }
}

}  // namespace
