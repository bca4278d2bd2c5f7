#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "vqs/qsim.hpp"
#include "vqs/rng.hpp"

using namespace vqs;
using namespace vqs::qsim;

namespace {

StateVector random_state(int n, Rng& rng) {
  std::vector<cplx> a(std::size_t{1} << n);
  double norm = 0.0;
  for (auto& v : a) {
    v = {uniform(rng, -1, 1), uniform(rng, -1, 1)};
    norm += std::norm(v);
  }
  for (auto& v : a) v /= std::sqrt(norm);
  return StateVector(n, a);
}

oracle::Dense to_dense(std::span<const cplx> m, std::size_t d) {
  return {d, std::vector<cplx>(m.begin(), m.end())};
}

Mat2 random_single(Rng& rng) {
  return gates::euler_zyz(uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -3, 3));
}

}  // namespace

TEST(InitZeroState, BasisVectors) {
  for (int n : {1, 2, 4}) {
    auto s = init_zero_state(n);
    ASSERT_EQ(s.dim(), std::size_t{1} << n);
    EXPECT_EQ(s[0], cplx(1.0));
    for (std::size_t i = 1; i < s.dim(); ++i) EXPECT_EQ(s[i], cplx(0.0));
  }
}

TEST(InitZeroState, RejectsOutOfRange) {
  EXPECT_THROW(init_zero_state(0), ConfigError);
  EXPECT_THROW(init_zero_state(13), ConfigError);
  EXPECT_NO_THROW(init_zero_state(12));
}

TEST(StateVector, LengthMustMatch) {
  EXPECT_THROW(StateVector(2, std::vector<cplx>(3)), ConfigError);
}

TEST(ApplyGate, XFlipsZero) {
  auto s = apply_gate(init_zero_state(1), GateOp::single(0, gates::x()));
  EXPECT_EQ(s[0], cplx(0.0));
  EXPECT_EQ(s[1], cplx(1.0));
}

TEST(ApplyGate, IdentityIsExact) {
  Rng rng(3);
  for (int n : {1, 3, 5}) {
    auto s = random_state(n, rng);
    for (int q = 0; q < n; ++q) EXPECT_EQ(apply_gate(s, GateOp::single(q, gates::identity())), s);
  }
}

TEST(ApplyGate, HadamardThenCz) {
  const double r = 1.0 / std::sqrt(2.0);
  // Little-endian: qubit 0 is bit 0, so H on qubit 0 spreads over indices 0 and 1.
  auto s = apply_gate(init_zero_state(2), GateOp::single(0, gates::h()));
  s = apply_gate(s, GateOp::two(0, 1, gates::cz()));
  const std::vector<cplx> low{r, r, 0.0, 0.0};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(std::abs(s[i] - low[i]), 0.0, 1e-15);
  // Big-endian reading of the same circuit (H on the high bit) gives [r, 0, r, 0].
  auto t = apply_gate(init_zero_state(2), GateOp::single(1, gates::h()));
  t = apply_gate(t, GateOp::two(0, 1, gates::cz()));
  const std::vector<cplx> high{r, 0.0, r, 0.0};
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(std::abs(t[i] - high[i]), 0.0, 1e-15);
}

TEST(ApplyGate, RejectsNonUnitary) {
  Mat2 bad{1.0, 1.0, 0.0, 1.0};
  EXPECT_THROW(apply_gate(init_zero_state(1), GateOp::single(0, bad)), ValidationError);
  Mat4 bad4 = gates::cz();
  bad4[0] = 2.0;
  EXPECT_THROW(apply_gate(init_zero_state(2), GateOp::two(0, 1, bad4)), ValidationError);
}

TEST(ApplyGate, RejectsBadTargets) {
  EXPECT_THROW(apply_gate(init_zero_state(2), GateOp::single(2, gates::x())), IndexError);
  EXPECT_THROW(apply_gate(init_zero_state(2), GateOp::single(-1, gates::x())), IndexError);
  EXPECT_THROW(apply_gate(init_zero_state(3), GateOp::two(1, 1, gates::cz())), IndexError);
  EXPECT_THROW(apply_gate(init_zero_state(2), GateOp::two(0, 2, gates::cz())), IndexError);
}

TEST(GateOp, LibraryGatesAreUnitary) {
  EXPECT_TRUE(GateOp::single(0, gates::h()).is_unitary());
  EXPECT_TRUE(GateOp::single(0, gates::euler_zyz(0.3, -1.2, 2.2)).is_unitary());
  EXPECT_TRUE(GateOp::two(0, 1, gates::zz(0.7)).is_unitary());
  EXPECT_TRUE(GateOp::two(0, 1, gates::cz()).is_unitary());
}

TEST(OutcomeProbabilities, Trivial) {
  auto p = outcome_probabilities(init_zero_state(1));
  EXPECT_EQ(p, (std::vector<double>{1.0, 0.0}));
  auto plus = apply_gate(init_zero_state(1), GateOp::single(0, gates::h()));
  p = outcome_probabilities(plus);
  EXPECT_NEAR(p[0], 0.5, 1e-15);
  EXPECT_NEAR(p[1], 0.5, 1e-15);
}

TEST(OutcomeProbabilities, RandomThreeQubitMatchesOracle) {
  Rng rng(11);
  auto s = random_state(3, rng);
  const auto p = outcome_probabilities(s);
  const auto want = oracle::probabilities(std::vector<cplx>(s.amps().begin(), s.amps().end()));
  double total = 0.0;
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_NEAR(p[i], want[i], 1e-12);
    EXPECT_GE(p[i], 0.0);
    total += p[i];
  }
  EXPECT_NEAR(total, 1.0, 1e-10);
}

// Random circuits on n <= 3 against the product of embedded dense matrices.
TEST(Property, DenseOracleEquivalence) {
  Rng rng(2024);
  for (int n = 1; n <= 3; ++n) {
    for (int trial = 0; trial < 20; ++trial) {
      auto s = init_zero_state(n);
      auto vec = oracle::zero_state(n);
      for (int g = 0; g < 12; ++g) {
        if (n >= 2 && uniform01(rng) < 0.4) {
          const int a = static_cast<int>(uniform_index(rng, n));
          int b = static_cast<int>(uniform_index(rng, n - 1));
          if (b >= a) ++b;
          const Mat4 m = uniform01(rng) < 0.5 ? gates::zz(uniform(rng, -3, 3)) : gates::cz();
          apply_gate_inplace(s, GateOp::two(a, b, m));
          vec = oracle::apply(oracle::embed(n, {a, b}, to_dense(m, 4)), vec);
        } else {
          const int q = static_cast<int>(uniform_index(rng, n));
          const Mat2 m = random_single(rng);
          apply_gate_inplace(s, GateOp::single(q, m));
          vec = oracle::apply(oracle::embed(n, {q}, to_dense(m, 2)), vec);
        }
      }
      for (std::size_t i = 0; i < vec.size(); ++i) ASSERT_NEAR(std::abs(s[i] - vec[i]), 0.0, 1e-10);
    }
  }
}

// Asymmetric two-qubit unitary to pin the (t0, t1) → local-index convention.
TEST(Property, TwoQubitTargetOrdering) {
  Rng rng(5);
  const Mat2 a = random_single(rng), b = random_single(rng);
  Mat4 m{};  // a ⊗ b with b on local bit 0
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m[r * 4 + c] = a[(r >> 1) * 2 + (c >> 1)] * b[(r & 1) * 2 + (c & 1)];
  for (auto [t0, t1] : {std::pair{0, 2}, std::pair{2, 0}, std::pair{1, 2}}) {
    auto s = random_state(3, rng);
    auto via_two = apply_gate(s, GateOp::two(t0, t1, m));
    auto via_single = apply_gate(apply_gate(s, GateOp::single(t0, b)), GateOp::single(t1, a));
    for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(std::abs(via_two[i] - via_single[i]), 0.0, 1e-12);
  }
}

TEST(Property, NormPreservation) {
  Rng rng(99);
  for (int n : {2, 5, 8}) {
    auto s = random_state(n, rng);
    for (int g = 0; g < 200; ++g) {
      if (uniform01(rng) < 0.5) {
        const int a = static_cast<int>(uniform_index(rng, n));
        const int b = (a + 1 + static_cast<int>(uniform_index(rng, n - 1))) % n;
        apply_gate_inplace(s, GateOp::two(a, b, gates::zz(uniform(rng, -3, 3))));
      } else {
        apply_gate_inplace(s, GateOp::single(static_cast<int>(uniform_index(rng, n)), random_single(rng)));
      }
      ASSERT_LT(std::abs(s.norm_squared() - 1.0), 1e-9);
    }
  }
}

TEST(Property, Linearity) {
  Rng rng(17);
  const int n = 3;
  for (int trial = 0; trial < 10; ++trial) {
    auto p1 = random_state(n, rng), p2 = random_state(n, rng);
    const cplx a{uniform(rng, -1, 1), uniform(rng, -1, 1)}, b{uniform(rng, -1, 1), uniform(rng, -1, 1)};
    std::vector<cplx> mix(8);
    for (std::size_t i = 0; i < 8; ++i) mix[i] = a * p1[i] + b * p2[i];
    // unnormalized on purpose
    StateVector combo(n, std::vector<cplx>(8));
    for (std::size_t i = 0; i < 8; ++i) combo[i] = mix[i];
    const auto gate = uniform01(rng) < 0.5 ? GateOp::single(1, random_single(rng))
                                           : GateOp::two(2, 0, gates::zz(uniform(rng, -3, 3)));
    const auto lhs = apply_gate(combo, gate);
    const auto r1 = apply_gate(p1, gate), r2 = apply_gate(p2, gate);
    for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(std::abs(lhs[i] - (a * r1[i] + b * r2[i])), 0.0, 1e-12);
  }
}
