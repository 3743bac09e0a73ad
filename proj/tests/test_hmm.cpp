#include <gtest/gtest.h>

#include <cmath>

#include "hmmfdr/hmm.hpp"
#include "hmmfdr/models.hpp"

using namespace hmmfdr;

namespace {

HmmSpec symmetric_binary(double cross) {
  return BinaryStationarySpec(cross, cross).to_hmm();
}

HmmSpec three_state_spec() {
  HmmSpec s;
  s.states = {"a", "b", "c"};
  s.is_h1 = {false, true, true};
  s.initial = {0.5, 0.3, 0.2};
  Matrix q(3, 3);
  q(0, 0) = 0.6; q(0, 1) = 0.2; q(0, 2) = 0.2;
  q(1, 0) = 0.3; q(1, 1) = 0.4; q(1, 2) = 0.3;
  q(2, 0) = 0.2; q(2, 1) = 0.3; q(2, 2) = 0.5;
  s.transitions = {q};
  s.kappa = 1;
  s.phi_star = 0.2;
  return s;
}

}  // namespace

TEST(ValidateSpec, AcceptsSymmetricBinaryWithTightFloor) {
  HmmSpec s = symmetric_binary(0.25);
  s.phi_star = 0.25;
  const ValidatedSpec vs = validate_spec(s);
  EXPECT_NEAR(vs.verified_floor(), 0.25, 1e-15);
}

TEST(ValidateSpec, RejectsIdentityChain) {
  HmmSpec s = symmetric_binary(0.25);
  Matrix id = Matrix::identity(2);
  s.transitions = {id};
  s.phi_star = 1e-6;
  try {
    validate_spec(s);
    FAIL() << "expected FloorViolation";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), "FloorViolation");
  }
}

TEST(ValidateSpec, RejectsNonStochasticRow) {
  HmmSpec s = symmetric_binary(0.25);
  s.transitions[0](0, 0) = 0.74;  // row sums to 0.99
  try {
    validate_spec(s);
    FAIL() << "expected NonStochasticRow";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), "NonStochasticRow");
  }
}

TEST(ValidateSpec, RejectsEmptyPartition) {
  HmmSpec s = symmetric_binary(0.25);
  s.is_h1 = {false, false};
  try {
    validate_spec(s);
    FAIL() << "expected EmptyPartitionClass";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), "EmptyPartitionClass");
  }
}

TEST(ValidateSpec, ChecksFloorAtLagKappa) {
  // Period-2-ish chain: one-step entries get arbitrarily small but the
  // two-step products stay bounded below.
  HmmSpec s = symmetric_binary(0.05);
  s.kappa = 2;
  s.phi_star = 0.09;  // two-step cross probability is 2*0.05*0.95 = 0.095
  EXPECT_NO_THROW(validate_spec(s));
}

TEST(KStep, IdentityAtEqualIndices) {
  const ValidatedSpec vs = validate_spec(symmetric_binary(0.25));
  const Matrix p = k_step(vs, 3, 3);
  EXPECT_EQ(p(0, 0), 1.0);
  EXPECT_EQ(p(0, 1), 0.0);
}

TEST(KStep, BinaryThreeStepDifferenceIsRCubed) {
  const ValidatedSpec vs = validate_spec(symmetric_binary(0.25));
  const Matrix p = k_step(vs, 0, 3);
  EXPECT_NEAR(p(1, 1) - p(0, 1), 0.125, 1e-14);
}

TEST(KStep, OneStepRowsMatchQ) {
  const ValidatedSpec vs = validate_spec(symmetric_binary(0.25));
  const Matrix p = k_step(vs, 0, 1);
  EXPECT_DOUBLE_EQ(p(0, 0), 0.75);
  EXPECT_DOUBLE_EQ(p(0, 1), 0.25);
  EXPECT_DOUBLE_EQ(p(1, 0), 0.25);
  EXPECT_DOUBLE_EQ(p(1, 1), 0.75);
}

TEST(KStep, SemigroupProperty) {
  const ValidatedSpec vs = validate_spec(three_state_spec());
  const Matrix left = k_step(vs, 0, 5);
  const Matrix right = k_step(vs, 0, 2) * k_step(vs, 2, 5);
  EXPECT_LT(left.max_abs_diff(right), 1e-12);
}

TEST(DCoefficient, MatchesClosedFormAndMatrixPower) {
  EXPECT_NEAR(d_coefficient(BinaryStationarySpec(0.25, 0.25), 4), 0.0625, 1e-14);
  EXPECT_EQ(d_coefficient(BinaryStationarySpec(0.5, 0.5), 7), 0.0);
  const BinaryStationarySpec b(0.65, 0.65);  // r = -0.3
  EXPECT_NEAR(d_coefficient(b, 2), 0.09, 1e-14);
  const ValidatedSpec vs = validate_spec(b);
  for (int t = 1; t <= 8; ++t) {
    const Matrix p = k_step(vs, 0, t);
    EXPECT_NEAR(d_coefficient(b, t), p(1, 1) - p(0, 1), 1e-12);
  }
}

TEST(BinaryStationarySpec, StationarityAndReversibility) {
  const BinaryStationarySpec b(0.2, 0.4);
  EXPECT_NEAR(b.p0(), 0.4 / 0.6, 1e-15);
  EXPECT_NEAR(b.p1(), 0.2 / 0.6, 1e-15);
  EXPECT_NEAR(b.r(), 0.4, 1e-15);
  const std::vector<double> pi = {b.p0(), b.p1()};
  const std::vector<double> piq = row_times(pi, b.q());
  EXPECT_NEAR(piq[0], pi[0], 1e-12);
  EXPECT_NEAR(piq[1], pi[1], 1e-12);
  EXPECT_NEAR(b.p0() * b.p01, b.p1() * b.p10, 1e-12);
}

TEST(Simulate, DeterministicUnderSeed) {
  const ValidatedSpec vs = validate_spec(symmetric_binary(0.25));
  const auto model = translation_model(gaussian_potential());
  const Trajectory a = simulate(vs, *model, 0.5, 10, 10, 42);
  const Trajectory b = simulate(vs, *model, 0.5, 10, 10, 42);
  EXPECT_EQ(a.eta, b.eta);
  EXPECT_EQ(a.x, b.x);
  for (std::size_t i = 0; i < a.z.size(); ++i) EXPECT_EQ(a.z[i][0], b.z[i][0]);
}

TEST(Simulate, ObservationsRecomputeBitExactly) {
  const ValidatedSpec vs = validate_spec(symmetric_binary(0.3));
  const auto model = scaling_model(gaussian_potential());
  const Trajectory traj = simulate(vs, *model, 0.7, 8, 8, 7);
  const std::vector<double> again =
      assemble_observations(*model, traj.eta, traj.z, traj.epsilon);
  EXPECT_EQ(traj.x, again);
}

TEST(Simulate, EpsilonZeroIgnoresEta) {
  const ValidatedSpec vs = validate_spec(symmetric_binary(0.25));
  const auto model = translation_model(gaussian_potential());
  Trajectory traj = simulate(vs, *model, 0.0, 5, 5, 3);
  std::vector<int> flipped(traj.eta.size());
  for (std::size_t i = 0; i < traj.eta.size(); ++i) flipped[i] = 1 - traj.eta[i];
  const std::vector<double> x2 = assemble_observations(*model, flipped, traj.z, 0.0);
  EXPECT_EQ(traj.x, x2);
}

TEST(Simulate, StationaryFrequencyWithinMarkovCltBand) {
  const BinaryStationarySpec b(0.25, 0.25);
  const ValidatedSpec vs = validate_spec(b);
  const auto model = translation_model(gaussian_potential());
  const int n = 100000;
  const Trajectory traj = simulate(vs, *model, 0.0, 0, n, 2024);
  double ones = 0.0;
  for (int v : traj.eta) ones += v;
  const double freq = ones / (n + 1);
  const double sd = 0.5 * std::sqrt((1.0 + b.r()) / (1.0 - b.r())) / std::sqrt(n + 1.0);
  EXPECT_NEAR(freq, 0.5, 3.0 * sd);
}

TEST(Simulate, TransitionFrequenciesMatchQ) {
  const ValidatedSpec vs = validate_spec(symmetric_binary(0.25));
  const auto model = translation_model(gaussian_potential());
  const int n = 100000;
  const Trajectory traj = simulate(vs, *model, 0.0, 0, n, 99);
  long count[2][2] = {{0, 0}, {0, 0}};
  long rows[2] = {0, 0};
  for (int t = 0; t < n; ++t) {
    ++count[traj.eta_at(t)][traj.eta_at(t + 1)];
    ++rows[traj.eta_at(t)];
  }
  for (int a = 0; a < 2; ++a)
    for (int bb = 0; bb < 2; ++bb) {
      const double q = vs.spec().transitions[0](a, bb);
      const double freq = static_cast<double>(count[a][bb]) / rows[a];
      const double se = std::sqrt(q * (1.0 - q) / rows[a]);
      EXPECT_NEAR(freq, q, 4.0 * se) << "a=" << a << " b=" << bb;
    }
}

TEST(TimeVarying, NearestMatrixExtension) {
  HmmSpec s = symmetric_binary(0.25);
  s.time_varying = true;
  s.tv_start = 0;
  Matrix q2(2, 2);
  q2(0, 0) = 0.6; q2(0, 1) = 0.4; q2(1, 0) = 0.4; q2(1, 1) = 0.6;
  s.transitions = {s.transitions[0], q2};
  s.phi_star = 0.25;
  const ValidatedSpec vs = validate_spec(s);
  EXPECT_DOUBLE_EQ(vs.spec().transition_at(-5)(0, 1), 0.25);  // nearest: first
  EXPECT_DOUBLE_EQ(vs.spec().transition_at(0)(0, 1), 0.25);
  EXPECT_DOUBLE_EQ(vs.spec().transition_at(1)(0, 1), 0.4);
  EXPECT_DOUBLE_EQ(vs.spec().transition_at(9)(0, 1), 0.4);    // nearest: last
}

TEST(ReverseKernel, StationaryBinaryEqualsQ) {
  const BinaryStationarySpec b(0.2, 0.4);
  const ValidatedSpec vs = validate_spec(b);
  const auto kernels = reverse_kernels(vs, 5);
  for (const Matrix& m : kernels)
    EXPECT_LT(m.max_abs_diff(b.q()), 1e-12);
}

TEST(Marginals, ForwardPropagationFromLeftEdge) {
  const ValidatedSpec vs = validate_spec(three_state_spec());
  const auto laws = marginals(vs, 2, 3);
  EXPECT_EQ(laws.size(), 6u);
  EXPECT_EQ(laws[0], vs.spec().initial);
  for (const auto& law : laws) {
    double s = 0.0;
    for (double p : law) s += p;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}
