#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bvnet/likelihood.hpp"
#include "bvnet/markov.hpp"
#include "bvnet/model.hpp"
#include "test_support.hpp"

namespace bvnet {
namespace {

using testing::hand_instance;
using testing::oracle_cdf;
using testing::random_params;

Eigen::VectorXd block_with_margin(int n, double z, const StateVec& prev) {
  // a_ij = 0.3 for every j, c_i chosen so that c_i - A_i prev = z.
  Eigen::VectorXd blk = Eigen::VectorXd::Constant(n + 1, 0.3);
  double dot = 0.0;
  for (int j = 0; j < n; ++j) dot += 0.3 * prev.bit(j);
  blk(n) = z + dot;
  return blk;
}

TEST(LogG, ZeroMarginIsLogHalf) {
  const StateVec prev{0b011, 3};
  const auto blk = block_with_margin(3, 0.0, prev);
  for (std::uint32_t cur : {0u, 7u})
    EXPECT_NEAR(log_g(blk, {{cur, 3}, prev}, 1), std::log(0.5), 1e-15);
}

TEST(LogG, MatchesOracleCdf) {
  const StateVec prev{0b10, 2};
  const auto blk = block_with_margin(2, -0.4, prev);
  EXPECT_NEAR(log_g(blk, {{0b01, 2}, prev}, 0), std::log(1 - oracle_cdf(-0.4)),
              1e-15);
  EXPECT_NEAR(log_g(blk, {{0b00, 2}, prev}, 0), std::log(oracle_cdf(-0.4)),
              1e-15);
}

TEST(LogG, FiniteAndNonPositiveForExtremeMargins) {
  const StateVec prev{0, 2};
  for (double z : {-1e4, -50.0, -30.0, 0.0, 30.0, 50.0, 1e4}) {
    const auto blk = block_with_margin(2, z, prev);
    for (std::uint32_t cur = 0; cur < 4; ++cur) {
      const double v = log_g(blk, {{cur, 2}, prev}, 0);
      EXPECT_TRUE(std::isfinite(v));
      EXPECT_LE(v, 0.0);
    }
  }
  EXPECT_THROW(log_g(Eigen::VectorXd::Zero(2), {{0, 2}, prev}, 0),
               DimensionError);
}

TEST(LogG, FactorizesTheKernel) {
  std::mt19937_64 rng(21);
  for (int n : {2, 3, 4}) {
    const auto p = random_params(rng, n, 2.0);
    const auto theta = vec_params(p);
    const auto m = build_transition_matrix(p);
    for (std::size_t k = 0; k < (std::size_t{1} << (2 * n)); ++k) {
      const auto xt = ExtState::from_flat(k, n);
      EXPECT_NEAR(std::exp(log_g_sum(theta, xt)),
                  m.p(xt.previous.bits, xt.current.bits), 1e-12);
    }
  }
}

TEST(LogLikelihood, SingleStepAndAdditivity) {
  const auto p = friedkin_benchmark();
  const auto theta = vec_params(p);
  const auto traj = simulate_trajectory(p, StateVec::zeros(4), 2000, 3);

  Trajectory one{traj.initial, {traj.observations[0]}, 0};
  double expected = 0.0;
  for (int i = 0; i < 4; ++i)
    expected += log_g(theta.block(i, 4), one.extended(1), i);
  EXPECT_DOUBLE_EQ(log_likelihood(theta, one), expected);

  Trajectory first{traj.initial,
                   {traj.observations.begin(), traj.observations.begin() + 900},
                   0};
  Trajectory second{traj.observations[899],
                    {traj.observations.begin() + 900, traj.observations.end()},
                    0};
  EXPECT_NEAR(log_likelihood(theta, first) + log_likelihood(theta, second),
              log_likelihood(theta, traj), 1e-9);
  EXPECT_THROW(log_likelihood(theta, Trajectory{traj.initial, {}, 0}),
               EmptyInputError);
}

TEST(LogLikelihood, TruthBeatsPerturbation) {
  const auto p = friedkin_benchmark();
  const auto truth = vec_params(p);
  const auto traj = simulate_trajectory(p, StateVec::zeros(4), 100000, 8);
  ParamVector off = truth;
  off.theta(1) += 0.3;
  off.theta(9) -= 0.3;
  EXPECT_GT(log_likelihood(truth, traj), log_likelihood(off, traj));
}

TEST(Score, ZeroMarginClosedForm) {
  const StateVec prev{0b001, 3};
  const auto blk = block_with_margin(3, 0.0, prev);
  ParamVector theta{Eigen::VectorXd::Zero(12)};
  theta.block(2, 3) = blk;
  const auto s = score(theta, {{0b100, 3}, prev});
  const double r = std::sqrt(2.0 / std::numbers::pi);
  const auto k = s.k.segment(8, 4);
  EXPECT_NEAR(k(3), -r, 1e-15);  // d/dc
  EXPECT_NEAR(k(0), r, 1e-15);   // d/da_i1, x_1 = 1
  EXPECT_EQ(k(1), 0.0);
  EXPECT_EQ(k(2), 0.0);
}

TEST(Score, AllZeroPreviousStateOnlyMovesThresholds) {
  std::mt19937_64 rng(22);
  const auto theta = vec_params(random_params(rng, 4));
  for (std::uint32_t cur = 0; cur < 16; ++cur) {
    const auto s = score(theta, {{cur, 4}, StateVec::zeros(4)});
    for (int i = 0; i < 4; ++i) {
      EXPECT_TRUE(s.k.segment(i * 5, 4).isZero(0.0));
      EXPECT_NE(s.k(i * 5 + 4), 0.0);
    }
  }
}

TEST(Score, MatchesFiniteDifferences) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<std::uint32_t> bits(0, 7);
  for (int trial = 0; trial < 200; ++trial) {
    const auto theta = vec_params(random_params(rng, 3, 2.0));
    const ExtState xt{{bits(rng), 3}, {bits(rng), 3}};
    const auto k = score(theta, xt).k;
    const auto f = [&](const Eigen::VectorXd& v) {
      return log_g_sum(ParamVector{v}, xt);
    };
    for (Eigen::Index j = 0; j < theta.theta.size(); ++j) {
      const double fd = testing::central_difference(f, theta.theta, j);
      EXPECT_NEAR(k(j), fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(Score, CrossBlockIndependence) {
  // Changing block 0 of theta leaves every other score block untouched.
  std::mt19937_64 rng(24);
  const auto theta = vec_params(random_params(rng, 3));
  ParamVector other = theta;
  other.block(0, 3).setConstant(5.0);
  const ExtState xt{{0b101, 3}, {0b110, 3}};
  const auto a = score(theta, xt).k;
  const auto b = score(other, xt).k;
  EXPECT_EQ(a.tail(8), b.tail(8));
  EXPECT_NE(a.head(4), b.head(4));
}

class ExpectedObjective : public ::testing::Test {
 protected:
  NetworkParams p_ = hand_instance();
  ParamVector truth_ = vec_params(p_);
  StationaryDist ext_ = stationary_distribution(build_extended_matrix(p_));
};

TEST_F(ExpectedObjective, GradientVanishesAtTruth) {
  const auto r = expected_objective(truth_, p_);
  EXPECT_LT(r.gradient.norm(), 1e-8);
  EXPECT_LT(r.value, 0.0);
}

TEST_F(ExpectedObjective, ScoreIsUnbiasedAtTruth) {
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(truth_.theta.size());
  for (std::size_t k = 0; k < 16; ++k)
    mean += ext_.pi(static_cast<Eigen::Index>(k)) *
            score(truth_, ExtState::from_flat(k, 2)).k;
  EXPECT_LT(mean.cwiseAbs().maxCoeff(), 1e-8);
}

TEST_F(ExpectedObjective, TruthBeatsUnitPerturbations) {
  const double best = expected_objective(truth_, ext_, 2).value;
  for (Eigen::Index j = 0; j < truth_.theta.size(); ++j)
    for (double sign : {-1.0, 1.0}) {
      ParamVector t = truth_;
      t.theta(j) += 0.1 * sign;
      EXPECT_LT(expected_objective(t, ext_, 2).value, best);
    }
}

TEST_F(ExpectedObjective, GridMaximumOnSliceIsAtTruth) {
  const double a0 = truth_.theta(0);
  const double c0 = truth_.theta(2);
  double best = -INFINITY;
  int best_i = 0, best_j = 0;
  for (int i = -10; i <= 10; ++i)
    for (int j = -10; j <= 10; ++j) {
      ParamVector t = truth_;
      t.theta(0) = a0 + 0.05 * i;
      t.theta(2) = c0 + 0.05 * j;
      const double v = expected_objective(t, ext_, 2).value;
      if (v > best) { best = v; best_i = i; best_j = j; }
    }
  EXPECT_LE(std::abs(best_i), 1);
  EXPECT_LE(std::abs(best_j), 1);
}

TEST_F(ExpectedObjective, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(25);
  std::normal_distribution<double> g(0.0, 0.5);
  for (int trial = 0; trial < 10; ++trial) {
    ParamVector t = truth_;
    for (Eigen::Index j = 0; j < t.theta.size(); ++j) t.theta(j) += g(rng);
    const auto grad = expected_objective(t, ext_, 2).gradient;
    const auto f = [&](const Eigen::VectorXd& v) {
      return expected_objective(ParamVector{v}, ext_, 2).value;
    };
    for (Eigen::Index j = 0; j < t.theta.size(); ++j) {
      const double fd = testing::central_difference(f, t.theta, j);
      EXPECT_NEAR(grad(j), fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_F(ExpectedObjective, ConcaveAlongRandomChords) {
  std::mt19937_64 rng(26);
  std::normal_distribution<double> g(0.0, 1.5);
  for (int trial = 0; trial < 200; ++trial) {
    ParamVector a = truth_, b = truth_;
    for (Eigen::Index j = 0; j < a.theta.size(); ++j) {
      a.theta(j) += g(rng);
      b.theta(j) += g(rng);
    }
    const ParamVector mid{0.5 * (a.theta + b.theta)};
    const double fa = expected_objective(a, ext_, 2).value;
    const double fb = expected_objective(b, ext_, 2).value;
    EXPECT_GE(expected_objective(mid, ext_, 2).value, 0.5 * (fa + fb) - 1e-10);
  }
}

TEST_F(ExpectedObjective, CapacityAndDimensionErrors) {
  std::mt19937_64 rng(27);
  const auto big = random_params(rng, 7);
  EXPECT_THROW(expected_objective(vec_params(big), big), CapacityError);
  EXPECT_THROW(expected_objective(ParamVector::zeros(3), ext_, 2),
               DimensionError);
}

TEST(ErgodicObjective, ConvergesToExactValue) {
  const auto p = hand_instance();
  const auto theta = vec_params(p);
  const double exact = expected_objective(theta, p).value;
  const auto traj = simulate_trajectory(p, StateVec::zeros(2), 1'000'000, 55);
  EXPECT_NEAR(ergodic_objective_estimate(theta, traj), exact, 5e-3);

  // Off-truth evaluation point works the same way.
  ParamVector off = theta;
  off.theta.array() += 0.2;
  EXPECT_NEAR(ergodic_objective_estimate(off, traj),
              expected_objective(off, p).value, 5e-3);
}

TEST(ErgodicObjective, DeviationShrinksWithLength) {
  const auto p = hand_instance();
  const auto theta = vec_params(p);
  const double exact = expected_objective(theta, p).value;
  double sq_short = 0.0, sq_long = 0.0;
  for (std::uint64_t seed = 100; seed < 110; ++seed) {
    const auto traj = simulate_trajectory(p, StateVec::zeros(2), 401000, seed);
    Trajectory half{traj.initial,
                    {traj.observations.begin(), traj.observations.begin() + 201000},
                    seed};
    sq_short += std::pow(ergodic_objective_estimate(theta, half) - exact, 2);
    sq_long += std::pow(ergodic_objective_estimate(theta, traj) - exact, 2);
  }
  EXPECT_LT(sq_long, sq_short);
}

TEST(ErgodicObjective, ConstantStateAndBurnIn) {
  const auto p = hand_instance();
  const auto theta = vec_params(p);
  const StateVec s{0b10, 2};
  Trajectory flat{s, std::vector<StateVec>(50, s), 0};
  EXPECT_NEAR(ergodic_objective_estimate(theta, flat, 10),
              log_g_sum(theta, {s, s}), 1e-14);
  EXPECT_THROW(ergodic_objective_estimate(theta, flat), EmptyInputError);
}

}  // namespace
}  // namespace bvnet
