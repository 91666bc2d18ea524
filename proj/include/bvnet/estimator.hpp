#ifndef BVNET_ESTIMATOR_HPP
#define BVNET_ESTIMATOR_HPP

// Recursive stochastic-approximation estimator
//
//   theta_{t+1} = Proj_M[ theta_t + a_t K(theta_t, S~_{t+1}) ],
//
// where K is the probit score and Proj_M clamps every component to [-M, M].

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <ranges>
#include <string>
#include <vector>

#include "bvnet/errors.hpp"
#include "bvnet/likelihood.hpp"
#include "bvnet/model.hpp"
#include "bvnet/rng.hpp"

namespace bvnet {

/// Harmonic step sizes a_t = a / (t + b), t >= 1.
struct StepSchedule {
  double a = 10.0;
  double b = 200.0;

  StepSchedule() = default;
  StepSchedule(double numerator, double offset) : a(numerator), b(offset) {
    if (!(a > 0.0) || !std::isfinite(a))
      throw InvariantError("step numerator must be positive");
    if (!(b >= 0.0) || !std::isfinite(b))
      throw InvariantError("step offset must be non-negative");
  }

  double operator()(std::size_t t) const noexcept {
    return a / (static_cast<double>(t) + b);
  }
};

inline constexpr double kDefaultBound = 100.0;

struct EstimatorState {
  ParamVector theta;
  std::size_t t = 1;
  StepSchedule schedule;
  std::optional<double> bound = kDefaultBound;
  std::size_t truncation_count = 0;
};

/// Applies one update with a given score. sa_step is this with the probit
/// score; tests use it to inject scores directly.
inline EstimatorState sa_apply(EstimatorState state, const Score& k) {
  const auto m = state.theta.theta.size();
  if (k.k.size() != m) throw DimensionError("score length differs from theta");
  if (!k.k.allFinite()) {
    const int n = state.theta.agents();
    for (Eigen::Index j = 0; j < m; ++j)
      if (!std::isfinite(k.k(j)))
        throw NumericalError("non-finite score",
                             j / ParamVector::block_size(n));
  }
  state.theta.theta += state.schedule(state.t) * k.k;
  if (state.bound) {
    const double bound = *state.bound;
    bool clamped = false;
    for (Eigen::Index j = 0; j < m; ++j) {
      double& v = state.theta.theta(j);
      if (v > bound) {
        v = bound;
        clamped = true;
      } else if (v < -bound) {
        v = -bound;
        clamped = true;
      }
    }
    if (clamped) ++state.truncation_count;
  }
  ++state.t;
  return state;
}

inline EstimatorState sa_step(EstimatorState state, const ExtState& xt) {
  if (xt.n() != state.theta.agents())
    throw DimensionError("state width does not match theta");
  const Score k = score(state.theta, xt);
  return sa_apply(std::move(state), k);
}

struct Snapshot {
  std::size_t t = 0;  // index of the newest observation consumed
  Eigen::VectorXd theta;
  double err_norm = std::numeric_limits<double>::quiet_NaN();
};

struct RunRecord {
  std::vector<Snapshot> snapshots;  // every `snapshot_every` steps plus final
  ParamVector final_theta;
  std::size_t updates = 0;
  std::size_t truncation_count = 0;
  std::optional<ParamVector> truth;
};

struct EstimatorOptions {
  StepSchedule schedule;
  std::optional<double> bound = kDefaultBound;
  std::size_t snapshot_every = 100;
  /// Update with (S_1, S_0) when S_0 is observed; otherwise the first
  /// update uses (S_2, S_1).
  bool use_initial_pair = true;
};

/// Consumes observations one at a time, updating after each new state.
class OnlineEstimator {
 public:
  OnlineEstimator(ParamVector theta0, EstimatorOptions opts,
                  std::optional<ParamVector> truth = std::nullopt)
      : opts_(opts), n_(theta0.agents()), truth_(std::move(truth)) {
    if (opts_.bound && !(*opts_.bound > 0.0))
      throw InvariantError("projection bound must be positive");
    if (opts_.snapshot_every == 0)
      throw InvariantError("snapshot cadence must be >= 1");
    if (truth_ && truth_->theta.size() != theta0.theta.size())
      throw DimensionError("truth and theta0 lengths differ");
    if (!theta0.theta.allFinite())
      throw NumericalError("initial theta is not finite");
    state_.theta = std::move(theta0);
    state_.schedule = opts_.schedule;
    state_.bound = opts_.bound;
  }

  int n() const noexcept { return n_; }
  const EstimatorState& state() const noexcept { return state_; }
  /// Number of observations received, minus one (the index of the newest).
  std::size_t observed() const noexcept { return seen_ == 0 ? 0 : seen_ - 1; }

  void observe(const StateVec& s) {
    if (s.n != n_) throw DimensionError("observation width differs from n");
    if (seen_ > 0 && (seen_ >= 2 || opts_.use_initial_pair)) {
      state_ = sa_step(std::move(state_), ExtState{s, prev_});
      ++updates_;
    }
    prev_ = s;
    ++seen_;
    if (seen_ > 1 && observed() % opts_.snapshot_every == 0) take_snapshot();
  }

  RunRecord finish() {
    if (seen_ < 2) throw EmptyInputError("stream needs at least two states");
    if (record_.snapshots.empty() || record_.snapshots.back().t != observed())
      take_snapshot();
    record_.final_theta = state_.theta;
    record_.updates = updates_;
    record_.truncation_count = state_.truncation_count;
    record_.truth = truth_;
    return std::move(record_);
  }

 private:
  void take_snapshot() {
    Snapshot snap{observed(), state_.theta.theta};
    if (truth_) snap.err_norm = (state_.theta.theta - truth_->theta).norm();
    record_.snapshots.push_back(std::move(snap));
  }

  EstimatorOptions opts_;
  int n_;
  std::optional<ParamVector> truth_;
  EstimatorState state_;
  StateVec prev_;
  std::size_t seen_ = 0;
  std::size_t updates_ = 0;
  RunRecord record_;
};

/// Simulates T steps of the true dynamics from s0 and estimates online.
/// Bit-exactly equal to feeding simulate_trajectory(truth, s0, T, seed) to
/// run_estimator_on_stream.
inline RunRecord run_estimator(const NetworkParams& truth,
                               const ParamVector& theta0,
                               const EstimatorOptions& opts, std::size_t steps,
                               std::uint64_t seed,
                               std::optional<StateVec> s0 = std::nullopt) {
  if (steps == 0) throw EmptyInputError("run length must be >= 1");
  if (theta0.theta.size() != ParamVector::length(truth.n()))
    throw DimensionError("theta0 length does not match the network");
  const StateVec start = s0.value_or(StateVec::zeros(truth.n()));
  if (start.n != truth.n()) throw DimensionError("initial state width");
  OnlineEstimator est(theta0, opts, vec_params(truth));
  StateVec s = start;
  est.observe(s);
  for (std::size_t t = 1; t <= steps; ++t) {
    s = step_dynamics(truth, s, StepStream(seed, t));
    est.observe(s);
  }
  return est.finish();
}

/// Same update law over externally observed states; the first element is
/// S_0.
template <std::ranges::input_range R>
  requires std::same_as<std::ranges::range_value_t<R>, StateVec>
RunRecord run_estimator_on_stream(
    const ParamVector& theta0, const EstimatorOptions& opts, R&& stream,
    std::optional<ParamVector> truth = std::nullopt) {
  OnlineEstimator est(theta0, opts, std::move(truth));
  for (const StateVec& s : stream) est.observe(s);
  return est.finish();
}

inline RunRecord run_estimator_on_stream(
    const ParamVector& theta0, const EstimatorOptions& opts,
    const Trajectory& traj, std::optional<ParamVector> truth = std::nullopt) {
  OnlineEstimator est(theta0, opts, std::move(truth));
  for (std::size_t t = 0; t <= traj.length(); ++t) est.observe(traj.state(t));
  return est.finish();
}

}  // namespace bvnet

#endif  // BVNET_ESTIMATOR_HPP
