#ifndef BVNET_LIKELIHOOD_HPP
#define BVNET_LIKELIHOOD_HPP

// Probit conditional likelihood of the observation chain.
//
// For agent i and an extended state xt = (current, previous):
//   z = c_i - A_i x          (x = previous state)
//   g_i = (1 - Phi(z))^{current_i} * Phi(z)^{1 - current_i}
//
// The log P{S_0 = s_0} term of the full trajectory likelihood is never
// included: the initial law is unknown to the estimator and the term does
// not grow with T.

#include <Eigen/Dense>

#include <cstddef>

#include "bvnet/errors.hpp"
#include "bvnet/markov.hpp"
#include "bvnet/model.hpp"
#include "bvnet/normal.hpp"

namespace bvnet {

/// Gradient of sum_i log g_i with respect to theta; block i holds
/// (d/da_i1, ..., d/da_in, d/dc_i).
struct Score {
  Eigen::VectorXd k;
};

struct ObjectiveReport {
  double value = 0.0;
  Eigen::VectorXd gradient;
  StationaryDist stationary;  // extended-chain law of the generating params
};

namespace detail {

inline double margin(const Eigen::Ref<const Eigen::VectorXd>& theta_i,
                     const StateVec& prev) {
  const int n = prev.n;
  double z = theta_i(n);
  for (int j = 0; j < n; ++j)
    if (prev.bit(j)) z -= theta_i(j);
  return z;
}

inline void check_block(const Eigen::Ref<const Eigen::VectorXd>& theta_i,
                        const ExtState& xt, int i) {
  if (xt.current.n != xt.previous.n || theta_i.size() != xt.n() + 1)
    throw DimensionError("parameter block must have length n+1");
  if (i < 0 || i >= xt.n()) throw DimensionError("agent index out of range");
}

}  // namespace detail

/// log g_i(xt | theta_i).
inline double log_g(const Eigen::Ref<const Eigen::VectorXd>& theta_i,
                    const ExtState& xt, int i) {
  detail::check_block(theta_i, xt, i);
  const double z = detail::margin(theta_i, xt.previous);
  return xt.current.bit(i) ? normal::log_ccdf(z) : normal::log_cdf(z);
}

/// sum_i log g_i(xt | theta^(i)).
inline double log_g_sum(const ParamVector& theta, const ExtState& xt) {
  const int n = xt.n();
  if (theta.theta.size() != ParamVector::length(n))
    throw DimensionError("parameter vector length does not match state width");
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += log_g(theta.block(i, n), xt, i);
  return acc;
}

/// sum_{t=1..T} sum_i log g_i(S_t, S_{t-1}).
inline double log_likelihood(const ParamVector& theta, const Trajectory& traj) {
  if (traj.length() == 0) throw EmptyInputError("empty trajectory");
  double acc = 0.0;
  for (std::size_t t = 1; t <= traj.length(); ++t)
    acc += log_g_sum(theta, traj.extended(t));
  return acc;
}

/// Writes the score of block i into `out` (length n+1).
inline void score_block(const Eigen::Ref<const Eigen::VectorXd>& theta_i,
                        const ExtState& xt, int i,
                        Eigen::Ref<Eigen::VectorXd> out) {
  detail::check_block(theta_i, xt, i);
  const int n = xt.n();
  const double z = detail::margin(theta_i, xt.previous);
  // d/dz log(1 - Phi(z)) = -lambda(-z);  d/dz log Phi(z) = lambda(z).
  const double dz = xt.current.bit(i) ? -normal::inv_mills(-z)
                                      : normal::inv_mills(z);
  for (int j = 0; j < n; ++j) out(j) = xt.previous.bit(j) ? -dz : 0.0;
  out(n) = dz;
}

inline Score score(const ParamVector& theta, const ExtState& xt) {
  const int n = xt.n();
  if (theta.theta.size() != ParamVector::length(n))
    throw DimensionError("parameter vector length does not match state width");
  Score s{Eigen::VectorXd(theta.theta.size())};
  for (int i = 0; i < n; ++i)
    score_block(theta.block(i, n),
                xt, i, s.k.segment(i * ParamVector::block_size(n), n + 1));
  return s;
}

/// Exact E{sum_i log g_i(S~ | theta^(i))} under a given extended-chain law.
inline ObjectiveReport expected_objective(const ParamVector& theta,
                                          const StationaryDist& ext, int n) {
  const auto states = std::size_t{1} << (2 * n);
  if (static_cast<std::size_t>(ext.pi.size()) != states)
    throw DimensionError("extended law size does not match n");
  if (theta.theta.size() != ParamVector::length(n))
    throw DimensionError("parameter vector length does not match n");
  ObjectiveReport r;
  r.gradient = Eigen::VectorXd::Zero(theta.theta.size());
  for (std::size_t k = 0; k < states; ++k) {
    const double w = ext.pi(static_cast<Eigen::Index>(k));
    const ExtState xt = ExtState::from_flat(k, n);
    r.value += w * log_g_sum(theta, xt);
    r.gradient += w * score(theta, xt).k;
  }
  r.stationary = ext;
  return r;
}

/// Objective at a candidate theta, with the stationary law of the extended
/// chain built from the generating (true) parameters.
inline ObjectiveReport expected_objective(const ParamVector& theta,
                                          const NetworkParams& generating) {
  if (generating.n() > kMaxExtendedAgents)
    throw CapacityError("expected_objective", generating.n(),
                        kMaxExtendedAgents);
  return expected_objective(
      theta, stationary_distribution(build_extended_matrix(generating)),
      generating.n());
}

inline constexpr std::size_t kDefaultBurnIn = 1000;

/// Time average of sum_i log g_i over t in (burn_in, T].
inline double ergodic_objective_estimate(const ParamVector& theta,
                                         const Trajectory& traj,
                                         std::size_t burn_in = kDefaultBurnIn) {
  if (traj.length() <= burn_in)
    throw EmptyInputError("trajectory is not longer than the burn-in");
  double acc = 0.0;
  for (std::size_t t = burn_in + 1; t <= traj.length(); ++t)
    acc += log_g_sum(theta, traj.extended(t));
  return acc / static_cast<double>(traj.length() - burn_in);
}

}  // namespace bvnet

#endif  // BVNET_LIKELIHOOD_HPP
