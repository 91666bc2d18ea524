#ifndef BVNET_MODEL_HPP
#define BVNET_MODEL_HPP

// Binary-valued observation network dynamics:
//
//   Y_t = A S_{t-1} + D_t,      D_{t,i} ~ N(0, sigma_i^2) independent,
//   S_t = Q(Y_t, c),            S_{t,i} = 1 iff Y_{t,i} > c_i.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bvnet/errors.hpp"
#include "bvnet/rng.hpp"

namespace bvnet {

/// Largest network the bitmask state encoding supports.
inline constexpr int kMaxSimulationAgents = 20;

/// Weight matrix A, thresholds c and per-agent noise scales sigma.
class NetworkParams {
 public:
  NetworkParams(Eigen::MatrixXd weights, Eigen::VectorXd thresholds)
      : NetworkParams(weights, std::move(thresholds),
                      Eigen::VectorXd::Ones(weights.rows())) {}

  NetworkParams(Eigen::MatrixXd weights, Eigen::VectorXd thresholds,
                Eigen::VectorXd sigma)
      : a_(std::move(weights)), c_(std::move(thresholds)),
        sigma_(std::move(sigma)) {
    const auto n = a_.rows();
    if (n < 2) throw InvariantError("network needs n >= 2 agents");
    if (n > kMaxSimulationAgents)
      throw CapacityError("network size", static_cast<int>(n),
                          kMaxSimulationAgents);
    if (a_.cols() != n || c_.size() != n || sigma_.size() != n)
      throw DimensionError("A must be n x n with c and sigma of length n");
    if (!a_.allFinite() || !c_.allFinite() || !sigma_.allFinite())
      throw InvariantError("parameters must be finite");
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(a_.row(i).cwiseAbs().sum() > 0.0))
        throw InvariantError("row " + std::to_string(i + 1) +
                             " of |A| has zero sum");
      if (!(sigma_(i) > 0.0))
        throw InvariantError("sigma_" + std::to_string(i + 1) +
                             " must be positive");
    }
  }

  int n() const noexcept { return static_cast<int>(a_.rows()); }
  const Eigen::MatrixXd& weights() const noexcept { return a_; }
  const Eigen::VectorXd& thresholds() const noexcept { return c_; }
  const Eigen::VectorXd& sigma() const noexcept { return sigma_; }

  bool unit_noise() const noexcept { return (sigma_.array() == 1.0).all(); }

  friend bool operator==(const NetworkParams& x, const NetworkParams& y) {
    return x.a_ == y.a_ && x.c_ == y.c_ && x.sigma_ == y.sigma_;
  }

 private:
  Eigen::MatrixXd a_;
  Eigen::VectorXd c_;
  Eigen::VectorXd sigma_;
};

/// theta = vec{(A c)}: row i of (A c) occupies entries [i(n+1), (i+1)(n+1)).
struct ParamVector {
  Eigen::VectorXd theta;

  static constexpr Eigen::Index block_size(int n) noexcept { return n + 1; }
  static constexpr Eigen::Index length(int n) noexcept {
    return static_cast<Eigen::Index>(n) * (n + 1);
  }

  /// Agent count implied by the length, or throws.
  int agents() const {
    const auto m = theta.size();
    int n = 1;
    while (length(n) < m) ++n;
    if (length(n) != m)
      throw DimensionError("parameter vector length " + std::to_string(m) +
                           " is not n(n+1)");
    return n;
  }

  auto block(int i, int n) { return theta.segment(i * block_size(n), n + 1); }
  auto block(int i, int n) const {
    return theta.segment(i * block_size(n), n + 1);
  }

  static ParamVector zeros(int n) {
    return {Eigen::VectorXd::Zero(length(n))};
  }

  friend bool operator==(const ParamVector&, const ParamVector&) = default;
};

/// A point of {0,1}^n; bit i-1 holds s_i.
struct StateVec {
  std::uint32_t bits = 0;
  int n = 0;

  static StateVec zeros(int n) { return {0u, n}; }
  static StateVec ones(int n) { return {(1u << n) - 1u, n}; }

  static StateVec encode(std::span<const int> s) {
    if (s.size() > static_cast<std::size_t>(kMaxSimulationAgents))
      throw CapacityError("state width", static_cast<int>(s.size()),
                          kMaxSimulationAgents);
    std::uint32_t b = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] != 0 && s[i] != 1)
        throw InvariantError("state entries must be 0 or 1");
      b |= static_cast<std::uint32_t>(s[i]) << i;
    }
    return {b, static_cast<int>(s.size())};
  }

  std::vector<int> decode() const {
    std::vector<int> s(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) s[i] = bit(i);
    return s;
  }

  int bit(int i) const noexcept { return static_cast<int>((bits >> i) & 1u); }

  /// The state as a real column vector, for products with A.
  Eigen::VectorXd as_vector() const {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = bit(i);
    return v;
  }

  friend bool operator==(const StateVec&, const StateVec&) = default;
};

/// The pair (S_t, S_{t-1}) on {0,1}^{2n}.
struct ExtState {
  StateVec current;
  StateVec previous;

  int n() const noexcept { return current.n; }

  /// current.bits * 2^n + previous.bits.
  std::size_t flat_index() const noexcept {
    return (static_cast<std::size_t>(current.bits) << current.n) |
           previous.bits;
  }

  static ExtState from_flat(std::size_t index, int n) {
    const std::size_t mask = (std::size_t{1} << n) - 1;
    return {{static_cast<std::uint32_t>(index >> n), n},
            {static_cast<std::uint32_t>(index & mask), n}};
  }

  friend bool operator==(const ExtState&, const ExtState&) = default;
};

/// A simulated or recorded observation sequence S_0, S_1, ..., S_T.
struct Trajectory {
  StateVec initial;
  std::vector<StateVec> observations;  // S_1..S_T
  std::uint64_t seed = 0;

  int n() const noexcept { return initial.n; }
  std::size_t length() const noexcept { return observations.size(); }

  /// S_t for t in [0, T].
  const StateVec& state(std::size_t t) const {
    return t == 0 ? initial : observations.at(t - 1);
  }

  /// (S_t, S_{t-1}) for t in [1, T].
  ExtState extended(std::size_t t) const { return {state(t), state(t - 1)}; }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

// ---------------------------------------------------------------------------

/// Bit i is set iff y_i > c_i. Ties map to 0.
inline StateVec quantize(const Eigen::Ref<const Eigen::VectorXd>& y,
                         const Eigen::Ref<const Eigen::VectorXd>& c) {
  if (y.size() != c.size())
    throw DimensionError("quantize: y and c lengths differ");
  if (y.size() > kMaxSimulationAgents)
    throw CapacityError("quantize", static_cast<int>(y.size()),
                        kMaxSimulationAgents);
  std::uint32_t b = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y(i) > c(i)) b |= 1u << i;
  return {b, static_cast<int>(y.size())};
}

/// One step of the dynamics from `prev`, driven by `noise`.
inline StateVec step_dynamics(const NetworkParams& p, const StateVec& prev,
                              const StepStream& noise) {
  if (prev.n != p.n()) throw DimensionError("state width differs from n");
  const int n = p.n();
  const auto& a = p.weights();
  const auto& c = p.thresholds();
  const auto& sigma = p.sigma();
  std::uint32_t b = 0;
  for (int i = 0; i < n; ++i) {
    double y = sigma(i) * noise.gaussian(static_cast<std::uint32_t>(i));
    for (int j = 0; j < n; ++j)
      if (prev.bit(j)) y += a(i, j);
    if (y > c(i)) b |= 1u << i;
  }
  return {b, n};
}

/// Iterates the dynamics T times from s0. Step t (1-based) draws from
/// StepStream(seed, t).
inline Trajectory simulate_trajectory(const NetworkParams& p,
                                      const StateVec& s0, std::size_t steps,
                                      std::uint64_t seed) {
  if (steps == 0) throw EmptyInputError("trajectory length must be >= 1");
  if (s0.n != p.n()) throw DimensionError("initial state width differs from n");
  Trajectory traj{s0, {}, seed};
  traj.observations.reserve(steps);
  StateVec s = s0;
  for (std::size_t t = 1; t <= steps; ++t) {
    s = step_dynamics(p, s, StepStream(seed, t));
    traj.observations.push_back(s);
  }
  return traj;
}

inline ParamVector vec_params(const NetworkParams& p) {
  const int n = p.n();
  ParamVector v = ParamVector::zeros(n);
  for (int i = 0; i < n; ++i) {
    auto blk = v.block(i, n);
    blk.head(n) = p.weights().row(i).transpose();
    blk(n) = p.thresholds()(i);
  }
  return v;
}

/// Inverse of vec_params with sigma = 1. Throws InvariantError if the
/// weights violate the row-sum invariant.
inline NetworkParams unvec_params(const ParamVector& v, int n) {
  if (n < 2 || v.theta.size() != ParamVector::length(n))
    throw DimensionError("parameter vector length " +
                         std::to_string(v.theta.size()) + " != n(n+1) for n=" +
                         std::to_string(n));
  Eigen::MatrixXd a(n, n);
  Eigen::VectorXd c(n);
  for (int i = 0; i < n; ++i) {
    const auto blk = v.block(i, n);
    a.row(i) = blk.head(n).transpose();
    c(i) = blk(n);
  }
  return NetworkParams(std::move(a), std::move(c));
}

/// The four-agent influence network of Friedkin and Johnsen's empirical
/// study with thresholds (0.13, 0.28, 0.08, 0.24) and noise variance 4.
inline NetworkParams friedkin_raw() {
  Eigen::MatrixXd a(4, 4);
  a << .220, .120, .360, .300,  //
      .147, .215, .344, .294,   //
      0, 0, 1, 0,               //
      .090, .178, .446, .286;
  Eigen::VectorXd c(4);
  c << 0.13, 0.28, 0.08, 0.24;
  return NetworkParams(a, c, Eigen::VectorXd::Constant(4, 2.0));
}

/// friedkin_raw() in unit-noise form: A/2 and c/2.
inline NetworkParams friedkin_benchmark() {
  const auto raw = friedkin_raw();
  Eigen::VectorXd c(4);
  c << 0.065, 0.14, 0.04, 0.12;
  return NetworkParams(raw.weights() / 2.0, c);
}

}  // namespace bvnet

#endif  // BVNET_MODEL_HPP
