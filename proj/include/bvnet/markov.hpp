#ifndef BVNET_MARKOV_HPP
#define BVNET_MARKOV_HPP

// Exact finite-state analysis of the observation chain {S_t} on {0,1}^n and
// of the extended chain {(S_t, S_{t-1})} on {0,1}^{2n}.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "bvnet/errors.hpp"
#include "bvnet/model.hpp"
#include "bvnet/normal.hpp"

namespace bvnet {

inline constexpr int kMaxKernelAgents = 10;
inline constexpr int kMaxExtendedAgents = 6;
inline constexpr Eigen::Index kDirectSolveMaxDim = 256;

enum class ChainKind { base, extended };

/// Dense row-stochastic matrix; entry (u, s) = P(u -> s).
struct TransitionMatrix {
  Eigen::MatrixXd p;
  ChainKind kind = ChainKind::base;
  int n = 0;  // agent count of the underlying network

  Eigen::Index dim() const noexcept { return p.rows(); }
};

struct StationaryDist {
  Eigen::VectorXd pi;
  double residual = 0.0;  // ||pi P - pi||_inf
  int iterations = 0;     // 0 for a direct solve
};

namespace detail {

// Standardized margins z_i(u) = (c_i - A_i u) / sigma_i for every u.
inline Eigen::MatrixXd standardized_margins(const NetworkParams& p) {
  const int n = p.n();
  const std::size_t states = std::size_t{1} << n;
  Eigen::MatrixXd z(n, static_cast<Eigen::Index>(states));
  for (std::size_t u = 0; u < states; ++u) {
    const Eigen::VectorXd x = StateVec{static_cast<std::uint32_t>(u), n}.as_vector();
    z.col(static_cast<Eigen::Index>(u)) =
        ((p.thresholds() - p.weights() * x).array() / p.sigma().array())
            .matrix();
  }
  return z;
}

inline double log_kernel_from_margin(const Eigen::Ref<const Eigen::VectorXd>& z,
                                     std::uint32_t s) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i)
    acc += ((s >> i) & 1u) ? normal::log_ccdf(z(i)) : normal::log_cdf(z(i));
  return acc;
}

}  // namespace detail

/// P{S_1 = s | S_0 = u} = prod_i (1 - Phi(z_i))^{s_i} Phi(z_i)^{1 - s_i},
/// z_i = (c_i - A_i u) / sigma_i, accumulated in log space.
inline double transition_probability(const NetworkParams& p, const StateVec& u,
                                     const StateVec& s) {
  if (u.n != p.n() || s.n != p.n())
    throw DimensionError("transition_probability: state width differs from n");
  const Eigen::VectorXd z =
      ((p.thresholds() - p.weights() * u.as_vector()).array() /
       p.sigma().array())
          .matrix();
  return std::exp(detail::log_kernel_from_margin(z, s.bits));
}

inline TransitionMatrix build_transition_matrix(const NetworkParams& p) {
  const int n = p.n();
  if (n > kMaxKernelAgents)
    throw CapacityError("build_transition_matrix", n, kMaxKernelAgents);
  const Eigen::Index dim = Eigen::Index{1} << n;
  const Eigen::MatrixXd z = detail::standardized_margins(p);

  // Per-agent log factors, then one sum per entry.
  Eigen::MatrixXd log_on(n, dim), log_off(n, dim);
  for (Eigen::Index u = 0; u < dim; ++u)
    for (int i = 0; i < n; ++i) {
      log_on(i, u) = normal::log_ccdf(z(i, u));
      log_off(i, u) = normal::log_cdf(z(i, u));
    }

  TransitionMatrix out{Eigen::MatrixXd(dim, dim), ChainKind::base, n};
  for (Eigen::Index u = 0; u < dim; ++u)
    for (Eigen::Index s = 0; s < dim; ++s) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i)
        acc += ((s >> i) & 1) ? log_on(i, u) : log_off(i, u);
      out.p(u, s) = std::exp(acc);
    }
  if (!(out.p.minCoeff() > 0.0))
    throw NumericalError("transition kernel has a non-positive entry");
  return out;
}

/// Kernel of (S_t, S_{t-1}) with flat index current * 2^n + previous.
/// Entry ((s, u) -> (s_next, s')) = P(s -> s_next) if s' = s, else 0.
inline TransitionMatrix build_extended_matrix(const NetworkParams& p) {
  const int n = p.n();
  if (n > kMaxExtendedAgents)
    throw CapacityError("build_extended_matrix", n, kMaxExtendedAgents);
  const TransitionMatrix base = build_transition_matrix(p);
  const Eigen::Index states = base.dim();
  const Eigen::Index dim = states * states;
  TransitionMatrix out{Eigen::MatrixXd::Zero(dim, dim), ChainKind::extended, n};
  for (Eigen::Index from = 0; from < dim; ++from) {
    const Eigen::Index current = from >> n;
    for (Eigen::Index next = 0; next < states; ++next)
      out.p(from, (next << n) | current) = base.p(current, next);
  }
  return out;
}

inline double stationary_residual(const Eigen::MatrixXd& p,
                                  const Eigen::VectorXd& pi) {
  return ((p.transpose() * pi) - pi).cwiseAbs().maxCoeff();
}

/// Stationary law of a row-stochastic matrix. Dimensions up to 256 use a
/// direct LU solve of pi (P - I) = 0, sum(pi) = 1; larger chains, or a direct
/// solution whose residual misses `tol`, fall back to power iteration.
inline StationaryDist stationary_distribution(const TransitionMatrix& m,
                                              double tol = 1e-12,
                                              int max_iter = 1'000'000) {
  if (!(tol > 0.0)) throw InvariantError("tolerance must be positive");
  const Eigen::Index dim = m.dim();
  if (dim == 0 || m.p.cols() != dim)
    throw DimensionError("transition matrix must be square and non-empty");

  const Eigen::MatrixXd pt = m.p.transpose();
  StationaryDist out;
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(dim, 1.0 / dim);

  if (dim <= kDirectSolveMaxDim) {
    Eigen::MatrixXd sys = pt - Eigen::MatrixXd::Identity(dim, dim);
    sys.row(dim - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
    rhs(dim - 1) = 1.0;
    Eigen::VectorXd x = sys.partialPivLu().solve(rhs);
    if (x.allFinite() && x.minCoeff() >= -tol) {
      x = x.cwiseMax(0.0);
      x /= x.sum();
      pi = x;
      out.pi = pi;
      out.residual = stationary_residual(m.p, pi);
      if (out.residual <= tol) return out;
    }
  }

  double residual = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd next = pt * pi;
    next /= next.sum();
    residual = (next - pi).cwiseAbs().maxCoeff();
    pi.swap(next);
    if (residual <= tol) {
      out.pi = pi;
      out.residual = stationary_residual(m.p, pi);
      out.iterations = it;
      if (out.residual <= tol) return out;
    }
  }
  throw IterationLimitError("stationary_distribution did not converge",
                            stationary_residual(m.p, pi));
}

/// Marginal of an extended-chain law over the current (first n) bits.
inline Eigen::VectorXd current_marginal(const Eigen::VectorXd& ext, int n) {
  const Eigen::Index states = Eigen::Index{1} << n;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(states);
  for (Eigen::Index k = 0; k < ext.size(); ++k) out(k >> n) += ext(k);
  return out;
}

/// Marginal of an extended-chain law over the previous (last n) bits.
inline Eigen::VectorXd previous_marginal(const Eigen::VectorXd& ext, int n) {
  const Eigen::Index states = Eigen::Index{1} << n;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(states);
  for (Eigen::Index k = 0; k < ext.size(); ++k) out(k & (states - 1)) += ext(k);
  return out;
}

struct Lemma1Report {
  int n = 0;
  double tolerance = 0.0;
  double max_deviation = 0.0;  // max |P(Sbar = sbar | S = s) - P(s, sbar)|
  double min_conditioning_mass = 0.0;
  double stationary_residual = 0.0;
  bool passed = false;

  /// One summary line followed by a key=value block.
  std::string to_string() const {
    std::ostringstream os;
    os.precision(17);
    os << "lemma1 " << (passed ? "PASS" : "FAIL") << " n=" << n
       << " max_deviation=" << max_deviation << " tol=" << tolerance << '\n'
       << "n=" << n << '\n'
       << "tolerance=" << tolerance << '\n'
       << "max_deviation=" << max_deviation << '\n'
       << "min_conditioning_mass=" << min_conditioning_mass << '\n'
       << "stationary_residual=" << stationary_residual << '\n'
       << "passed=" << (passed ? "true" : "false") << '\n';
    return os.str();
  }
};

/// Compares the conditional law of the current bits given the previous bits
/// under `ext` against the base kernel.
inline Lemma1Report lemma1_deviation(const StationaryDist& ext,
                                     const TransitionMatrix& base, double tol) {
  const int n = base.n;
  const Eigen::Index states = base.dim();
  if (ext.pi.size() != states * states)
    throw DimensionError("extended law size does not match the base kernel");
  const Eigen::VectorXd prev = previous_marginal(ext.pi, n);
  Lemma1Report r;
  r.n = n;
  r.tolerance = tol;
  r.stationary_residual = ext.residual;
  r.min_conditioning_mass = prev.minCoeff();
  if (r.min_conditioning_mass < 1e-14)
    throw DegenerateMassError("previous-state marginal mass below 1e-14");
  for (Eigen::Index s = 0; s < states; ++s)
    for (Eigen::Index sbar = 0; sbar < states; ++sbar) {
      const double cond = ext.pi((sbar << n) | s) / prev(s);
      r.max_deviation =
          std::max(r.max_deviation, std::abs(cond - base.p(s, sbar)));
    }
  r.passed = r.max_deviation <= tol;
  return r;
}

inline Lemma1Report verify_lemma1(const NetworkParams& p, double tol = 1e-8) {
  if (p.n() > kMaxExtendedAgents)
    throw CapacityError("verify_lemma1", p.n(), kMaxExtendedAgents);
  const TransitionMatrix base = build_transition_matrix(p);
  const StationaryDist ext = stationary_distribution(build_extended_matrix(p));
  return lemma1_deviation(ext, base, tol);
}

}  // namespace bvnet

#endif  // BVNET_MARKOV_HPP
