#ifndef BVNET_TRANSFORMS_HPP
#define BVNET_TRANSFORMS_HPP

// Identifiability utilities. Rows (A_i, c_i, sigma_i) can be rescaled by any
// d_i > 0 without changing the transition kernel, so parameters are only
// identified up to that scaling; under sigma = 1 the kernel determines
// (A, c) uniquely, and recover_from_kernel inverts it constructively.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "bvnet/errors.hpp"
#include "bvnet/markov.hpp"
#include "bvnet/model.hpp"
#include "bvnet/normal.hpp"

namespace bvnet {

/// Divides row i of (A, c) by sigma_i and sets sigma to ones.
inline NetworkParams standardize(const NetworkParams& p) {
  const Eigen::VectorXd inv = p.sigma().cwiseInverse();
  return NetworkParams(inv.asDiagonal() * p.weights(),
                       p.thresholds().cwiseProduct(inv));
}

/// Scales each row so that |A_i| 1 = 1, carrying c_i and sigma_i along.
inline NetworkParams to_row_stochastic(const NetworkParams& p) {
  const Eigen::VectorXd row_mass = p.weights().cwiseAbs().rowwise().sum();
  const Eigen::VectorXd inv = row_mass.cwiseInverse();
  return NetworkParams(inv.asDiagonal() * p.weights(),
                       p.thresholds().cwiseProduct(inv),
                       p.sigma().cwiseProduct(inv));
}

inline double kernel_distance(const TransitionMatrix& x,
                              const TransitionMatrix& y) {
  if (x.dim() != y.dim() || x.p.cols() != y.p.cols())
    throw DimensionError("kernel_distance: matrices differ in size");
  return (x.p - y.p).cwiseAbs().maxCoeff();
}

/// Max-abs entrywise difference of the two base kernels.
inline double kernel_distance(const NetworkParams& p1, const NetworkParams& p2) {
  if (p1.n() != p2.n())
    throw DimensionError("kernel_distance: networks differ in size");
  return kernel_distance(build_transition_matrix(p1),
                         build_transition_matrix(p2));
}

struct Recovery {
  NetworkParams params;
  double residual;  // kernel_distance between the input and the rebuilt kernel
};

namespace detail {

// z_i(u) = c_i - A_i u from the per-agent marginal of row u. The marginal
// P{bit i = 0 | u} = Phi(z) is summed over whole kernel rows and inverted on
// whichever tail is smaller.
inline double recovered_margin(const Eigen::MatrixXd& p, Eigen::Index u,
                               int agent) {
  double off = 0.0;
  double on = 0.0;
  for (Eigen::Index s = 0; s < p.cols(); ++s)
    ((s >> agent) & 1 ? on : off) += p(u, s);
  const double total = on + off;
  off /= total;
  on /= total;
  if (!(off > 0.0 && off < 1.0 && on > 0.0 && on < 1.0))
    throw ModelMismatchError("marginal probability outside (0, 1) in row " +
                             std::to_string(u));
  return off <= on ? normal::quantile(off) : -normal::quantile(on);
}

}  // namespace detail

/// Rebuilds sigma = 1 parameters from a kernel, following the two-point
/// identifiability argument: from rows e_j and e_j + e_k,
///   w_ij = c_i - a_ij,  v_ijk = c_i - a_ij - a_ik,  a_ik = w_ij - v_ijk,
/// with j = k + 1 (k < n) or j = 1 (k = n); then c_i = w_ij + a_ij.
/// Returns the parameters and the residual distance of their kernel to `m`.
inline Recovery recover_with_residual(const TransitionMatrix& m, int n) {
  if (m.kind != ChainKind::base)
    throw DimensionError("recover_from_kernel expects a base kernel");
  if (n < 2 || n > kMaxKernelAgents)
    throw CapacityError("recover_from_kernel", n, kMaxKernelAgents);
  const Eigen::Index dim = Eigen::Index{1} << n;
  if (m.dim() != dim || m.p.cols() != dim)
    throw DimensionError("kernel size is not 2^n x 2^n");
  if (!m.p.allFinite() || m.p.minCoeff() < 0.0)
    throw ModelMismatchError("kernel has negative or non-finite entries");

  Eigen::MatrixXd a(n, n);
  Eigen::VectorXd c(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      const int j = (k + 1) % n;
      const Eigen::Index ej = Eigen::Index{1} << j;
      const Eigen::Index ek = Eigen::Index{1} << k;
      const double w = detail::recovered_margin(m.p, ej, i);
      const double v = detail::recovered_margin(m.p, ej | ek, i);
      a(i, k) = w - v;
    }
    // c_i = w_i1 + a_i1, with w_i1 read from row e_1.
    c(i) = detail::recovered_margin(m.p, 1, i) + a(i, 0);
  }

  NetworkParams params = [&] {
    try {
      return NetworkParams(a, c);
    } catch (const InvariantError& e) {
      throw ModelMismatchError(std::string("recovered parameters invalid: ") +
                               e.what());
    }
  }();
  const double residual = kernel_distance(m, build_transition_matrix(params));
  return {std::move(params), residual};
}

inline constexpr double kDefaultMismatchTolerance = 1e-9;

/// recover_with_residual, rejecting kernels the model family cannot produce.
inline NetworkParams recover_from_kernel(
    const TransitionMatrix& m, int n,
    double mismatch_tol = kDefaultMismatchTolerance) {
  Recovery r = recover_with_residual(m, n);
  if (!(r.residual <= mismatch_tol))
    throw ModelMismatchError("kernel is not produced by any sigma=1 model "
                             "(residual " + std::to_string(r.residual) + ")");
  return std::move(r.params);
}

}  // namespace bvnet

#endif  // BVNET_TRANSFORMS_HPP
