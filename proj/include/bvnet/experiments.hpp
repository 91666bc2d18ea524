#ifndef BVNET_EXPERIMENTS_HPP
#define BVNET_EXPERIMENTS_HPP

// Multi-trial estimation benchmark, MSE aggregation, objective sweeps and the
// analysis report. Trials run on a worker pool; results are always gathered
// in trial order, so outputs do not depend on the thread count.

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "bvnet/errors.hpp"
#include "bvnet/estimator.hpp"
#include "bvnet/io.hpp"
#include "bvnet/likelihood.hpp"
#include "bvnet/markov.hpp"
#include "bvnet/model.hpp"
#include "bvnet/transforms.hpp"

namespace bvnet {

/// Calls fn(i) for i in [0, count) on up to `threads` workers.
template <typename Fn>
void parallel_for_index(std::size_t count, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(
                                                         std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
}

struct ExperimentConfig {
  NetworkParams params;
  std::size_t trials = 1;
  std::size_t steps = 1000;
  EstimatorOptions estimator;
  std::optional<ParamVector> theta0;  // zeros when empty
  std::uint64_t seed_base = 0;
  unsigned threads = 1;
};

/// Runs every trial with seed seed_base + i. A failing trial aborts the
/// batch; the lowest failing trial index is reported.
inline std::vector<RunRecord> run_trials(const ExperimentConfig& cfg) {
  if (cfg.trials == 0) throw InvariantError("trials must be >= 1");
  if (cfg.steps == 0) throw InvariantError("steps must be >= 1");
  const ParamVector theta0 =
      cfg.theta0.value_or(ParamVector::zeros(cfg.params.n()));
  std::vector<std::optional<RunRecord>> runs(cfg.trials);
  std::vector<std::exception_ptr> errors(cfg.trials);
  parallel_for_index(cfg.trials, cfg.threads, [&](std::size_t i) {
    try {
      runs[i] = run_estimator(cfg.params, theta0, cfg.estimator, cfg.steps,
                              cfg.seed_base + i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (std::size_t i = 0; i < cfg.trials; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const NumericalError& e) {
      throw NumericalError("trial " + std::to_string(i) + ": " + e.what(),
                           e.block());
    } catch (const std::exception& e) {
      throw Error("trial " + std::to_string(i) + ": " + e.what());
    }
  }
  std::vector<RunRecord> out;
  out.reserve(cfg.trials);
  for (auto& r : runs) out.push_back(std::move(*r));
  return out;
}

/// MSE_k = (1/N) sum_trials ||theta_k - theta*||^2 at each snapshot time.
struct MseCurve {
  std::vector<std::size_t> checkpoints;
  std::vector<double> mse;
  std::size_t trials = 0;

  double at(std::size_t t) const {
    const auto it = std::find(checkpoints.begin(), checkpoints.end(), t);
    if (it == checkpoints.end())
      throw DimensionError("no snapshot at t=" + std::to_string(t));
    return mse[static_cast<std::size_t>(it - checkpoints.begin())];
  }
};

inline MseCurve mse_curve(const std::vector<RunRecord>& runs,
                          const ParamVector& truth) {
  if (runs.empty()) throw EmptyInputError("no runs to aggregate");
  MseCurve curve;
  curve.trials = runs.size();
  for (const auto& snap : runs.front().snapshots)
    curve.checkpoints.push_back(snap.t);
  curve.mse.assign(curve.checkpoints.size(), 0.0);
  for (const auto& run : runs) {
    if (run.snapshots.size() != curve.checkpoints.size())
      throw DimensionError("runs have different snapshot schedules");
    for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
      if (run.snapshots[k].t != curve.checkpoints[k])
        throw DimensionError("runs have different snapshot schedules");
      curve.mse[k] += (run.snapshots[k].theta - truth.theta).squaredNorm();
    }
  }
  for (double& v : curve.mse) v /= static_cast<double>(runs.size());
  return curve;
}

inline void write_mse_csv(std::ostream& os, const MseCurve& curve) {
  os << "t,mse,n_trials\n";
  for (std::size_t k = 0; k < curve.checkpoints.size(); ++k)
    os << curve.checkpoints[k] << ',' << io::format_double(curve.mse[k]) << ','
       << curve.trials << '\n';
}

// ---------------------------------------------------------------------------

struct SweepRow {
  std::size_t component;  // 1-based index into theta
  double offset;
  double value;
  double grad_norm;
};

/// Objective along each coordinate axis through `center`, at `points`
/// equally spaced offsets in [-radius, radius].
inline std::vector<SweepRow> objective_sweep(const StationaryDist& ext, int n,
                                             const ParamVector& center,
                                             double radius, int points) {
  if (points < 2) throw InvariantError("sweep needs at least two points");
  std::vector<SweepRow> rows;
  for (Eigen::Index j = 0; j < center.theta.size(); ++j)
    for (int k = 0; k < points; ++k) {
      const double offset = -radius + 2.0 * radius * k / (points - 1);
      ParamVector theta = center;
      theta.theta(j) += offset;
      const auto r = expected_objective(theta, ext, n);
      rows.push_back({static_cast<std::size_t>(j + 1), offset, r.value,
                      r.gradient.norm()});
    }
  return rows;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "theta_component,offset,value,grad_norm\n";
  for (const auto& r : rows)
    os << r.component << ',' << io::format_double(r.offset) << ','
       << io::format_double(r.value) << ',' << io::format_double(r.grad_norm)
       << '\n';
}

// ---------------------------------------------------------------------------

inline constexpr double kRowSumTolerance = 1e-12;
inline constexpr double kLemma1Tolerance = 1e-8;
inline constexpr double kGradientTolerance = 1e-8;

struct AnalysisReport {
  TransitionMatrix kernel;
  StationaryDist stationary;
  double min_entry = 0.0;
  double max_row_sum_deviation = 0.0;
  std::optional<Lemma1Report> lemma1;        // n <= 6 only
  std::optional<double> gradient_norm;       // ||grad objective(theta*)||
  std::optional<StationaryDist> extended;    // n <= 6 only

  bool positivity_ok() const { return min_entry > 0.0; }
  bool row_sums_ok() const { return max_row_sum_deviation <= kRowSumTolerance; }
  bool lemma1_ok() const { return !lemma1 || lemma1->passed; }
  bool gradient_ok() const {
    return !gradient_norm || *gradient_norm < kGradientTolerance;
  }
  bool all_ok() const {
    return positivity_ok() && row_sums_ok() && lemma1_ok() && gradient_ok();
  }

  std::string to_string() const {
    std::ostringstream os;
    const auto flag = [](bool ok) { return ok ? "pass" : "fail"; };
    os << "analysis " << (all_ok() ? "PASS" : "FAIL") << " n=" << kernel.n
       << '\n';
    os << "min_entry=" << io::format_double(min_entry) << '\n'
       << "positivity=" << flag(positivity_ok()) << '\n'
       << "max_row_sum_deviation=" << io::format_double(max_row_sum_deviation)
       << '\n'
       << "row_sums=" << flag(row_sums_ok()) << '\n'
       << "stationary_residual=" << io::format_double(stationary.residual)
       << '\n';
    if (lemma1)
      os << "lemma1_max_deviation=" << io::format_double(lemma1->max_deviation)
         << '\n'
         << "lemma1=" << flag(lemma1_ok()) << '\n';
    else
      os << "lemma1=skipped\n";
    if (gradient_norm)
      os << "objective_gradient_norm=" << io::format_double(*gradient_norm)
         << '\n'
         << "objective_gradient=" << flag(gradient_ok()) << '\n';
    else
      os << "objective_gradient=skipped\n";
    return os.str();
  }
};

inline AnalysisReport analyze(const NetworkParams& p) {
  AnalysisReport r{build_transition_matrix(p), {}, 0.0, 0.0, {}, {}, {}};
  r.stationary = stationary_distribution(r.kernel);
  r.min_entry = r.kernel.p.minCoeff();
  r.max_row_sum_deviation =
      (r.kernel.p.rowwise().sum().array() - 1.0).abs().maxCoeff();
  if (p.n() <= kMaxExtendedAgents) {
    r.extended = stationary_distribution(build_extended_matrix(p));
    r.lemma1 = lemma1_deviation(*r.extended, r.kernel, kLemma1Tolerance);
    r.gradient_norm =
        expected_objective(vec_params(standardize(p)),
                           *r.extended, p.n())
            .gradient.norm();
  }
  return r;
}

}  // namespace bvnet

#endif  // BVNET_EXPERIMENTS_HPP
