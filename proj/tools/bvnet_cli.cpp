// bvnet command-line front end: simulate, estimate, analyze, recover.
//
// Exit codes: 0 success, 1 usage or input error, 2 numerical or capacity
// error.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bvnet/bvnet.hpp"

namespace fs = std::filesystem;
using namespace bvnet;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

// Output files are rendered in memory and only written once the command has
// fully succeeded.
using Outputs = std::map<std::string, std::string>;

void write_outputs(const fs::path& dir, const Outputs& files) {
  fs::create_directories(dir);
  for (const auto& [name, body] : files) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / name).string());
    out << body;
  }
}

fs::path resolve(const io::KeyValueConfig& cfg, const std::string& value) {
  const fs::path p(value);
  if (p.is_absolute()) return p;
  return fs::path(cfg.source()).parent_path() / p;
}

/// Params come from `params = <file>` or from inline n/A/c/sigma keys.
NetworkParams params_of(io::KeyValueConfig& cfg) {
  if (cfg.has("params")) return io::load_params(resolve(cfg, cfg.get_string("params", "")));
  return io::params_from_config(cfg);
}

StateVec state_of(io::KeyValueConfig& cfg, const std::string& key, int n) {
  const std::uint64_t bits = cfg.get_uint(key, 0);
  if (bits >> n)
    throw ParseError(cfg.source(), cfg.line_of(key),
                     "'" + key + "' does not fit in n bits");
  return {static_cast<std::uint32_t>(bits), n};
}

Outputs cmd_simulate(io::KeyValueConfig& cfg) {
  const NetworkParams p = params_of(cfg);
  const std::size_t steps = cfg.get_uint("T", 1000);
  const std::uint64_t seed = cfg.get_uint("seed", 0);
  const StateVec s0 = state_of(cfg, "s0", p.n());
  cfg.check_consumed();

  const Trajectory traj = simulate_trajectory(p, s0, steps, seed);
  std::vector<std::size_t> visits(std::size_t{1} << p.n(), 0);
  for (const auto& s : traj.observations) ++visits[s.bits];
  std::size_t visited = 0;
  for (auto v : visits) visited += v > 0;

  std::ostringstream csv, summary;
  io::write_trajectory_csv(csv, traj);
  summary << "simulate n=" << p.n() << " T=" << steps << " seed=" << seed
          << " s0=" << s0.bits << " states_visited=" << visited << '/'
          << visits.size() << '\n';
  for (std::size_t k = 0; k < visits.size(); ++k)
    summary << "visits_" << k << '=' << visits[k] << '\n';
  std::cout << summary.str();
  return {{"trajectory.csv", csv.str()}, {"summary.txt", summary.str()}};
}

Outputs cmd_estimate(io::KeyValueConfig& cfg, std::optional<unsigned> threads) {
  const NetworkParams p = params_of(cfg);
  ExperimentConfig ex{.params = p};
  ex.trials = cfg.get_uint("trials", 1);
  ex.steps = cfg.get_uint("T", 1000);
  ex.estimator.schedule = StepSchedule(cfg.get_double("schedule_a", 10.0),
                                       cfg.get_double("schedule_b", 200.0));
  ex.estimator.snapshot_every = cfg.get_uint("snapshot_every", 100);
  ex.estimator.use_initial_pair = cfg.get_bool("use_initial_pair", true);
  if (cfg.get_string("bound", "") == "none") {
    ex.estimator.bound.reset();
  } else {
    ex.estimator.bound = cfg.get_double("bound", kDefaultBound);
  }
  const std::string theta0 = cfg.get_string("theta0", "zeros");
  if (theta0 != "zeros")
    ex.theta0 = vec_params(io::load_params(resolve(cfg, theta0)));
  ex.seed_base = cfg.get_uint("seed", 0);
  ex.threads = static_cast<unsigned>(cfg.get_uint("threads", 1));
  cfg.check_consumed();
  if (threads) ex.threads = *threads;
  if (ex.trials == 0) throw ParseError(cfg.source(), cfg.line_of("trials"), "trials must be >= 1");
  if (ex.steps == 0) throw ParseError(cfg.source(), cfg.line_of("T"), "T must be >= 1");
  if (ex.estimator.snapshot_every == 0)
    throw ParseError(cfg.source(), cfg.line_of("snapshot_every"), "snapshot_every must be >= 1");
  if (ex.theta0 && ex.theta0->theta.size() != ParamVector::length(p.n()))
    throw ParseError(cfg.source(), cfg.line_of("theta0"), "theta0 network size differs");

  const ParamVector truth = vec_params(standardize(p));
  if (!p.unit_noise()) ex.params = standardize(p);
  const auto runs = run_trials(ex);
  const MseCurve curve = mse_curve(runs, truth);

  Outputs files;
  const int width = static_cast<int>(std::to_string(ex.trials - 1).size());
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::ostringstream name, csv;
    name << "run_" << std::setw(width) << std::setfill('0') << i << ".csv";
    io::write_run_csv(csv, runs[i]);
    files[name.str()] = csv.str();
  }
  std::ostringstream mse;
  write_mse_csv(mse, curve);
  files["mse.csv"] = mse.str();
  std::cout << "estimate trials=" << ex.trials << " T=" << ex.steps
            << " final_mse=" << io::format_double(curve.mse.back()) << '\n';
  return files;
}

Outputs cmd_analyze(io::KeyValueConfig& cfg) {
  const NetworkParams p = params_of(cfg);
  const double radius = cfg.get_double("sweep_radius", 0.5);
  const auto points = static_cast<int>(cfg.get_uint("sweep_points", 11));
  cfg.check_consumed();

  const AnalysisReport report = analyze(p);
  Outputs files;
  std::ostringstream kernel, stationary, text;
  io::write_matrix_csv(kernel, report.kernel.p);
  io::write_distribution_csv(stationary, report.stationary.pi);
  files["kernel.csv"] = kernel.str();
  files["stationary.csv"] = stationary.str();
  if (report.lemma1) files["lemma1.txt"] = report.lemma1->to_string();
  if (report.extended) {
    std::ostringstream ext, sweep;
    io::write_distribution_csv(ext, report.extended->pi);
    files["extended_stationary.csv"] = ext.str();
    write_sweep_csv(sweep, objective_sweep(*report.extended, p.n(),
                                           vec_params(standardize(p)), radius,
                                           points));
    files["objective_sweep.csv"] = sweep.str();
  }
  files["report.txt"] = report.to_string();
  std::cout << report.to_string();
  if (!report.all_ok()) throw NumericalError("analysis checks failed");
  return files;
}

Outputs cmd_recover(io::KeyValueConfig& cfg) {
  const auto* kernel_key = cfg.take("kernel");
  if (!kernel_key) throw ParseError(cfg.source(), 0, "missing key 'kernel'");
  const fs::path kernel_path = resolve(cfg, kernel_key->value);
  const auto n = static_cast<int>(cfg.get_uint("n", 0));
  const double tol = cfg.get_double("mismatch_tol", kDefaultMismatchTolerance);
  cfg.check_consumed();
  if (n < 2) throw ParseError(cfg.source(), cfg.line_of("n"), "'n' must be >= 2");

  TransitionMatrix m{io::read_matrix_csv(io::read_file(kernel_path),
                                         kernel_path.string()),
                     ChainKind::base, n};
  const Recovery r = recover_with_residual(m, n);
  std::cout << "recover n=" << n
            << " residual=" << io::format_double(r.residual) << '\n';
  if (!(r.residual <= tol))
    throw ModelMismatchError("kernel is not produced by any sigma=1 model (residual " +
                             io::format_double(r.residual) + ")");
  std::ostringstream params;
  io::write_params(params, r.params);
  return {{"params.txt", params.str()}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binary-valued observation network dynamics: simulation, "
               "exact Markov analysis and recursive estimation"};
  app.require_subcommand(1);

  std::string config;
  std::string out = ".";
  std::optional<unsigned> threads;
  std::map<std::string, CLI::App*> subs;
  for (const char* name : {"simulate", "estimate", "analyze", "recover"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "key=value configuration file")
        ->required();
    sub->add_option("--out", out, "output directory");
    subs[name] = sub;
  }
  subs["simulate"]->description("simulate a trajectory and write it as CSV");
  subs["estimate"]->description("run the recursive estimator over seeded trials");
  subs["analyze"]->description("exact kernel, stationary law and checks");
  subs["recover"]->description("recover (A, c) from a kernel CSV");
  subs["estimate"]->add_option("--threads", threads,
                               "worker threads (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    auto cfg = io::KeyValueConfig::load(config);
    Outputs files;
    if (subs["simulate"]->parsed()) files = cmd_simulate(cfg);
    else if (subs["estimate"]->parsed()) files = cmd_estimate(cfg, threads);
    else if (subs["analyze"]->parsed()) files = cmd_analyze(cfg);
    else files = cmd_recover(cfg);
    write_outputs(out, files);
  } catch (const CapacityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ModelMismatchError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const IterationLimitError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DegenerateMassError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return 0;
}
