#include "excursion/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <boost/version.hpp>
#include <nlohmann/json.hpp>

#include "excursion/error.hpp"
#include "excursion/harness.hpp"
#include "excursion/metrics.hpp"
#include "excursion/rng.hpp"

#ifndef EXCURSION_VERSION
#define EXCURSION_VERSION "0.0.0"
#endif

namespace excursion {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunConfig {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicates;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  bool trace = false;
};

json versions() {
  return {{"excursion", EXCURSION_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", BOOST_LIB_VERSION},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"cli11", CLI11_VERSION},
          {"compiler", __VERSION__}};
}

ExperimentSpec load(const RunConfig& rc) {
  auto spec = load_experiment(rc.config);
  if (rc.seed) spec.seed = *rc.seed;
  if (rc.replicates) spec.replicates = *rc.replicates;
  spec.validate();
  return spec;
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorCode::Io, "cannot create output directory '" + dir + "'");
  return dir;
}

std::ofstream open(const fs::path& path) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  return f;
}

void write_manifest(const fs::path& dir, const std::string& command, const ExperimentSpec& spec,
                    const std::vector<std::string>& outputs) {
  json j{{"command", command},
         {"seed", spec.seed},
         {"config", experiment_to_json(spec)},
         {"outputs", outputs},
         {"versions", versions()}};
  open(dir / "manifest.json") << j.dump(2) << '\n';
}

void write_traces(const fs::path& path, const FitReport& fit) {
  auto f = open(path);
  f << "t,method,iter,objective";
  for (std::size_t i = 1; i <= fit.forecast_times.size(); ++i) f << ",lambda_" << i;
  f << '\n';
  char buf[32];
  for (const auto& e : fit.entries) {
    for (const auto& p : e.trace) {
      std::snprintf(buf, sizeof buf, "%.17g", e.t);
      f << buf << ',' << e.method << ',' << p.iteration;
      std::snprintf(buf, sizeof buf, ",%.17g", p.objective);
      f << buf;
      for (double w : p.weights) {
        std::snprintf(buf, sizeof buf, ",%.17g", w);
        f << buf;
      }
      f << '\n';
    }
  }
}

int cmd_simulate(const RunConfig& rc, std::ostream& out) {
  const auto spec = load(rc);
  const auto dir = prepare_out(rc.out);
  RngStream rng = RngStream(spec.seed, 0).split(1);
  const double end = std::max(spec.window_hi, spec.eval_hi);
  const auto length = static_cast<std::size_t>(std::lround(end / spec.grid_step)) + 1;
  const auto traj = simulate(spec.process, 0.0, spec.grid_step, length, rng);
  auto f = open(dir / "trajectory.csv");
  write_trajectory_csv(f, traj);
  write_manifest(dir, "simulate", spec, {"trajectory.csv"});
  out << "wrote " << (dir / "trajectory.csv").string() << " (" << traj.values.size() << " points)\n";
  return 0;
}

int cmd_fit(const RunConfig& rc, std::ostream& out) {
  const auto spec = load(rc);
  const auto dir = prepare_out(rc.out);
  const auto fit = run_fit(spec);
  {
    auto f = open(dir / "weights.csv");
    write_fit_csv(f, fit);
  }
  std::vector<std::string> outputs{"weights.csv"};
  if (rc.trace) {
    write_traces(dir / "trace.csv", fit);
    outputs.push_back("trace.csv");
  }
  write_manifest(dir, "fit", spec, outputs);
  out << "marginal " << marginal_to_json(fit.marginal).dump() << '\n';
  out << "wrote " << (dir / "weights.csv").string() << " (" << fit.entries.size() << " rows)\n";
  return 0;
}

int cmd_evaluate(const RunConfig& rc, std::ostream& out) {
  const auto spec = load(rc);
  const auto dir = prepare_out(rc.out);
  const auto fit = run_fit(spec);
  const auto report = run_eval(spec, fit, rc.threads);
  {
    auto f = open(dir / "weights.csv");
    write_fit_csv(f, fit);
  }
  {
    auto f = open(dir / "eval.csv");
    write_eval_csv(f, report);
  }
  std::vector<std::string> outputs{"weights.csv", "eval.csv"};
  if (rc.trace) {
    write_traces(dir / "trace.csv", fit);
    outputs.push_back("trace.csv");
  }
  write_manifest(dir, "evaluate", spec, outputs);
  out << "wrote " << (dir / "eval.csv").string() << " (" << report.rows.size() << " rows, " << report.replicates
      << " replicates)\n";
  return 0;
}

int cmd_benchmark(const RunConfig& rc, std::optional<double> t, std::ostream& out) {
  const auto spec = load(rc);
  const auto result = run_table1_benchmark(spec, t);
  char buf[128];
  std::snprintf(buf, sizeof buf, "t=%.4g rows=%zu seconds=%.4f status=%s", result.t, result.rows, result.seconds,
                result.ok ? "ok" : "failed");
  out << buf;
  if (!result.ok) out << " (" << result.message << ")";
  out << '\n';
  if (!rc.out.empty()) {
    const auto dir = prepare_out(rc.out);
    json j{{"t", result.t}, {"rows", result.rows}, {"seconds", result.seconds}, {"ok", result.ok},
           {"message", result.message}};
    open(dir / "benchmark.json") << j.dump(2) << '\n';
    write_manifest(dir, "benchmark", spec, {"benchmark.json"});
  }
  return result.ok ? 0 : 1;
}

int cmd_demo_metrics(const std::string& pairs, std::size_t n, double rho, std::uint64_t seed, std::ostream& out) {
  if (!(rho >= -1.0 && rho <= 1.0)) throw ConfigError("--rho", "must lie in [-1, 1]");
  RngStream rng(seed, 0);
  PairedSample s;
  s.a.resize(n);
  s.b.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.normal();
    double y = 0.0;
    if (pairs == "independent") {
      y = rng.normal();
    } else if (pairs == "comonotone") {
      y = x;
    } else if (pairs == "countermonotone") {
      y = -x;
    } else {
      y = rho * x + std::sqrt(1.0 - rho * rho) * rng.normal();
    }
    s.a[i] = x;
    s.b[i] = y;
  }
  const auto weight = MarginalModel::gaussian(0.0, 1.0);
  char buf[96];
  std::snprintf(buf, sizeof buf, "gini %.6f\n", gini_empirical(s));
  out << buf;
  std::snprintf(buf, sizeof buf, "excursion_metric %.6f\n", excursion_metric_empirical(s, weight));
  out << buf;
  if (pairs == "gaussian") {
    std::snprintf(buf, sizeof buf, "gini_closed_form %.6f\n", gaussian_gini(rho));
    out << buf;
  }
  return 0;
}

}  // namespace

int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Excursion-metric prediction of stationary time series"};
  app.require_subcommand(1);
  RunConfig rc;

  auto add_common = [&](CLI::App* sub, bool needs_out) {
    sub->add_option("--config", rc.config, "Experiment JSON")->required();
    auto* o = sub->add_option("--out", rc.out, "Output directory");
    if (needs_out) o->required();
    sub->add_option("--seed", rc.seed, "Master seed override");
  };

  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate the training trajectory");
  add_common(simulate_cmd, true);

  auto* fit_cmd = app.add_subcommand("fit", "Fit prediction weights at every point");
  add_common(fit_cmd, true);
  fit_cmd->add_flag("--trace", rc.trace, "Write descent traces");

  auto* eval_cmd = app.add_subcommand("evaluate", "Fit, then evaluate over replicates");
  add_common(eval_cmd, true);
  eval_cmd->add_option("--replicates", rc.replicates, "Replicate count override")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--threads", rc.threads, "Worker threads")->check(CLI::PositiveNumber);
  eval_cmd->add_flag("--trace", rc.trace, "Write descent traces");

  std::optional<double> bench_t;
  auto* bench_cmd = app.add_subcommand("benchmark", "Time one online solve");
  rc.out.clear();
  add_common(bench_cmd, false);
  bench_cmd->add_option("--t", bench_t, "Prediction point");

  std::string pairs = "independent";
  std::size_t n = 100000;
  double rho = 0.5;
  std::uint64_t demo_seed = 1;
  auto* demo_cmd = app.add_subcommand("demo-metrics", "Gini and excursion metric of synthetic pairs");
  demo_cmd->add_option("--pairs", pairs, "Joint law")
      ->check(CLI::IsMember({"independent", "comonotone", "countermonotone", "gaussian"}));
  demo_cmd->add_option("--n", n, "Number of pairs")->check(CLI::Range(std::size_t{10}, std::size_t{100000000}));
  demo_cmd->add_option("--rho", rho, "Correlation for --pairs gaussian");
  demo_cmd->add_option("--seed", demo_seed, "Seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (*simulate_cmd) return cmd_simulate(rc, out);
    if (*fit_cmd) return cmd_fit(rc, out);
    if (*eval_cmd) return cmd_evaluate(rc, out);
    if (*bench_cmd) return cmd_benchmark(rc, bench_t, out);
    if (*demo_cmd) return cmd_demo_metrics(pairs, n, rho, demo_seed, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace excursion
