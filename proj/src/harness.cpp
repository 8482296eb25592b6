#include "excursion/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include "excursion/baselines.hpp"
#include "excursion/error.hpp"
#include "excursion/metrics.hpp"

namespace excursion {

using nlohmann::json;

namespace {

constexpr std::uint64_t kTrainStream = 1;
constexpr std::uint64_t kFitStream = 2;
constexpr std::uint64_t kEvalStream = 3;
constexpr std::uint64_t kBenchStream = 4;

const std::string kKriging = "kriging";
const std::string kExact = "exact";

long grid_steps(double from, double to, double h) { return std::lround((to - from) / h); }

bool on_grid(double t, double origin, double h) {
  const double pos = (t - origin) / h;
  return std::abs(pos - std::round(pos)) <= 1e-9 * std::max(1.0, std::abs(pos));
}

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw ConfigError(join(path, it.key()), "unknown key");
    }
  }
}

template <class T>
T read(const json& j, std::string_view key, const std::string& path, T fallback) {
  const auto it = j.find(key);
  if (it == j.end()) return fallback;
  if constexpr (std::is_unsigned_v<T> && !std::is_same_v<T, bool>) {
    if (!it->is_number_unsigned()) throw ConfigError(join(path, key), "must be a non-negative integer");
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(join(path, key), "has the wrong type");
  }
}

template <class T>
T require(const json& j, std::string_view key, const std::string& path) {
  if (!j.contains(key)) throw ConfigError(join(path, key), "is required");
  return read<T>(j, key, path, T{});
}

// Runs `f`, turning library errors into ConfigError at `key`.
template <class F>
auto as_config(const std::string& key, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(key, e.what());
  }
}

ProcessSpec process_from_json(const json& j) {
  const std::string path = "process";
  if (!j.is_object()) throw ConfigError(path, "must be an object");
  const auto kind = require<std::string>(j, "kind", path);
  if (kind == "gauss_exp_cov") {
    check_keys(j, {"kind"}, path);
    return ProcessSpec::gauss_exp_cov();
  }
  if (kind == "stable_ma") {
    check_keys(j, {"kind", "alpha"}, path);
    const double alpha = require<double>(j, "alpha", path);
    return as_config("process.alpha", [&] { return ProcessSpec::stable_moving_average(alpha); });
  }
  if (kind == "ar_student_t") {
    check_keys(j, {"kind", "phi", "nu", "lag_stride", "burn_in"}, path);
    auto spec = as_config("process.nu", [&] {
      return ProcessSpec::ar_student_t(require<std::vector<double>>(j, "phi", path), require<double>(j, "nu", path),
                                       read<std::size_t>(j, "lag_stride", path, 1));
    });
    spec.ar.burn_in = read<std::size_t>(j, "burn_in", path, spec.ar.burn_in);
    return spec;
  }
  throw ConfigError("process.kind", "unknown process '" + kind + "'");
}

json process_to_json(const ProcessSpec& p) {
  json j{{"kind", std::string(to_string(p.kind))}};
  switch (p.kind) {
    case ProcessKind::GaussExpCov: break;
    case ProcessKind::StableMovingAverage: j["alpha"] = p.stable.alpha; break;
    case ProcessKind::ArStudentT:
      j["phi"] = p.ar.phi;
      j["nu"] = p.ar.innovation.params().at(2);
      j["lag_stride"] = p.ar.lag_stride;
      j["burn_in"] = p.ar.burn_in;
      break;
  }
  return j;
}

Constraint constraint_from_json(const json& j, const std::string& path) {
  if (j.is_string()) {
    const auto kind = as_config(path, [&] { return constraint_kind_from_string(j.get<std::string>()); });
    if (kind == Constraint::Kind::Ball) throw ConfigError(path, "ball constraint needs {\"kind\", \"radius\"}");
    return {kind, 1.0};
  }
  check_keys(j, {"kind", "radius"}, path);
  const auto kind = as_config(join(path, "kind"),
                              [&] { return constraint_kind_from_string(require<std::string>(j, "kind", path)); });
  return {kind, read<double>(j, "radius", path, 1.0)};
}

json constraint_to_json(const Constraint& c) {
  if (c.kind != Constraint::Kind::Ball) return std::string(to_string(c.kind));
  return {{"kind", std::string(to_string(c.kind))}, {"radius", c.radius}};
}

MethodSpec method_from_json(const json& j, const std::string& path) {
  check_keys(j, {"name", "objective", "gamma", "predictor", "constraint"}, path);
  MethodSpec m;
  m.name = require<std::string>(j, "name", path);
  m.variant = as_config(join(path, "objective"),
                        [&] { return variant_from_string(read<std::string>(j, "objective", path, "Q2")); });
  m.gamma = read<double>(j, "gamma", path, 0.0);
  m.predictor = as_config(join(path, "predictor"), [&] {
    return predictor_kind_from_string(read<std::string>(j, "predictor", path, "linear"));
  });
  if (j.contains("constraint")) m.constraint = constraint_from_json(j.at("constraint"), join(path, "constraint"));
  return m;
}

DescentConfig descent_from_json(const json& j) {
  const std::string path = "descent";
  check_keys(j, {"mode", "a", "b", "beta", "iterations", "delta", "burn_in", "selection", "trace_stride"}, path);
  DescentConfig c;
  c.mode = as_config("descent.mode", [&] { return descent_mode_from_string(read<std::string>(j, "mode", path, "online")); });
  c.a = read<double>(j, "a", path, c.a);
  c.b = read<double>(j, "b", path, c.b);
  c.beta = read<double>(j, "beta", path, c.beta);
  c.iterations = read<std::size_t>(j, "iterations", path, c.iterations);
  c.delta = read<double>(j, "delta", path, c.delta);
  c.burn_in = read<std::size_t>(j, "burn_in", path, c.burn_in);
  c.selection = as_config("descent.selection", [&] {
    return selection_from_string(read<std::string>(j, "selection", path, "best_objective"));
  });
  c.trace_stride = read<std::size_t>(j, "trace_stride", path, c.trace_stride);
  return c;
}

json descent_to_json(const DescentConfig& c) {
  return {{"mode", std::string(to_string(c.mode))},
          {"a", c.a},
          {"b", c.b},
          {"beta", c.beta},
          {"iterations", c.iterations},
          {"delta", c.delta},
          {"burn_in", c.burn_in},
          {"selection", std::string(to_string(c.selection))},
          {"trace_stride", c.trace_stride}};
}

std::vector<double> time_list(const json& j, const std::string& key) {
  if (!j.is_array()) throw ConfigError(key, "must be a list of times");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(key, "must be a list of times");
    out.push_back(v.get<double>());
  }
  return out;
}

std::optional<std::size_t> forecast_slot(const std::vector<double>& tf, double t, double origin, double h) {
  const long idx = grid_steps(origin, t, h);
  for (std::size_t k = 0; k < tf.size(); ++k) {
    if (grid_steps(origin, tf[k], h) == idx) return k;
  }
  return std::nullopt;
}

std::vector<double> unit_vector(std::size_t n, std::size_t k) {
  std::vector<double> e(n, 0.0);
  e[k] = 1.0;
  return e;
}

Trajectory simulate_training(const ExperimentSpec& spec) {
  RngStream rng = RngStream(spec.seed, 0).split(kTrainStream);
  const double end = std::max({spec.window_hi, spec.eval_hi});
  const auto length = static_cast<std::size_t>(grid_steps(0.0, end, spec.grid_step)) + 1;
  return simulate(spec.process, 0.0, spec.grid_step, length, rng);
}

MarginalModel resolve_marginal(const ExperimentSpec& spec, const Trajectory& training) {
  if (spec.marginal_mode == MarginalMode::Known) return *process_marginal(spec.process);
  const auto lo = static_cast<std::size_t>(std::max(0L, static_cast<long>(std::ceil(spec.window_lo / spec.grid_step - 1e-9))));
  const auto hi = std::min(training.values.size() - 1,
                           static_cast<std::size_t>(std::floor(spec.window_hi / spec.grid_step + 1e-9)));
  return estimate(spec.estimate_family, std::span(training.values).subspan(lo, hi - lo + 1));
}

ForecastDesign design_at(const ExperimentSpec& spec, double t) {
  return ForecastDesign{spec.forecast_times, t, spec.grid_step, spec.window_lo, spec.window_hi};
}

void put(std::ostream& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out << buf;
}

}  // namespace

std::vector<double> extrapolation_sample(double start) {
  std::vector<double> out;
  for (int k = 0; k < 10; ++k) out.push_back(start + 0.1 * k);
  return out;
}

std::vector<double> interpolation_sample(double start) {
  std::vector<double> out;
  for (int k = 0; k < 10; ++k) out.push_back(start + 0.5 * k);
  return out;
}

std::optional<MarginalModel> process_marginal(const ProcessSpec& process) {
  switch (process.kind) {
    case ProcessKind::GaussExpCov: return MarginalModel::gaussian(0.0, 1.0);
    case ProcessKind::StableMovingAverage: return stable_ma_marginal(process.stable);
    case ProcessKind::ArStudentT: return std::nullopt;
  }
  return std::nullopt;
}

void ExperimentSpec::validate() const {
  as_config("process", [&] { process.validate(); return 0; });
  if (!(grid_step > 0) || !std::isfinite(grid_step)) throw ConfigError("grid_step", "must be > 0");
  if (!(window_lo >= 0 && window_lo <= window_hi)) throw ConfigError("window", "need 0 <= lo <= hi");
  if (!(eval_lo < eval_hi)) throw ConfigError("evaluation_interval", "need lo < hi");
  if (!on_grid(eval_lo, 0.0, grid_step)) throw ConfigError("evaluation_interval", "lo is not on the grid");
  if (forecast_times.empty()) throw ConfigError("forecast_sample", "is empty");
  std::set<long> seen;
  for (double t : forecast_times) {
    if (!on_grid(t, 0.0, grid_step)) throw ConfigError("forecast_sample", "time is not on the grid");
    if (t < eval_lo - 1e-9 || t > eval_hi + 1e-9) {
      throw ConfigError("forecast_sample", "times must lie in the evaluation interval");
    }
    if (!seen.insert(grid_steps(0.0, t, grid_step)).second) throw ConfigError("forecast_sample", "duplicate time");
  }
  if (prediction_points) {
    if (prediction_points->empty()) throw ConfigError("prediction_points", "is empty");
    for (double t : *prediction_points) {
      if (!on_grid(t, 0.0, grid_step)) throw ConfigError("prediction_points", "time is not on the grid");
      if (t < eval_lo - 1e-9 || t > eval_hi + 1e-9) {
        throw ConfigError("prediction_points", "times must lie in the evaluation interval");
      }
    }
  }
  if (methods.empty() && !baselines) throw ConfigError("methods", "needs at least one method or baselines");
  std::set<std::string> names;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    const auto& m = methods[i];
    const std::string path = "methods[" + std::to_string(i) + "]";
    if (m.name.empty()) throw ConfigError(path + ".name", "is empty");
    if (m.name == kKriging || m.name == kExact) throw ConfigError(path + ".name", "is reserved for baselines");
    if (!names.insert(m.name).second) throw ConfigError(path + ".name", "duplicate method name");
    if (!(m.gamma >= 0) || !std::isfinite(m.gamma)) throw ConfigError(path + ".gamma", "must be >= 0");
    if (m.constraint.kind == Constraint::Kind::Ball && !(m.constraint.radius > 0)) {
      throw ConfigError(path + ".constraint.radius", "must be > 0");
    }
  }
  if (baselines && process.kind != ProcessKind::GaussExpCov) {
    throw ConfigError("baselines", "only available for the gauss_exp_cov process");
  }
  descent.validate();
  if (!init.unit_vectors && !init.warm_start && init.random_simplex == 0) {
    throw ConfigError("init", "no starting candidates");
  }
  if (marginal_mode == MarginalMode::Known && !process_marginal(process)) {
    throw ConfigError("marginal", "process has no closed-form marginal; use {\"estimate\": family}");
  }
  if (max_learning_rows && *max_learning_rows == 0) throw ConfigError("max_learning_rows", "must be >= 1");
  if (replicates < 1) throw ConfigError("replicates", "must be >= 1");
}

std::vector<double> ExperimentSpec::points() const {
  std::vector<double> out;
  if (prediction_points) {
    out = *prediction_points;
  } else {
    const long steps = grid_steps(eval_lo, eval_hi, grid_step);
    for (long i = 0; i <= steps; ++i) out.push_back(eval_lo + static_cast<double>(i) * grid_step);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end(),
                        [&](double x, double y) { return grid_steps(x, y, grid_step) == 0; }),
            out.end());
  return out;
}

ExperimentSpec experiment_from_json(const json& j) {
  check_keys(j,
             {"name", "process", "grid_step", "window", "forecast_sample", "evaluation_interval", "prediction_points",
              "methods", "baselines", "descent", "init", "marginal", "max_learning_rows", "replicates", "seed",
              "wasserstein_scale"},
             "");
  ExperimentSpec s;
  s.name = read<std::string>(j, "name", "", s.name);
  if (!j.contains("process")) throw ConfigError("process", "is required");
  s.process = process_from_json(j.at("process"));
  s.grid_step = read<double>(j, "grid_step", "", s.grid_step);
  if (j.contains("window")) {
    const auto w = time_list(j.at("window"), "window");
    if (w.size() != 2) throw ConfigError("window", "must be [lo, hi]");
    s.window_lo = w[0];
    s.window_hi = w[1];
  }
  if (j.contains("evaluation_interval")) {
    const auto w = time_list(j.at("evaluation_interval"), "evaluation_interval");
    if (w.size() != 2) throw ConfigError("evaluation_interval", "must be [lo, hi]");
    s.eval_lo = w[0];
    s.eval_hi = w[1];
  }
  if (!j.contains("forecast_sample")) throw ConfigError("forecast_sample", "is required");
  const auto& fs = j.at("forecast_sample");
  if (fs.is_string()) {
    const auto preset = fs.get<std::string>();
    if (preset == "extrapolation") {
      s.forecast_times = extrapolation_sample(s.eval_lo);
    } else if (preset == "interpolation") {
      s.forecast_times = interpolation_sample(s.eval_lo);
    } else {
      throw ConfigError("forecast_sample", "unknown preset '" + preset + "'");
    }
  } else {
    s.forecast_times = time_list(fs, "forecast_sample");
  }
  if (j.contains("prediction_points")) {
    const auto& pp = j.at("prediction_points");
    if (!(pp.is_string() && pp.get<std::string>() == "grid")) s.prediction_points = time_list(pp, "prediction_points");
  }
  if (j.contains("methods")) {
    const auto& ms = j.at("methods");
    if (!ms.is_array()) throw ConfigError("methods", "must be a list");
    for (std::size_t i = 0; i < ms.size(); ++i) {
      s.methods.push_back(method_from_json(ms[i], "methods[" + std::to_string(i) + "]"));
    }
  }
  s.baselines = read<bool>(j, "baselines", "", false);
  if (j.contains("descent")) s.descent = descent_from_json(j.at("descent"));
  if (j.contains("init")) {
    const auto& in = j.at("init");
    check_keys(in, {"unit_vectors", "warm_start", "random_simplex"}, "init");
    s.init.unit_vectors = read<bool>(in, "unit_vectors", "init", true);
    s.init.warm_start = read<bool>(in, "warm_start", "init", true);
    s.init.random_simplex = read<std::size_t>(in, "random_simplex", "init", 0);
  }
  if (j.contains("marginal")) {
    const auto& m = j.at("marginal");
    if (m.is_string() && m.get<std::string>() == "known") {
      s.marginal_mode = MarginalMode::Known;
    } else if (m.is_object()) {
      check_keys(m, {"estimate"}, "marginal");
      s.marginal_mode = MarginalMode::Estimated;
      s.estimate_family = as_config("marginal.estimate",
                                    [&] { return family_from_string(require<std::string>(m, "estimate", "marginal")); });
    } else {
      throw ConfigError("marginal", "must be \"known\" or {\"estimate\": family}");
    }
  }
  if (j.contains("max_learning_rows") && !j.at("max_learning_rows").is_null()) {
    s.max_learning_rows = read<std::size_t>(j, "max_learning_rows", "", 0);
  }
  s.replicates = read<std::size_t>(j, "replicates", "", s.replicates);
  s.seed = read<std::uint64_t>(j, "seed", "", s.seed);
  const auto scale = read<std::string>(j, "wasserstein_scale", "", "uniform");
  if (scale == "uniform") {
    s.wasserstein_scale = WassersteinScale::Uniform;
  } else if (scale == "raw") {
    s.wasserstein_scale = WassersteinScale::Raw;
  } else {
    throw ConfigError("wasserstein_scale", "must be \"uniform\" or \"raw\"");
  }
  s.validate();
  return s;
}

json experiment_to_json(const ExperimentSpec& s) {
  json methods = json::array();
  for (const auto& m : s.methods) {
    methods.push_back({{"name", m.name},
                       {"objective", std::string(to_string(m.variant))},
                       {"gamma", m.gamma},
                       {"predictor", std::string(to_string(m.predictor))},
                       {"constraint", constraint_to_json(m.constraint)}});
  }
  json j{{"name", s.name},
         {"process", process_to_json(s.process)},
         {"grid_step", s.grid_step},
         {"window", {s.window_lo, s.window_hi}},
         {"forecast_sample", s.forecast_times},
         {"evaluation_interval", {s.eval_lo, s.eval_hi}},
         {"methods", methods},
         {"baselines", s.baselines},
         {"descent", descent_to_json(s.descent)},
         {"init",
          {{"unit_vectors", s.init.unit_vectors},
           {"warm_start", s.init.warm_start},
           {"random_simplex", s.init.random_simplex}}},
         {"replicates", s.replicates},
         {"seed", s.seed},
         {"wasserstein_scale", s.wasserstein_scale == WassersteinScale::Raw ? "raw" : "uniform"}};
  j["prediction_points"] = s.prediction_points ? json(*s.prediction_points) : json("grid");
  j["marginal"] = s.marginal_mode == MarginalMode::Known
                      ? json("known")
                      : json{{"estimate", std::string(to_string(s.estimate_family))}};
  j["max_learning_rows"] = s.max_learning_rows ? json(*s.max_learning_rows) : json(nullptr);
  return j;
}

ExperimentSpec load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path, std::string("invalid JSON: ") + e.what());
  }
  return experiment_from_json(j);
}

FitReport run_fit(const ExperimentSpec& spec) {
  spec.validate();
  FitReport fit;
  fit.training = simulate_training(spec);
  fit.marginal = resolve_marginal(spec, fit.training);
  fit.forecast_times = spec.forecast_times;
  for (const auto& m : spec.methods) fit.methods.push_back(m.name);
  if (spec.baselines) {
    fit.methods.push_back(kKriging);
    fit.methods.push_back(kExact);
  }

  const std::size_t n = spec.forecast_times.size();
  const RngStream fit_root = RngStream(spec.seed, 0).split(kFitStream);
  const auto pts = spec.points();
  std::vector<std::optional<std::vector<double>>> warm(spec.methods.size());

  for (std::size_t ip = 0; ip < pts.size(); ++ip) {
    const double t = pts[ip];
    if (const auto k = forecast_slot(spec.forecast_times, t, 0.0, spec.grid_step)) {
      for (std::size_t im = 0; im < fit.methods.size(); ++im) {
        FitEntry e;
        e.t = t;
        e.method = fit.methods[im];
        e.kind = im < spec.methods.size() ? spec.methods[im].predictor : PredictorKind::Linear;
        e.weights = unit_vector(n, *k);
        e.forecast_index = k;
        fit.entries.push_back(std::move(e));
      }
      continue;
    }
    const auto design = design_at(spec, t);
    const RngStream point_rng = fit_root.split(ip);
    RngStream rows_rng = point_rng.split(0);
    const auto samples = extract_learning_samples(fit.training, design, spec.max_learning_rows, rows_rng);

    for (std::size_t im = 0; im < spec.methods.size(); ++im) {
      const auto& m = spec.methods[im];
      const auto started = std::chrono::steady_clock::now();
      const ObjectiveSpec objective{m.variant, m.gamma, fit.marginal};
      InitStrategy init{spec.init.unit_vectors, spec.init.warm_start ? warm[im] : std::nullopt,
                        spec.init.random_simplex};
      if (!init.unit_vectors && !init.warm_start && init.random_simplex == 0) init.unit_vectors = true;
      const RngStream method_rng = point_rng.split(1 + im);
      RngStream init_rng = method_rng.split(0);
      const auto candidates = init_candidates(samples, objective, m.predictor, init, init_rng);
      DescentConfig cfg = spec.descent;
      cfg.constraint = m.constraint;
      RngStream solve_rng = method_rng.split(1);
      auto result = solve(objective, samples, Predictor{m.predictor, candidates.front().weights}, cfg, solve_rng);
      if (spec.init.warm_start) warm[im] = result.weights;

      FitEntry e;
      e.t = t;
      e.method = m.name;
      e.kind = m.predictor;
      e.weights = std::move(result.weights);
      e.objective = result.objective;
      e.rows = samples.rows();
      e.trace = std::move(result.trace);
      e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      fit.entries.push_back(std::move(e));
    }

    if (spec.baselines) {
      const auto so = covariances_exp(design);
      fit.entries.push_back({t, kKriging, PredictorKind::Linear, simple_kriging_weights(so), std::nullopt,
                             std::nullopt, samples.rows(), 0.0, {}});
      fit.entries.push_back({t, kExact, PredictorKind::Linear, exact_excursion_weights(so), std::nullopt,
                             std::nullopt, samples.rows(), 0.0, {}});
    }
  }
  return fit;
}

EvalReport run_eval(const ExperimentSpec& spec, const FitReport& fit, unsigned threads) {
  spec.validate();
  const double h = spec.grid_step;
  const auto length = static_cast<std::size_t>(grid_steps(spec.eval_lo, spec.eval_hi, h)) + 1;
  auto grid_index = [&](double t) {
    const long i = grid_steps(spec.eval_lo, t, h);
    if (i < 0 || static_cast<std::size_t>(i) >= length) {
      throw Error(ErrorCode::IndexOutOfRange, "time outside the evaluation interval");
    }
    return static_cast<std::size_t>(i);
  };
  std::vector<std::size_t> tf_idx;
  for (double t : fit.forecast_times) tf_idx.push_back(grid_index(t));
  std::vector<std::size_t> entry_idx;
  for (const auto& e : fit.entries) {
    if (e.weights.size() != tf_idx.size()) throw Error(ErrorCode::LengthMismatch, "weights do not match T_f");
    entry_idx.push_back(grid_index(e.t));
  }

  const std::size_t reps = spec.replicates;
  const std::size_t cols = fit.entries.size();
  std::vector<double> truth(cols * reps), pred(cols * reps);
  const RngStream eval_root = RngStream(spec.seed, 0).split(kEvalStream);

  auto replicate = [&](std::size_t r) {
    RngStream rng = eval_root.split(r);
    const auto traj = simulate(spec.process, spec.eval_lo, h, length, rng);
    std::vector<double> x(tf_idx.size());
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = traj.values[tf_idx[k]];
    for (std::size_t c = 0; c < cols; ++c) {
      const auto& e = fit.entries[c];
      truth[c * reps + r] = traj.values[entry_idx[c]];
      pred[c * reps + r] = e.forecast_index ? x[*e.forecast_index] : predict(e.kind, e.weights, x);
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(reps)));
  if (workers == 1) {
    for (std::size_t r = 0; r < reps; ++r) replicate(r);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t r = next++; r < reps; r = next++) {
          try {
            replicate(r);
          } catch (...) {
            const std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = reps;
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  EvalReport report;
  report.replicates = reps;
  for (std::size_t c = 0; c < cols; ++c) {
    PairedSample s{{truth.begin() + static_cast<long>(c * reps), truth.begin() + static_cast<long>((c + 1) * reps)},
                   {pred.begin() + static_cast<long>(c * reps), pred.begin() + static_cast<long>((c + 1) * reps)}};
    const double em = excursion_metric_empirical(s, fit.marginal);
    if (spec.wasserstein_scale == WassersteinScale::Uniform) {
      for (auto& v : s.a) v = fit.marginal.cdf(v);
      for (auto& v : s.b) v = fit.marginal.cdf(v);
    }
    report.rows.push_back({fit.entries[c].t, fit.entries[c].method, em, wasserstein2_samples(s.a, s.b)});
  }
  return report;
}

BenchmarkResult run_table1_benchmark(const ExperimentSpec& spec, std::optional<double> t) {
  spec.validate();
  BenchmarkResult out;
  if (spec.methods.empty()) throw ConfigError("methods", "benchmark needs an optimized method");
  if (!t) {
    for (double p : spec.points()) {
      if (!forecast_slot(spec.forecast_times, p, 0.0, spec.grid_step)) {
        t = p;
        break;
      }
    }
    if (!t) throw ConfigError("prediction_points", "no point outside the forecast sample");
  }
  out.t = *t;
  const auto started = std::chrono::steady_clock::now();
  try {
    const auto training = simulate_training(spec);
    const auto marginal = resolve_marginal(spec, training);
    const RngStream root = RngStream(spec.seed, 0).split(kBenchStream);
    RngStream rows_rng = root.split(0);
    const auto samples = extract_learning_samples(training, design_at(spec, *t), spec.max_learning_rows, rows_rng);
    out.rows = samples.rows();
    const auto& m = spec.methods.front();
    DescentConfig cfg = spec.descent;
    cfg.mode = DescentMode::Online;
    cfg.iterations = 300;
    cfg.burn_in = std::min(cfg.burn_in, cfg.iterations - 1);
    cfg.constraint = m.constraint;
    RngStream solve_rng = root.split(1);
    const Predictor start{m.predictor, unit_vector(spec.forecast_times.size(), spec.forecast_times.size() - 1)};
    solve(ObjectiveSpec{m.variant, m.gamma, marginal}, samples, start, cfg, solve_rng);
    out.ok = true;
  } catch (const std::exception& e) {
    out.message = e.what();
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

void write_eval_csv(std::ostream& out, const EvalReport& report) {
  out << "t,method,excursion_metric,wasserstein\n";
  for (const auto& row : report.rows) {
    put(out, row.t);
    out << ',' << row.method << ',';
    put(out, row.excursion_metric);
    out << ',';
    put(out, row.wasserstein);
    out << '\n';
  }
}

void write_fit_csv(std::ostream& out, const FitReport& fit) {
  out << "t,method";
  for (std::size_t i = 1; i <= fit.forecast_times.size(); ++i) out << ",lambda_" << i;
  out << ",objective\n";
  for (const auto& e : fit.entries) {
    put(out, e.t);
    out << ',' << e.method;
    for (double w : e.weights) {
      out << ',';
      put(out, w);
    }
    out << ',';
    if (e.objective) put(out, *e.objective);
    out << '\n';
  }
}

}  // namespace excursion
