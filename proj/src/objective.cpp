#include "excursion/objective.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "excursion/error.hpp"

namespace excursion {

namespace {

long grid_index(double time, double origin, double step, const char* what) {
  const double pos = (time - origin) / step;
  const double rounded = std::round(pos);
  if (std::abs(pos - rounded) > 1e-9 * std::max(1.0, std::abs(pos))) {
    throw Error(ErrorCode::GridMisaligned, std::string(what) + " is not on the grid");
  }
  return static_cast<long>(rounded);
}

// Predictor values, cdf values, densities and predictor gradients per row.
struct RowCache {
  std::vector<double> g, f, p, grad;
  std::size_t n;

  RowCache(const ObjectiveSpec& spec, const Predictor& pred, const LearningSamples& s, bool with_grad)
      : g(s.rows()), f(s.rows()), p(with_grad ? s.rows() : 0), n(s.dimension) {
    if (with_grad) grad.resize(s.rows() * n);
    for (std::size_t j = 0; j < s.rows(); ++j) {
      g[j] = predict(pred, s.row(j));
      f[j] = spec.marginal.cdf(g[j]);
      if (with_grad) {
        p[j] = spec.marginal.pdf(g[j]);
        predictor_gradient(pred.kind, pred.weights, s.row(j), {grad.data() + j * n, n});
      }
    }
  }

  std::span<const double> gradient(std::size_t j) const { return {grad.data() + j * n, n}; }
};

void check_row(const LearningSamples& s, std::size_t j) {
  if (j >= s.rows()) throw Error(ErrorCode::IndexOutOfRange, "row index out of range");
}

void check_predictor(const Predictor& p, const LearningSamples& s) {
  if (p.weights.size() != s.dimension) {
    throw Error(ErrorCode::LengthMismatch, "predictor weights do not match the design dimension");
  }
}

void add_scaled(std::span<double> out, double scale, std::span<const double> v) {
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += scale * v[i];
}

}  // namespace

void ForecastDesign::validate() const {
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidGrid, "grid step must be > 0");
  if (forecast_offsets.empty()) throw Error(ErrorCode::DomainError, "forecast sample is empty");
  if (!(window_lo <= window_hi)) throw Error(ErrorCode::InvalidGrid, "empty observation window");
  const long target_idx = grid_index(target, 0.0, step, "target");
  for (double t : forecast_offsets) {
    if (grid_index(t, 0.0, step, "forecast offset") == target_idx) {
      throw Error(ErrorCode::DomainError, "target belongs to the forecast sample");
    }
  }
}

LearningSamples extract_learning_samples(const Trajectory& traj, const ForecastDesign& design,
                                         std::optional<std::size_t> max_rows, RngStream& rng) {
  design.validate();
  if (traj.values.empty()) throw Error(ErrorCode::NoValidShifts, "empty trajectory");
  if (std::abs(design.step - traj.step) > 1e-12 * traj.step) {
    throw Error(ErrorCode::GridMisaligned, "design step differs from the trajectory step");
  }
  const double h = traj.step;
  const long last = static_cast<long>(traj.values.size()) - 1;
  const long lo = std::max(0L, static_cast<long>(std::ceil((design.window_lo - traj.t0) / h - 1e-9)));
  const long hi = std::min(last, static_cast<long>(std::floor((design.window_hi - traj.t0) / h + 1e-9)));

  std::vector<long> offsets;
  for (double t : design.forecast_offsets) offsets.push_back(grid_index(t, traj.t0, h, "forecast offset"));
  const long target = grid_index(design.target, traj.t0, h, "target");
  const long min_off = std::min(*std::min_element(offsets.begin(), offsets.end()), target);
  const long max_off = std::max(*std::max_element(offsets.begin(), offsets.end()), target);
  const long s_lo = lo - min_off;
  const long s_hi = hi - max_off;
  if (s_lo > s_hi) throw Error(ErrorCode::NoValidShifts, "observation window too short for the design span");

  std::vector<long> shifts(static_cast<std::size_t>(s_hi - s_lo + 1));
  std::iota(shifts.begin(), shifts.end(), s_lo);
  if (max_rows && shifts.size() > *max_rows) {
    // Partial Fisher-Yates, then restore increasing order.
    for (std::size_t i = 0; i < *max_rows; ++i) {
      const std::size_t k = i + rng.index(shifts.size() - i);
      std::swap(shifts[i], shifts[k]);
    }
    shifts.resize(*max_rows);
    std::sort(shifts.begin(), shifts.end());
  }

  LearningSamples out;
  out.dimension = offsets.size();
  out.y.reserve(shifts.size());
  out.design.reserve(shifts.size() * offsets.size());
  for (long s : shifts) {
    out.y.push_back(traj.values[static_cast<std::size_t>(target + s)]);
    for (long o : offsets) out.design.push_back(traj.values[static_cast<std::size_t>(o + s)]);
    out.shifts.push_back(static_cast<double>(s) * h);
  }
  return out;
}

std::string_view to_string(PredictorKind kind) {
  switch (kind) {
    case PredictorKind::Linear: return "linear";
    case PredictorKind::SquaredWeightLinear: return "squared_weight_linear";
    case PredictorKind::MaxLinear: return "max_linear";
  }
  return "unknown";
}

PredictorKind predictor_kind_from_string(std::string_view name) {
  for (auto k : {PredictorKind::Linear, PredictorKind::SquaredWeightLinear, PredictorKind::MaxLinear}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::Unsupported, "unknown predictor kind '" + std::string(name) + "'");
}

double predict(PredictorKind kind, std::span<const double> w, std::span<const double> x) {
  switch (kind) {
    case PredictorKind::Linear: {
      double acc = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * x[i];
      return acc;
    }
    case PredictorKind::SquaredWeightLinear: {
      double acc = 0.0;
      for (std::size_t i = 0; i < w.size(); ++i) acc += w[i] * w[i] * x[i];
      return acc;
    }
    case PredictorKind::MaxLinear: {
      double best = w[0] * x[0];
      for (std::size_t i = 1; i < w.size(); ++i) best = std::max(best, w[i] * x[i]);
      return best;
    }
  }
  return 0.0;
}

void predictor_gradient(PredictorKind kind, std::span<const double> w, std::span<const double> x,
                        std::span<double> out) {
  switch (kind) {
    case PredictorKind::Linear: std::copy(x.begin(), x.end(), out.begin()); return;
    case PredictorKind::SquaredWeightLinear:
      for (std::size_t i = 0; i < w.size(); ++i) out[i] = 2.0 * w[i] * x[i];
      return;
    case PredictorKind::MaxLinear: {
      std::size_t arg = 0;
      for (std::size_t i = 1; i < w.size(); ++i) {
        if (w[i] * x[i] > w[arg] * x[arg]) arg = i;
      }
      std::fill(out.begin(), out.end(), 0.0);
      out[arg] = x[arg];
      return;
    }
  }
}

std::vector<double> effective_weights(const Predictor& p) {
  std::vector<double> w = p.weights;
  if (p.kind == PredictorKind::SquaredWeightLinear) {
    for (auto& v : w) v *= v;
  }
  return w;
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Q2: return "Q2";
    case Variant::Q3: return "Q3";
    case Variant::Q4: return "Q4";
  }
  return "unknown";
}

Variant variant_from_string(std::string_view name) {
  for (auto v : {Variant::Q2, Variant::Q3, Variant::Q4}) {
    if (to_string(v) == name) return v;
  }
  throw Error(ErrorCode::Unsupported, "unknown objective variant '" + std::string(name) + "'");
}

void ObjectiveSpec::validate() const {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw Error(ErrorCode::InvalidParameters, "penalty gamma must be finite and >= 0");
  }
}

double q_value(const ObjectiveSpec& spec, const Predictor& p, const LearningSamples& samples, std::size_t j,
               std::optional<std::size_t> bootstrap_row) {
  check_row(samples, j);
  check_predictor(p, samples);
  const auto& F = spec.marginal;
  const double fj = F.cdf(predict(p, samples.row(j)));
  const double q2 = 2.0 * std::max(F.cdf(samples.y[j]), fj) - fj;
  switch (spec.variant) {
    case Variant::Q2: return q2;
    case Variant::Q3: {
      if (!bootstrap_row) throw Error(ErrorCode::MissingBootstrap, "Q3 needs a bootstrap row");
      check_row(samples, *bootstrap_row);
      const double y = F.cdf(predict(p, samples.row(*bootstrap_row)));
      return q2 + spec.gamma * (fj * fj - std::max(fj, y));
    }
    case Variant::Q4: {
      double running = 0.0;
      for (std::size_t i = 0; i < j; ++i) running += std::max(F.cdf(predict(p, samples.row(i))), fj);
      const double n = static_cast<double>(samples.rows());
      return q2 + spec.gamma * fj * fj - spec.gamma / n * (fj + 2.0 * running);
    }
  }
  return q2;
}

double objective_value(const ObjectiveSpec& spec, const Predictor& p, const LearningSamples& samples,
                       std::span<const std::size_t> bootstrap_rows) {
  check_predictor(p, samples);
  const std::size_t rows = samples.rows();
  if (rows == 0) throw Error(ErrorCode::InsufficientData, "no learning rows");
  if (spec.variant == Variant::Q3 && bootstrap_rows.size() != rows) {
    throw Error(ErrorCode::MissingBootstrap, "Q3 needs one bootstrap row per learning row");
  }
  const RowCache cache(spec, p, samples, false);
  const auto& F = spec.marginal;
  double total = 0.0;
  for (std::size_t j = 0; j < rows; ++j) {
    const double fj = cache.f[j];
    total += 2.0 * std::max(F.cdf(samples.y[j]), fj) - fj;
  }
  const double n = static_cast<double>(rows);
  if (spec.variant == Variant::Q3) {
    double penalty = 0.0;
    for (std::size_t j = 0; j < rows; ++j) {
      const double fj = cache.f[j];
      penalty += fj * fj - std::max(fj, cache.f[bootstrap_rows[j]]);
    }
    total += spec.gamma * penalty;
  } else if (spec.variant == Variant::Q4) {
    double squares = 0.0, pairs = 0.0;
    for (std::size_t j = 0; j < rows; ++j) {
      const double fj = cache.f[j];
      squares += fj * fj;
      double running = 0.0;
      for (std::size_t i = 0; i < j; ++i) running += std::max(cache.f[i], fj);
      pairs += fj + 2.0 * running;
    }
    total += spec.gamma * squares - spec.gamma / n * pairs;
  }
  return total / n;
}

double objective_value(const ObjectiveSpec& spec, const Predictor& p, const LearningSamples& samples,
                       RngStream& rng) {
  if (spec.variant == Variant::Q3) {
    const auto rows = bootstrap_indices(samples.rows(), rng);
    return objective_value(spec, p, samples, rows);
  }
  return objective_value(spec, p, samples, std::span<const std::size_t>{});
}

double normalized_objective(const ObjectiveSpec& spec, double raw) {
  const double penalty_shift = spec.variant == Variant::Q2 ? 0.0 : spec.gamma / 3.0;
  return raw - 0.5 + penalty_shift;
}

std::vector<double> subgradient(const ObjectiveSpec& spec, const Predictor& p, const LearningSamples& samples,
                                std::size_t j, std::optional<std::size_t> bootstrap_row) {
  check_row(samples, j);
  check_predictor(p, samples);
  const std::size_t n = samples.dimension;
  const auto& F = spec.marginal;
  const double gj = predict(p, samples.row(j));
  const double fj = F.cdf(gj);
  const double pj = F.pdf(gj);
  std::vector<double> grad_j(n), out(n, 0.0);
  predictor_gradient(p.kind, p.weights, samples.row(j), grad_j);

  double coef_j = (samples.y[j] < gj ? 1.0 : -1.0);
  switch (spec.variant) {
    case Variant::Q2: break;
    case Variant::Q3: {
      if (!bootstrap_row) throw Error(ErrorCode::MissingBootstrap, "Q3 needs a bootstrap row");
      check_row(samples, *bootstrap_row);
      const std::size_t b = *bootstrap_row;
      const double gb = predict(p, samples.row(b));
      coef_j += spec.gamma * (2.0 * fj - (gb < gj ? 1.0 : 0.0));
      if (gb >= gj) {
        std::vector<double> grad_b(n);
        predictor_gradient(p.kind, p.weights, samples.row(b), grad_b);
        add_scaled(out, -spec.gamma * F.pdf(gb), grad_b);
      }
      break;
    }
    case Variant::Q4: {
      const double rows = static_cast<double>(samples.rows());
      double below = 0.0;
      std::vector<double> grad_i(n);
      for (std::size_t i = 0; i < j; ++i) {
        const double gi = predict(p, samples.row(i));
        const double fi = F.cdf(gi);
        if (fi < fj) {
          below += 1.0;
        } else if (fi > fj) {
          predictor_gradient(p.kind, p.weights, samples.row(i), grad_i);
          add_scaled(out, -2.0 * spec.gamma / rows * F.pdf(gi), grad_i);
        }
      }
      coef_j += spec.gamma * (2.0 * fj - 1.0 / rows - 2.0 / rows * below);
      break;
    }
  }
  add_scaled(out, coef_j * pj, grad_j);
  return out;
}

std::vector<double> mean_subgradient(const ObjectiveSpec& spec, const Predictor& p,
                                     const LearningSamples& samples,
                                     std::span<const std::size_t> bootstrap_rows) {
  check_predictor(p, samples);
  const std::size_t rows = samples.rows();
  if (rows == 0) throw Error(ErrorCode::InsufficientData, "no learning rows");
  if (spec.variant == Variant::Q3 && bootstrap_rows.size() != rows) {
    throw Error(ErrorCode::MissingBootstrap, "Q3 needs one bootstrap row per learning row");
  }
  const RowCache cache(spec, p, samples, true);
  const double n = static_cast<double>(rows);
  // Every term is (coefficient) * pdf(g_i) * grad g_i for some row i.
  std::vector<double> coef(rows, 0.0);
  for (std::size_t j = 0; j < rows; ++j) coef[j] = samples.y[j] < cache.g[j] ? 1.0 : -1.0;

  if (spec.variant == Variant::Q3) {
    for (std::size_t j = 0; j < rows; ++j) {
      const std::size_t b = bootstrap_rows[j];
      coef[j] += spec.gamma * (2.0 * cache.f[j] - (cache.g[b] < cache.g[j] ? 1.0 : 0.0));
      if (cache.g[b] >= cache.g[j]) coef[b] -= spec.gamma;
    }
  } else if (spec.variant == Variant::Q4) {
    for (std::size_t j = 0; j < rows; ++j) {
      double below = 0.0;
      for (std::size_t i = 0; i < j; ++i) {
        if (cache.f[i] < cache.f[j]) {
          below += 1.0;
        } else if (cache.f[i] > cache.f[j]) {
          coef[i] -= 2.0 * spec.gamma / n;
        }
      }
      coef[j] += spec.gamma * (2.0 * cache.f[j] - 1.0 / n - 2.0 / n * below);
    }
  }

  std::vector<double> out(samples.dimension, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    if (coef[i] != 0.0 && cache.p[i] != 0.0) add_scaled(out, coef[i] * cache.p[i] / n, cache.gradient(i));
  }
  return out;
}

std::vector<std::size_t> bootstrap_indices(std::size_t n, RngStream& rng) {
  std::vector<std::size_t> out(n);
  for (auto& v : out) v = rng.index(n);
  return out;
}

}  // namespace excursion
