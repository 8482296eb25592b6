#include "excursion/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "excursion/error.hpp"

namespace excursion {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidParameters, what);
}

void require_not_nan(double x) {
  if (std::isnan(x)) throw Error(ErrorCode::NonFiniteInput, "NaN argument");
}

double std_normal_quantile(double p) { return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p); }

double cauchy_cdf(double z) {
  // Tail-accurate form of 1/2 + atan(z)/pi.
  if (z < -1.0) return std::atan(-1.0 / z) / kPi;
  if (z > 1.0) return 1.0 - std::atan(1.0 / z) / kPi;
  return 0.5 + std::atan(z) / kPi;
}

// Symmetric alpha-stable with characteristic function exp(-|t|^alpha),
// alpha != 1, via the Zolotarev/Nolan single-integral representation.
class StableIntegral {
 public:
  explicit StableIntegral(double alpha) : alpha_(alpha) {}

  double v(double theta) const {
    const double a = alpha_;
    const double c = std::cos(theta);
    const double s = std::sin(a * theta);
    return std::pow(c / s, a / (a - 1.0)) * std::cos((a - 1.0) * theta) / c;
  }

  double cdf_positive(double x) const {
    const double a = alpha_;
    const double scale = std::pow(x, a / (a - 1.0));
    auto f = [&](double theta) {
      const double val = v(theta);
      if (!std::isfinite(val)) return 0.0;
      return std::exp(-scale * val);
    };
    const double integral =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, kPi / 2.0, 20, 1e-13);
    if (a < 1.0) return 0.5 + integral / kPi;
    return 1.0 - integral / kPi;
  }

  double pdf_positive(double x) const {
    const double a = alpha_;
    const double scale = std::pow(x, a / (a - 1.0));
    auto f = [&](double theta) {
      const double val = v(theta);
      if (!std::isfinite(val)) return 0.0;
      const double g = val * std::exp(-scale * val);
      return std::isfinite(g) ? g : 0.0;
    };
    const double integral =
        boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, kPi / 2.0, 20, 1e-13);
    return a * std::pow(x, 1.0 / (a - 1.0)) / (kPi * std::abs(a - 1.0)) * integral;
  }

 private:
  double alpha_;
};

// Large-|x| expansions: tail = sum_k c_k x^(-k alpha) / (k alpha), density = sum_k c_k x^(-k alpha - 1),
// c_k = (-1)^(k+1) Gamma(k alpha + 1) sin(k pi alpha / 2) / (pi k!). Summed until terms stop shrinking.
constexpr double kStableTailStart = 100.0;

double stable_tail_series(double alpha, double x, bool density) {
  double total = 0.0, prev = kInf;
  for (int k = 1; k <= 60; ++k) {
    const double ka = k * alpha;
    double mag = std::exp(std::lgamma(ka + 1.0) - std::lgamma(k + 1.0) - (density ? ka + 1.0 : ka) * std::log(x));
    if (!density) mag /= ka;
    if (mag > prev) break;
    prev = mag;
    const double term = mag * std::sin(ka * kPi / 2.0) / kPi;
    total += k % 2 == 0 ? -term : term;
    if (mag < 1e-17 * std::abs(total)) break;
  }
  return total;
}

// Below this |z| the two-term series at the origin is exact to ~1e-13 relative.
double stable_origin_radius(double alpha) {
  const double r = std::pow(1e-13 * 24.0 * std::tgamma(1.0 / alpha) / std::tgamma(5.0 / alpha), 0.25);
  return std::min(1e-3, r);
}

double stable_cdf_standard(double alpha, double z) {
  if (alpha == 1.0) return cauchy_cdf(z);
  if (std::isinf(z)) return z > 0 ? 1.0 : 0.0;
  if (std::abs(z) < stable_origin_radius(alpha)) {
    return 0.5 + (std::tgamma(1.0 / alpha) * z - std::tgamma(3.0 / alpha) * z * z * z / 6.0) / (kPi * alpha);
  }
  if (std::abs(z) >= kStableTailStart) {
    const double tail = stable_tail_series(alpha, std::abs(z), false);
    return z > 0 ? 1.0 - tail : tail;
  }
  const StableIntegral integral(alpha);
  if (z > 0) return std::clamp(integral.cdf_positive(z), 0.0, 1.0);
  return std::clamp(1.0 - integral.cdf_positive(-z), 0.0, 1.0);
}

double stable_pdf_standard(double alpha, double z) {
  if (alpha == 1.0) return 1.0 / (kPi * (1.0 + z * z));
  if (std::isinf(z)) return 0.0;
  if (std::abs(z) < stable_origin_radius(alpha)) {
    // Two-term power series at the origin.
    return (std::tgamma(1.0 / alpha) - std::tgamma(3.0 / alpha) * z * z / 2.0) / (kPi * alpha);
  }
  if (std::abs(z) >= kStableTailStart) return stable_tail_series(alpha, std::abs(z), true);
  return std::max(0.0, StableIntegral(alpha).pdf_positive(std::abs(z)));
}

// Chambers-Mallows-Stuck draw for the symmetric case.
double stable_draw_standard(double alpha, RngStream& rng) {
  const double v = kPi * (rng.uniform() - 0.5);
  if (alpha == 1.0) return std::tan(v);
  const double w = rng.exponential();
  return std::sin(alpha * v) / std::pow(std::cos(v), 1.0 / alpha) *
         std::pow(std::cos(v - alpha * v) / w, (1.0 - alpha) / alpha);
}

// Monotone bisection on a bracket grown geometrically, then Newton polish.
template <class Cdf, class Pdf>
double invert_cdf(double p, double start, double lo_bound, Cdf&& cdf, Pdf&& pdf) {
  double lo = start - 1.0;
  double hi = start + 1.0;
  double width = 1.0;
  while (cdf(hi) < p) {
    lo = hi;
    width *= 2.0;
    hi += width;
  }
  width = 1.0;
  while (lo > lo_bound && cdf(lo) > p) {
    hi = lo;
    width *= 2.0;
    lo = std::max(lo_bound, lo - width);
  }
  for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(lo)); ++i) {
    const double mid = 0.5 * (lo + hi);
    (cdf(mid) < p ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 3; ++i) {
    const double d = pdf(x);
    if (!(d > 0.0)) break;
    const double next = x - (cdf(x) - p) / d;
    if (!(next > lo && next < hi)) break;
    x = next;
  }
  return x;
}

double empirical_quantile(std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(i);
  if (i + 1 >= sorted.size()) return sorted.back();
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

}  // namespace

std::string_view to_string(Family family) {
  switch (family) {
    case Family::Gaussian: return "Gaussian";
    case Family::Cauchy: return "Cauchy";
    case Family::Levy: return "Levy";
    case Family::AlphaStableSymmetric: return "AlphaStableSymmetric";
    case Family::StudentT: return "StudentT";
  }
  return "Unknown";
}

Family family_from_string(std::string_view name) {
  for (Family f : {Family::Gaussian, Family::Cauchy, Family::Levy, Family::AlphaStableSymmetric,
                   Family::StudentT}) {
    if (to_string(f) == name) return f;
  }
  throw Error(ErrorCode::Unsupported, "unknown family '" + std::string(name) + "'");
}

MarginalModel::MarginalModel(Family family, std::vector<double> params)
    : family_(family), params_(std::move(params)) {
  for (double v : params_) require(std::isfinite(v), "parameters must be finite");
}

MarginalModel MarginalModel::gaussian(double mu, double sigma) {
  require(sigma > 0, "Gaussian sigma must be > 0");
  return {Family::Gaussian, {mu, sigma}};
}

MarginalModel MarginalModel::cauchy(double mu, double sigma) {
  require(sigma > 0, "Cauchy sigma must be > 0");
  return {Family::Cauchy, {mu, sigma}};
}

MarginalModel MarginalModel::levy(double c) {
  require(c > 0, "Levy scale c must be > 0");
  return {Family::Levy, {c}};
}

MarginalModel MarginalModel::alpha_stable_symmetric(double alpha, double sigma) {
  require(alpha > 0 && alpha < 2, "alpha must lie in (0, 2)");
  require(sigma > 0, "stable sigma must be > 0");
  return {Family::AlphaStableSymmetric, {alpha, sigma}};
}

MarginalModel MarginalModel::student_t(double mu, double sigma, double nu) {
  require(sigma > 0, "StudentT sigma must be > 0");
  require(nu > 0, "StudentT nu must be > 0");
  return {Family::StudentT, {mu, sigma, nu}};
}

std::vector<std::string> MarginalModel::param_names() const {
  switch (family_) {
    case Family::Gaussian:
    case Family::Cauchy: return {"mu", "sigma"};
    case Family::Levy: return {"c"};
    case Family::AlphaStableSymmetric: return {"alpha", "sigma"};
    case Family::StudentT: return {"mu", "sigma", "nu"};
  }
  return {};
}

std::pair<double, double> MarginalModel::support() const {
  if (family_ == Family::Levy) return {0.0, kInf};
  return {-kInf, kInf};
}

double MarginalModel::cdf(double x) const {
  require_not_nan(x);
  const auto& p = params_;
  switch (family_) {
    case Family::Gaussian: return 0.5 * std::erfc(-(x - p[0]) / (p[1] * std::numbers::sqrt2));
    case Family::Cauchy:
      if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
      return cauchy_cdf((x - p[0]) / p[1]);
    case Family::Levy:
      if (x <= 0) return 0.0;
      if (std::isinf(x)) return 1.0;
      return std::erfc(std::sqrt(p[0] / (2.0 * x)));
    case Family::AlphaStableSymmetric: return stable_cdf_standard(p[0], x / p[1]);
    case Family::StudentT: {
      if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
      const boost::math::students_t_distribution<double> dist(p[2]);
      return boost::math::cdf(dist, (x - p[0]) / p[1]);
    }
  }
  throw Error(ErrorCode::Unsupported, "cdf");
}

double MarginalModel::pdf(double x) const {
  require_not_nan(x);
  const auto& p = params_;
  if (std::isinf(x)) return 0.0;
  switch (family_) {
    case Family::Gaussian: {
      const double z = (x - p[0]) / p[1];
      return std::exp(-0.5 * z * z) / (p[1] * std::sqrt(2.0 * kPi));
    }
    case Family::Cauchy: {
      const double z = (x - p[0]) / p[1];
      return 1.0 / (kPi * p[1] * (1.0 + z * z));
    }
    case Family::Levy:
      if (x <= 0) return 0.0;
      return std::sqrt(p[0] / (2.0 * kPi)) * std::pow(x, -1.5) * std::exp(-p[0] / (2.0 * x));
    case Family::AlphaStableSymmetric: return stable_pdf_standard(p[0], x / p[1]) / p[1];
    case Family::StudentT: {
      const boost::math::students_t_distribution<double> dist(p[2]);
      return boost::math::pdf(dist, (x - p[0]) / p[1]) / p[1];
    }
  }
  throw Error(ErrorCode::Unsupported, "pdf");
}

double MarginalModel::quantile(double prob) const {
  if (!(prob > 0.0 && prob < 1.0)) {
    throw Error(ErrorCode::DomainError, "quantile level must lie in (0, 1)");
  }
  const auto& p = params_;
  switch (family_) {
    case Family::Gaussian: return p[0] + p[1] * std_normal_quantile(prob);
    case Family::Cauchy: return p[0] + p[1] * std::tan(kPi * (prob - 0.5));
    case Family::Levy: {
      const double e = boost::math::erfc_inv(prob);
      return p[0] / (2.0 * e * e);
    }
    case Family::AlphaStableSymmetric: {
      if (p[0] == 1.0) return p[1] * std::tan(kPi * (prob - 0.5));
      if (prob == 0.5) return 0.0;
      return invert_cdf(
          prob, 0.0, -kInf, [this](double x) { return cdf(x); }, [this](double x) { return pdf(x); });
    }
    case Family::StudentT: {
      const boost::math::students_t_distribution<double> dist(p[2]);
      return p[0] + p[1] * boost::math::quantile(dist, prob);
    }
  }
  throw Error(ErrorCode::Unsupported, "quantile");
}

double MarginalModel::sample_one(RngStream& rng) const {
  const auto& p = params_;
  switch (family_) {
    case Family::Gaussian: return p[0] + p[1] * rng.normal();
    case Family::Cauchy: return p[0] + p[1] * std::tan(kPi * (rng.uniform() - 0.5));
    case Family::Levy: {
      const double z = rng.normal();
      return p[0] / (z * z);
    }
    case Family::AlphaStableSymmetric: return p[1] * stable_draw_standard(p[0], rng);
    case Family::StudentT: {
      const double z = rng.normal();
      const double chi2 = 2.0 * rng.gamma(0.5 * p[2]);
      return p[0] + p[1] * z / std::sqrt(chi2 / p[2]);
    }
  }
  throw Error(ErrorCode::Unsupported, "sample");
}

std::vector<double> MarginalModel::sample(RngStream& rng, std::size_t count) const {
  std::vector<double> out(count);
  for (auto& v : out) v = sample_one(rng);
  return out;
}

MarginalModel estimate(Family family, std::span<const double> data) {
  if (data.size() < 50) throw Error(ErrorCode::InsufficientData, "estimation needs at least 50 values");
  for (double v : data) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "data contains non-finite values");
  }
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) throw Error(ErrorCode::DegenerateData, "all values are equal");
  const double median = empirical_quantile(sorted, 0.5);

  switch (family) {
    case Family::Gaussian: {
      const double n = static_cast<double>(data.size());
      const double mean = std::accumulate(data.begin(), data.end(), 0.0) / n;
      double ss = 0.0;
      for (double v : data) ss += (v - mean) * (v - mean);
      return MarginalModel::gaussian(mean, std::sqrt(ss / (n - 1.0)));
    }
    case Family::Cauchy: {
      const double iqr = empirical_quantile(sorted, 0.75) - empirical_quantile(sorted, 0.25);
      if (!(iqr > 0)) throw Error(ErrorCode::DegenerateData, "zero interquartile range");
      return MarginalModel::cauchy(median, 0.5 * iqr);
    }
    case Family::Levy: {
      if (!(median > 0)) throw Error(ErrorCode::DegenerateData, "Levy data needs a positive median");
      const double e = boost::math::erfc_inv(0.5);
      return MarginalModel::levy(2.0 * median * e * e);
    }
    case Family::StudentT: {
      // Absolute deviations from the median: their 0.5 and 0.9 quantiles match
      // the t quantiles at levels 0.75 and 0.95. The ratio fixes nu alone.
      std::vector<double> dev(sorted.size());
      std::transform(sorted.begin(), sorted.end(), dev.begin(),
                     [median](double v) { return std::abs(v - median); });
      std::sort(dev.begin(), dev.end());
      const double q75 = empirical_quantile(dev, 0.5);
      const double q95 = empirical_quantile(dev, 0.9);
      if (!(q75 > 0)) throw Error(ErrorCode::DegenerateData, "zero median absolute deviation");
      const double target = q95 / q75;
      auto ratio = [](double nu) {
        const boost::math::students_t_distribution<double> dist(nu);
        return boost::math::quantile(dist, 0.95) / boost::math::quantile(dist, 0.75);
      };
      double lo = 0.05, hi = 1000.0;
      double nu;
      if (target >= ratio(lo)) {
        nu = lo;
      } else if (target <= ratio(hi)) {
        nu = hi;
      } else {
        // ratio(nu) decreases in nu; bisect on log scale.
        for (int i = 0; i < 100; ++i) {
          const double mid = std::sqrt(lo * hi);
          (ratio(mid) > target ? lo : hi) = mid;
        }
        nu = std::sqrt(lo * hi);
      }
      const boost::math::students_t_distribution<double> dist(nu);
      return MarginalModel::student_t(median, q75 / boost::math::quantile(dist, 0.75), nu);
    }
    case Family::AlphaStableSymmetric: break;
  }
  throw Error(ErrorCode::Unsupported, "no estimator for family " + std::string(to_string(family)));
}

nlohmann::json marginal_to_json(const MarginalModel& model) {
  nlohmann::json params = nlohmann::json::object();
  const auto names = model.param_names();
  for (std::size_t i = 0; i < names.size(); ++i) params[names[i]] = model.params()[i];
  return {{"family", std::string(to_string(model.family()))}, {"params", params}};
}

MarginalModel marginal_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("family") || !j.at("family").is_string()) {
    throw ConfigError("family", "marginal model needs a string 'family'");
  }
  Family family;
  try {
    family = family_from_string(j.at("family").get<std::string>());
  } catch (const Error& e) {
    throw ConfigError("family", e.what());
  }
  const nlohmann::json params = j.value("params", nlohmann::json::object());
  if (!params.is_object()) throw ConfigError("params", "must be an object");
  auto get = [&](const char* name) -> double {
    if (!params.contains(name) || !params.at(name).is_number()) {
      throw ConfigError(std::string("params.") + name, "missing or not a number");
    }
    return params.at(name).get<double>();
  };
  try {
    switch (family) {
      case Family::Gaussian: return MarginalModel::gaussian(get("mu"), get("sigma"));
      case Family::Cauchy: return MarginalModel::cauchy(get("mu"), get("sigma"));
      case Family::Levy: return MarginalModel::levy(get("c"));
      case Family::AlphaStableSymmetric:
        return MarginalModel::alpha_stable_symmetric(get("alpha"), get("sigma"));
      case Family::StudentT: return MarginalModel::student_t(get("mu"), get("sigma"), get("nu"));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("params", e.what());
  }
  throw ConfigError("family", "unsupported");
}

}  // namespace excursion
