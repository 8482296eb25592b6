#include "excursion/processes.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "excursion/error.hpp"

namespace excursion {

namespace {

constexpr std::size_t kKernelTaps = 251;

void check_grid(double step, std::size_t length) {
  if (!(step > 0.0) || !std::isfinite(step)) throw Error(ErrorCode::InvalidGrid, "grid step must be > 0");
  if (length == 0) throw Error(ErrorCode::InvalidGrid, "length must be >= 1");
}

MarginalModel innovation_law(double alpha) {
  if (alpha == 1.0) return MarginalModel::cauchy(0.0, 1.0);
  if (alpha == 0.5) return MarginalModel::levy(1.0);
  return MarginalModel::alpha_stable_symmetric(alpha, 1.0);
}

}  // namespace

std::string_view to_string(ProcessKind kind) {
  switch (kind) {
    case ProcessKind::GaussExpCov: return "gauss_exp_cov";
    case ProcessKind::StableMovingAverage: return "stable_ma";
    case ProcessKind::ArStudentT: return "ar_student_t";
  }
  return "unknown";
}

ProcessSpec ProcessSpec::gauss_exp_cov() { return ProcessSpec{}; }

ProcessSpec ProcessSpec::stable_moving_average(double alpha) {
  ProcessSpec spec;
  spec.kind = ProcessKind::StableMovingAverage;
  spec.stable.alpha = alpha;
  spec.stable.kernel = default_kernel(alpha);
  return spec;
}

ProcessSpec ProcessSpec::ar_student_t(std::vector<double> phi, double nu, std::size_t lag_stride) {
  ProcessSpec spec;
  spec.kind = ProcessKind::ArStudentT;
  spec.ar.phi = std::move(phi);
  spec.ar.innovation = MarginalModel::student_t(0.0, 1.0, nu);
  spec.ar.lag_stride = lag_stride;
  return spec;
}

void ProcessSpec::validate() const {
  switch (kind) {
    case ProcessKind::GaussExpCov: return;
    case ProcessKind::StableMovingAverage: {
      const double a = stable.alpha;
      if (!(a > 0 && a < 2)) throw Error(ErrorCode::InvalidParameters, "alpha must lie in (0, 2)");
      if (stable.kernel.empty()) throw Error(ErrorCode::InvalidParameters, "empty kernel");
      for (double m : stable.kernel) {
        if (!(m >= 0) || !std::isfinite(m)) {
          throw Error(ErrorCode::InvalidParameters, "kernel taps must be finite and >= 0");
        }
      }
      if (std::abs(kernel_norm(stable.kernel, a) - 1.0) > 1e-6) {
        throw Error(ErrorCode::InvalidParameters, "kernel alpha-norm must equal 1");
      }
      return;
    }
    case ProcessKind::ArStudentT:
      if (ar.lag_stride == 0) throw Error(ErrorCode::InvalidParameters, "lag_stride must be >= 1");
      if (!ar_is_stationary(ar.phi)) {
        throw Error(ErrorCode::NonStationaryCoefficients, "lag polynomial has a root inside the unit circle");
      }
      return;
  }
}

Trajectory simulate_gauss_exp_cov(double t0, double step, std::size_t length, RngStream& rng) {
  check_grid(step, length);
  const double r = std::exp(-step / 2.0);
  const double innovation_sd = std::sqrt(1.0 - r * r);
  Trajectory traj{t0, step, std::vector<double>(length), MarginalModel::gaussian(0.0, 1.0)};
  traj.values[0] = rng.normal();
  for (std::size_t i = 1; i < length; ++i) {
    traj.values[i] = r * traj.values[i - 1] + innovation_sd * rng.normal();
  }
  return traj;
}

std::vector<double> default_kernel(double alpha) {
  std::vector<double> m(kKernelTaps);
  double scale;
  if (alpha == 1.0) {
    scale = (1.0 - std::exp(-0.02)) / (1.0 - std::exp(-5.02));
  } else if (alpha == 0.5) {
    const double s = (1.0 - std::exp(-0.01)) / (1.0 - std::exp(-2.51));
    scale = s * s;
  } else {
    throw Error(ErrorCode::Unsupported, "default kernel exists for alpha in {0.5, 1} only");
  }
  for (std::size_t x = 0; x < kKernelTaps; ++x) m[x] = std::exp(-0.02 * static_cast<double>(x)) * scale;
  return m;
}

double kernel_norm(std::span<const double> kernel, double alpha) {
  double sum = 0.0;
  for (double m : kernel) sum += std::pow(m, alpha);
  return std::pow(sum, 1.0 / alpha);
}

MarginalModel stable_ma_marginal(const StableMaParams& params) {
  const double norm = kernel_norm(params.kernel, params.alpha);
  if (params.alpha == 1.0) return MarginalModel::cauchy(0.0, norm);
  if (params.alpha == 0.5) return MarginalModel::levy(norm);
  return MarginalModel::alpha_stable_symmetric(params.alpha, norm);
}

std::vector<double> convolve_innovations(std::span<const double> kernel,
                                         std::span<const double> innovations) {
  const std::size_t taps = kernel.size();
  if (innovations.size() < taps) throw Error(ErrorCode::LengthMismatch, "too few innovations for kernel");
  const std::size_t length = innovations.size() - taps + 1;
  std::vector<double> out(length, 0.0);
  for (std::size_t i = 0; i < length; ++i) {
    const double* xi = innovations.data() + i + taps - 1;
    double acc = 0.0;
    for (std::size_t k = 0; k < taps; ++k) acc += kernel[k] * *(xi - k);
    out[i] = acc;
  }
  return out;
}

Trajectory simulate_stable_ma(const ProcessSpec& spec, double t0, double step, std::size_t length,
                              RngStream& rng) {
  check_grid(step, length);
  const double offset = t0 / step;
  if (std::abs(offset - std::round(offset)) > 1e-9 * std::max(1.0, std::abs(offset))) {
    throw Error(ErrorCode::GridMisaligned, "t0 is not a multiple of the grid step");
  }
  const auto& params = spec.stable;
  if (params.kernel.empty()) throw Error(ErrorCode::InvalidParameters, "empty kernel");
  const MarginalModel law = innovation_law(params.alpha);
  const std::vector<double> xi = law.sample(rng, length + params.kernel.size() - 1);
  return Trajectory{t0, step, convolve_innovations(params.kernel, xi), stable_ma_marginal(params)};
}

bool ar_is_stationary(std::span<const double> phi) {
  const std::size_t p = phi.size();
  if (p == 0) return true;
  // Companion matrix of X_i = sum_l a_l X_{i-l}, a_l = phi_{p-l+1}.
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (std::size_t l = 1; l <= p; ++l) companion(0, static_cast<Eigen::Index>(l - 1)) = phi[p - l];
  for (std::size_t i = 1; i < p; ++i) companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
  const Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  for (const auto& ev : solver.eigenvalues()) {
    if (std::abs(ev) >= 1.0) return false;
  }
  return true;
}

Trajectory simulate_ar(const ProcessSpec& spec, double t0, double step, std::size_t length,
                       std::size_t burn_in, RngStream& rng) {
  check_grid(step, length);
  const auto& ar = spec.ar;
  if (!ar_is_stationary(ar.phi)) {
    throw Error(ErrorCode::NonStationaryCoefficients, "lag polynomial has a root inside the unit circle");
  }
  if (ar.lag_stride == 0) throw Error(ErrorCode::InvalidParameters, "lag_stride must be >= 1");
  const std::size_t p = ar.phi.size();
  const std::size_t total = burn_in + length;
  std::vector<double> x(total, 0.0);
  for (std::size_t i = 0; i < total; ++i) {
    double v = ar.innovation.sample_one(rng);
    for (std::size_t k = 0; k < p; ++k) {
      const std::size_t lag = (p - k) * ar.lag_stride;
      if (i >= lag) v += ar.phi[k] * x[i - lag];
    }
    x[i] = v;
  }
  return Trajectory{t0, step, std::vector<double>(x.begin() + static_cast<std::ptrdiff_t>(burn_in), x.end()),
                    std::nullopt};
}

Trajectory simulate(const ProcessSpec& spec, double t0, double step, std::size_t length, RngStream& rng) {
  switch (spec.kind) {
    case ProcessKind::GaussExpCov: return simulate_gauss_exp_cov(t0, step, length, rng);
    case ProcessKind::StableMovingAverage: return simulate_stable_ma(spec, t0, step, length, rng);
    case ProcessKind::ArStudentT: return simulate_ar(spec, t0, step, length, spec.ar.burn_in, rng);
  }
  throw Error(ErrorCode::Unsupported, "process kind");
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "t,value\n";
  char buf[64];
  for (std::size_t i = 0; i < traj.values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", traj.time(i), traj.values[i]);
    out << buf;
  }
}

Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,value", 0) != 0) {
    throw Error(ErrorCode::Io, "trajectory CSV must start with header 't,value'");
  }
  std::vector<double> times;
  Trajectory traj;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(ErrorCode::Io, "malformed row '" + line + "'");
    times.push_back(std::stod(line.substr(0, comma)));
    traj.values.push_back(std::stod(line.substr(comma + 1)));
  }
  if (times.empty()) throw Error(ErrorCode::Io, "trajectory CSV has no rows");
  traj.t0 = times.front();
  traj.step = times.size() > 1 ? (times.back() - times.front()) / static_cast<double>(times.size() - 1) : 1.0;
  return traj;
}

}  // namespace excursion
