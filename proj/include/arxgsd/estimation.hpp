#pragma once

/// @file
/// Identification pipeline building blocks: lagged data matrices, covariance
/// pencils, generalized-EVD parameter extraction, the spectral ACVF of AR
/// noise, the iterative inner loop, unity-eigenvalue order determination and
/// structure pruning.  The outer order search lives in identify.hpp.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "arxgsd/core_types.hpp"
#include "arxgsd/linalg.hpp"
#include "arxgsd/signals.hpp"

namespace arxgsd {

using linalg::Index;
using linalg::Matrix;
using linalg::Vector;

// ---------------------------------------------------------------------------
// Data stacking
// ---------------------------------------------------------------------------

/// Row r holds [y[L+r] .. y[r], u[L+r] .. u[r]].
struct LaggedMatrix {
  Matrix z;
  std::size_t lag = 0;
  std::vector<std::string> labels;
};

[[nodiscard]] inline std::vector<std::string> lagged_labels(std::size_t lag) {
  std::vector<std::string> labels;
  labels.reserve(2 * (lag + 1));
  for (const char* name : {"y", "u"}) {
    for (std::size_t i = 0; i <= lag; ++i)
      labels.push_back(std::string(name) + (i == 0 ? "[k]" : "[k-" + std::to_string(i) + "]"));
  }
  return labels;
}

/// Window stacking needs only N > L; estimators built on the resulting
/// covariance additionally require N > 2(L+1) (DataSet::require_lag).
[[nodiscard]] inline LaggedMatrix build_lagged_matrix(const DataSet& data, std::size_t lag) {
  data.validate();
  if (data.size() <= lag)
    throw InputError("build_lagged_matrix: " + std::to_string(data.size()) + " samples cannot be stacked at lag " +
                     std::to_string(lag));
  const std::size_t rows = data.size() - lag;
  const auto width = static_cast<Index>(lag + 1);
  LaggedMatrix out{Matrix(static_cast<Index>(rows), 2 * width), lag, lagged_labels(lag)};
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t k = lag + r;
    for (std::size_t i = 0; i <= lag; ++i) {
      out.z(static_cast<Index>(r), static_cast<Index>(i)) = data.y[k - i];
      out.z(static_cast<Index>(r), width + static_cast<Index>(i)) = data.u[k - i];
    }
  }
  return out;
}

/// Z^T Z / (N - L), no mean removal.  Only the upper triangle is accumulated
/// and then mirrored, so the result is exactly symmetric.
[[nodiscard]] inline Matrix sample_covariance(const LaggedMatrix& lagged) {
  const Matrix& z = lagged.z;
  if (z.rows() == 0) throw InputError("sample_covariance: empty lagged matrix");
  const Index p = z.cols();
  Matrix s(p, p);
  const double scale = 1.0 / static_cast<double>(z.rows());
  for (Index i = 0; i < p; ++i) {
    for (Index j = i; j < p; ++j) {
      const double v = z.col(i).dot(z.col(j)) * scale;
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Covariance pencil
// ---------------------------------------------------------------------------

/// (S_Z, Sigma_e) at stacking lag L.
struct CovariancePencil {
  Matrix s;
  Matrix sigma;
  std::size_t lag = 0;
};

/// blockdiag(Toeplitz(acvf[0..L]), 0): the input channel is noise free.
[[nodiscard]] inline Matrix build_noise_covariance(const NoiseModel& noise, std::size_t lag) {
  if (noise.acvf.size() < lag + 1)
    throw InputError("build_noise_covariance: ACVF has " + std::to_string(noise.acvf.size()) +
                     " lags, stacking lag " + std::to_string(lag) + " needs " + std::to_string(lag + 1));
  const auto width = static_cast<Index>(lag + 1);
  Matrix sigma = Matrix::Zero(2 * width, 2 * width);
  sigma.topLeftCorner(width, width) =
      linalg::toeplitz_from_acvf(std::span<const double>(noise.acvf.data(), lag + 1));
  return sigma;
}

[[nodiscard]] inline CovariancePencil build_pencil(const DataSet& data, const NoiseModel& noise, std::size_t lag) {
  data.require_lag(lag);
  return {sample_covariance(build_lagged_matrix(data, lag)), build_noise_covariance(noise, lag), lag};
}

/// Real finite spectrum of a covariance pencil.
struct PencilSpectrum {
  /// Ascending.
  std::vector<double> values;
  /// Real unit-norm eigenvectors matching `values`.
  std::vector<Vector> vectors;
  /// Finite eigenvalues with a significant imaginary part (not in `values`).
  std::vector<std::complex<double>> complex_values;
  std::size_t infinite_count = 0;
};

/// Relative imaginary part below which a computed pair is treated as real.
inline constexpr double kNearRealTol = 1e-8;

/// Generalized eigenvalues of (S, Sigma) by QZ.  Infinite eigenvalues are
/// counted and dropped; finite ones are returned ascending.  Throws
/// NumericalError when the smallest finite eigenvalue is genuinely complex.
[[nodiscard]] inline PencilSpectrum identify_evd(const Matrix& s, const Matrix& sigma) {
  if (s.rows() != s.cols() || sigma.rows() != sigma.cols() || s.rows() != sigma.rows())
    throw InputError("identify_evd: S and Sigma must be square with equal dimensions");
  const linalg::QzResult qz = linalg::qz_solve({s, sigma});

  struct Entry {
    double value;
    Vector vector;
  };
  std::vector<Entry> real;
  PencilSpectrum out;
  out.infinite_count = qz.eigen.infinite_count();
  for (const linalg::GeneralizedEigenpair& p : qz.eigen.finite) {
    const std::complex<double> lambda = p.lambda();
    if (std::abs(lambda.imag()) <= kNearRealTol * std::max(1.0, std::abs(lambda))) {
      Vector re = p.vector.real();
      Vector im = p.vector.imag();
      Vector v = re.norm() >= im.norm() ? re : im;
      v.normalize();
      real.push_back({lambda.real(), std::move(v)});
    } else {
      out.complex_values.push_back(lambda);
    }
  }
  std::stable_sort(real.begin(), real.end(), [](const Entry& x, const Entry& y) { return x.value < y.value; });
  if (!out.complex_values.empty()) {
    double min_complex = std::numeric_limits<double>::infinity();
    for (const auto& c : out.complex_values) min_complex = std::min(min_complex, c.real());
    if (real.empty() || min_complex < real.front().value)
      throw NumericalError("identify_evd: smallest finite eigenvalue is complex; the pencil is not a valid "
                           "covariance pencil");
  }
  for (Entry& e : real) {
    out.values.push_back(e.value);
    out.vectors.push_back(std::move(e.vector));
  }
  return out;
}

[[nodiscard]] inline PencilSpectrum identify_evd(const CovariancePencil& pencil) {
  return identify_evd(pencil.s, pencil.sigma);
}

// ---------------------------------------------------------------------------
// Parameter extraction and noise estimation
// ---------------------------------------------------------------------------

/// theta = v / v[0].
[[nodiscard]] inline std::vector<double> extract_theta(const Vector& v) {
  if (v.size() == 0) throw InputError("extract_theta: empty vector");
  if (!(std::abs(v(0)) > 1e-10 * v.norm()))
    throw DegenerateNormalizationError("extract_theta: leading eigenvector entry is numerically zero");
  std::vector<double> theta(static_cast<std::size_t>(v.size()));
  for (Index i = 0; i < v.size(); ++i) theta[static_cast<std::size_t>(i)] = v(i) / v(0);
  theta[0] = 1.0;
  return theta;
}

[[nodiscard]] inline std::vector<double> extract_theta(std::span<const double> v) {
  return extract_theta(Vector(Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()))));
}

/// e[k] = A(q^-1) y[k] - B(q^-1) u[k] for k = eta..N-1 with a stacked theta.
[[nodiscard]] inline std::vector<double> innovations(const std::vector<double>& theta, const DataSet& data) {
  const std::size_t eta = stacked_order(theta.size());
  data.validate();
  if (data.size() <= eta) throw InputError("innovations: data shorter than the model order");
  std::vector<double> e(data.size() - eta);
  for (std::size_t k = eta; k < data.size(); ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i <= eta; ++i) acc += theta[i] * data.y[k - i] + theta[eta + 1 + i] * data.u[k - i];
    e[k - eta] = acc;
  }
  return e;
}

/// Sample (population-normalized) variance of the equation-error residuals.
[[nodiscard]] inline double residual_variance(const std::vector<double>& theta, const DataSet& data) {
  return variance(innovations(theta, data));
}

namespace detail {

/// Rows k = 0..K of cos(pi g k / M) and sin(pi g k / M), g = 0..M, cached per
/// thread and grown on demand.
class HarmonicTable {
 public:
  explicit HarmonicTable(std::size_t m) : m_(m) {}

  void ensure(std::size_t harmonics) {
    while (cos_.size() <= harmonics) {
      const std::size_t k = cos_.size();
      std::vector<double> c(m_ + 1);
      std::vector<double> s(m_ + 1);
      for (std::size_t g = 0; g <= m_; ++g) {
        const std::size_t phase = (g * k) % (2 * m_);
        const double angle = std::numbers::pi * static_cast<double>(phase) / static_cast<double>(m_);
        c[g] = std::cos(angle);
        s[g] = std::sin(angle);
      }
      cos_.push_back(std::move(c));
      sin_.push_back(std::move(s));
    }
  }

  [[nodiscard]] const std::vector<double>& cos(std::size_t k) const { return cos_[k]; }
  [[nodiscard]] const std::vector<double>& sin(std::size_t k) const { return sin_[k]; }

 private:
  std::size_t m_;
  std::vector<std::vector<double>> cos_;
  std::vector<std::vector<double>> sin_;
};

inline HarmonicTable& harmonic_table(std::size_t m) {
  thread_local std::map<std::size_t, HarmonicTable> cache;
  return cache.try_emplace(m, m).first->second;
}

}  // namespace detail

/// sigma[l] = (sigma_e2 / pi) * integral_0^pi cos(w l) / |A(e^-jw)|^2 dw by the
/// trapezoidal rule on `grid_points` equal intervals, l = 0..max_lag.
[[nodiscard]] inline std::vector<double> acvf_from_model(std::span<const double> a, double sigma_e2,
                                                         std::size_t max_lag, std::size_t grid_points = 4096) {
  if (grid_points < 512) throw ConfigurationError("acvf_from_model: grid_points must be >= 512");
  if (!(sigma_e2 >= 0.0)) throw InputError("acvf_from_model: sigma_e2 must be >= 0");
  if (!is_stable(a)) throw NumericalError("acvf_from_model: unstable A-polynomial");

  const std::size_t m = grid_points;
  detail::HarmonicTable& table = detail::harmonic_table(m);
  table.ensure(std::max(a.size(), max_lag));

  // A(e^-jw) = 1 + sum_i a_i (cos(w i) - j sin(w i)) on the grid w = pi g / M.
  std::vector<double> re(m + 1, 1.0);
  std::vector<double> im(m + 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double coeff = a[i];
    const std::vector<double>& c = table.cos(i + 1);
    const std::vector<double>& s = table.sin(i + 1);
    for (std::size_t g = 0; g <= m; ++g) {
      re[g] += coeff * c[g];
      im[g] -= coeff * s[g];
    }
  }
  std::vector<double> weight(m + 1);
  double min_mag2 = std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g <= m; ++g) {
    const double mag2 = re[g] * re[g] + im[g] * im[g];
    min_mag2 = std::min(min_mag2, mag2);
    weight[g] = 1.0 / mag2;
  }
  if (min_mag2 < 1e-16) throw NumericalError("acvf_from_model: |A(e^-jw)| below 1e-8 (pole near the unit circle)");
  weight[0] *= 0.5;
  weight[m] *= 0.5;

  const double scale = sigma_e2 / static_cast<double>(m);  // (sigma_e2 / pi) * (pi / M)
  std::vector<double> acvf(max_lag + 1, 0.0);
  for (std::size_t l = 0; l <= max_lag; ++l) {
    const std::vector<double>& c = table.cos(l);
    double acc = 0.0;
    for (std::size_t g = 0; g <= m; ++g) acc += weight[g] * c[g];
    acvf[l] = acc * scale;
  }
  return acvf;
}

// ---------------------------------------------------------------------------
// Inner loop
// ---------------------------------------------------------------------------

struct InnerLoopResult {
  /// Stacked theta, length 2(eta+1).
  std::vector<double> theta;
  NoiseModel noise;
  std::vector<IterationRecord> trace;
  bool converged = false;
  /// The residual variance vanished (noise-free data): no noise pencil exists.
  bool noise_free = false;
};

/// Residual variances at or below this fraction of mean(y^2) are treated as
/// exactly zero noise.
inline constexpr double kNoiseFreeRatio = 1e-20;

[[nodiscard]] inline double mean_square(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

/// Alternates generalized EVD at lag eta and noise re-estimation, starting
/// from Sigma_e = I, until the relative theta change drops below conv_tol or
/// max_inner_iters is reached (converged = false, result still returned).
[[nodiscard]] inline InnerLoopResult inner_loop(const DataSet& data, std::size_t eta, const IdentificationConfig& config) {
  config.validate();
  if (eta < 1) throw ConfigurationError("inner_loop: eta must be >= 1");
  data.require_lag(eta);
  const Matrix s = sample_covariance(build_lagged_matrix(data, eta));
  const auto dim = static_cast<Index>(2 * (eta + 1));
  Matrix sigma = Matrix::Identity(dim, dim);
  const double noise_floor = kNoiseFreeRatio * mean_square(data.y);

  InnerLoopResult out;
  std::vector<double> previous;
  for (std::size_t iter = 0; iter < config.max_inner_iters; ++iter) {
    const PencilSpectrum spectrum = identify_evd(s, sigma);
    if (spectrum.values.empty()) throw NumericalError("inner_loop: pencil has no finite real eigenvalue");
    std::vector<double> theta = extract_theta(spectrum.vectors.front());
    const double sigma_e2 = residual_variance(theta, data);

    IterationRecord record{theta, sigma_e2, spectrum.values.front(), 0.0};
    if (!previous.empty()) {
      double diff = 0.0;
      double base = 0.0;
      for (std::size_t i = 0; i < theta.size(); ++i) {
        diff += (theta[i] - previous[i]) * (theta[i] - previous[i]);
        base += previous[i] * previous[i];
      }
      record.relative_change = std::sqrt(diff / base);
    }
    out.trace.push_back(record);
    out.theta = theta;

    if (sigma_e2 <= noise_floor) {
      out.noise = NoiseModel{sigma_e2, std::vector<double>(eta + 1, 0.0)};
      out.noise_free = true;
      out.converged = true;
      return out;
    }
    out.noise = NoiseModel{sigma_e2, acvf_from_model(theta_a(theta), sigma_e2, eta, config.acvf_grid_points)};
    if (!previous.empty() && record.relative_change < config.conv_tol) {
      out.converged = true;
      return out;
    }
    sigma = build_noise_covariance(out.noise, eta);
    previous = std::move(theta);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Order determination
// ---------------------------------------------------------------------------

/// Number of eigenvalues in [1 - tol, 1 + tol], scanning the ascending list
/// and stopping at the first eigenvalue above 1 + tol.
[[nodiscard]] inline std::size_t count_unity_eigenvalues(std::span<const double> ascending, double unity_tol) {
  std::size_t count = 0;
  for (double lambda : ascending) {
    if (lambda > 1.0 + unity_tol) break;
    if (std::abs(lambda - 1.0) <= unity_tol) ++count;
  }
  return count;
}

/// eta_hat = L - d_hat + 1.
[[nodiscard]] inline std::size_t estimate_order(std::size_t lag, std::size_t d_hat) {
  if (d_hat > lag + 1) throw InputError("estimate_order: d_hat exceeds L + 1");
  return lag - d_hat + 1;
}

/// Eigenvalues of S below this fraction of trace(S) count as exact linear
/// relations in noise-free data.
inline constexpr double kNullityRatio = 1e-8;

/// Runs the inner loop for one order guess and verifies it at the larger lag.
[[nodiscard]] inline GuessDiagnostics evaluate_guess(const DataSet& data, std::size_t eta_guess,
                                                     const IdentificationConfig& config,
                                                     InnerLoopResult* inner_out = nullptr) {
  GuessDiagnostics diag;
  diag.eta_guess = eta_guess;
  diag.l_verify = eta_guess + config.l_verify_offset;
  InnerLoopResult inner = inner_loop(data, eta_guess, config);
  diag.theta = inner.theta;
  diag.sigma_e2 = inner.noise.sigma_e2;
  diag.inner_converged = inner.converged;
  diag.trace = inner.trace;

  data.require_lag(diag.l_verify);
  const Matrix s = sample_covariance(build_lagged_matrix(data, diag.l_verify));
  if (inner.noise_free) {
    const linalg::SymmetricEigen eig = linalg::symmetric_eig(s);
    const double threshold = kNullityRatio * s.trace();
    for (Index i = 0; i < eig.values.size(); ++i) {
      diag.eigenvalues.push_back(eig.values(i));
      if (eig.values(i) <= threshold) ++diag.d_hat;
    }
  } else {
    const NoiseModel noise{inner.noise.sigma_e2, acvf_from_model(theta_a(inner.theta), inner.noise.sigma_e2,
                                                                 diag.l_verify, config.acvf_grid_points)};
    const PencilSpectrum spectrum = identify_evd(s, build_noise_covariance(noise, diag.l_verify));
    diag.eigenvalues = spectrum.values;
    diag.infinite_count = spectrum.infinite_count;
    diag.d_hat = count_unity_eigenvalues(diag.eigenvalues, config.unity_tol);
  }
  diag.eta_hat = estimate_order(diag.l_verify, std::min(diag.d_hat, diag.l_verify + 1));
  diag.accepted = diag.d_hat >= 1 && diag.eta_hat == eta_guess;
  if (inner_out != nullptr) *inner_out = std::move(inner);
  return diag;
}

// ---------------------------------------------------------------------------
// Structure pruning
// ---------------------------------------------------------------------------

/// Reads (n_y, n_u, D) off a stacked theta.  A coefficient counts as zero when
/// |c| <= max(2 std(c), 0.05 max|b|); `theta_std` may be empty, leaving only
/// the relative threshold.  At least the largest-magnitude b survives.
/// Coefficients strictly inside the retained span keep their estimates.
[[nodiscard]] inline ArxModel prune_structure(const std::vector<double>& theta,
                                              const std::vector<double>& theta_std = {}) {
  const std::size_t eta = stacked_order(theta.size());
  if (!theta_std.empty() && theta_std.size() != theta.size())
    throw InputError("prune_structure: theta_std length differs from theta");
  const std::vector<double> a = theta_a(theta);
  const std::vector<double> b = theta_b(theta);
  double b_max = 0.0;
  std::size_t b_arg = 0;
  for (std::size_t j = 0; j <= eta; ++j) {
    if (std::abs(b[j]) > b_max) {
      b_max = std::abs(b[j]);
      b_arg = j;
    }
  }
  const auto survives = [&](std::size_t index, double value) {
    const double sd = theta_std.empty() ? 0.0 : theta_std[index];
    return std::abs(value) > std::max(2.0 * sd, 0.05 * b_max);
  };

  std::size_t n_y = 0;
  for (std::size_t i = 1; i <= eta; ++i)
    if (survives(i, a[i - 1])) n_y = i;

  std::optional<std::size_t> first_b;
  std::size_t last_b = 0;
  for (std::size_t j = 0; j <= eta; ++j) {
    if (survives(eta + 1 + j, b[j])) {
      if (!first_b) first_b = j;
      last_b = j;
    }
  }
  if (!first_b) {
    first_b = b_arg;
    last_b = b_arg;
  }

  std::vector<double> a_out(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(n_y));
  std::vector<double> b_out(b.begin() + static_cast<std::ptrdiff_t>(*first_b),
                            b.begin() + static_cast<std::ptrdiff_t>(last_b + 1));
  return ArxModel(std::move(a_out), std::move(b_out), *first_b);
}

}  // namespace arxgsd
