#pragma once

/// @file
/// Statistical validation: residual bootstrap of the iterative estimator, the
/// ordinary least squares baseline, and the NRMSE percentage fit.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "arxgsd/core_types.hpp"
#include "arxgsd/estimation.hpp"
#include "arxgsd/rng.hpp"
#include "arxgsd/signals.hpp"

namespace arxgsd {

// ---------------------------------------------------------------------------
// Bootstrap
// ---------------------------------------------------------------------------

struct BootstrapResult {
  std::vector<double> mean;
  /// Sample standard deviation (n - 1 normalization).
  std::vector<double> std;
  /// 2.5 % and 97.5 % percentiles, linear interpolation between order statistics.
  std::vector<double> lower;
  std::vector<double> upper;
  std::size_t replicates = 0;
  std::size_t failures = 0;
  std::uint64_t seed = 0;
  /// Successful replicate estimates in replicate order.
  std::vector<std::vector<double>> samples;

  friend bool operator==(const BootstrapResult&, const BootstrapResult&) = default;
};

/// Too many replicates failed; carries one message per failure.
class BootstrapError : public Error {
 public:
  BootstrapError(const std::string& what, std::vector<std::string> failures)
      : Error(what), failures_(std::move(failures)) {}
  [[nodiscard]] const std::vector<std::string>& failures() const { return failures_; }

 private:
  std::vector<std::string> failures_;
};

/// Replicate failure share above which the bootstrap is rejected.
inline constexpr double kMaxBootstrapFailureRate = 0.2;

/// Percentile of an ascending sample at probability p in [0, 1].
[[nodiscard]] inline double percentile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw InputError("percentile_sorted: empty sample");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

/// Output of the fitted stacked-theta model driven by `u` and innovations `e`:
/// A(q^-1) y = B(q^-1) u + e from rest.
[[nodiscard]] inline std::vector<double> regenerate_output(const std::vector<double>& theta,
                                                           std::span<const double> u, std::span<const double> e) {
  const std::size_t eta = stacked_order(theta.size());
  std::vector<double> y(u.size(), 0.0);
  for (std::size_t k = 0; k < u.size(); ++k) {
    double acc = e[k];
    for (std::size_t i = 0; i <= eta && i <= k; ++i) {
      acc -= theta[eta + 1 + i] * u[k - i];
      if (i > 0) acc -= theta[i] * y[k - i];
    }
    y[k] = acc;
  }
  return y;
}

/// Residual bootstrap of the inner loop at the order implied by `theta`.
/// Innovations are centered and resampled with replacement, y is rebuilt
/// through the fitted model (noise refiltered through 1/A), and replicate r
/// uses seed derive_seed(config.seed, r).  `noise` is the converged noise
/// model; its variance is reported only and the replicates re-estimate it.
[[nodiscard]] inline BootstrapResult bootstrap_ci(const DataSet& data, const std::vector<double>& theta,
                                                  const NoiseModel& noise, const IdentificationConfig& config) {
  config.validate();
  noise.validate();
  const std::size_t eta = stacked_order(theta.size());
  if (!is_stable(theta_a(theta))) throw NumericalError("bootstrap_ci: fitted A-polynomial is unstable");

  std::vector<double> resid = innovations(theta, data);
  const double m = mean(resid);
  for (double& e : resid) e -= m;

  BootstrapResult out;
  out.seed = config.seed;
  std::vector<std::string> failures;
  for (std::size_t r = 0; r < config.bootstrap_reps; ++r) {
    Rng rng(derive_seed(config.seed, r));
    std::vector<double> e(data.size());
    for (double& x : e) x = resid[rng.below(resid.size())];
    DataSet replicate{data.u, regenerate_output(theta, data.u, e), std::nullopt};
    try {
      out.samples.push_back(inner_loop(replicate, eta, config).theta);
    } catch (const Error& ex) {
      failures.push_back("replicate " + std::to_string(r) + ": " + ex.what());
    }
  }
  out.replicates = out.samples.size();
  out.failures = failures.size();
  if (config.bootstrap_reps > 0 &&
      static_cast<double>(out.failures) > kMaxBootstrapFailureRate * static_cast<double>(config.bootstrap_reps))
    throw BootstrapError("bootstrap_ci: " + std::to_string(out.failures) + " of " +
                             std::to_string(config.bootstrap_reps) + " replicates failed",
                         std::move(failures));
  if (out.samples.empty()) return out;

  const std::size_t p = theta.size();
  const auto count = static_cast<double>(out.samples.size());
  out.mean.assign(p, 0.0);
  out.std.assign(p, 0.0);
  out.lower.assign(p, 0.0);
  out.upper.assign(p, 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    std::vector<double> column;
    column.reserve(out.samples.size());
    for (const auto& s : out.samples) column.push_back(s[i]);
    double acc = 0.0;
    for (double v : column) acc += v;
    const double mu = acc / count;
    double ss = 0.0;
    for (double v : column) ss += (v - mu) * (v - mu);
    out.mean[i] = mu;
    out.std[i] = column.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
    std::sort(column.begin(), column.end());
    out.lower[i] = std::min(percentile_sorted(column, 0.025), mu);
    out.upper[i] = std::max(percentile_sorted(column, 0.975), mu);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ordinary least squares
// ---------------------------------------------------------------------------

/// Least squares fit of the supplied structure with regressor
/// (-y[k-1]..-y[k-n_y], u[k-D]..u[k-n_u]) over k = max(n_y, n_u)..N-1, by
/// column-pivoted Householder QR.  Returns the compact theta
/// [1, a_1..a_ny, -b_D..-b_nu].
[[nodiscard]] inline std::vector<double> ols_estimate(const DataSet& data, std::size_t n_y, std::size_t n_u,
                                                      std::size_t delay) {
  data.validate();
  if (n_u < delay) throw InputError("ols_estimate: n_u must be >= delay");
  const std::size_t start = std::max(n_y, n_u);
  const std::size_t nb = n_u - delay + 1;
  const std::size_t p = n_y + nb;
  if (data.size() <= start + p) throw InputError("ols_estimate: not enough samples for the structure");
  const std::size_t rows = data.size() - start;

  Matrix phi(static_cast<Index>(rows), static_cast<Index>(p));
  Vector target(static_cast<Index>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t k = start + r;
    const auto row = static_cast<Index>(r);
    for (std::size_t i = 1; i <= n_y; ++i) phi(row, static_cast<Index>(i - 1)) = -data.y[k - i];
    for (std::size_t j = 0; j < nb; ++j) phi(row, static_cast<Index>(n_y + j)) = data.u[k - delay - j];
    target(row) = data.y[k];
  }
  const Eigen::ColPivHouseholderQR<Matrix> qr(phi);
  if (static_cast<std::size_t>(qr.rank()) < p)
    throw NumericalError("ols_estimate: regressor matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                         " < " + std::to_string(p) + ")");
  const Vector beta = qr.solve(target);

  std::vector<double> theta(1 + p);
  theta[0] = 1.0;
  for (std::size_t i = 0; i < n_y; ++i) theta[1 + i] = beta(static_cast<Index>(i));
  for (std::size_t j = 0; j < nb; ++j) theta[1 + n_y + j] = -beta(static_cast<Index>(n_y + j));
  return theta;
}

/// Model form of ols_estimate.
[[nodiscard]] inline ArxModel ols_model(const DataSet& data, std::size_t n_y, std::size_t n_u, std::size_t delay) {
  const std::vector<double> theta = ols_estimate(data, n_y, n_u, delay);
  std::vector<double> a(theta.begin() + 1, theta.begin() + 1 + static_cast<std::ptrdiff_t>(n_y));
  std::vector<double> b;
  for (std::size_t j = 1 + n_y; j < theta.size(); ++j) b.push_back(-theta[j]);
  return ArxModel(std::move(a), std::move(b), delay);
}

// ---------------------------------------------------------------------------
// Fit metric
// ---------------------------------------------------------------------------

/// 100 (1 - ||y* - y_hat|| / ||y* - mean(y*)||).
[[nodiscard]] inline double percent_fit(std::span<const double> y_star, std::span<const double> y_hat) {
  if (y_star.size() != y_hat.size()) throw InputError("percent_fit: length mismatch");
  if (y_star.empty()) throw InputError("percent_fit: empty sequences");
  const double m = mean(y_star);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < y_star.size(); ++k) {
    num += (y_star[k] - y_hat[k]) * (y_star[k] - y_hat[k]);
    den += (y_star[k] - m) * (y_star[k] - m);
  }
  if (den == 0.0) throw InputError("percent_fit: constant reference output");
  return 100.0 * (1.0 - std::sqrt(num / den));
}

}  // namespace arxgsd
