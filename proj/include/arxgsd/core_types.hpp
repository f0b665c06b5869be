#pragma once

/// @file
/// Vocabulary types shared across the arxgsd library: ARX models, noise
/// models, data sets, identification configuration and reports.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace arxgsd {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration (tolerances, PRBS taps, conflicting options).
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

/// Malformed or insufficient input data.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: unstable polynomial, non-convergence, degenerate pivots.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The eigenvector used for normalization has a vanishing leading entry.
class DegenerateNormalizationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// ---------------------------------------------------------------------------
// Models and data
// ---------------------------------------------------------------------------

/// SISO ARX difference equation
///
///   y[k] + a_1 y[k-1] + ... + a_ny y[k-ny] = b_D u[k-D] + ... + b_nu u[k-nu]
///
/// `a` holds a_1..a_ny (the unit leading coefficient is implicit), `b` holds
/// b_D..b_nu.  The A-polynomial is stable when every root of
/// z^ny + a_1 z^(ny-1) + ... + a_ny lies strictly inside the unit circle.
struct ArxModel {
  std::vector<double> a;
  std::vector<double> b;
  std::size_t n_y = 0;
  std::size_t n_u = 0;
  std::size_t delay = 0;

  ArxModel() = default;

  /// Orders are derived from the coefficient vectors.  An empty `b` gives
  /// n_u = delay with no input term.
  ArxModel(std::vector<double> a_coeffs, std::vector<double> b_coeffs, std::size_t input_delay)
      : a(std::move(a_coeffs)), b(std::move(b_coeffs)), n_y(a.size()), delay(input_delay) {
    n_u = b.empty() ? delay : delay + b.size() - 1;
  }

  /// Throws InputError when the coefficient counts disagree with the orders.
  void validate() const {
    if (a.size() != n_y) throw InputError("ArxModel: length(a) != n_y");
    const std::size_t expected_b = n_u >= delay ? n_u - delay + 1 : 0;
    if (!b.empty() && b.size() != expected_b) throw InputError("ArxModel: length(b) != n_u - delay + 1");
    for (double c : a)
      if (!std::isfinite(c)) throw InputError("ArxModel: non-finite a coefficient");
    for (double c : b)
      if (!std::isfinite(c)) throw InputError("ArxModel: non-finite b coefficient");
  }

  /// Coefficient of u[k-lag], zero outside the D..n_u window.
  [[nodiscard]] double b_at(std::size_t lag) const {
    if (b.empty() || lag < delay || lag > n_u) return 0.0;
    return b[lag - delay];
  }

  friend bool operator==(const ArxModel&, const ArxModel&) = default;
};

/// eta = max(n_y, n_u).
[[nodiscard]] inline std::size_t equation_order(const ArxModel& model) {
  return std::max(model.n_y, model.n_u);
}

/// Colored output noise v[k] = e[k] / A(q^-1): innovation variance plus the
/// autocovariance sequence acvf[0..L_max] of v.
struct NoiseModel {
  double sigma_e2 = 0.0;
  std::vector<double> acvf;

  void validate() const {
    if (!(sigma_e2 >= 0.0)) throw InputError("NoiseModel: sigma_e2 must be >= 0");
    if (!acvf.empty()) {
      if (!(acvf[0] >= 0.0)) throw InputError("NoiseModel: acvf[0] must be >= 0");
      const double slack = 1e-12 * acvf[0];
      for (double c : acvf)
        if (std::abs(c) > acvf[0] + slack) throw InputError("NoiseModel: |acvf[l]| exceeds acvf[0]");
    }
  }

  friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

/// Paired input/output samples.  `y_star` is the noise-free output and is only
/// available for simulated data.
struct DataSet {
  std::vector<double> u;
  std::vector<double> y;
  std::optional<std::vector<double>> y_star;

  [[nodiscard]] std::size_t size() const { return y.size(); }

  void validate() const {
    if (u.size() != y.size()) throw InputError("DataSet: length(u) != length(y)");
    if (y_star && y_star->size() != y.size()) throw InputError("DataSet: length(y_star) != length(y)");
  }

  /// Stacking at lag L needs N > 2(L+1) samples.
  void require_lag(std::size_t lag) const {
    validate();
    if (size() <= 2 * (lag + 1))
      throw InputError("DataSet: " + std::to_string(size()) + " samples are insufficient for stacking lag " +
                       std::to_string(lag));
  }

  friend bool operator==(const DataSet&, const DataSet&) = default;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct IdentificationConfig {
  std::size_t eta_guess_initial = 1;
  std::size_t eta_max = 10;
  /// Verification stacking lag is eta_guess + l_verify_offset.
  std::size_t l_verify_offset = 3;
  /// Absolute band |lambda - 1| <= unity_tol for unity eigenvalues.
  double unity_tol = 0.15;
  /// Relative 2-norm change of theta between inner iterations.
  double conv_tol = 1e-6;
  std::size_t max_inner_iters = 50;
  std::size_t acvf_grid_points = 4096;
  std::size_t bootstrap_reps = 100;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(unity_tol > 0.0) || !(conv_tol > 0.0))
      throw ConfigurationError("IdentificationConfig: tolerances must be > 0");
    if (eta_guess_initial < 1) throw ConfigurationError("IdentificationConfig: eta_guess_initial must be >= 1");
    if (eta_max < eta_guess_initial)
      throw ConfigurationError("IdentificationConfig: eta_max must be >= eta_guess_initial");
    if (max_inner_iters < 1) throw ConfigurationError("IdentificationConfig: max_inner_iters must be >= 1");
    if (acvf_grid_points < 512) throw ConfigurationError("IdentificationConfig: acvf_grid_points must be >= 512");
  }

  friend bool operator==(const IdentificationConfig&, const IdentificationConfig&) = default;
};

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

/// One inner-loop iteration.
struct IterationRecord {
  std::vector<double> theta;
  double sigma_e2 = 0.0;
  /// Minimum finite generalized eigenvalue of the pencil that produced theta.
  double min_eigenvalue = 0.0;
  /// ||theta_i - theta_{i-1}|| / ||theta_{i-1}||; zero on the first iteration.
  double relative_change = 0.0;

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

/// Outcome of one outer-loop order guess.
struct GuessDiagnostics {
  std::size_t eta_guess = 0;
  std::size_t l_verify = 0;
  std::vector<double> theta;
  double sigma_e2 = 0.0;
  bool inner_converged = false;
  std::vector<IterationRecord> trace;
  /// Verification eigenvalues, ascending.
  std::vector<double> eigenvalues;
  std::size_t infinite_count = 0;
  std::size_t d_hat = 0;
  /// L_verify - d_hat + 1 (d_hat == 0 means under-parameterized).
  std::size_t eta_hat = 0;
  bool accepted = false;
  /// Empty when the guess was evaluated normally; otherwise the failure reason.
  std::string failure;

  friend bool operator==(const GuessDiagnostics&, const GuessDiagnostics&) = default;
};

struct IdentificationReport {
  std::size_t eta_hat = 0;
  std::size_t d_hat = 0;
  std::size_t l_verify = 0;
  /// [1, a_1..a_eta, -b_0..-b_eta]
  std::vector<double> theta;
  /// Bootstrap standard deviation per theta entry; empty when bootstrap is off.
  std::vector<double> theta_std;
  ArxModel model;
  NoiseModel noise;
  /// Verification eigenvalues, ascending.
  std::vector<double> eigenvalues;
  std::vector<IterationRecord> trace;
  bool converged = false;
  IdentificationConfig config;
  std::vector<GuessDiagnostics> guesses;

  friend bool operator==(const IdentificationReport&, const IdentificationReport&) = default;
};

/// No order guess in [eta_guess_initial, eta_max] was accepted.
class OrderSearchError : public Error {
 public:
  OrderSearchError(const std::string& what, std::vector<GuessDiagnostics> diagnostics)
      : Error(what), diagnostics_(std::move(diagnostics)) {}

  [[nodiscard]] const std::vector<GuessDiagnostics>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<GuessDiagnostics> diagnostics_;
};

// ---------------------------------------------------------------------------
// Parameter-vector layout helpers
// ---------------------------------------------------------------------------

/// Stacked parameter vector of order eta: [1, a_1..a_eta, -b_0..-b_eta], the
/// layout produced by generalized-eigenvector normalization at lag eta.
[[nodiscard]] inline std::vector<double> stacked_theta(const ArxModel& model, std::size_t eta) {
  if (eta < equation_order(model)) throw InputError("stacked_theta: eta below the model's equation order");
  std::vector<double> theta(2 * (eta + 1), 0.0);
  theta[0] = 1.0;
  for (std::size_t i = 0; i < model.a.size(); ++i) theta[i + 1] = model.a[i];
  for (std::size_t lag = 0; lag <= eta; ++lag) theta[eta + 1 + lag] = -model.b_at(lag);
  return theta;
}

/// Order implied by a stacked theta length 2(eta+1).
[[nodiscard]] inline std::size_t stacked_order(std::size_t theta_size) {
  if (theta_size < 2 || theta_size % 2 != 0) throw InputError("stacked theta must have even length >= 2");
  return theta_size / 2 - 1;
}

/// a_1..a_eta from a stacked theta.
[[nodiscard]] inline std::vector<double> theta_a(const std::vector<double>& theta) {
  const std::size_t eta = stacked_order(theta.size());
  return {theta.begin() + 1, theta.begin() + 1 + static_cast<std::ptrdiff_t>(eta)};
}

/// b_0..b_eta (sign restored) from a stacked theta.
[[nodiscard]] inline std::vector<double> theta_b(const std::vector<double>& theta) {
  const std::size_t eta = stacked_order(theta.size());
  std::vector<double> b(eta + 1);
  for (std::size_t lag = 0; lag <= eta; ++lag) b[lag] = -theta[eta + 1 + lag];
  return b;
}

/// Full-span model (n_y = n_u = eta, delay 0) read off a stacked theta.
[[nodiscard]] inline ArxModel model_from_theta(const std::vector<double>& theta) {
  return ArxModel(theta_a(theta), theta_b(theta), 0);
}

}  // namespace arxgsd
