#pragma once

/// @file
/// Excitation signals, ARX simulation with AR-colored output noise, and
/// empirical autocovariance.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "arxgsd/core_types.hpp"
#include "arxgsd/rng.hpp"

namespace arxgsd {

// ---------------------------------------------------------------------------
// Polynomial helpers
// ---------------------------------------------------------------------------

/// True when every root of z^n + a_1 z^(n-1) + ... + a_n lies strictly inside
/// the unit circle, i.e. 1/A(z^-1) is a stable causal filter.  Uses the
/// Schur-Cohn step-down recursion: all reflection coefficients |k| < 1.
[[nodiscard]] inline bool is_stable(std::span<const double> a) {
  std::vector<double> poly(a.begin(), a.end());
  while (!poly.empty()) {
    const std::size_t p = poly.size();
    const double k = poly[p - 1];
    if (!std::isfinite(k) || std::abs(k) >= 1.0) return false;
    const double denom = 1.0 - k * k;
    std::vector<double> lower(p - 1);
    for (std::size_t i = 0; i + 1 < p; ++i) lower[i] = (poly[i] - k * poly[p - 2 - i]) / denom;
    poly = std::move(lower);
  }
  return true;
}

/// g = sum_k h[k]^2 for the impulse response h of 1/A(z^-1), truncated once
/// the remaining tail is below 1e-12 g.  Throws NumericalError for an
/// unstable A.
[[nodiscard]] inline double impulse_response_energy(std::span<const double> a) {
  if (!is_stable(a)) throw NumericalError("impulse_response_energy: unstable A-polynomial");
  const std::size_t order = a.size();
  if (order == 0) return 1.0;
  std::vector<double> h{1.0};
  double energy = 1.0;
  constexpr std::size_t kMaxTerms = 10'000'000;
  for (std::size_t k = 1; k < kMaxTerms; ++k) {
    double hk = 0.0;
    for (std::size_t i = 1; i <= order && i <= k; ++i) hk -= a[i - 1] * h[k - i];
    h.push_back(hk);
    energy += hk * hk;
    if (k >= order) {
      // The state (h[k-order+1..k]) bounds the whole remaining tail up to a
      // constant; once its energy is negligible the sum has converged.
      double state = 0.0;
      for (std::size_t i = 0; i < order; ++i) state += h[k - i] * h[k - i];
      if (state < 1e-14 * energy) return energy;
    }
  }
  throw NumericalError("impulse_response_energy: impulse response did not decay");
}

// ---------------------------------------------------------------------------
// Basic statistics
// ---------------------------------------------------------------------------

[[nodiscard]] inline double mean(std::span<const double> x) {
  if (x.empty()) throw InputError("mean: empty sequence");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Population variance (1/N normalization).
[[nodiscard]] inline double variance(std::span<const double> x) {
  const double m = mean(x);
  double acc = 0.0;
  for (double v : x) acc += (v - m) * (v - m);
  return acc / static_cast<double>(x.size());
}

/// Biased sample autocovariance sigma[l] = (1/N) sum (x[k]-m)(x[k+l]-m),
/// l = 0..max_lag.  The biased estimator keeps the Toeplitz matrix PSD.
[[nodiscard]] inline std::vector<double> sample_acvf(std::span<const double> x, std::size_t max_lag) {
  if (x.empty()) throw InputError("sample_acvf: empty sequence");
  if (max_lag >= x.size()) throw InputError("sample_acvf: max_lag must be < length");
  const double m = mean(x);
  const std::size_t n = x.size();
  std::vector<double> centered(n);
  for (std::size_t k = 0; k < n; ++k) centered[k] = x[k] - m;
  std::vector<double> acvf(max_lag + 1, 0.0);
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    double acc = 0.0;
    for (std::size_t k = 0; k + lag < n; ++k) acc += centered[k] * centered[k + lag];
    acvf[lag] = acc / static_cast<double>(n);
  }
  return acvf;
}

// ---------------------------------------------------------------------------
// PRBS
// ---------------------------------------------------------------------------

/// Maximal-length Fibonacci LFSR.  Register bit i (1-based) is bit i-1 of
/// `seed`; the output is bit n and the feedback (XOR of the tap bits) enters
/// at bit 1.
struct PrbsSpec {
  unsigned register_length = 10;
  std::vector<unsigned> taps;
  std::uint64_t seed = 1;
  double low = -1.0;
  double high = 1.0;
};

/// Known primitive feedback taps for register lengths 2..16.
[[nodiscard]] inline std::vector<unsigned> default_prbs_taps(unsigned n) {
  switch (n) {
    case 2: return {2, 1};
    case 3: return {3, 2};
    case 4: return {4, 3};
    case 5: return {5, 3};
    case 6: return {6, 5};
    case 7: return {7, 6};
    case 8: return {8, 6, 5, 4};
    case 9: return {9, 5};
    case 10: return {10, 7};
    case 11: return {11, 9};
    case 12: return {12, 11, 10, 4};
    case 13: return {13, 12, 11, 8};
    case 14: return {14, 13, 12, 2};
    case 15: return {15, 14};
    case 16: return {16, 15, 13, 4};
    default: throw ConfigurationError("default_prbs_taps: register length must be in 2..16");
  }
}

[[nodiscard]] inline PrbsSpec default_prbs_spec(unsigned n) {
  PrbsSpec spec;
  spec.register_length = n;
  spec.taps = default_prbs_taps(n);
  return spec;
}

/// `length` samples (default: one period of 2^n - 1).  Throws
/// ConfigurationError when the taps do not give a maximal-length sequence.
[[nodiscard]] inline std::vector<double> generate_prbs(const PrbsSpec& spec, std::size_t length = 0) {
  const unsigned n = spec.register_length;
  if (n < 2 || n > 32) throw ConfigurationError("generate_prbs: register length must be in 2..32");
  const std::vector<unsigned> taps = spec.taps.empty() ? default_prbs_taps(n) : spec.taps;
  std::uint64_t tap_mask = 0;
  for (unsigned t : taps) {
    if (t < 1 || t > n) throw ConfigurationError("generate_prbs: tap position out of range");
    tap_mask |= std::uint64_t{1} << (t - 1);
  }
  const std::uint64_t state_mask = (std::uint64_t{1} << n) - 1;
  const std::uint64_t initial = spec.seed & state_mask;
  if (initial == 0) throw ConfigurationError("generate_prbs: seed must be a nonzero register state");

  const std::uint64_t period = state_mask;
  const auto advance = [&](std::uint64_t state) {
    const auto feedback = static_cast<std::uint64_t>(__builtin_popcountll(state & tap_mask) & 1);
    return ((state << 1) | feedback) & state_mask;
  };

  // Period check: the register must not revisit its initial state early.
  std::uint64_t state = initial;
  for (std::uint64_t k = 1; k <= period; ++k) {
    state = advance(state);
    if (state == initial && k < period)
      throw ConfigurationError("generate_prbs: taps are not primitive (period " + std::to_string(k) + " < " +
                               std::to_string(period) + ")");
  }
  if (state != initial) throw ConfigurationError("generate_prbs: taps are not primitive");

  const std::size_t count = length == 0 ? static_cast<std::size_t>(period) : length;
  std::vector<double> out(count);
  state = initial;
  for (std::size_t k = 0; k < count; ++k) {
    out[k] = ((state >> (n - 1)) & 1U) != 0 ? spec.high : spec.low;
    state = advance(state);
  }
  return out;
}

// ---------------------------------------------------------------------------
// ARX simulation
// ---------------------------------------------------------------------------

struct SimulationOptions {
  /// Noise-filter samples discarded before k = 0.  The plant always starts
  /// from rest.
  std::size_t burn_in = 0;
  bool allow_unstable = false;
};

struct SimulatedOutput {
  std::vector<double> y_star;
  std::vector<double> y;
  std::vector<double> v;

  [[nodiscard]] DataSet to_dataset(std::vector<double> u) const { return DataSet{std::move(u), y, y_star}; }
};

/// Noise-free response of the deterministic part, zero initial conditions.
[[nodiscard]] inline std::vector<double> simulate_noise_free(const ArxModel& model, std::span<const double> u) {
  model.validate();
  const std::size_t n = u.size();
  std::vector<double> y(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t lag = model.delay; lag <= model.n_u && !model.b.empty(); ++lag)
      if (lag <= k) acc += model.b[lag - model.delay] * u[k - lag];
    for (std::size_t i = 1; i <= model.n_y && i <= k; ++i) acc -= model.a[i - 1] * y[k - i];
    y[k] = acc;
  }
  return y;
}

/// v[k] = e[k] / A(q^-1) for a given innovation sequence, zero initial state.
[[nodiscard]] inline std::vector<double> ar_filter(std::span<const double> a, std::span<const double> e) {
  std::vector<double> v(e.size(), 0.0);
  for (std::size_t k = 0; k < e.size(); ++k) {
    double acc = e[k];
    for (std::size_t i = 1; i <= a.size() && i <= k; ++i) acc -= a[i - 1] * v[k - i];
    v[k] = acc;
  }
  return v;
}

/// y*[k] from the difference equation, v[k] = e[k]/A(q^-1) with
/// e ~ N(0, sigma_e2), y = y* + v.  Fixed seed gives bit-identical output.
[[nodiscard]] inline SimulatedOutput simulate_arx(const ArxModel& model, std::span<const double> u, double sigma_e2,
                                                  std::uint64_t seed, const SimulationOptions& options = {}) {
  model.validate();
  if (!(sigma_e2 >= 0.0) || !std::isfinite(sigma_e2)) throw InputError("simulate_arx: sigma_e2 must be >= 0");
  if (!options.allow_unstable && !is_stable(model.a)) throw NumericalError("simulate_arx: unstable A-polynomial");
  if (u.size() < equation_order(model)) throw InputError("simulate_arx: input shorter than the equation order");

  SimulatedOutput out;
  out.y_star = simulate_noise_free(model, u);

  const std::size_t total = u.size() + options.burn_in;
  std::vector<double> e(total, 0.0);
  if (sigma_e2 > 0.0) {
    Rng rng(seed);
    const double sd = std::sqrt(sigma_e2);
    for (double& x : e) x = sd * rng.normal();
  }
  std::vector<double> v_full = ar_filter(model.a, e);
  out.v.assign(v_full.begin() + static_cast<std::ptrdiff_t>(options.burn_in), v_full.end());

  out.y.resize(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) out.y[k] = out.y_star[k] + out.v[k];
  return out;
}

/// How a signal-to-noise ratio relates to the innovation variance.
enum class SnrDefinition {
  /// snr = var(y*) / var(v); var(v) = sigma_e2 * g with g the energy of 1/A.
  kOutputNoise,
  /// snr = var(y*) / sigma_e2.
  kInnovation,
};

/// Innovation variance that realizes `snr` for the noise-free response of
/// `model` to `u`.
[[nodiscard]] inline double noise_variance_for_snr(const ArxModel& model, std::span<const double> u, double snr,
                                                   SnrDefinition definition = SnrDefinition::kOutputNoise) {
  if (!(snr > 0.0)) throw InputError("noise_variance_for_snr: snr must be > 0");
  const double g = definition == SnrDefinition::kOutputNoise ? impulse_response_energy(model.a) : 1.0;
  if (definition == SnrDefinition::kInnovation && !is_stable(model.a))
    throw NumericalError("noise_variance_for_snr: unstable A-polynomial");
  const std::vector<double> y_star = simulate_noise_free(model, u);
  return variance(y_star) / (snr * g);
}

}  // namespace arxgsd
