#pragma once

/// @file
/// Full two-loop identification: order search over equation-order guesses,
/// each estimated by the inner loop and verified by counting unity
/// eigenvalues at a larger stacking lag; the accepted guess is bootstrapped
/// and pruned into an ArxModel.

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "arxgsd/core_types.hpp"
#include "arxgsd/estimation.hpp"
#include "arxgsd/validation.hpp"

namespace arxgsd {

struct IdentifyOptions {
  /// Keep the bootstrap replicate estimates in the returned result.
  BootstrapResult* bootstrap_out = nullptr;
};

/// Order search from eta_guess_initial to eta_max.  A guess is accepted when
/// verification finds d_hat >= 1 unity eigenvalues and L_verify - d_hat + 1
/// equals the guess.  When a guess reports a smaller untried order, that
/// order is tried next before the search resumes.  Throws OrderSearchError
/// with every guess's diagnostics when no guess is accepted.
[[nodiscard]] inline IdentificationReport identify(const DataSet& data, const IdentificationConfig& config,
                                                   const IdentifyOptions& options = {}) {
  config.validate();
  data.validate();

  std::vector<GuessDiagnostics> guesses;
  std::set<std::size_t> tried;
  std::size_t next = config.eta_guess_initial;
  std::size_t detour = 0;

  while (true) {
    std::size_t eta = 0;
    if (detour != 0) {
      eta = detour;
      detour = 0;
    } else {
      while (next <= config.eta_max && tried.contains(next)) ++next;
      if (next > config.eta_max) break;
      eta = next++;
    }
    tried.insert(eta);

    InnerLoopResult inner;
    GuessDiagnostics diag;
    try {
      diag = evaluate_guess(data, eta, config, &inner);
    } catch (const Error& ex) {
      diag = GuessDiagnostics{};
      diag.eta_guess = eta;
      diag.l_verify = eta + config.l_verify_offset;
      diag.failure = ex.what();
      guesses.push_back(std::move(diag));
      continue;
    }

    if (!diag.accepted) {
      if (diag.d_hat >= 1 && diag.eta_hat < eta && diag.eta_hat >= config.eta_guess_initial &&
          !tried.contains(diag.eta_hat))
        detour = diag.eta_hat;
      guesses.push_back(std::move(diag));
      continue;
    }

    IdentificationReport report;
    report.eta_hat = diag.eta_hat;
    report.d_hat = diag.d_hat;
    report.l_verify = diag.l_verify;
    report.theta = inner.theta;
    report.noise = NoiseModel{inner.noise.sigma_e2,
                              inner.noise_free
                                  ? std::vector<double>(diag.l_verify + 1, 0.0)
                                  : acvf_from_model(theta_a(inner.theta), inner.noise.sigma_e2, diag.l_verify,
                                                    config.acvf_grid_points)};
    report.eigenvalues = diag.eigenvalues;
    report.trace = inner.trace;
    report.converged = inner.converged;
    report.config = config;
    guesses.push_back(std::move(diag));
    report.guesses = guesses;

    if (config.bootstrap_reps > 0) {
      BootstrapResult boot = bootstrap_ci(data, report.theta, report.noise, config);
      report.theta_std = boot.std;
      if (options.bootstrap_out != nullptr) *options.bootstrap_out = std::move(boot);
    }
    report.model = prune_structure(report.theta, report.theta_std);
    return report;
  }

  throw OrderSearchError("identify: no equation order in [" + std::to_string(config.eta_guess_initial) + ", " +
                             std::to_string(config.eta_max) + "] was accepted",
                         std::move(guesses));
}

}  // namespace arxgsd
