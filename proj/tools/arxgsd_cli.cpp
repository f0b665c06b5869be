// arxgsd command-line front end.
//
//   arxgsd simulate     --a=-0.4,0.6 --b=2 --delay=1 --prbs-order=10 --snr=10 --seed=1 --out=data.csv
//   arxgsd identify     --input=data.csv --out=report.json [--diagnostics=diag.csv]
//   arxgsd inspect-evd  --input=data.csv --l-stack=6 (--acvf=report.json | --identity)
//
// Exit codes: 0 success, 1 usage or input error, 2 algorithmic failure
// (no accepted order, numerical breakdown).

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "arxgsd/arxgsd.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitAlgorithm = 2;

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
  std::vector<double> values;
  if (text.empty()) return values;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw arxgsd::InputError(flag + ": '" + cell + "' is not a number");
    }
  }
  return values;
}

std::string format_list(const std::vector<double>& values) {
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6g", values[i]);
    out += (i ? ", " : "") + std::string(buf);
  }
  return out;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string a;
  std::string b;
  std::size_t delay = 1;
  std::optional<std::size_t> length;
  unsigned prbs_order = 10;
  std::optional<double> snr;
  std::optional<double> sigma_e2;
  std::string snr_definition = "output";
  std::uint64_t seed = 1;
  std::size_t burn_in = 0;
  std::string out;
};

int cmd_simulate(const SimulateArgs& args) {
  using namespace arxgsd;
  if (args.snr.has_value() == args.sigma_e2.has_value())
    throw ConfigurationError("simulate: exactly one of --snr and --sigma-e2 is required");
  const ArxModel model(parse_list(args.a, "--a"), parse_list(args.b, "--b"), args.delay);
  if (!is_stable(model.a)) throw InputError("simulate: the A-polynomial is unstable");

  const std::vector<double> u = generate_prbs(default_prbs_spec(args.prbs_order), args.length.value_or(0));
  const SnrDefinition definition =
      args.snr_definition == "innovation" ? SnrDefinition::kInnovation : SnrDefinition::kOutputNoise;
  const double sigma_e2 = args.sigma_e2 ? *args.sigma_e2 : noise_variance_for_snr(model, u, *args.snr, definition);

  SimulationOptions options;
  options.burn_in = args.burn_in;
  const SimulatedOutput sim = simulate_arx(model, u, sigma_e2, args.seed, options);
  write_csv(args.out, sim.to_dataset(u));

  const double var_v = variance(sim.v);
  Json sidecar{{"model", model},
               {"sigma_e2", sigma_e2},
               {"seed", args.seed},
               {"samples", u.size()},
               {"prbs_order", args.prbs_order},
               {"burn_in", args.burn_in},
               {"snr_definition", args.snr_definition},
               {"achieved_snr", var_v > 0.0 ? Json(variance(sim.y_star) / var_v) : Json(nullptr)}};
  if (args.snr) sidecar["snr_requested"] = *args.snr;
  write_json(std::filesystem::path(args.out).replace_extension(".json").string(), sidecar);
  std::cout << "wrote " << u.size() << " samples to " << args.out << " (sigma_e2 = " << sigma_e2 << ")\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// identify
// ---------------------------------------------------------------------------

struct IdentifyArgs {
  std::string input;
  arxgsd::IdentificationConfig config;
  bool detrend = false;
  std::string out;
  std::string diagnostics;
};

void detrend(arxgsd::DataSet& data) {
  const double mu = arxgsd::mean(data.u);
  const double my = arxgsd::mean(data.y);
  for (double& v : data.u) v -= mu;
  for (double& v : data.y) v -= my;
  if (data.y_star)
    for (double& v : *data.y_star) v -= my;
}

/// Long-format table: kind,eta_guess,iteration,position,value.
void write_diagnostics(const std::string& path, const std::vector<arxgsd::GuessDiagnostics>& guesses) {
  std::ofstream out(path);
  if (!out) throw arxgsd::InputError("cannot write '" + path + "'");
  out << "kind,eta_guess,iteration,position,value\n";
  char buf[32];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (const auto& g : guesses) {
    for (std::size_t i = 0; i < g.eigenvalues.size(); ++i)
      out << "eigenvalue," << g.eta_guess << ",," << i << ',' << num(g.eigenvalues[i]) << '\n';
    out << "d_hat," << g.eta_guess << ",,," << g.d_hat << '\n';
    for (std::size_t it = 0; it < g.trace.size(); ++it) {
      const auto& rec = g.trace[it];
      for (std::size_t p = 0; p < rec.theta.size(); ++p)
        out << "theta," << g.eta_guess << ',' << it + 1 << ',' << p << ',' << num(rec.theta[p]) << '\n';
      out << "sigma_e2," << g.eta_guess << ',' << it + 1 << ",," << num(rec.sigma_e2) << '\n';
      out << "relative_change," << g.eta_guess << ',' << it + 1 << ",," << num(rec.relative_change) << '\n';
    }
  }
}

int cmd_identify(const IdentifyArgs& args) {
  using namespace arxgsd;
  DataSet data = read_csv(args.input);
  if (args.detrend) detrend(data);
  try {
    const IdentificationReport report = identify(data, args.config);
    if (!args.diagnostics.empty()) write_diagnostics(args.diagnostics, report.guesses);
    const Json j = report;
    if (args.out.empty())
      std::cout << j.dump(2) << '\n';
    else
      write_json(args.out, j);
    std::cerr << "eta_hat = " << report.eta_hat << ", d_hat = " << report.d_hat << " at L = " << report.l_verify
              << "\ntheta = (" << format_list(report.theta) << ")\n";
    return kExitOk;
  } catch (const OrderSearchError& ex) {
    if (!args.diagnostics.empty()) write_diagnostics(args.diagnostics, ex.diagnostics());
    std::cerr << "error: " << ex.what() << '\n';
    for (const auto& g : ex.diagnostics()) {
      std::cerr << "  eta_guess=" << g.eta_guess << " L=" << g.l_verify << " d_hat=" << g.d_hat
                << " eta_hat=" << g.eta_hat;
      if (!g.failure.empty()) std::cerr << " failure: " << g.failure;
      std::cerr << '\n';
    }
    return kExitAlgorithm;
  }
}

// ---------------------------------------------------------------------------
// inspect-evd
// ---------------------------------------------------------------------------

struct InspectArgs {
  std::string input;
  std::size_t l_stack = 0;
  std::string acvf;
  bool identity = false;
  std::size_t grid_points = 4096;
  std::string out;
};

/// Noise model for lag L from a NoiseModel JSON or an identification report.
/// Reports are extended analytically from their fitted A-polynomial.
arxgsd::NoiseModel load_noise(const std::string& path, std::size_t lag, std::size_t grid_points) {
  using namespace arxgsd;
  const Json j = read_json(path);
  try {
    if (j.contains("schema_version")) {
      const std::vector<double> theta = j.at("theta").get<std::vector<double>>();
      NoiseModel noise = j.at("noise").get<NoiseModel>();
      if (noise.acvf.size() < lag + 1 && noise.sigma_e2 > 0.0)
        noise.acvf = acvf_from_model(theta_a(theta), noise.sigma_e2, lag, grid_points);
      return noise;
    }
    return j.get<NoiseModel>();
  } catch (const Json::exception& ex) {
    throw InputError(path + ": " + ex.what());
  }
}

int cmd_inspect_evd(const InspectArgs& args) {
  using namespace arxgsd;
  if (args.identity == !args.acvf.empty())
    throw ConfigurationError("inspect-evd: exactly one of --acvf and --identity is required");
  const DataSet data = read_csv(args.input);
  data.require_lag(args.l_stack);
  const Matrix s = sample_covariance(build_lagged_matrix(data, args.l_stack));
  Matrix sigma;
  if (args.identity) {
    sigma = Matrix::Identity(s.rows(), s.cols());
  } else {
    sigma = build_noise_covariance(load_noise(args.acvf, args.l_stack, args.grid_points), args.l_stack);
  }
  const PencilSpectrum spectrum = identify_evd(s, sigma);

  std::printf("stacking lag L = %zu, pencil dimension %lld\n", args.l_stack, static_cast<long long>(s.rows()));
  std::printf("%6s  %22s\n", "index", "eigenvalue");
  for (std::size_t i = 0; i < spectrum.values.size(); ++i) std::printf("%6zu  %22.15g\n", i, spectrum.values[i]);
  std::printf("infinite eigenvalues: %zu\n", spectrum.infinite_count);
  if (!spectrum.complex_values.empty()) std::printf("complex eigenvalues: %zu\n", spectrum.complex_values.size());

  if (!args.out.empty()) {
    std::ofstream out(args.out);
    if (!out) throw InputError("cannot write '" + args.out + "'");
    out << "index,eigenvalue\n";
    char buf[32];
    for (std::size_t i = 0; i < spectrum.values.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", spectrum.values[i]);
      out << i << ',' << buf << '\n';
    }
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ARX identification by iterative generalized spectral decomposition"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate an ARX process driven by a PRBS input");
  simulate->add_option("--a", sim.a, "Output coefficients a_1..a_ny, comma separated")->required();
  simulate->add_option("--b", sim.b, "Input coefficients b_D..b_nu, comma separated")->required();
  simulate->add_option("--delay", sim.delay, "Input delay D")->capture_default_str();
  simulate->add_option("--n", sim.length, "Number of samples (default: one PRBS period)")->check(CLI::PositiveNumber);
  simulate->add_option("--prbs-order", sim.prbs_order, "PRBS register length")
      ->check(CLI::Range(2, 16))
      ->capture_default_str();
  auto* snr = simulate->add_option("--snr", sim.snr, "Signal-to-noise ratio")->check(CLI::PositiveNumber);
  auto* s2 = simulate->add_option("--sigma-e2", sim.sigma_e2, "Innovation variance")->check(CLI::NonNegativeNumber);
  snr->excludes(s2);
  simulate->add_option("--snr-def", sim.snr_definition,
                       "output: var(y*)/var(v); innovation: var(y*)/sigma_e2")
      ->check(CLI::IsMember({"output", "innovation"}))
      ->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Noise seed")->capture_default_str();
  simulate->add_option("--burn-in", sim.burn_in, "Noise-filter samples discarded before k = 0")
      ->capture_default_str();
  simulate->add_option("--out", sim.out, "Output CSV path (sidecar JSON written next to it)")->required();

  IdentifyArgs id;
  auto* ident = app.add_subcommand("identify", "Estimate order, parameters and noise model from a data file");
  ident->add_option("--input", id.input, "Input CSV (k,u,y[,y_star])")->required()->check(CLI::ExistingFile);
  ident->add_option("--eta-init", id.config.eta_guess_initial, "First equation-order guess")->capture_default_str();
  ident->add_option("--eta-max", id.config.eta_max, "Largest equation-order guess")->capture_default_str();
  ident->add_option("--l-offset", id.config.l_verify_offset, "Verification lag offset")->capture_default_str();
  ident->add_option("--unity-tol", id.config.unity_tol, "Unity eigenvalue band |lambda - 1|")->capture_default_str();
  ident->add_option("--conv-tol", id.config.conv_tol, "Relative theta change for convergence")
      ->capture_default_str();
  ident->add_option("--max-iter", id.config.max_inner_iters, "Inner-loop iteration cap")->capture_default_str();
  ident->add_option("--grid", id.config.acvf_grid_points, "Frequency grid intervals for the ACVF integral")
      ->capture_default_str();
  ident->add_option("--bootstrap", id.config.bootstrap_reps, "Bootstrap replicates (0 disables)")
      ->capture_default_str();
  ident->add_option("--seed", id.config.seed, "Bootstrap seed")->capture_default_str();
  ident->add_flag("--detrend", id.detrend, "Subtract the sample means of u and y first");
  ident->add_option("--out", id.out, "Report JSON path (default: standard output)");
  ident->add_option("--diagnostics", id.diagnostics, "Per-guess eigenvalue and trace CSV");

  InspectArgs ins;
  auto* inspect = app.add_subcommand("inspect-evd", "Print the generalized eigenvalues at one stacking lag");
  inspect->add_option("--input", ins.input, "Input CSV (k,u,y[,y_star])")->required()->check(CLI::ExistingFile);
  inspect->add_option("--l-stack", ins.l_stack, "Stacking lag L")->required();
  auto* acvf = inspect->add_option("--acvf", ins.acvf, "NoiseModel JSON or identification report")
                   ->check(CLI::ExistingFile);
  auto* identity = inspect->add_flag("--identity", ins.identity, "Use Sigma_e = I");
  acvf->excludes(identity);
  inspect->add_option("--grid", ins.grid_points, "Frequency grid intervals when extending a report's ACVF")
      ->capture_default_str();
  inspect->add_option("--out", ins.out, "Eigenvalue CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*ident) return cmd_identify(id);
    if (*inspect) return cmd_inspect_evd(ins);
  } catch (const arxgsd::InputError& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const arxgsd::ConfigurationError& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const arxgsd::Error& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kExitAlgorithm;
  }
  return kExitUsage;
}
