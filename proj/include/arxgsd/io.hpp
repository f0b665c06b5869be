#pragma once

/// @file
/// CSV data files and JSON serialization of models, configurations and
/// identification reports.
///
/// CSV layout: header `k,u,y` or `k,u,y,y_star`, one sample per row, k
/// counting up from 0, values written with 17 significant digits so a
/// write/read cycle reproduces every double exactly.

#include <json.hpp>

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "arxgsd/core_types.hpp"

namespace arxgsd {

/// Version tag embedded in every serialized report.
inline constexpr const char* kReportSchemaVersion = "1.0.0";

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

inline double parse_number(std::string_view cell, const std::string& where) {
  if (cell.empty()) throw InputError(where + ": empty cell");
  const std::string text(cell);
  char* end = nullptr;
  errno = 0;
  const double value = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size()) throw InputError(where + ": '" + text + "' is not a number");
  if (errno == ERANGE && std::abs(value) > 1.0) throw InputError(where + ": '" + text + "' is out of range");
  if (!std::isfinite(value)) throw InputError(where + ": non-finite value '" + text + "'");
  return value;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Parses a data file; `source` names it in error messages, which always
/// carry the 1-based line number.
[[nodiscard]] inline DataSet parse_csv(std::istream& in, const std::string& source = "<input>") {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  bool with_y_star = false;
  DataSet data;
  std::vector<double> y_star;

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = detail::trim(line);
    if (view.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const std::vector<std::string_view> cells = detail::split_commas(view);
    if (!have_header) {
      if (cells.size() == 3 && cells[0] == "k" && cells[1] == "u" && cells[2] == "y") {
        with_y_star = false;
      } else if (cells.size() == 4 && cells[0] == "k" && cells[1] == "u" && cells[2] == "y" && cells[3] == "y_star") {
        with_y_star = true;
      } else {
        throw InputError(where + ": expected header 'k,u,y' or 'k,u,y,y_star'");
      }
      have_header = true;
      continue;
    }
    const std::size_t expected = with_y_star ? 4 : 3;
    if (cells.size() != expected)
      throw InputError(where + ": expected " + std::to_string(expected) + " columns, found " +
                       std::to_string(cells.size()));
    const double k = detail::parse_number(cells[0], where);
    if (k != static_cast<double>(data.y.size()))
      throw InputError(where + ": sample index " + std::string(cells[0]) + " out of sequence (expected " +
                       std::to_string(data.y.size()) + ")");
    data.u.push_back(detail::parse_number(cells[1], where));
    data.y.push_back(detail::parse_number(cells[2], where));
    if (with_y_star) y_star.push_back(detail::parse_number(cells[3], where));
  }
  if (!have_header) throw InputError(source + ": empty file (no header)");
  if (data.y.empty()) throw InputError(source + ": no data rows");
  if (with_y_star) data.y_star = std::move(y_star);
  return data;
}

[[nodiscard]] inline DataSet read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return parse_csv(in, path);
}

inline void write_csv(std::ostream& out, const DataSet& data) {
  data.validate();
  out << (data.y_star ? "k,u,y,y_star\n" : "k,u,y\n");
  for (std::size_t k = 0; k < data.size(); ++k) {
    out << k << ',' << detail::format_double(data.u[k]) << ',' << detail::format_double(data.y[k]);
    if (data.y_star) out << ',' << detail::format_double((*data.y_star)[k]);
    out << '\n';
  }
}

inline void write_csv(const std::string& path, const DataSet& data) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  write_csv(out, data);
  if (!out) throw InputError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

using Json = nlohmann::json;

inline void to_json(Json& j, const ArxModel& m) {
  j = Json{{"a", m.a}, {"b", m.b}, {"delay", m.delay}, {"n_y", m.n_y}, {"n_u", m.n_u}};
}

inline void from_json(const Json& j, ArxModel& m) {
  m.a = j.at("a").get<std::vector<double>>();
  m.b = j.at("b").get<std::vector<double>>();
  m.delay = j.at("delay").get<std::size_t>();
  m.n_y = j.contains("n_y") ? j.at("n_y").get<std::size_t>() : m.a.size();
  m.n_u = j.contains("n_u") ? j.at("n_u").get<std::size_t>()
                            : (m.b.empty() ? m.delay : m.delay + m.b.size() - 1);
  m.validate();
}

inline void to_json(Json& j, const NoiseModel& n) { j = Json{{"sigma_e2", n.sigma_e2}, {"acvf", n.acvf}}; }

inline void from_json(const Json& j, NoiseModel& n) {
  n.sigma_e2 = j.at("sigma_e2").get<double>();
  n.acvf = j.at("acvf").get<std::vector<double>>();
  n.validate();
}

inline void to_json(Json& j, const IdentificationConfig& c) {
  j = Json{{"eta_guess_initial", c.eta_guess_initial},
           {"eta_max", c.eta_max},
           {"l_verify_offset", c.l_verify_offset},
           {"unity_tol", c.unity_tol},
           {"conv_tol", c.conv_tol},
           {"max_inner_iters", c.max_inner_iters},
           {"acvf_grid_points", c.acvf_grid_points},
           {"bootstrap_reps", c.bootstrap_reps},
           {"seed", c.seed}};
}

inline void from_json(const Json& j, IdentificationConfig& c) {
  c.eta_guess_initial = j.at("eta_guess_initial").get<std::size_t>();
  c.eta_max = j.at("eta_max").get<std::size_t>();
  c.l_verify_offset = j.at("l_verify_offset").get<std::size_t>();
  c.unity_tol = j.at("unity_tol").get<double>();
  c.conv_tol = j.at("conv_tol").get<double>();
  c.max_inner_iters = j.at("max_inner_iters").get<std::size_t>();
  c.acvf_grid_points = j.at("acvf_grid_points").get<std::size_t>();
  c.bootstrap_reps = j.at("bootstrap_reps").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
}

inline void to_json(Json& j, const IterationRecord& r) {
  j = Json{{"theta", r.theta},
           {"sigma_e2", r.sigma_e2},
           {"min_eigenvalue", r.min_eigenvalue},
           {"relative_change", r.relative_change}};
}

inline void from_json(const Json& j, IterationRecord& r) {
  r.theta = j.at("theta").get<std::vector<double>>();
  r.sigma_e2 = j.at("sigma_e2").get<double>();
  r.min_eigenvalue = j.at("min_eigenvalue").get<double>();
  r.relative_change = j.at("relative_change").get<double>();
}

inline void to_json(Json& j, const GuessDiagnostics& g) {
  j = Json{{"eta_guess", g.eta_guess},
           {"l_verify", g.l_verify},
           {"theta", g.theta},
           {"sigma_e2", g.sigma_e2},
           {"inner_converged", g.inner_converged},
           {"trace", g.trace},
           {"eigenvalues", g.eigenvalues},
           {"infinite_count", g.infinite_count},
           {"d_hat", g.d_hat},
           {"eta_hat", g.eta_hat},
           {"accepted", g.accepted},
           {"failure", g.failure}};
}

inline void from_json(const Json& j, GuessDiagnostics& g) {
  g.eta_guess = j.at("eta_guess").get<std::size_t>();
  g.l_verify = j.at("l_verify").get<std::size_t>();
  g.theta = j.at("theta").get<std::vector<double>>();
  g.sigma_e2 = j.at("sigma_e2").get<double>();
  g.inner_converged = j.at("inner_converged").get<bool>();
  g.trace = j.at("trace").get<std::vector<IterationRecord>>();
  g.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
  g.infinite_count = j.at("infinite_count").get<std::size_t>();
  g.d_hat = j.at("d_hat").get<std::size_t>();
  g.eta_hat = j.at("eta_hat").get<std::size_t>();
  g.accepted = j.at("accepted").get<bool>();
  g.failure = j.at("failure").get<std::string>();
}

inline void to_json(Json& j, const IdentificationReport& r) {
  j = Json{{"schema_version", kReportSchemaVersion},
           {"eta_hat", r.eta_hat},
           {"d_hat", r.d_hat},
           {"l_verify", r.l_verify},
           {"theta", r.theta},
           {"theta_std", r.theta_std},
           {"model", r.model},
           {"noise", r.noise},
           {"eigenvalues", r.eigenvalues},
           {"trace", r.trace},
           {"converged", r.converged},
           {"config", r.config},
           {"guesses", r.guesses}};
}

inline void from_json(const Json& j, IdentificationReport& r) {
  const std::string version = j.at("schema_version").get<std::string>();
  if (version != kReportSchemaVersion)
    throw InputError("report schema version '" + version + "' is not supported (expected " +
                     kReportSchemaVersion + ")");
  r.eta_hat = j.at("eta_hat").get<std::size_t>();
  r.d_hat = j.at("d_hat").get<std::size_t>();
  r.l_verify = j.at("l_verify").get<std::size_t>();
  r.theta = j.at("theta").get<std::vector<double>>();
  r.theta_std = j.at("theta_std").get<std::vector<double>>();
  r.model = j.at("model").get<ArxModel>();
  r.noise = j.at("noise").get<NoiseModel>();
  r.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
  r.trace = j.at("trace").get<std::vector<IterationRecord>>();
  r.converged = j.at("converged").get<bool>();
  r.config = j.at("config").get<IdentificationConfig>();
  r.guesses = j.at("guesses").get<std::vector<GuessDiagnostics>>();
}

[[nodiscard]] inline Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& ex) {
    throw InputError(path + ": " + ex.what());
  }
}

inline void write_json(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
  if (!out) throw InputError("write failed for '" + path + "'");
}

}  // namespace arxgsd
