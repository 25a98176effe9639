#include "patl/medium_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "patl/acoustic.hpp"
#include "patl/numerics.hpp"

namespace patl {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

double require_number(const json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_number())
    throw config_error("medium definition: missing or non-numeric field \"" + key + "\"");
  return j[key].get<double>();
}

// Evaluates one coefficient entry (nodal array or analytic spec) on `grid`.
CoefficientProfile parse_profile(const json& j, const std::string& name, const Grid1D& grid) {
  std::vector<double> vals(grid.n_points);
  if (j.is_array()) {
    if (j.size() < 3)
      throw config_error("medium definition: profile \"" + name + "\" needs at least 3 samples");
    std::vector<double> raw;
    raw.reserve(j.size());
    for (const auto& e : j) {
      if (!e.is_number())
        throw config_error("medium definition: profile \"" + name + "\" has a non-numeric entry");
      raw.push_back(e.get<double>());
    }
    if (raw.size() == grid.n_points) return CoefficientProfile(grid, std::move(raw));
    // Array given at its own (uniform) resolution: resample onto the target grid.
    Grid1D src = Grid1D::over_interval(raw.size(), grid.y_max());
    return resample(CoefficientProfile(src, std::move(raw)), grid.n_points);
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw config_error("medium definition: profile \"" + name +
                       "\" must be an array or an object with a \"type\"");
  const std::string type = j["type"].get<std::string>();
  if (type == "constant") {
    const double v = require_number(j, "value");
    for (auto& x : vals) x = v;
  } else if (type == "linear") {
    const double a = require_number(j, "intercept");
    const double b = require_number(j, "slope");
    for (std::size_t i = 0; i < grid.n_points; ++i) vals[i] = a + b * grid.y(i);
  } else if (type == "sine") {
    const double off = require_number(j, "offset");
    const double amp = require_number(j, "amplitude");
    const double omega = require_number(j, "omega");
    const double phase = j.contains("phase") ? require_number(j, "phase") : 0.0;
    for (std::size_t i = 0; i < grid.n_points; ++i)
      vals[i] = off + amp * std::sin(omega * grid.y(i) + phase);
  } else {
    throw config_error("medium definition: unknown profile type \"" + type + "\"");
  }
  return CoefficientProfile(grid, std::move(vals));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_field(const std::string& s, const std::string& path, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw config_error(path + ": line " + std::to_string(line_no) + ": cannot parse \"" + s +
                       "\" as a number");
  }
}

}  // namespace

LayeredMedium medium_from_json_text(const std::string& text, std::size_t n_points_override) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw config_error(std::string("medium definition: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw config_error("medium definition: top level must be an object");

  const double L = require_number(j, "L");
  const double H = require_number(j, "H");
  if (!(L > 0.0)) throw config_error("medium definition: L must be positive");
  if (!(H > 0.0)) throw config_error("medium definition: H must be positive");

  std::size_t n_points = n_points_override;
  if (n_points == 0) {
    if (!j.contains("n_points") || !j["n_points"].is_number_integer())
      throw config_error("medium definition: missing integer field \"n_points\"");
    const long long np = j["n_points"].get<long long>();
    if (np < 3) throw config_error("medium definition: n_points must be at least 3");
    n_points = static_cast<std::size_t>(np);
  }
  const Grid1D grid = Grid1D::over_interval(n_points, H);

  for (const char* key : {"D", "mu_a", "c"})
    if (!j.contains(key))
      throw config_error(std::string("medium definition: missing field \"") + key + "\"");

  LayeredMedium m;
  m.width_L = L;
  m.diffusion = parse_profile(j["D"], "D", grid);
  m.absorption = parse_profile(j["mu_a"], "mu_a", grid);
  m.speed = parse_profile(j["c"], "c", grid);

  if (j.contains("bounds")) {
    const json& b = j["bounds"];
    if (!b.is_object()) throw config_error("medium definition: \"bounds\" must be an object");
    m.bounds.d0 = require_number(b, "d0");
    m.bounds.mu0 = require_number(b, "mu0");
    m.bounds.m_cap = require_number(b, "M");
    m.bounds.c_m = require_number(b, "c_m");
  }
  m.validate();
  return m;
}

LayeredMedium load_medium(const std::string& path, std::size_t n_points_override) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open medium file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return medium_from_json_text(ss.str(), n_points_override);
}

void write_profile_csv(const std::string& path, const CoefficientProfile& f,
                       const std::string& value_name) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open for writing: " + path);
  out << "y," << value_name << "\n";
  for (std::size_t i = 0; i < f.size(); ++i)
    out << format_double(f.grid.y(i)) << "," << format_double(f[i]) << "\n";
  if (!out) throw config_error("write failed: " + path);
}

CoefficientProfile read_profile_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open profile file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw config_error(path + ": empty file");
  std::vector<double> ys, vals;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 2)
      throw config_error(path + ": line " + std::to_string(line_no) + ": expected 2 columns, got " +
                         std::to_string(fields.size()));
    ys.push_back(parse_field(fields[0], path, line_no));
    vals.push_back(parse_field(fields[1], path, line_no));
  }
  if (ys.size() < 3) throw config_error(path + ": need at least 3 data rows");
  const double H = ys.back();
  if (!(H > 0.0)) throw config_error(path + ": last y must be positive");
  const Grid1D grid = Grid1D::over_interval(ys.size(), H);
  for (std::size_t i = 0; i < ys.size(); ++i)
    if (std::abs(ys[i] - grid.y(i)) > 1e-9 * std::max(1.0, H))
      throw config_error(path + ": y samples are not on a uniform grid starting at 0 (row " +
                         std::to_string(i + 2) + ")");
  return CoefficientProfile(grid, std::move(vals));
}

void write_trace_csv(const std::string& path, const BoundaryTrace& trace) {
  std::ofstream out(path);
  if (!out) throw config_error("cannot open for writing: " + path);
  out << "t,p_H,pt_H\n";
  for (std::size_t i = 0; i < trace.times.size(); ++i)
    out << format_double(trace.times[i]) << "," << format_double(trace.samples_p[i]) << ","
        << format_double(trace.samples_pt[i]) << "\n";
  if (!out) throw config_error("write failed: " + path);
}

BoundaryTrace read_trace_csv(const std::string& path, long k) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open trace file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw config_error(path + ": empty file");
  BoundaryTrace trace;
  trace.k = k;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3)
      throw config_error(path + ": line " + std::to_string(line_no) + ": expected 3 columns, got " +
                         std::to_string(fields.size()));
    trace.times.push_back(parse_field(fields[0], path, line_no));
    trace.samples_p.push_back(parse_field(fields[1], path, line_no));
    trace.samples_pt.push_back(parse_field(fields[2], path, line_no));
  }
  if (trace.times.size() < 2) throw config_error(path + ": need at least 2 samples");
  trace.dt = trace.times[1] - trace.times[0];
  if (!(trace.dt > 0.0)) throw config_error(path + ": time samples must increase");
  for (std::size_t i = 1; i < trace.times.size(); ++i)
    if (std::abs(trace.times[i] - static_cast<double>(i) * trace.dt) >
        1e-9 * std::max(1.0, trace.t_final()))
      throw config_error(path + ": time samples are not uniform (row " + std::to_string(i + 2) +
                         ")");
  return trace;
}

}  // namespace patl
