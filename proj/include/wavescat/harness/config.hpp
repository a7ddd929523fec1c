#pragma once

// Run configuration and its keyed text format.
//
//   # comment
//   [section]
//   key = value
//
// Sections mirror RunConfig: potential, packet, grid, propagator, stop, units, plus the
// optional sweep and output sections used by the command-line tool. Serialization writes
// every key with shortest round-trip numbers, so serialize -> parse -> serialize is stable.

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "wavescat/error.hpp"
#include "wavescat/evolve.hpp"
#include "wavescat/harness/format.hpp"
#include "wavescat/packet.hpp"
#include "wavescat/stationary.hpp"
#include "wavescat/units.hpp"

namespace wavescat::harness {

struct RunConfig {
  PotentialProfile potential;
  PacketSpec packet;
  GridSpec grid;
  PropagatorConfig propagator;
  StopCriterion stop = Separated{};
  std::size_t record_every = 1;
  UnitSystem units;

  /// Cross-field checks; returns packet warnings.
  std::vector<std::string> validate() const {
    units.validate();
    grid.validate();
    propagator.validate();
    auto warnings = packet.validate();
    const auto [lo, hi] = packet.support();
    if (!(lo > grid.x_min) || !(hi < grid.x(grid.n_points - 1))) {
      throw ConfigError("RunConfig: packet support does not fit inside the grid");
    }
    if (record_every == 0) throw ConfigError("RunConfig: record_every must be positive");
    if (const auto* sep = std::get_if<Separated>(&stop)) {
      if (!(sep->epsilon > 0.0) || !(sep->window >= 0.0)) {
        throw ConfigError("RunConfig: separated stop needs epsilon > 0 and window >= 0");
      }
    } else if (!(std::get<MaxTime>(stop).t > 0.0)) {
      throw ConfigError("RunConfig: max_time must be positive");
    }
    return warnings;
  }

  /// Incident kinetic energy hbar^2 k0^2 / 2m.
  double energy() const { return units.kinetic_energy(packet.k0); }
};

enum class SweepAxis { EnergyRatio, PacketWidth };

enum class OutputFormat { Csv, Json, PlotScript };

inline std::string to_string(Scheme s) { return s == Scheme::CrankNicolson ? "cn" : "split"; }
inline std::string to_string(Boundary b) { return b == Boundary::HardWall ? "hard_wall" : "periodic"; }
inline std::string to_string(SweepAxis a) {
  return a == SweepAxis::EnergyRatio ? "energy_ratio" : "packet_width";
}
inline std::string to_string(OutputFormat f) {
  switch (f) {
    case OutputFormat::Csv: return "csv";
    case OutputFormat::Json: return "json";
    case OutputFormat::PlotScript: return "plot";
  }
  return "csv";
}

inline Scheme parse_scheme(std::string_view s) {
  if (s == "cn" || s == "crank_nicolson") return Scheme::CrankNicolson;
  if (s == "split" || s == "split_step") return Scheme::SplitStepSpectral;
  throw ConfigError("unknown scheme '" + std::string(s) + "' (expected cn or split)");
}

inline Boundary parse_boundary(std::string_view s) {
  if (s == "hard_wall") return Boundary::HardWall;
  if (s == "periodic") return Boundary::Periodic;
  throw ConfigError("unknown boundary '" + std::string(s) + "'");
}

inline SweepAxis parse_axis(std::string_view s) {
  if (s == "energy_ratio") return SweepAxis::EnergyRatio;
  if (s == "packet_width") return SweepAxis::PacketWidth;
  throw ConfigError("unknown sweep axis '" + std::string(s) + "'");
}

inline OutputFormat parse_format(std::string_view s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json") return OutputFormat::Json;
  if (s == "plot") return OutputFormat::PlotScript;
  throw ConfigError("unknown output format '" + std::string(s) + "' (expected csv, json or plot)");
}

/// Everything a config file can hold.
struct ConfigFile {
  RunConfig run;
  bool scheme_given = false;  // [propagator] scheme appeared in the text
  std::optional<SweepAxis> sweep_axis;
  std::vector<double> sweep_values;
  std::optional<std::size_t> jobs;
  std::optional<std::string> output_path;
  std::optional<OutputFormat> output_format;
};

namespace detail {

inline std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += format_double(v[i]);
  }
  return out;
}

inline std::vector<double> split_list(std::string_view text, const std::string& what) {
  std::vector<double> out;
  const auto s = trim(text);
  if (s.empty()) return out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto item = s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    out.push_back(parse_double(item, what));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Parsed sections; each key may appear once and must be consumed.
class Sections {
 public:
  explicit Sections(std::string_view text) {
    std::string current;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto nl = text.find('\n', pos);
      const auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      ++line_no;
      pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
      auto line = trim(raw);
      if (line.empty() || line.front() == '#' || line.front() == ';') continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw error(line_no, "malformed section header");
        current = std::string(trim(line.substr(1, line.size() - 2)));
        if (data_.contains(current)) throw error(line_no, "duplicate section [" + current + "]");
        data_[current];
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) throw error(line_no, "expected key = value");
      if (current.empty()) throw error(line_no, "key outside of a section");
      const std::string key(trim(line.substr(0, eq)));
      auto& sec = data_[current];
      if (sec.contains(key)) throw error(line_no, "duplicate key '" + key + "'");
      sec[key] = std::string(trim(line.substr(eq + 1)));
    }
  }

  bool has_section(const std::string& s) const { return data_.contains(s); }

  std::optional<std::string> take(const std::string& section, const std::string& key) {
    auto it = data_.find(section);
    if (it == data_.end()) return std::nullopt;
    auto kv = it->second.find(key);
    if (kv == it->second.end()) return std::nullopt;
    std::string v = std::move(kv->second);
    it->second.erase(kv);
    return v;
  }

  std::string require(const std::string& section, const std::string& key) {
    auto v = take(section, key);
    if (!v) throw ConfigError("config: missing [" + section + "] " + key);
    return *v;
  }

  double number(const std::string& section, const std::string& key) {
    return parse_double(require(section, key), "[" + section + "] " + key);
  }

  std::optional<double> optional_number(const std::string& section, const std::string& key) {
    auto v = take(section, key);
    if (!v) return std::nullopt;
    return parse_double(*v, "[" + section + "] " + key);
  }

  void expect_consumed() const {
    for (const auto& [section, keys] : data_) {
      if (!keys.empty()) {
        throw ConfigError("config: unknown key [" + section + "] " + keys.begin()->first);
      }
    }
  }

  void expect_only(const std::vector<std::string>& allowed) const {
    for (const auto& [section, keys] : data_) {
      bool ok = false;
      for (const auto& a : allowed) ok = ok || a == section;
      if (!ok) throw ConfigError("config: unknown section [" + section + "]");
    }
  }

 private:
  static ConfigError error(std::size_t line, const std::string& what) {
    return ConfigError("config line " + std::to_string(line) + ": " + what);
  }

  std::map<std::string, std::map<std::string, std::string>> data_;
};

}  // namespace detail

/// Canonical text of a run configuration (no sweep/output sections).
inline std::string serialize(const RunConfig& cfg) {
  std::ostringstream out;
  out << "[potential]\n";
  if (const auto* s = std::get_if<Step>(&cfg.potential.kind())) {
    out << "kind = step\n"
        << "v0 = " << format_double(s->v0) << "\n";
  } else {
    const auto& pc = std::get<PiecewiseConstant>(cfg.potential.kind());
    out << "kind = piecewise\n"
        << "boundaries = " << detail::join(pc.boundaries) << "\n"
        << "levels = " << detail::join(pc.levels) << "\n";
  }

  out << "\n[packet]\n";
  if (const auto* ft = std::get_if<FlatTop>(&cfg.packet.shape)) {
    out << "shape = flat_top\n"
        << "taper_fraction = " << format_double(ft->taper_fraction) << "\n";
  } else {
    out << "shape = gaussian\n"
        << "sigma = " << format_double(std::get<Gaussian>(cfg.packet.shape).sigma) << "\n";
  }
  out << "center_x0 = " << format_double(cfg.packet.center_x0) << "\n"
      << "width = " << format_double(cfg.packet.width_wI) << "\n"
      << "k0 = " << format_double(cfg.packet.k0) << "\n";

  out << "\n[grid]\n"
      << "x_min = " << format_double(cfg.grid.x_min) << "\n"
      << "x_max = " << format_double(cfg.grid.x_max) << "\n"
      << "n_points = " << cfg.grid.n_points << "\n";

  out << "\n[propagator]\n"
      << "scheme = " << to_string(cfg.propagator.scheme) << "\n"
      << "boundary = " << to_string(cfg.propagator.boundary) << "\n"
      << "dt = " << format_double(cfg.propagator.dt) << "\n";

  out << "\n[stop]\n";
  if (const auto* sep = std::get_if<Separated>(&cfg.stop)) {
    out << "kind = separated\n"
        << "epsilon = " << format_double(sep->epsilon) << "\n"
        << "window = " << format_double(sep->window) << "\n"
        << "max_time = " << format_double(sep->max_time) << "\n";
  } else {
    out << "kind = max_time\n"
        << "max_time = " << format_double(std::get<MaxTime>(cfg.stop).t) << "\n";
  }
  out << "record_every = " << cfg.record_every << "\n";

  out << "\n[units]\n"
      << "hbar = " << format_double(cfg.units.hbar) << "\n"
      << "mass = " << format_double(cfg.units.mass) << "\n";
  return out.str();
}

inline std::string serialize(const ConfigFile& file) {
  std::string out = serialize(file.run);
  if (file.sweep_axis || !file.sweep_values.empty() || file.jobs) {
    out += "\n[sweep]\n";
    if (file.sweep_axis) out += "axis = " + to_string(*file.sweep_axis) + "\n";
    if (!file.sweep_values.empty()) out += "values = " + detail::join(file.sweep_values) + "\n";
    if (file.jobs) out += "jobs = " + std::to_string(*file.jobs) + "\n";
  }
  if (file.output_path || file.output_format) {
    out += "\n[output]\n";
    if (file.output_path) out += "path = " + *file.output_path + "\n";
    if (file.output_format) out += "format = " + to_string(*file.output_format) + "\n";
  }
  return out;
}

/// Identifier of a run: hash of its canonical text.
inline std::string config_fingerprint(const RunConfig& cfg) { return fingerprint(serialize(cfg)); }

/// Parses a config. Omitted optional keys take defaults: dt from phase_limited_dt, the
/// separated stop rule for k0, and about 200 records across the collision.
inline ConfigFile parse_config(std::string_view text) {
  detail::Sections sec(text);
  sec.expect_only({"potential", "packet", "grid", "propagator", "stop", "units", "sweep", "output"});
  ConfigFile file;
  RunConfig& cfg = file.run;

  if (sec.has_section("units")) {
    if (auto v = sec.optional_number("units", "hbar")) cfg.units.hbar = *v;
    if (auto v = sec.optional_number("units", "mass")) cfg.units.mass = *v;
  }

  const std::string kind = sec.require("potential", "kind");
  if (kind == "step") {
    cfg.potential = PotentialProfile::step(sec.number("potential", "v0"));
  } else if (kind == "piecewise") {
    cfg.potential = PotentialProfile(PiecewiseConstant{
        detail::split_list(sec.require("potential", "boundaries"), "[potential] boundaries"),
        detail::split_list(sec.require("potential", "levels"), "[potential] levels")});
  } else {
    throw ConfigError("config: unknown potential kind '" + kind + "'");
  }

  const std::string shape = sec.require("packet", "shape");
  if (shape == "flat_top") {
    FlatTop ft;
    if (auto v = sec.optional_number("packet", "taper_fraction")) ft.taper_fraction = *v;
    cfg.packet.shape = ft;
  } else if (shape == "gaussian") {
    cfg.packet.shape = Gaussian{sec.number("packet", "sigma")};
  } else {
    throw ConfigError("config: unknown packet shape '" + shape + "'");
  }
  cfg.packet.center_x0 = sec.number("packet", "center_x0");
  cfg.packet.k0 = sec.number("packet", "k0");
  if (auto w = sec.optional_number("packet", "width")) {
    cfg.packet.width_wI = *w;
  } else if (const auto* g = std::get_if<Gaussian>(&cfg.packet.shape)) {
    cfg.packet.width_wI = g->sigma * std::sqrt(2.0 * std::numbers::pi);
  } else {
    throw ConfigError("config: missing [packet] width");
  }

  cfg.grid.x_min = sec.number("grid", "x_min");
  cfg.grid.x_max = sec.number("grid", "x_max");
  cfg.grid.n_points = parse_unsigned(sec.require("grid", "n_points"), "[grid] n_points");
  cfg.grid.validate();

  cfg.propagator.scheme = Scheme::SplitStepSpectral;
  if (auto s = sec.take("propagator", "scheme")) {
    cfg.propagator.scheme = parse_scheme(*s);
    file.scheme_given = true;
  }
  cfg.propagator.boundary =
      cfg.propagator.scheme == Scheme::CrankNicolson ? Boundary::HardWall : Boundary::Periodic;
  if (auto b = sec.take("propagator", "boundary")) cfg.propagator.boundary = parse_boundary(*b);
  if (auto dt = sec.optional_number("propagator", "dt")) {
    cfg.propagator.dt = *dt;
  } else {
    cfg.propagator.dt = phase_limited_dt(cfg.grid, cfg.potential, cfg.units);
  }

  const std::string stop_kind = sec.take("stop", "kind").value_or("separated");
  if (stop_kind == "separated") {
    Separated sep = default_separated(cfg.packet.k0);
    if (auto v = sec.optional_number("stop", "epsilon")) sep.epsilon = *v;
    if (auto v = sec.optional_number("stop", "window")) sep.window = *v;
    if (auto v = sec.optional_number("stop", "max_time")) sep.max_time = *v;
    cfg.stop = sep;
  } else if (stop_kind == "max_time") {
    cfg.stop = MaxTime{sec.number("stop", "max_time")};
  } else {
    throw ConfigError("config: unknown stop kind '" + stop_kind + "'");
  }
  if (auto r = sec.take("stop", "record_every")) {
    cfg.record_every = parse_unsigned(*r, "[stop] record_every");
  } else {
    const double collision = cfg.packet.width_wI / cfg.units.group_velocity(cfg.packet.k0);
    cfg.record_every = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(collision / 200.0 / cfg.propagator.dt)));
  }

  if (auto a = sec.take("sweep", "axis")) file.sweep_axis = parse_axis(*a);
  if (auto v = sec.take("sweep", "values")) file.sweep_values = detail::split_list(*v, "[sweep] values");
  if (auto j = sec.take("sweep", "jobs")) file.jobs = parse_unsigned(*j, "[sweep] jobs");
  if (auto p = sec.take("output", "path")) file.output_path = *p;
  if (auto f = sec.take("output", "format")) file.output_format = parse_format(*f);

  sec.expect_consumed();
  cfg.validate();
  return file;
}

inline ConfigFile load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open config file");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError(path, "read failed");
  return parse_config(buf.str());
}

inline void save_config(const ConfigFile& file, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  out << serialize(file);
  if (!out) throw IoError(path, "write failed");
}

}  // namespace wavescat::harness
