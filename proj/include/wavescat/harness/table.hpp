#pragma once

// Result tables and their CSV / JSON / plot-script forms.

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wavescat/error.hpp"
#include "wavescat/harness/config.hpp"
#include "wavescat/harness/format.hpp"

namespace wavescat::harness {

/// One row: the sweep coordinates, the analytic oracle, and what the simulation measured.
/// Measured quantities that do not apply (no transmitted packet, no simulation) are NaN.
struct ResultRow {
  double e_over_v0 = 0.0;
  double w_over_lambda = 0.0;
  double r_analytic = 0.0;
  double t_analytic = 0.0;
  double p_left = 0.0;
  double p_right = 0.0;
  double w_t_ratio = 0.0;
  double v_left = 0.0;
  double v_right = 0.0;
  double window_measured = 0.0;
  double window_analytic = 0.0;
  std::string config_fingerprint;
};

using ResultTable = std::vector<ResultRow>;

inline constexpr std::array<std::string_view, 11> kCsvColumns = {
    "e_over_v0", "w_over_lambda", "r_analytic", "t_analytic", "p_left", "p_right",
    "w_t_ratio", "v_left", "v_right", "window_measured", "window_analytic"};

namespace detail {

inline std::array<double, 11> values(const ResultRow& r) {
  return {r.e_over_v0, r.w_over_lambda, r.r_analytic, r.t_analytic, r.p_left, r.p_right,
          r.w_t_ratio, r.v_left,        r.v_right,    r.window_measured, r.window_analytic};
}

inline ResultRow from_values(const std::array<double, 11>& v) {
  ResultRow r;
  r.e_over_v0 = v[0];
  r.w_over_lambda = v[1];
  r.r_analytic = v[2];
  r.t_analytic = v[3];
  r.p_left = v[4];
  r.p_right = v[5];
  r.w_t_ratio = v[6];
  r.v_left = v[7];
  r.v_right = v[8];
  r.window_measured = v[9];
  r.window_analytic = v[10];
  return r;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path, "cannot open for writing");
  out << content;
  out.flush();
  if (!out) throw IoError(path, "write failed");
}

inline std::string header_line() {
  std::string h;
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) {
    if (i > 0) h += ',';
    h += kCsvColumns[i];
  }
  return h;
}

}  // namespace detail

inline std::string to_csv(const ResultTable& table) {
  std::string out = detail::header_line() + "\n";
  for (const auto& row : table) {
    const auto v = detail::values(row);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i > 0) out += ',';
      out += format_double(v[i]);
    }
    out += '\n';
  }
  return out;
}

inline ResultTable parse_csv(std::string_view text) {
  ResultTable table;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    if (line.empty()) continue;
    if (header) {
      std::string compact;
      for (char c : line) {
        if (c != ' ') compact += c;
      }
      if (compact != detail::header_line()) throw ConfigError("CSV: unexpected header '" + std::string(line) + "'");
      header = false;
      continue;
    }
    std::array<double, 11> v{};
    std::size_t start = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto comma = line.find(',', start);
      if ((comma == std::string_view::npos) != (i + 1 == v.size())) {
        throw ConfigError("CSV: expected 11 fields in '" + std::string(line) + "'");
      }
      v[i] = parse_double(line.substr(start, comma - start), "CSV field " + std::string(kCsvColumns[i]));
      start = comma + 1;
    }
    table.push_back(detail::from_values(v));
  }
  if (header) throw ConfigError("CSV: missing header");
  return table;
}

inline nlohmann::json to_json(const ResultTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table) {
    nlohmann::json j;
    const auto v = detail::values(row);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string key(kCsvColumns[i]);
      if (std::isfinite(v[i])) {
        j[key] = v[i];
      } else {
        j[key] = nullptr;
      }
    }
    j["config_fingerprint"] = row.config_fingerprint;
    rows.push_back(std::move(j));
  }
  return nlohmann::json{{"rows", rows}};
}

/// Data file written next to a plot script.
inline std::string plot_data_path(const std::string& script_path) {
  std::filesystem::path p(script_path);
  p.replace_extension(".data.csv");
  return p.string();
}

/// gnuplot script comparing measured and analytic probabilities. The x axis is whichever
/// of E/V0 and w/lambda varies across the table.
inline std::string plot_script(const ResultTable& table, const std::string& data_file) {
  bool vary_width = false;
  for (const auto& row : table) {
    if (row.w_over_lambda != table.front().w_over_lambda) vary_width = true;
  }
  const int x = vary_width ? 2 : 1;
  const std::string xlabel = vary_width ? "w_I / lambda_0" : "E / V_0";
  std::ostringstream s;
  s << "# measured wave-packet probabilities against the plane-wave formulas\n"
    << "set datafile separator ','\n"
    << "set key top right\n"
    << "set xlabel '" << xlabel << "'\n"
    << "set ylabel 'probability'\n"
    << (vary_width ? "set logscale x\n" : "")
    << "plot '" << data_file << "' using " << x << ":3 with lines title 'R analytic', \\\n"
    << "     '' using " << x << ":4 with lines title 'T analytic', \\\n"
    << "     '' using " << x << ":5 with points pt 7 title 'P_left (measured)', \\\n"
    << "     '' using " << x << ":6 with points pt 5 title 'P_right (measured)'\n";
  return s.str();
}

/// Writes the table. The plot format writes the script at `path` and its CSV data file
/// beside it, and the script refers to that file only.
inline void emit(const ResultTable& table, OutputFormat format, const std::string& path) {
  if (table.empty()) throw ConfigError("emit: table is empty");
  switch (format) {
    case OutputFormat::Csv:
      detail::write_file(path, to_csv(table));
      break;
    case OutputFormat::Json:
      detail::write_file(path, to_json(table).dump(2) + "\n");
      break;
    case OutputFormat::PlotScript: {
      const std::string data = plot_data_path(path);
      detail::write_file(data, to_csv(table));
      detail::write_file(path, plot_script(table, std::filesystem::path(data).filename().string()));
      break;
    }
  }
}

inline ResultTable load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, "cannot open table");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

}  // namespace wavescat::harness
