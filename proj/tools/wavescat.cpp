// wavescat: command-line front end for step-scattering runs.
//
//   wavescat analytic [--config F] [--values 0.5,2,4]
//   wavescat run      [--config F] [--scheme cn|split]
//   wavescat sweep    [--config F] [--values ...] [--jobs N]
//   wavescat converge [--config F] [--values 25,50,100,200] [--jobs N]
//   wavescat emit     --in table.csv --format json --out table.json
//   wavescat emit     --template headline.cfg
//
// Tables go to --out (or $WAVESCAT_OUTPUT_DIR/<command>.<ext>, or stdout). Settings in a
// config file win over the equivalent flags.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wavescat/wavescat.hpp"

namespace {

using namespace wavescat;
using namespace wavescat::harness;

enum ExitCode { kOk = 0, kUsage = 1, kConfig = 2, kPhysics = 3, kIo = 4 };

struct Options {
  std::string config_path;
  std::string out;
  std::string format;
  std::string scheme;
  std::size_t jobs = 0;
  std::vector<double> values;
  std::string input;
  std::string template_path;
};

void notice(const std::string& msg) { std::cerr << "wavescat: " << msg << "\n"; }

std::string extension(OutputFormat f) {
  switch (f) {
    case OutputFormat::Csv:
      return ".csv";
    case OutputFormat::Json:
      return ".json";
    case OutputFormat::PlotScript:
      return ".gp";
  }
  return ".csv";
}

/// Config file (or the headline scenario) with flags applied where the file is silent.
struct Resolved {
  ConfigFile file;
  OutputFormat format = OutputFormat::Csv;
  std::optional<std::string> out;
  std::size_t jobs = 1;
};

Resolved resolve(const Options& opt, const std::string& command) {
  Resolved r;
  const bool have_config = !opt.config_path.empty();
  if (have_config) {
    r.file = load_config(opt.config_path);
  } else {
    r.file.run = make_config(headline_scenario());
  }

  if (!opt.scheme.empty()) {
    const Scheme flag = parse_scheme(opt.scheme);
    if (have_config && r.file.scheme_given) {
      if (flag != r.file.run.propagator.scheme) {
        notice("--scheme " + opt.scheme + " ignored; config sets scheme = " + to_string(r.file.run.propagator.scheme));
      }
    } else {
      const double dt = r.file.run.propagator.dt;
      r.file.run.propagator =
          flag == Scheme::CrankNicolson ? PropagatorConfig::crank_nicolson(dt) : PropagatorConfig::split_step(dt);
    }
  }

  r.format = OutputFormat::Csv;
  if (!opt.format.empty()) r.format = parse_format(opt.format);
  if (r.file.output_format) {
    if (!opt.format.empty() && *r.file.output_format != r.format) {
      notice("--format " + opt.format + " ignored; config sets format = " + to_string(*r.file.output_format));
    }
    r.format = *r.file.output_format;
  }

  if (!opt.out.empty()) r.out = opt.out;
  if (r.file.output_path) {
    if (!opt.out.empty() && *r.file.output_path != opt.out) {
      notice("--out " + opt.out + " ignored; config sets path = " + *r.file.output_path);
    }
    r.out = r.file.output_path;
  }
  if (!r.out) {
    if (const char* dir = std::getenv("WAVESCAT_OUTPUT_DIR"); dir != nullptr && *dir != '\0') {
      r.out = (std::filesystem::path(dir) / (command + extension(r.format))).string();
    }
  }

  r.jobs = opt.jobs == 0 ? 1 : opt.jobs;
  if (r.file.jobs) {
    if (opt.jobs != 0 && opt.jobs != *r.file.jobs) {
      notice("--jobs " + std::to_string(opt.jobs) + " ignored; config sets jobs = " + std::to_string(*r.file.jobs));
    }
    r.jobs = *r.file.jobs;
  }
  return r;
}

std::vector<double> axis_values(const Options& opt, const Resolved& r, SweepAxis axis,
                                std::vector<double> fallback) {
  if (r.file.sweep_axis && *r.file.sweep_axis == axis && !r.file.sweep_values.empty()) {
    if (!opt.values.empty()) notice("--values ignored; config sets [sweep] values");
    return r.file.sweep_values;
  }
  return opt.values.empty() ? fallback : opt.values;
}

void write_table(const ResultTable& table, const Resolved& r) {
  if (r.out) {
    emit(table, r.format, *r.out);
    notice("wrote " + *r.out);
    return;
  }
  switch (r.format) {
    case OutputFormat::Csv:
      std::cout << to_csv(table);
      break;
    case OutputFormat::Json:
      std::cout << to_json(table).dump(2) << "\n";
      break;
    case OutputFormat::PlotScript:
      throw ConfigError("plot output needs --out (the script is written beside its data file)");
  }
}

void print_summary(const ScatteringResult& s) {
  auto line = [](const std::string& k, double v) { std::cerr << "  " << k << " = " << format_double(v) << "\n"; };
  std::cerr << "run " << s.config_fingerprint << "\n";
  line("p_left", s.p_left);
  line("p_right", s.p_right);
  line("r_analytic", s.analytic.r);
  line("t_analytic", s.analytic.t);
  line("width_transmitted/width_incident", s.width_transmitted / s.width_incident);
  line("width_reflected/width_incident", s.width_reflected / s.width_incident);
  line("v_incident", s.v_incident);
  line("v_transmitted", s.v_transmitted);
  if (s.timing) line("window", s.timing->measured);
  if (s.current_estimate) {
    line("current_r", s.current_estimate->r);
    line("current_t", s.current_estimate->t);
  }
  line("final_norm", s.final_norm);
  line("final_time", s.final_time);
}

int dispatch(const std::string& command, const Options& opt) {
  if (command == "emit") {
    if (!opt.template_path.empty()) {
      ConfigFile f;
      f.run = make_config(headline_scenario(opt.scheme.empty() ? Scheme::SplitStepSpectral : parse_scheme(opt.scheme)));
      save_config(f, opt.template_path);
      notice("wrote " + opt.template_path);
      return kOk;
    }
    if (opt.input.empty()) throw ConfigError("emit needs --in <table.csv> or --template <path>");
    Resolved r;
    r.format = opt.format.empty() ? OutputFormat::Csv : parse_format(opt.format);
    if (!opt.out.empty()) r.out = opt.out;
    write_table(load_csv(opt.input), r);
    return kOk;
  }

  const Resolved r = resolve(opt, command);
  for (const auto& w : r.file.run.validate()) notice("warning: " + w);

  ResultTable table;
  int code = kOk;
  if (command == "analytic") {
    table = analytic_sweep(r.file.run, axis_values(opt, r, SweepAxis::EnergyRatio, {0.5, 1.0, 1.5, 2.0, 4.0, 8.0, 16.0}));
  } else if (command == "run") {
    const auto result = run(r.file.run);
    print_summary(result);
    table.push_back(make_row(r.file.run, result));
  } else if (command == "sweep") {
    table = sweep(r.file.run, axis_values(opt, r, SweepAxis::EnergyRatio, {0.5, 2.0, 4.0}), r.jobs);
  } else if (command == "converge") {
    const auto persist = [&](const ResultTable& partial) {
      if (partial.empty()) return;
      Resolved p = r;
      if (!p.out) return;
      p.out = *p.out + ".partial";
      write_table(partial, p);
    };
    const auto report = convergence_study(r.file.run, axis_values(opt, r, SweepAxis::PacketWidth, {25, 50, 100, 200}),
                                          r.jobs, persist);
    table = report.table;
    notice(std::string("|P_left - R| strictly decreasing: ") + (report.strictly_decreasing ? "yes" : "no"));
    notice(std::string("final three rows non-increasing: ") + (report.final_three_non_increasing ? "yes" : "no"));
    if (!report.final_three_non_increasing) code = kPhysics;
  }
  write_table(table, r);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"1-D quantum step scattering: analytic amplitudes and wave-packet simulations"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "Run configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "Output path");
    sub->add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"csv", "json", "plot"}));
    sub->add_option("--scheme", opt.scheme, "Propagation scheme")->check(CLI::IsMember({"cn", "split"}));
  };
  auto add_values = [&](CLI::App* sub, const std::string& help) {
    sub->add_option("--values", opt.values, help)->delimiter(',');
  };
  auto add_jobs = [&](CLI::App* sub) {
    sub->add_option("--jobs", opt.jobs, "Parallel runs")->check(CLI::PositiveNumber);
  };

  auto* analytic = app.add_subcommand("analytic", "Tabulate stationary-state R and T (no simulation)");
  add_common(analytic);
  add_values(analytic, "E/V0 values");
  auto* run_cmd = app.add_subcommand("run", "Simulate one configuration");
  add_common(run_cmd);
  auto* sweep_cmd = app.add_subcommand("sweep", "Simulate a list of E/V0 values");
  add_common(sweep_cmd);
  add_values(sweep_cmd, "E/V0 values");
  add_jobs(sweep_cmd);
  auto* converge = app.add_subcommand("converge", "Packet-width convergence study");
  add_common(converge);
  add_values(converge, "w_I/lambda values");
  add_jobs(converge);
  auto* emit_cmd = app.add_subcommand("emit", "Convert a CSV table, or write the headline config");
  emit_cmd->add_option("--in", opt.input, "CSV table to convert")->check(CLI::ExistingFile);
  emit_cmd->add_option("--out", opt.out, "Output path");
  emit_cmd->add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"csv", "json", "plot"}));
  emit_cmd->add_option("--template", opt.template_path, "Write the headline run configuration here");
  emit_cmd->add_option("--scheme", opt.scheme, "Scheme for --template")->check(CLI::IsMember({"cn", "split"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    return dispatch(app.get_subcommands().front()->get_name(), opt);
  } catch (const Error& e) {
    std::cerr << "wavescat: " << e.what() << "\n";
    switch (e.category()) {
      case Error::Category::Config:
        return kConfig;
      case Error::Category::Physics:
        return kPhysics;
      case Error::Category::Io:
        return kIo;
    }
  } catch (const std::exception& e) {
    std::cerr << "wavescat: " << e.what() << "\n";
  }
  return kPhysics;
}
