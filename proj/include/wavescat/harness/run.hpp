#pragma once

// Single runs, energy sweeps and width-convergence studies.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <thread>
#include <variant>
#include <vector>

#include "wavescat/error.hpp"
#include "wavescat/evolve.hpp"
#include "wavescat/harness/config.hpp"
#include "wavescat/harness/scenario.hpp"
#include "wavescat/harness/table.hpp"
#include "wavescat/measure.hpp"
#include "wavescat/packet.hpp"
#include "wavescat/stationary.hpp"

namespace wavescat::harness {

/// Everything a run produced: the measured result plus the raw trajectory.
struct RunOutput {
  ScatteringResult result;
  Trajectory trajectory;
  WaveState final_state;
};

/// Analytic (R, T) for the configured potential at the packet's central energy.
inline ProbabilityPair analytic_probabilities(const RunConfig& cfg) {
  const double e = cfg.energy();
  if (const auto* step = std::get_if<Step>(&cfg.potential.kind())) {
    return step_probabilities(e, step->v0, cfg.units);
  }
  if (!(e > cfg.potential.right_level())) {
    // Nothing propagates on the far side.
    return {1.0, 0.0};
  }
  return probabilities(transfer_matrix_amplitudes(cfg.potential, e, cfg.units));
}

namespace detail {

/// Least-squares velocity over the records selected by `keep`, or NaN when the selection
/// does not support a fit.
template <class Keep>
double fitted_velocity(const Trajectory& traj, Region region, Keep keep) {
  std::optional<double> lo;
  double hi = 0.0;
  for (std::size_t j = 0; j < traj.size(); ++j) {
    if (!keep(j)) continue;
    if (!lo) lo = traj.times[j];
    hi = traj.times[j];
  }
  if (!lo) return std::numeric_limits<double>::quiet_NaN();
  try {
    return group_velocity_fit(traj, region, {*lo, hi});
  } catch (const DomainError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace detail

/// Builds the packet, propagates to the stop criterion and measures the outcome.
inline RunOutput run_full(const RunConfig& cfg) {
  cfg.validate();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double split = scattering_center(cfg.potential);
  WaveState initial = build_packet(cfg.grid, cfg.packet);

  std::optional<CurrentProbe> probe;
  try {
    // A trial sample checks that the probe windows fit on this grid.
    default_current_probe(split, cfg.packet.width_wI, cfg.packet.k0, cfg.units).add(initial);
    probe.emplace(default_current_probe(split, cfg.packet.width_wI, cfg.packet.k0, cfg.units));
  } catch (const DomainError&) {
    probe.reset();
  }
  StateObserver observer;
  if (probe) observer = [&probe](const WaveState& s) { probe->add(s); };

  auto prop = propagate(initial, cfg.potential, cfg.propagator, cfg.stop, cfg.record_every, cfg.units, observer);
  const auto& traj = prop.trajectory;
  const auto& state = prop.state;

  ScatteringResult r;
  const auto probs = region_probabilities(state, split);
  r.p_left = probs.p_left;
  r.p_right = probs.p_right;
  r.final_norm = norm(state);
  r.final_time = state.time;
  r.width_incident = effective_width(initial);
  r.width_reflected = r.p_left > 1e-3 ? packet_width(state, Region::Left, split) : nan;
  r.width_transmitted = r.p_right > 1e-3 ? packet_width(state, Region::Right, split) : nan;
  r.analytic = analytic_probabilities(cfg);
  r.config_fingerprint = config_fingerprint(cfg);

  try {
    r.timing = interaction_window(traj, cfg.packet.width_wI, cfg.packet.k0, cfg.units);
  } catch (const DomainError&) {
    r.timing.reset();
  }

  // Incident velocity: before anything has crossed the scatterer.
  r.v_incident = detail::fitted_velocity(traj, Region::Left, [&](std::size_t j) {
    return traj.right_probability[j] <= 1e-5;
  });
  // Transmitted velocity: after the collision, once the far side holds its final weight.
  if (r.p_right > 1e-3) {
    const double settled = r.timing ? r.timing->t2 : 0.0;
    r.v_transmitted = detail::fitted_velocity(traj, Region::Right, [&](std::size_t j) {
      return traj.times[j] >= settled && std::abs(traj.right_probability[j] - r.p_right) < 1e-5;
    });
  }

  if (probe) {
    try {
      r.current_estimate = probe->estimate();
    } catch (const DomainError&) {
      r.current_estimate.reset();
    }
  }
  return {std::move(r), prop.trajectory, prop.state};
}

inline ScatteringResult run(const RunConfig& cfg) { return run_full(cfg).result; }

/// Table row for a configuration and its result.
inline ResultRow make_row(const RunConfig& cfg, const ScatteringResult& r) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ResultRow row;
  const double e = cfg.energy();
  if (const auto* step = std::get_if<Step>(&cfg.potential.kind())) {
    row.e_over_v0 = step->v0 == 0.0 ? std::numeric_limits<double>::infinity() : e / step->v0;
  } else {
    const double top = cfg.potential.max_abs_level();
    row.e_over_v0 = top == 0.0 ? std::numeric_limits<double>::infinity() : e / top;
  }
  row.w_over_lambda = cfg.packet.width_wI / wavelength(cfg.packet.k0);
  row.r_analytic = r.analytic.r;
  row.t_analytic = r.analytic.t;
  row.p_left = r.p_left;
  row.p_right = r.p_right;
  row.w_t_ratio = r.width_transmitted / r.width_incident;
  row.v_left = r.v_incident;
  row.v_right = r.v_transmitted;
  row.window_measured = r.timing ? r.timing->measured : nan;
  row.window_analytic = cfg.packet.width_wI / cfg.units.group_velocity(cfg.packet.k0);
  row.config_fingerprint = r.config_fingerprint;
  return row;
}

/// Row with the analytic columns only (no simulation); measured columns are NaN.
inline ResultRow analytic_row(const RunConfig& cfg) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ScatteringResult r;
  r.analytic = analytic_probabilities(cfg);
  r.p_left = r.p_right = r.width_transmitted = r.v_incident = r.v_transmitted = nan;
  r.width_incident = 1.0;
  r.config_fingerprint = config_fingerprint(cfg);
  return make_row(cfg, r);
}

/// The configuration for one point of a sweep axis. The base must be a step with a
/// flat-top packet; grid, time step and stop rule are regenerated for the new point.
inline RunConfig sweep_point(const RunConfig& base, SweepAxis axis, double value) {
  if (!(value > 0.0)) throw ConfigError("sweep: axis values must be positive");
  Scenario s = scenario_of(base);
  if (axis == SweepAxis::EnergyRatio) {
    s.e_over_v0 = value;
  } else {
    s.w_over_lambda = value;
    // Width studies stop on packet kinematics; see convergence_study.
    s.kinematic_stop = true;
  }
  return make_config(s);
}

/// Runs `count` independent jobs on up to `jobs` threads. Results keep index order; the
/// first failure (by index) is rethrown after all workers finish.
template <class T, class F>
std::vector<T> parallel_map(std::size_t count, std::size_t jobs, F f) {
  std::vector<std::optional<T>> out(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        out[i] = f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<T> result;
  result.reserve(count);
  for (auto& o : out) result.push_back(std::move(*o));
  return result;
}

inline std::vector<double> sorted_values(std::vector<double> values) {
  if (values.empty()) throw ConfigError("sweep: no axis values");
  for (double v : values) {
    if (!(v > 0.0)) throw ConfigError("sweep: axis values must be positive");
  }
  std::sort(values.begin(), values.end());
  return values;
}

/// Energy sweep: one simulated row per E/V0, ordered by E/V0.
inline ResultTable sweep(const RunConfig& base, std::vector<double> e_over_v0, std::size_t jobs = 1) {
  const auto values = sorted_values(std::move(e_over_v0));
  return parallel_map<ResultRow>(values.size(), jobs, [&](std::size_t i) {
    const RunConfig cfg = sweep_point(base, SweepAxis::EnergyRatio, values[i]);
    return make_row(cfg, run(cfg));
  });
}

/// Analytic-only table over E/V0. Step / flat-top bases regenerate the scenario per point;
/// other profiles keep the base and only move k0, with V0 taken as the largest |level|.
inline ResultTable analytic_sweep(const RunConfig& base, std::vector<double> e_over_v0) {
  const bool scenario = base.potential.is_step() && std::holds_alternative<FlatTop>(base.packet.shape);
  const double top = base.potential.max_abs_level();
  if (!scenario && top == 0.0) throw ConfigError("analytic: potential has no nonzero level to scale E by");
  ResultTable table;
  for (double v : sorted_values(std::move(e_over_v0))) {
    if (scenario) {
      table.push_back(analytic_row(sweep_point(base, SweepAxis::EnergyRatio, v)));
      continue;
    }
    if (!(v > 0.0)) throw ConfigError("sweep: axis values must be positive");
    RunConfig cfg = base;
    cfg.packet.k0 = std::sqrt(2.0 * cfg.units.mass * v * top) / cfg.units.hbar;
    table.push_back(analytic_row(cfg));
  }
  return table;
}

struct ConvergenceReport {
  ResultTable table;  // ordered by w/lambda
  /// |P_left - R| strictly decreasing over every row.
  bool strictly_decreasing = false;
  /// |P_left - R| and |P_right - T| non-increasing over the final three rows.
  bool final_three_non_increasing = false;
};

inline double reflection_error(const ResultRow& row) { return std::abs(row.p_left - row.r_analytic); }
inline double transmission_error(const ResultRow& row) { return std::abs(row.p_right - row.t_analytic); }

/// Width convergence at fixed E/V0. Each width stops once the packets have kinematically
/// cleared the step, since narrow raised-cosine packets keep a slow spectral tail near the
/// step long after R and T have settled. On failure the finished rows are handed to
/// `persist` before the error propagates.
inline ConvergenceReport convergence_study(const RunConfig& base, std::vector<double> w_over_lambda,
                                           std::size_t jobs = 1,
                                           const std::function<void(const ResultTable&)>& persist = {}) {
  const auto values = sorted_values(std::move(w_over_lambda));
  if (values.size() < 3) throw ConfigError("convergence_study: needs at least 3 widths");
  std::vector<std::optional<ResultRow>> rows(values.size());
  std::mutex mu;
  try {
    parallel_map<int>(values.size(), jobs, [&](std::size_t i) {
      const RunConfig cfg = sweep_point(base, SweepAxis::PacketWidth, values[i]);
      auto row = make_row(cfg, run(cfg));
      std::lock_guard lock(mu);
      rows[i] = std::move(row);
      return 0;
    });
  } catch (...) {
    if (persist) {
      ResultTable partial;
      for (const auto& r : rows) {
        if (r) partial.push_back(*r);
      }
      persist(partial);
    }
    throw;
  }
  ConvergenceReport report;
  for (auto& r : rows) report.table.push_back(std::move(*r));
  const auto& t = report.table;
  report.strictly_decreasing = true;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(reflection_error(t[i]) < reflection_error(t[i - 1]))) report.strictly_decreasing = false;
  }
  report.final_three_non_increasing = true;
  for (std::size_t i = t.size() - 2; i < t.size(); ++i) {
    if (!(reflection_error(t[i]) <= reflection_error(t[i - 1])) ||
        !(transmission_error(t[i]) <= transmission_error(t[i - 1]))) {
      report.final_three_non_increasing = false;
    }
  }
  return report;
}

}  // namespace wavescat::harness
