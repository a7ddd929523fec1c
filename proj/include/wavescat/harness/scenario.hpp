#pragma once

// Builds complete step-scattering configurations from a handful of physical parameters.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <variant>

#include "wavescat/harness/config.hpp"

namespace wavescat::harness {

/// Step scattering of a flat-top packet, described by dimensionless ratios.
struct Scenario {
  double e_over_v0 = 2.0;  // +inf for a zero-height step
  double w_over_lambda = 200.0;
  double k0 = 5.0;
  double taper_fraction = 0.1;
  Scheme scheme = Scheme::SplitStepSpectral;
  double points_per_wavelength = 24.0;
  double step_phase = kDefaultStepPhase;
  bool kinematic_stop = false;  // MaxTime from the packet kinematics instead of Separated
  UnitSystem units;
};

/// Smallest n >= target of the form 2^a 3^b 5^c with a >= 1.
inline std::size_t next_fft_size(std::size_t target) {
  std::size_t best = std::numeric_limits<std::size_t>::max();
  for (std::size_t p2 = 2; p2 < 2 * std::max<std::size_t>(target, 2); p2 *= 2) {
    for (std::size_t p3 = p2; p3 < 2 * std::max<std::size_t>(target, 2); p3 *= 3) {
      for (std::size_t p5 = p3; p5 < 2 * std::max<std::size_t>(target, 2); p5 *= 5) {
        if (p5 >= target && p5 < best) best = p5;
      }
    }
  }
  return best;
}

inline double wavelength(double k0) { return 2.0 * std::numbers::pi / k0; }

/// Gap between the packet's leading edge and the step at t = 0, in wavelengths.
inline constexpr double kLaunchGapWavelengths = 20.0;
/// Grid half-length beyond 3 w_I, in wavelengths.
inline constexpr double kGridMarginWavelengths = 80.0;

/// Time at which the reflected and transmitted packets have both cleared the interaction
/// window around the step, plus ten record intervals.
inline double kinematic_stop_time(const PacketSpec& packet, double v0, const Separated& zone,
                                  double record_interval, const UnitSystem& units) {
  const double v_in = units.group_velocity(packet.k0);
  const auto [lo, hi] = packet.support();
  const double trailing_arrival = -lo / v_in;
  const double e = units.kinetic_energy(packet.k0);
  double v_slowest = v_in;
  if (e > v0) {
    v_slowest = std::min(v_in, std::sqrt(2.0 * (e - v0) / units.mass));
  }
  return trailing_arrival + 1.5 * zone.window / v_slowest + 10.0 * record_interval;
}

inline RunConfig make_config(const Scenario& s) {
  if (!(s.e_over_v0 > 0.0)) throw ConfigError("Scenario: E/V0 must be positive");
  if (!(s.w_over_lambda > 0.0)) throw ConfigError("Scenario: w/lambda must be positive");
  RunConfig cfg;
  cfg.units = s.units;
  const double lambda = wavelength(s.k0);
  const double w = s.w_over_lambda * lambda;
  const double energy = s.units.kinetic_energy(s.k0);
  const double v0 = std::isinf(s.e_over_v0) ? 0.0 : energy / s.e_over_v0;
  cfg.potential = PotentialProfile::step(v0);

  const double support_half = 0.5 * w * (1.0 + s.taper_fraction);
  cfg.packet = PacketSpec::flat_top(-(support_half + kLaunchGapWavelengths * lambda), w, s.k0,
                                    s.taper_fraction);

  const double half = 3.0 * w + kGridMarginWavelengths * lambda;
  const double target = 2.0 * half * s.points_per_wavelength / lambda;
  cfg.grid = GridSpec{-half, half, next_fft_size(static_cast<std::size_t>(std::ceil(target - 1e-9)))};

  const double dt = phase_limited_dt(cfg.grid, cfg.potential, cfg.units, s.step_phase);
  cfg.propagator = s.scheme == Scheme::CrankNicolson ? PropagatorConfig::crank_nicolson(dt)
                                                     : PropagatorConfig::split_step(dt);

  const double collision = w / s.units.group_velocity(s.k0);
  cfg.record_every = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(collision / 200.0 / dt)));

  Separated sep = default_separated(s.k0);
  // Long enough for the slowest packet to cross the whole grid twice.
  const double v_in = s.units.group_velocity(s.k0);
  sep.max_time = 4.0 * cfg.grid.length() / v_in + 2.0 * collision;
  if (s.kinematic_stop) {
    cfg.stop = MaxTime{kinematic_stop_time(cfg.packet, v0, sep, static_cast<double>(cfg.record_every) * dt, s.units)};
  } else {
    cfg.stop = sep;
  }
  return cfg;
}

/// The repository's headline reproduction: E = 2 V0, hbar = m = 1, k0 = 5, w_I = 200 lambda.
inline Scenario headline_scenario(Scheme scheme = Scheme::SplitStepSpectral) {
  Scenario s;
  s.scheme = scheme;
  return s;
}

/// Recovers the scenario of a step / flat-top configuration (used to regenerate geometry
/// along a sweep axis).
inline Scenario scenario_of(const RunConfig& cfg) {
  const auto* step = std::get_if<Step>(&cfg.potential.kind());
  const auto* ft = std::get_if<FlatTop>(&cfg.packet.shape);
  if (step == nullptr || ft == nullptr) {
    throw ConfigError("sweeps require a step potential and a flat-top packet");
  }
  Scenario s;
  s.units = cfg.units;
  s.k0 = cfg.packet.k0;
  const double energy = cfg.energy();
  s.e_over_v0 = step->v0 == 0.0 ? std::numeric_limits<double>::infinity() : energy / step->v0;
  s.w_over_lambda = cfg.packet.width_wI / wavelength(s.k0);
  s.taper_fraction = ft->taper_fraction;
  s.scheme = cfg.propagator.scheme;
  s.points_per_wavelength = wavelength(s.k0) / cfg.grid.dx();
  const double e_max =
      cfg.units.kinetic_energy(std::numbers::pi / cfg.grid.dx()) + cfg.potential.max_abs_level();
  s.step_phase = cfg.propagator.dt * e_max / cfg.units.hbar;
  s.kinematic_stop = std::holds_alternative<MaxTime>(cfg.stop);
  return s;
}

}  // namespace wavescat::harness
