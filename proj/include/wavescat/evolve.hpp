#pragma once

// Unitary time stepping of the 1-D Schroedinger equation.
//
// Two independent schemes:
//  * Crank-Nicolson (Cayley form) with the three-point Laplacian and hard walls,
//    solved by a pre-factored tridiagonal sweep.
//  * Strang split-step: half kinetic (exact in Fourier space), full potential, half kinetic,
//    on a periodic domain.
// Internally hbar = m = 1; see UnitSystem for the conversion.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "wavescat/error.hpp"
#include "wavescat/fft.hpp"
#include "wavescat/packet.hpp"
#include "wavescat/stationary.hpp"
#include "wavescat/units.hpp"

namespace wavescat {

enum class Scheme { CrankNicolson, SplitStepSpectral };
enum class Boundary { HardWall, Periodic };

struct PropagatorConfig {
  Scheme scheme = Scheme::SplitStepSpectral;
  double dt = 1e-3;
  Boundary boundary = Boundary::Periodic;

  static PropagatorConfig crank_nicolson(double dt) {
    return {Scheme::CrankNicolson, dt, Boundary::HardWall};
  }
  static PropagatorConfig split_step(double dt) {
    return {Scheme::SplitStepSpectral, dt, Boundary::Periodic};
  }

  void validate() const {
    if (!(dt > 0.0)) throw ConfigError("PropagatorConfig: dt must be positive");
    if (scheme == Scheme::CrankNicolson && boundary != Boundary::HardWall) {
      throw ConfigError("PropagatorConfig: Crank-Nicolson requires hard-wall boundaries");
    }
    if (scheme == Scheme::SplitStepSpectral && boundary != Boundary::Periodic) {
      throw ConfigError("PropagatorConfig: split-step requires periodic boundaries");
    }
  }

  friend bool operator==(const PropagatorConfig&, const PropagatorConfig&) = default;
};

/// Largest phase a single step may advance any grid mode by, in radians.
inline constexpr double kDefaultStepPhase = 2.0;

/// max_phase * hbar / E_max with E_max = (hbar^2/2m)(pi/dx)^2 + max|V|: the fastest mode the
/// grid can carry advances by at most max_phase per step. Below 2 pi no two grid energies
/// alias onto each other under the split-step map.
inline double phase_limited_dt(const GridSpec& grid, const PotentialProfile& potential,
                               const UnitSystem& units = {}, double max_phase = kDefaultStepPhase) {
  const double k_nyquist = std::numbers::pi / grid.dx();
  return max_phase * units.hbar / (units.kinetic_energy(k_nyquist) + potential.max_abs_level());
}

/// Potential sampled on the grid; boundary points take the mean of adjacent levels.
inline std::vector<double> sample_potential(const GridSpec& grid, const PotentialProfile& potential) {
  std::vector<double> v(grid.n_points);
  for (std::size_t j = 0; j < grid.n_points; ++j) v[j] = potential.value_at(grid.x(j));
  return v;
}

/// Samples of the potential's Fourier series truncated to the grid band (Nyquist bin
/// dropped), on the periodic domain with the wrap-around jump at x_min. Unlike point
/// samples, whose spectrum aliases the 1/q tail of each jump, these carry the exact
/// Fourier coefficients of the profile for every resolved wavenumber.
inline std::vector<double> band_limited_potential(const GridSpec& grid, const PotentialProfile& potential) {
  const auto pc = potential.as_piecewise();
  const std::size_t n = grid.n_points;
  const double length = grid.length();

  // Jumps inside the domain plus the wrap-around jump; levels outside the domain only
  // enter through the level at each edge.
  std::vector<std::pair<double, double>> jumps;  // (position, level step)
  double first = pc.levels.front();
  std::optional<double> last;
  double mean = 0.0;
  for (std::size_t i = 0; i < pc.levels.size(); ++i) {
    const double lo = i == 0 ? grid.x_min : std::clamp(pc.boundaries[i - 1], grid.x_min, grid.x_max);
    const double hi = i == pc.boundaries.size() ? grid.x_max : std::clamp(pc.boundaries[i], grid.x_min, grid.x_max);
    mean += pc.levels[i] * (hi - lo);
    if (i < pc.boundaries.size()) {
      const double b = pc.boundaries[i];
      if (b <= grid.x_min) first = pc.levels[i + 1];
      if (b >= grid.x_max && !last) last = pc.levels[i];
      if (b > grid.x_min && b < grid.x_max) jumps.emplace_back(b, pc.levels[i + 1] - pc.levels[i]);
    }
  }
  mean /= length;
  jumps.emplace_back(grid.x_min, first - last.value_or(pc.levels.back()));

  Fft fft(n);
  auto buf = fft.data();
  const auto k = Fft::wavenumbers(n, length);
  const complex i{0.0, 1.0};
  buf[0] = mean;
  for (std::size_t m = 1; m < n; ++m) {
    if (2 * m == n) {
      buf[m] = 0.0;
      continue;
    }
    // Coefficient of e^{ikx}: sum of jumps d e^{-ikb} / (ik length), rephased to x_min.
    complex c{};
    for (const auto& [b, d] : jumps) c += d * std::exp(-i * k[m] * (b - grid.x_min));
    buf[m] = c / (i * k[m] * length);
  }
  fft.backward();
  std::vector<double> v(n);
  for (std::size_t j = 0; j < n; ++j) v[j] = buf[j].real();
  return v;
}

/// The potential samples a scheme propagates with: band-limited for split-step, point
/// samples for Crank-Nicolson (whose three-point stencil is local).
inline std::vector<double> scheme_potential(const GridSpec& grid, const PotentialProfile& potential,
                                            Scheme scheme) {
  return scheme == Scheme::SplitStepSpectral ? band_limited_potential(grid, potential)
                                             : sample_potential(grid, potential);
}

class Propagator {
 public:
  Propagator(const GridSpec& grid, const PotentialProfile& potential, const PropagatorConfig& config,
             const UnitSystem& units = {})
      : grid_(grid), config_(config), units_(units) {
    grid.validate();
    config.validate();
    units.validate();
    const std::size_t n = grid.n_points;
    const double ds = units.to_internal_time(config.dt);
    std::vector<double> u = scheme_potential(grid, potential, config.scheme);
    for (auto& v : u) v = units.to_internal_energy(v);

    if (config.scheme == Scheme::SplitStepSpectral) {
      fft_.emplace(n);
      const auto k = Fft::wavenumbers(n, grid.length());
      half_kinetic_.resize(n);
      full_kinetic_.resize(n);
      for (std::size_t j = 0; j < n; ++j) {
        const double e = 0.5 * k[j] * k[j];
        half_kinetic_[j] = std::polar(1.0, -0.5 * e * ds);
        full_kinetic_[j] = std::polar(1.0, -e * ds);
      }
      // 1/n of the unnormalized inverse transform is folded into the potential phase.
      const double inv_n = 1.0 / static_cast<double>(n);
      potential_phase_.resize(n);
      for (std::size_t j = 0; j < n; ++j) potential_phase_[j] = std::polar(inv_n, -u[j] * ds);
    } else {
      // The uniform part of the potential is an exact global phase; only the remainder
      // enters the Cayley operator.
      const double u_ref = *std::min_element(u.begin(), u.end());
      global_phase_ = std::polar(1.0, -u_ref * ds);
      const double dx = grid.dx();
      const complex i{0.0, 1.0};
      off_ = -i * ds / (4.0 * dx * dx);
      diag_rhs_.resize(n);
      std::vector<complex> diag(n);
      for (std::size_t j = 0; j < n; ++j) {
        const double h = 1.0 / (dx * dx) + (u[j] - u_ref);
        diag[j] = 1.0 + i * 0.5 * ds * h;
        diag_rhs_[j] = 1.0 - i * 0.5 * ds * h;
      }
      // Thomas factorization of the constant left-hand matrix.
      inv_pivot_.resize(n);
      upper_.resize(n);
      complex pivot = diag[0];
      inv_pivot_[0] = 1.0 / pivot;
      upper_[0] = off_ * inv_pivot_[0];
      for (std::size_t j = 1; j < n; ++j) {
        pivot = diag[j] - off_ * upper_[j - 1];
        inv_pivot_[j] = 1.0 / pivot;
        upper_[j] = off_ * inv_pivot_[j];
      }
      work_.resize(n);
    }
  }

  const GridSpec& grid() const { return grid_; }
  const PropagatorConfig& config() const { return config_; }

  /// Advances the state by n_steps * dt. Time is accumulated as a step count so that
  /// repeated calls do not drift.
  void advance(WaveState& state, std::size_t n_steps) {
    if (state.grid != grid_ || state.psi.size() != grid_.n_points) {
      throw ConfigError("Propagator: state grid does not match the propagator grid");
    }
    if (n_steps == 0) return;
    if (config_.scheme == Scheme::SplitStepSpectral) {
      advance_split(state.psi, n_steps);
    } else {
      for (std::size_t s = 0; s < n_steps; ++s) advance_cn(state.psi);
    }
    steps_ += n_steps;
    state.time = start_time_ + static_cast<double>(steps_) * config_.dt;
  }

  /// Resets the step counter so that the next advance() measures time from t0.
  void set_origin(double t0) {
    start_time_ = t0;
    steps_ = 0;
  }

 private:
  void advance_split(std::vector<complex>& psi, std::size_t n_steps) {
    auto buf = fft_->data();
    const std::size_t n = psi.size();
    std::copy(psi.begin(), psi.end(), buf.begin());
    fft_->forward();
    for (std::size_t s = 0; s < n_steps; ++s) {
      // Adjacent half kinetic steps of consecutive steps merge into one full step.
      const auto& kin = s == 0 ? half_kinetic_ : full_kinetic_;
      for (std::size_t j = 0; j < n; ++j) buf[j] *= kin[j];
      fft_->backward();
      for (std::size_t j = 0; j < n; ++j) buf[j] *= potential_phase_[j];
      fft_->forward();
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) buf[j] *= half_kinetic_[j];
    fft_->backward();
    for (std::size_t j = 0; j < n; ++j) psi[j] = buf[j] * inv_n;
  }

  void advance_cn(std::vector<complex>& psi) {
    const std::size_t n = psi.size();
    const complex off_rhs = -off_;
    // Right-hand side (1 - i ds H / 2) psi, forward elimination fused in.
    complex prev{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) {
      const complex left = j > 0 ? psi[j - 1] : complex{};
      const complex right = j + 1 < n ? psi[j + 1] : complex{};
      const complex rhs = diag_rhs_[j] * psi[j] + off_rhs * (left + right);
      prev = (rhs - off_ * prev) * inv_pivot_[j];
      work_[j] = prev;
    }
    for (std::size_t j = n - 1; j-- > 0;) work_[j] -= upper_[j] * work_[j + 1];
    for (std::size_t j = 0; j < n; ++j) psi[j] = work_[j] * global_phase_;
  }

  GridSpec grid_;
  PropagatorConfig config_;
  UnitSystem units_;
  double start_time_ = 0.0;
  std::size_t steps_ = 0;

  // split-step
  std::optional<Fft> fft_;
  std::vector<complex> half_kinetic_;
  std::vector<complex> full_kinetic_;
  std::vector<complex> potential_phase_;

  // Crank-Nicolson
  complex off_;
  complex global_phase_{1.0, 0.0};
  std::vector<complex> diag_rhs_;
  std::vector<complex> inv_pivot_;
  std::vector<complex> upper_;
  std::vector<complex> work_;
};

/// One time step.
inline WaveState step(WaveState state, const PotentialProfile& potential, const PropagatorConfig& config,
                      const UnitSystem& units = {}) {
  Propagator prop(state.grid, potential, config, units);
  prop.set_origin(state.time);
  prop.advance(state, 1);
  return state;
}

enum class EnergyOperator { Spectral, FiniteDifference };

/// <H> in physical energy units. Spectral uses the exact kinetic operator on the periodic
/// grid with the band-limited potential; FiniteDifference uses the three-point Laplacian
/// with hard walls and point samples (the operator Crank-Nicolson conserves).
inline double energy_expectation(const WaveState& state, const PotentialProfile& potential,
                                 const UnitSystem& units = {},
                                 EnergyOperator op = EnergyOperator::Spectral) {
  const auto& grid = state.grid;
  const std::size_t n = grid.n_points;
  const double dx = grid.dx();
  double kinetic = 0.0;
  if (op == EnergyOperator::Spectral) {
    Fft fft(n);
    auto buf = fft.data();
    std::copy(state.psi.begin(), state.psi.end(), buf.begin());
    fft.forward();
    const auto k = Fft::wavenumbers(n, grid.length());
    // Parseval: sum |psi_j|^2 dx = sum |X_m|^2 dx / n
    for (std::size_t j = 0; j < n; ++j) kinetic += 0.5 * k[j] * k[j] * std::norm(buf[j]);
    kinetic *= dx / static_cast<double>(n);
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      const complex left = j > 0 ? state.psi[j - 1] : complex{};
      const complex right = j + 1 < n ? state.psi[j + 1] : complex{};
      const complex lap = (left - 2.0 * state.psi[j] + right) / (dx * dx);
      kinetic += (-0.5 * std::conj(state.psi[j]) * lap).real();
    }
    kinetic *= dx;
  }
  const auto v = scheme_potential(
      grid, potential, op == EnergyOperator::Spectral ? Scheme::SplitStepSpectral : Scheme::CrankNicolson);
  double pot = 0.0;
  for (std::size_t j = 0; j < n; ++j) pot += units.to_internal_energy(v[j]) * std::norm(state.psi[j]);
  pot *= dx;
  return units.from_internal_energy((kinetic + pot) / norm(state));
}

// ---------------------------------------------------------------------------
// Trajectories

struct MaxTime {
  double t = 0.0;
};

/// Stop once the interaction zone has been visited and emptied again (probability below
/// epsilon within `window` of the scatterer) and the left/right probabilities have been
/// stationary within epsilon over the last 10 records. max_time bounds the run.
struct Separated {
  double epsilon = 1e-6;
  double window = 0.0;
  double max_time = std::numeric_limits<double>::infinity();
};

using StopCriterion = std::variant<MaxTime, Separated>;

/// Default stop rule for a packet of central wavenumber k0: epsilon 1e-6, window 10 wavelengths.
inline Separated default_separated(double k0) {
  return {1e-6, 10.0 * 2.0 * std::numbers::pi / k0, std::numeric_limits<double>::infinity()};
}

struct Trajectory {
  std::vector<double> times;
  std::vector<double> mean_positions;
  std::vector<double> left_probability;
  std::vector<double> right_probability;
  std::vector<double> norms;
  // Region-conditional <x>, renormalized by the region probability (NaN when empty).
  std::vector<double> left_mean_positions;
  std::vector<double> right_mean_positions;

  std::size_t size() const { return times.size(); }
};

namespace detail {

/// Fraction of grid cell j (centered on x_j, width dx) lying left of split.
inline double left_fraction(const GridSpec& grid, std::size_t j, double split) {
  const double dx = grid.dx();
  const double lo = grid.x(j) - 0.5 * dx;
  return std::clamp((split - lo) / dx, 0.0, 1.0);
}

struct RegionMoments {
  double p_left = 0.0;
  double p_right = 0.0;
  double x_left = 0.0;
  double x_right = 0.0;
  double total = 0.0;
  double x_total = 0.0;
};

inline RegionMoments region_moments(const WaveState& state, double split) {
  RegionMoments m;
  const auto& grid = state.grid;
  const double dx = grid.dx();
  for (std::size_t j = 0; j < state.psi.size(); ++j) {
    const double p = std::norm(state.psi[j]);
    if (p == 0.0) continue;
    const double x = grid.x(j);
    const double f = left_fraction(grid, j, split);
    m.p_left += f * p;
    m.p_right += (1.0 - f) * p;
    m.x_left += f * p * x;
    m.x_right += (1.0 - f) * p * x;
  }
  m.p_left *= dx;
  m.p_right *= dx;
  m.x_left *= dx;
  m.x_right *= dx;
  m.total = m.p_left + m.p_right;
  m.x_total = m.x_left + m.x_right;
  return m;
}

inline double probability_in(const WaveState& state, double lo, double hi) {
  double s = 0.0;
  for (std::size_t j = 0; j < state.psi.size(); ++j) {
    const double x = state.grid.x(j);
    if (x > lo && x < hi) s += std::norm(state.psi[j]);
  }
  return s * state.grid.dx();
}

inline double edge_probability(const WaveState& state, std::size_t cells) {
  const std::size_t n = state.psi.size();
  double s = 0.0;
  for (std::size_t j = 0; j < std::min(cells, n); ++j) {
    s += std::norm(state.psi[j]) + std::norm(state.psi[n - 1 - j]);
  }
  return s * state.grid.dx();
}

}  // namespace detail

/// Position separating "left" from "right": the step itself, or the middle of a structure.
inline double scattering_center(const PotentialProfile& potential) {
  const auto pc = potential.as_piecewise();
  if (pc.boundaries.empty()) return 0.0;
  return 0.5 * (pc.boundaries.front() + pc.boundaries.back());
}

using StateObserver = std::function<void(const WaveState&)>;

struct Propagation {
  WaveState state;
  Trajectory trajectory;
};

/// Steps until the stop criterion fires, recording every `record_every` steps (and the
/// initial state). The observer, if any, sees each recorded state.
inline Propagation propagate(WaveState state, const PotentialProfile& potential,
                             const PropagatorConfig& config, const StopCriterion& stop,
                             std::size_t record_every, const UnitSystem& units = {},
                             const StateObserver& observer = {}) {
  if (record_every == 0) throw ConfigError("propagate: record_every must be positive");
  Propagator prop(state.grid, potential, config, units);
  prop.set_origin(state.time);

  const auto pc = potential.as_piecewise();
  const double split = scattering_center(potential);
  const double zone_lo = pc.boundaries.empty() ? split : pc.boundaries.front();
  const double zone_hi = pc.boundaries.empty() ? split : pc.boundaries.back();
  constexpr std::size_t kEdgeCells = 5;
  constexpr double kEdgeTolerance = 1e-8;
  constexpr std::size_t kStationarySamples = 10;

  Trajectory traj;
  auto record = [&] {
    const auto m = detail::region_moments(state, split);
    traj.times.push_back(state.time);
    traj.norms.push_back(m.total);
    traj.mean_positions.push_back(m.x_total / m.total);
    traj.left_probability.push_back(m.p_left);
    traj.right_probability.push_back(m.p_right);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    traj.left_mean_positions.push_back(m.p_left > 0.0 ? m.x_left / m.p_left : nan);
    traj.right_mean_positions.push_back(m.p_right > 0.0 ? m.x_right / m.p_right : nan);
    if (observer) observer(state);
    const double edge = detail::edge_probability(state, kEdgeCells);
    if (edge > kEdgeTolerance) throw BoundaryContactError(state.time, edge);
  };

  auto stationary = [&](const std::vector<double>& series, double eps) {
    const auto first = series.end() - static_cast<std::ptrdiff_t>(kStationarySamples);
    const auto [lo, hi] = std::minmax_element(first, series.end());
    return *hi - *lo <= eps;
  };

  const double t_start = state.time;
  bool zone_visited = false;
  record();
  while (true) {
    if (const auto* mt = std::get_if<MaxTime>(&stop)) {
      if (state.time - t_start >= mt->t - 0.5 * config.dt) break;
      // Do not overshoot the requested time by more than half a step.
      const auto remaining = static_cast<std::size_t>(std::llround((mt->t - (state.time - t_start)) / config.dt));
      prop.advance(state, std::max<std::size_t>(1, std::min(record_every, remaining)));
    } else {
      const auto& sep = std::get<Separated>(stop);
      const double in_zone = detail::probability_in(state, zone_lo - sep.window, zone_hi + sep.window);
      zone_visited = zone_visited || in_zone >= sep.epsilon;
      if (zone_visited && traj.size() >= kStationarySamples && in_zone < sep.epsilon &&
          stationary(traj.left_probability, sep.epsilon) &&
          stationary(traj.right_probability, sep.epsilon)) {
        break;
      }
      if (state.time - t_start > sep.max_time) {
        throw DomainError("propagate: packets did not separate before t=" + std::to_string(state.time));
      }
      prop.advance(state, record_every);
    }
    record();
  }
  return {std::move(state), std::move(traj)};
}

struct TimingInfo {
  double t1 = 0.0;
  double t2 = 0.0;
  double measured = 0.0;  // t2 - t1
  double analytic = 0.0;  // w_I m / (hbar k0)
};

/// Leading-edge time t1: right-side probability first exceeds `threshold`.
/// Trailing-edge time t2: the transmitted probability still to arrive first falls below
/// `threshold`. Both are linearly interpolated between records.
inline TimingInfo interaction_window(const Trajectory& traj, double width_wI, double k0,
                                     const UnitSystem& units = {}, double threshold = 1e-3) {
  TimingInfo info;
  info.analytic = width_wI / units.group_velocity(k0);
  const auto& p = traj.right_probability;
  const std::size_t n = traj.size();
  if (n < 3) throw DomainError("interaction_window: trajectory too short");
  if (p.front() > threshold) {
    throw DomainError("interaction_window: collision already under way at the first record");
  }
  auto crossing = [&](std::size_t from, double level) -> std::optional<double> {
    for (std::size_t j = std::max<std::size_t>(from, 1); j < n; ++j) {
      if (p[j - 1] <= level && p[j] > level) {
        const double f = (level - p[j - 1]) / (p[j] - p[j - 1]);
        return traj.times[j - 1] + f * (traj.times[j] - traj.times[j - 1]);
      }
    }
    return std::nullopt;
  };
  const auto t1 = crossing(1, threshold);
  if (!t1) throw DomainError("interaction_window: no collision in trajectory");
  const double final_level = p.back() - threshold;
  if (!(final_level > threshold)) {
    throw DomainError("interaction_window: transmitted probability too small to time the collision");
  }
  const auto t2 = crossing(1, final_level);
  if (!t2 || *t2 <= *t1) throw DomainError("interaction_window: collision not complete in trajectory");
  info.t1 = *t1;
  info.t2 = *t2;
  info.measured = *t2 - *t1;
  return info;
}

}  // namespace wavescat
