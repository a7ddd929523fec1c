#pragma once

// Observables of evolved states: region probabilities, packet widths, group velocities,
// and probability currents.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wavescat/error.hpp"
#include "wavescat/evolve.hpp"
#include "wavescat/fft.hpp"
#include "wavescat/packet.hpp"
#include "wavescat/stationary.hpp"
#include "wavescat/units.hpp"

namespace wavescat {

enum class Region { Left, Right };

struct RegionProbabilities {
  double p_left = 0.0;
  double p_right = 0.0;
};

/// The grid cell containing `split` is shared in proportion to its overlap.
inline RegionProbabilities region_probabilities(const WaveState& state, double split = 0.0) {
  const auto m = detail::region_moments(state, split);
  return {m.p_left, m.p_right};
}

/// Equivalent-rectangle width of the part of the field on one side of `split`.
inline double packet_width(const WaveState& state, Region region, double split = 0.0) {
  const auto& grid = state.grid;
  std::vector<double> weights(grid.n_points);
  double p = 0.0;
  for (std::size_t j = 0; j < grid.n_points; ++j) {
    const double f = detail::left_fraction(grid, j, split);
    weights[j] = region == Region::Left ? f : 1.0 - f;
    p += weights[j] * std::norm(state.psi[j]);
  }
  p *= grid.dx();
  if (!(p > 1e-3)) {
    throw DomainError("packet_width: region holds only " + std::to_string(p) + " probability");
  }
  return detail::participation_width(state, weights);
}

struct TimeInterval {
  double begin = 0.0;
  double end = 0.0;
};

/// Least-squares slope of the region-conditional <x>(t) over the window.
///
/// The region must be in steady state across the window: its probability may vary by at
/// most 1% of its peak, i.e. no packet is still forming or leaving.
inline double group_velocity_fit(const Trajectory& traj, Region region, TimeInterval window) {
  const auto& xs = region == Region::Left ? traj.left_mean_positions : traj.right_mean_positions;
  const auto& ps = region == Region::Left ? traj.left_probability : traj.right_probability;
  std::vector<double> t;
  std::vector<double> x;
  double p_min = std::numeric_limits<double>::infinity();
  double p_max = 0.0;
  for (std::size_t j = 0; j < traj.size(); ++j) {
    if (traj.times[j] < window.begin || traj.times[j] > window.end) continue;
    if (!std::isfinite(xs[j])) continue;
    t.push_back(traj.times[j]);
    x.push_back(xs[j]);
    p_min = std::min(p_min, ps[j]);
    p_max = std::max(p_max, ps[j]);
  }
  if (t.size() < 5) throw DomainError("group_velocity_fit: fewer than 5 samples in window");
  if (!(p_max > 0.0) || p_max - p_min > 0.01 * p_max) {
    throw DomainError("group_velocity_fit: region probability not stationary over window");
  }
  const auto n = static_cast<double>(t.size());
  double tm = 0.0;
  double xm = 0.0;
  for (std::size_t j = 0; j < t.size(); ++j) {
    tm += t[j];
    xm += x[j];
  }
  tm /= n;
  xm /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t j = 0; j < t.size(); ++j) {
    sxy += (t[j] - tm) * (x[j] - xm);
    sxx += (t[j] - tm) * (t[j] - tm);
  }
  return sxy / sxx;
}

struct CurrentSample {
  double position = 0.0;
  double current = 0.0;
};

/// j = (hbar/m) Im(psi* dpsi/dx) with a centered difference at the nearest grid point.
inline CurrentSample probability_current(const WaveState& state, double position,
                                         const UnitSystem& units = {}) {
  const auto& grid = state.grid;
  const double idx = std::round((position - grid.x_min) / grid.dx());
  if (!(idx >= 1.0) || !(idx <= static_cast<double>(grid.n_points) - 2.0)) {
    throw DomainError("probability_current: position " + std::to_string(position) +
                      " is not interior to the grid");
  }
  const auto j = static_cast<std::size_t>(idx);
  const complex d = (state.psi[j + 1] - state.psi[j - 1]) / (2.0 * grid.dx());
  return {grid.x(j), units.hbar / units.mass * (std::conj(state.psi[j]) * d).imag()};
}

struct DirectionalCurrent {
  double forward = 0.0;   // current of the k > 0 part (>= 0)
  double backward = 0.0;  // current of the k < 0 part (<= 0)
  double total = 0.0;     // current of the unfiltered field
};

/// Currents of the right- and left-moving parts of the field at `position`.
///
/// A Hann-windowed segment of half-width `half_width` around the probe is transformed,
/// split by the sign of the wavenumber, and both parts (and their spectral derivatives)
/// are evaluated at the window center, where the window is flat.
inline DirectionalCurrent directional_current(const WaveState& state, double position, double half_width,
                                              const UnitSystem& units = {}) {
  const auto& grid = state.grid;
  const double dx = grid.dx();
  const auto half = static_cast<std::ptrdiff_t>(std::llround(half_width / dx));
  const auto center = static_cast<std::ptrdiff_t>(std::llround((position - grid.x_min) / dx));
  if (half < 4 || center - half < 0 || center + half >= static_cast<std::ptrdiff_t>(grid.n_points)) {
    throw DomainError("directional_current: probe window does not fit inside the grid");
  }
  const auto n = static_cast<std::size_t>(2 * half);
  Fft fft(n);
  auto buf = fft.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::sin(std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    buf[i] = w * w * state.psi[static_cast<std::size_t>(center - half) + i];
  }
  fft.forward();
  const auto k = Fft::wavenumbers(n, static_cast<double>(n) * dx);
  // The center sits at index n/2, so each bin picks up exp(i pi m) = (-1)^m.
  complex fwd{}, fwd_d{}, bwd{}, bwd_d{}, all{}, all_d{};
  const complex i_unit{0.0, 1.0};
  for (std::size_t m = 0; m < n; ++m) {
    const double sign = (m % 2 == 0) ? 1.0 : -1.0;
    const complex v = buf[m] * sign;
    const complex dv = i_unit * k[m] * v;
    all += v;
    all_d += dv;
    if (k[m] > 0.0) {
      fwd += v;
      fwd_d += dv;
    } else if (k[m] < 0.0) {
      bwd += v;
      bwd_d += dv;
    }
  }
  const double scale = units.hbar / units.mass / (static_cast<double>(n) * static_cast<double>(n));
  auto current = [&](complex v, complex dv) { return scale * (std::conj(v) * dv).imag(); };
  return {current(fwd, fwd_d), current(bwd, bwd_d), current(all, all_d)};
}

/// Accumulates directional currents at a probe pair on either side of the scatterer and
/// turns them into R = |j_B| / j_A and T = j_C / j_A over the collision plateau.
class CurrentProbe {
 public:
  struct Sample {
    double time = 0.0;
    double incident = 0.0;     // j_A at the left probe
    double reflected = 0.0;    // j_B at the left probe (negative)
    double transmitted = 0.0;  // j_C at the right probe
  };

  CurrentProbe(double left_position, double right_position, double half_width, UnitSystem units = {})
      : left_(left_position), right_(right_position), half_width_(half_width), units_(units) {}

  void add(const WaveState& state) {
    const auto l = directional_current(state, left_, half_width_, units_);
    const auto r = directional_current(state, right_, half_width_, units_);
    samples_.push_back({state.time, l.forward, l.backward, r.total});
  }

  const std::vector<Sample>& samples() const { return samples_; }

  /// Plateau: records where every current that matters lies within `tolerance` of its
  /// plateau level (the median over records above half its peak). A current matters when
  /// its peak exceeds 1e-3 of the incident peak.
  ProbabilityPair estimate(double tolerance = 0.01) const {
    const auto incident = series([](const Sample& s) { return s.incident; });
    const auto reflected = series([](const Sample& s) { return -s.reflected; });
    const auto transmitted = series([](const Sample& s) { return s.transmitted; });
    const double peak_a = peak(incident);
    if (!(peak_a > 0.0)) throw DomainError("current_based_RT: no incident current at the left probe");
    const bool use_b = peak(reflected) > 1e-3 * peak_a;
    const bool use_c = peak(transmitted) > 1e-3 * peak_a;
    const double level_a = plateau_level(incident);
    const double level_b = use_b ? plateau_level(reflected) : 0.0;
    const double level_c = use_c ? plateau_level(transmitted) : 0.0;
    auto near = [&](double v, double level) { return std::abs(v - level) <= tolerance * level; };
    double sum_a = 0.0;
    double sum_b = 0.0;
    double sum_c = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j < samples_.size(); ++j) {
      if (!near(incident[j], level_a)) continue;
      if (use_b && !near(reflected[j], level_b)) continue;
      if (use_c && !near(transmitted[j], level_c)) continue;
      sum_a += incident[j];
      sum_b += reflected[j];
      sum_c += transmitted[j];
      ++count;
    }
    if (count < 3) throw DomainError("current_based_RT: no plateau detected");
    return {sum_b / sum_a, sum_c / sum_a};
  }

 private:
  template <class F>
  std::vector<double> series(F f) const {
    std::vector<double> v;
    v.reserve(samples_.size());
    for (const auto& s : samples_) v.push_back(f(s));
    return v;
  }

  static double peak(const std::vector<double>& v) {
    return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
  }

  static double plateau_level(const std::vector<double>& v) {
    const double half = 0.5 * peak(v);
    std::vector<double> above;
    for (double x : v) {
      if (x >= half) above.push_back(x);
    }
    const auto mid = above.begin() + static_cast<std::ptrdiff_t>(above.size() / 2);
    std::nth_element(above.begin(), mid, above.end());
    return *mid;
  }

  double left_;
  double right_;
  double half_width_;
  UnitSystem units_;
  std::vector<Sample> samples_;
};

/// Probe placement for a packet of width w_I and wavenumber k0: probes at -+w_I/8 around the
/// scatterer with 5-wavelength windows.
inline CurrentProbe default_current_probe(double split, double width_wI, double k0,
                                          const UnitSystem& units = {}) {
  const double d = width_wI / 8.0;
  const double lambda = 2.0 * std::numbers::pi / k0;
  return CurrentProbe(split - d, split + d, std::min(5.0 * lambda, 0.5 * d), units);
}

/// R and T from plateau-averaged currents over a sequence of states sampled through the
/// collision.
inline ProbabilityPair current_based_RT(std::span<const WaveState> states, CurrentProbe probe) {
  for (const auto& s : states) probe.add(s);
  return probe.estimate();
}

struct ScatteringResult {
  double p_left = 0.0;
  double p_right = 0.0;
  double width_incident = 0.0;
  double width_reflected = std::numeric_limits<double>::quiet_NaN();
  double width_transmitted = std::numeric_limits<double>::quiet_NaN();
  double v_incident = std::numeric_limits<double>::quiet_NaN();
  double v_transmitted = std::numeric_limits<double>::quiet_NaN();
  std::optional<TimingInfo> timing;
  ProbabilityPair analytic;
  std::optional<ProbabilityPair> current_estimate;
  double final_norm = 0.0;
  double final_time = 0.0;
  std::string config_fingerprint;
};

}  // namespace wavescat
