#pragma once

// Grids, wave packets and their width / momentum diagnostics.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "wavescat/error.hpp"
#include "wavescat/fft.hpp"

namespace wavescat {

using complex = std::complex<double>;

/// Uniform grid x_j = x_min + j dx, j = 0..n_points-1, dx = (x_max - x_min) / n_points.
/// x_max itself is not sampled (it is the periodic image of x_min).
struct GridSpec {
  double x_min = 0.0;
  double x_max = 1.0;
  std::size_t n_points = 16;

  void validate() const {
    if (!(x_max > x_min)) throw ConfigError("GridSpec: x_max must exceed x_min");
    if (n_points < 16) throw ConfigError("GridSpec: need at least 16 points");
  }

  double length() const { return x_max - x_min; }
  double dx() const { return length() / static_cast<double>(n_points); }
  double x(std::size_t j) const { return x_min + static_cast<double>(j) * dx(); }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct WaveState {
  GridSpec grid;
  std::vector<complex> psi;
  double time = 0.0;
};

/// sum |psi|^2 dx
inline double norm(const WaveState& state) {
  double s = 0.0;
  for (const auto& v : state.psi) s += std::norm(v);
  return s * state.grid.dx();
}

/// Total probability within [0, 1 + 1e-9] and all samples finite.
inline bool is_valid(const WaveState& state) {
  if (state.psi.size() != state.grid.n_points) return false;
  for (const auto& v : state.psi) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  const double n = norm(state);
  return n >= 0.0 && n <= 1.0 + 1e-9;
}

/// Cosine-tapered rectangle: flat over (1 - taper_fraction) w_I, raised-cosine edges of
/// length taper_fraction * w_I centered on x0 +- w_I/2 (where the amplitude is one half).
struct FlatTop {
  double taper_fraction = 0.1;
};

/// exp(-(x - x0)^2 / (2 sigma^2)), so |psi|^2 has standard deviation sigma / sqrt(2).
struct Gaussian {
  double sigma = 1.0;
};

struct PacketSpec {
  std::variant<FlatTop, Gaussian> shape = FlatTop{};
  double center_x0 = 0.0;
  double width_wI = 1.0;
  double k0 = 1.0;

  static PacketSpec flat_top(double x0, double width, double k0, double taper_fraction = 0.1) {
    return {FlatTop{taper_fraction}, x0, width, k0};
  }

  /// width_wI is set to the equivalent-rectangle width sigma sqrt(2 pi).
  static PacketSpec gaussian(double x0, double sigma, double k0) {
    return {Gaussian{sigma}, x0, sigma * std::sqrt(2.0 * std::numbers::pi), k0};
  }

  double wavelength() const { return 2.0 * std::numbers::pi / k0; }

  /// Closed interval outside of which the envelope is zero (Gaussian: below e^-32).
  std::pair<double, double> support() const {
    double half = 0.0;
    if (const auto* ft = std::get_if<FlatTop>(&shape)) {
      half = 0.5 * width_wI * (1.0 + ft->taper_fraction);
    } else {
      half = 8.0 * std::get<Gaussian>(shape).sigma;
    }
    return {center_x0 - half, center_x0 + half};
  }

  /// Throws on hard violations; returns soft warnings.
  std::vector<std::string> validate() const {
    if (!(width_wI > 0.0)) throw ConfigError("PacketSpec: width must be positive");
    if (!(k0 > 0.0)) throw ConfigError("PacketSpec: k0 must be positive");
    std::vector<std::string> warnings;
    if (const auto* ft = std::get_if<FlatTop>(&shape)) {
      if (!(ft->taper_fraction > 0.0 && ft->taper_fraction <= 0.5)) {
        throw ConfigError("PacketSpec: taper_fraction must lie in (0, 0.5]");
      }
      const double ratio = width_wI / wavelength();
      if (ratio < 20.0) {
        warnings.push_back("flat-top packet is only " + std::to_string(ratio) +
                           " wavelengths wide; plane-wave picture is poor below 20");
      }
    } else if (!(std::get<Gaussian>(shape).sigma > 0.0)) {
      throw ConfigError("PacketSpec: sigma must be positive");
    }
    return warnings;
  }

  double envelope(double x) const {
    const double u = std::abs(x - center_x0);
    if (const auto* ft = std::get_if<FlatTop>(&shape)) {
      const double taper = ft->taper_fraction * width_wI;
      const double flat_half = 0.5 * (width_wI - taper);
      if (u <= flat_half) return 1.0;
      if (u >= flat_half + taper) return 0.0;
      return 0.5 * (1.0 + std::cos(std::numbers::pi * (u - flat_half) / taper));
    }
    const double sigma = std::get<Gaussian>(shape).sigma;
    return std::exp(-u * u / (2.0 * sigma * sigma));
  }
};

/// psi(x) = envelope(x) exp(i k0 x), normalized numerically to unit norm.
inline WaveState build_packet(const GridSpec& grid, const PacketSpec& spec) {
  grid.validate();
  spec.validate();
  const auto [lo, hi] = spec.support();
  if (!(lo > grid.x_min) || !(hi < grid.x(grid.n_points - 1))) {
    throw ConfigError("build_packet: packet support [" + std::to_string(lo) + ", " +
                      std::to_string(hi) + "] does not fit strictly inside the grid");
  }
  WaveState state{grid, std::vector<complex>(grid.n_points), 0.0};
  for (std::size_t j = 0; j < grid.n_points; ++j) {
    const double x = grid.x(j);
    state.psi[j] = spec.envelope(x) * std::polar(1.0, spec.k0 * x);
  }
  const double n = norm(state);
  if (!(n > 0.0)) throw ConfigError("build_packet: packet has no samples on the grid");
  const double scale = 1.0 / std::sqrt(n);
  for (auto& v : state.psi) v *= scale;
  return state;
}

namespace detail {

/// (sum w|psi|^2 dx)^2 / (sum w^2|psi|^4 dx) with per-sample weights w in [0, 1].
inline double participation_width(const WaveState& state, std::span<const double> weights) {
  double s2 = 0.0;
  double s4 = 0.0;
  for (std::size_t j = 0; j < state.psi.size(); ++j) {
    const double w = weights.empty() ? 1.0 : weights[j];
    const double p = w * std::norm(state.psi[j]);
    s2 += p;
    s4 += p * p;
  }
  const double dx = state.grid.dx();
  if (!(s4 > 0.0)) throw DomainError("effective_width: field is zero");
  return s2 * s2 * dx / s4;
}

}  // namespace detail

/// Equivalent-rectangle (inverse participation) width; exact for a rectangle.
inline double effective_width(const WaveState& state) {
  return detail::participation_width(state, {});
}

struct MomentumSpectrum {
  std::vector<double> wavenumbers;  // ascending
  std::vector<double> density;      // sum density * dk == 1
  double centroid = 0.0;
  double rms_spread = 0.0;
};

inline MomentumSpectrum momentum_spectrum(const WaveState& state) {
  const std::size_t n = state.grid.n_points;
  Fft fft(n);
  auto buf = fft.data();
  std::copy(state.psi.begin(), state.psi.end(), buf.begin());
  fft.forward();

  const auto k = Fft::wavenumbers(n, state.grid.length());
  const double dk = 2.0 * std::numbers::pi / state.grid.length();

  // Rotate FFTW order into ascending wavenumber order.
  MomentumSpectrum out;
  out.wavenumbers.resize(n);
  out.density.resize(n);
  const std::size_t shift = n - n / 2;  // index of the most negative bin
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = (i + shift) % n;
    out.wavenumbers[i] = k[src];
    out.density[i] = std::norm(buf[src]);
    total += out.density[i];
  }
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.density[i] /= total * dk;
    mean += out.wavenumbers[i] * out.density[i] * dk;
  }
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = out.wavenumbers[i] - mean;
    var += d * d * out.density[i] * dk;
  }
  out.centroid = mean;
  out.rms_spread = std::sqrt(var);
  return out;
}

struct NarrowbandReport {
  bool passed = false;
  double ratio = 0.0;  // sigma_k / k0
  double centroid = 0.0;
  double rms_spread = 0.0;
};

/// Passes when the momentum spread relative to k0 is at most max_ratio.
inline NarrowbandReport require_narrowband(const WaveState& state, double k0, double max_ratio) {
  const auto spec = momentum_spectrum(state);
  NarrowbandReport report;
  report.centroid = spec.centroid;
  report.rms_spread = spec.rms_spread;
  report.ratio = spec.rms_spread / std::abs(k0);
  report.passed = report.ratio <= max_ratio;
  return report;
}

}  // namespace wavescat
