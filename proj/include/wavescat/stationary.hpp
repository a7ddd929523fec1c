#pragma once

// Plane-wave scattering from piecewise-constant potentials.
//
// A stationary state of energy E incident from the left is written region by region as
//   psi_j(x) = a_j exp(i q_j x) + b_j exp(-i q_j x),   q_j = sqrt(2 m (E - V_j)) / hbar,
// with no incoming wave on the far right. For the single step, the matching conditions
// at x = 0 give B/A = (k - kappa)/(k + kappa) and C/A = 2k/(k + kappa).

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "wavescat/error.hpp"
#include "wavescat/units.hpp"

namespace wavescat {

using complex = std::complex<double>;

/// Potential 0 for x < 0 and v0 for x > 0.
struct Step {
  double v0 = 0.0;
  friend bool operator==(const Step&, const Step&) = default;
};

/// levels[i] applies between boundaries[i-1] and boundaries[i]; levels.size() == boundaries.size() + 1.
struct PiecewiseConstant {
  std::vector<double> boundaries;
  std::vector<double> levels;
  friend bool operator==(const PiecewiseConstant&, const PiecewiseConstant&) = default;
};

class PotentialProfile {
 public:
  using Kind = std::variant<Step, PiecewiseConstant>;

  PotentialProfile() : kind_(Step{}) {}
  PotentialProfile(Step step) : kind_(step) {}  // NOLINT(google-explicit-constructor)
  PotentialProfile(PiecewiseConstant pc) : kind_(std::move(pc)) {  // NOLINT(google-explicit-constructor)
    validate();
  }

  static PotentialProfile step(double v0) { return PotentialProfile(Step{v0}); }

  /// Rectangular barrier of height v0 on [0, width].
  static PotentialProfile barrier(double v0, double width) {
    return PotentialProfile(PiecewiseConstant{{0.0, width}, {0.0, v0, 0.0}});
  }

  const Kind& kind() const { return kind_; }
  bool is_step() const { return std::holds_alternative<Step>(kind_); }

  /// The step as a one-boundary piecewise profile.
  PiecewiseConstant as_piecewise() const {
    if (const auto* s = std::get_if<Step>(&kind_)) {
      return PiecewiseConstant{{0.0}, {0.0, s->v0}};
    }
    return std::get<PiecewiseConstant>(kind_);
  }

  /// Potential at x. Exactly on a boundary the mean of the two adjacent levels is returned.
  double value_at(double x) const {
    if (const auto* s = std::get_if<Step>(&kind_)) {
      if (x < 0.0) return 0.0;
      if (x > 0.0) return s->v0;
      return 0.5 * s->v0;
    }
    const auto& pc = std::get<PiecewiseConstant>(kind_);
    const auto it = std::lower_bound(pc.boundaries.begin(), pc.boundaries.end(), x);
    const auto i = static_cast<std::size_t>(it - pc.boundaries.begin());
    if (it != pc.boundaries.end() && *it == x) {
      return 0.5 * (pc.levels[i] + pc.levels[i + 1]);
    }
    return pc.levels[i];
  }

  double left_level() const { return as_piecewise().levels.front(); }
  double right_level() const { return as_piecewise().levels.back(); }

  double min_level() const {
    const auto pc = as_piecewise();
    return *std::min_element(pc.levels.begin(), pc.levels.end());
  }

  double max_abs_level() const {
    const auto pc = as_piecewise();
    double m = 0.0;
    for (double v : pc.levels) m = std::max(m, std::abs(v));
    return m;
  }

  friend bool operator==(const PotentialProfile&, const PotentialProfile&) = default;

 private:
  void validate() const {
    const auto& pc = std::get<PiecewiseConstant>(kind_);
    if (pc.levels.size() != pc.boundaries.size() + 1) {
      throw ConfigError("PiecewiseConstant: need exactly one more level than boundaries");
    }
    for (std::size_t i = 1; i < pc.boundaries.size(); ++i) {
      if (!(pc.boundaries[i] > pc.boundaries[i - 1])) {
        throw ConfigError("PiecewiseConstant: boundaries must be strictly increasing");
      }
    }
  }

  Kind kind_;
};

struct ScatteringAmplitudes {
  complex b_over_a;
  complex c_over_a;
  double k = 0.0;       // incident wavenumber
  complex kappa;        // transmitted wavenumber; positive imaginary when evanescent
  double energy = 0.0;  // NaN when built directly from wavenumbers
};

struct ProbabilityPair {
  double r = 0.0;
  double t = 0.0;
};

struct Wavenumbers {
  double k = 0.0;
  complex kappa;
};

namespace detail {

/// sqrt(2 m (E - V)) / hbar on the decaying branch: real positive above the level,
/// positive imaginary below it, exactly zero on it.
inline complex local_wavenumber(double energy, double level, const UnitSystem& units) {
  const double diff = energy - level;
  const double mag = std::sqrt(2.0 * units.mass * std::abs(diff)) / units.hbar;
  if (diff > 0.0) return {mag, 0.0};
  if (diff < 0.0) return {0.0, mag};
  return {0.0, 0.0};
}

}  // namespace detail

inline Wavenumbers wavenumbers(double energy, double v0, const UnitSystem& units = {}) {
  units.validate();
  if (!(energy > 0.0)) {
    throw DomainError("wavenumbers: energy must be positive, got " + std::to_string(energy));
  }
  return {detail::local_wavenumber(energy, 0.0, units).real(),
          detail::local_wavenumber(energy, v0, units)};
}

inline ScatteringAmplitudes step_amplitudes(double k, complex kappa) {
  if (!(k > 0.0)) throw DomainError("step_amplitudes: k must be positive");
  const complex denom = k + kappa;
  if (denom == complex(0.0, 0.0)) throw DomainError("step_amplitudes: kappa == -k");
  ScatteringAmplitudes amps;
  amps.b_over_a = (k - kappa) / denom;
  // 1 + B/A == C/A: continuity of psi at the origin.
  amps.c_over_a = 1.0 + amps.b_over_a;
  amps.k = k;
  amps.kappa = kappa;
  amps.energy = std::nan("");
  return amps;
}

/// Step amplitudes straight from E and V0.
inline ScatteringAmplitudes step_amplitudes(double energy, double v0, const UnitSystem& units) {
  const auto [k, kappa] = wavenumbers(energy, v0, units);
  auto amps = step_amplitudes(k, kappa);
  amps.energy = energy;
  return amps;
}

inline double reflection_probability(const ScatteringAmplitudes& amps) {
  return std::norm(amps.b_over_a);
}

/// Re(kappa)/k |C/A|^2. Evanescent or threshold waves carry nothing.
inline double transmission_probability(const ScatteringAmplitudes& amps) {
  if (!(amps.kappa.real() > 0.0)) return 0.0;
  return amps.kappa.real() / amps.k * std::norm(amps.c_over_a);
}

inline ProbabilityPair probabilities(const ScatteringAmplitudes& amps) {
  return {reflection_probability(amps), transmission_probability(amps)};
}

namespace detail {

using Mat2 = std::array<std::array<complex, 2>, 2>;

inline Mat2 mul(const Mat2& a, const Mat2& b) {
  Mat2 c{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
  return c;
}

inline Mat2 inverse(const Mat2& m) {
  const complex det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  return {{{m[1][1] / det, -m[0][1] / det}, {-m[1][0] / det, m[0][0] / det}}};
}

/// Rows (psi, psi') of the two basis functions at x. A zero wavenumber uses {1, x}.
inline Mat2 basis_matrix(complex q, double x) {
  const complex i{0.0, 1.0};
  if (q == complex(0.0, 0.0)) {
    return {{{1.0, x}, {0.0, 1.0}}};
  }
  const complex ep = std::exp(i * q * x);
  const complex em = std::exp(-i * q * x);
  return {{{ep, em}, {i * q * ep, -i * q * em}}};
}

/// Determinant of basis_matrix(q, x); independent of x.
inline complex basis_det(complex q) {
  if (q == complex(0.0, 0.0)) return 1.0;
  return complex(0.0, -2.0) * q;
}

}  // namespace detail

/// Amplitudes for a general piecewise-constant profile by composing interface matrices.
/// Coefficients are referenced to absolute positions, so a step at 0 reproduces
/// step_amplitudes exactly in form.
inline ScatteringAmplitudes transfer_matrix_amplitudes(const PotentialProfile& potential,
                                                       double energy,
                                                       const UnitSystem& units = {}) {
  units.validate();
  const PiecewiseConstant pc = potential.as_piecewise();
  if (!(energy > pc.levels.front())) {
    throw DomainError("transfer_matrix_amplitudes: energy must exceed the leftmost level");
  }
  std::vector<complex> q(pc.levels.size());
  for (std::size_t j = 0; j < q.size(); ++j) {
    q[j] = detail::local_wavenumber(energy, pc.levels[j], units);
  }

  detail::Mat2 total{{{1.0, 0.0}, {0.0, 1.0}}};
  for (std::size_t b = 0; b < pc.boundaries.size(); ++b) {
    const double x = pc.boundaries[b];
    const detail::Mat2 step =
        detail::mul(detail::inverse(detail::basis_matrix(q[b + 1], x)), detail::basis_matrix(q[b], x));
    total = detail::mul(step, total);
  }

  // (C, 0) = total * (1, B/A). C follows from the first row of the inverse; the determinant
  // telescopes to a ratio of basis determinants, which avoids cancellation when the
  // outermost wavenumber is nearly zero.
  ScatteringAmplitudes amps;
  amps.b_over_a = -total[1][0] / total[1][1];
  amps.c_over_a = detail::basis_det(q.front()) / detail::basis_det(q.back()) / total[1][1];
  amps.k = q.front().real();
  amps.kappa = q.back();
  amps.energy = energy;
  return amps;
}

/// Analytic (R, T) of the step for the given E/V0 at energy E.
inline ProbabilityPair step_probabilities(double energy, double v0, const UnitSystem& units = {}) {
  return probabilities(step_amplitudes(energy, v0, units));
}

}  // namespace wavescat
