#pragma once

#include "wavescat/error.hpp"

namespace wavescat {

/// Physical constants of the particle. Everything inside the propagators runs with
/// hbar = mass = 1; this type converts at the interface.
///
/// With s = (hbar / mass) t and U = (mass / hbar^2) V the equation
///   i hbar dpsi/dt = -(hbar^2 / 2 mass) psi'' + V psi
/// becomes i dpsi/ds = -psi''/2 + U psi. Lengths are not rescaled.
struct UnitSystem {
  double hbar = 1.0;
  double mass = 1.0;

  void validate() const {
    if (!(hbar > 0.0) || !(mass > 0.0)) {
      throw ConfigError("UnitSystem: hbar and mass must be strictly positive");
    }
  }

  double to_internal_time(double t) const { return hbar / mass * t; }
  double from_internal_time(double s) const { return mass / hbar * s; }
  double to_internal_energy(double e) const { return mass / (hbar * hbar) * e; }
  double from_internal_energy(double u) const { return hbar * hbar / mass * u; }

  /// hbar k / m
  double group_velocity(double k) const { return hbar * k / mass; }
  /// hbar^2 k^2 / 2m
  double kinetic_energy(double k) const { return hbar * hbar * k * k / (2.0 * mass); }

  friend bool operator==(const UnitSystem&, const UnitSystem&) = default;
};

}  // namespace wavescat
