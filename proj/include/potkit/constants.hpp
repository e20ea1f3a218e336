#pragma once

#include <numbers>
#include <string>

namespace potkit {

// Numerical tolerances shared by all modules. The process-wide instance is
// returned by tolerances(); the CLI overrides fields from its config file
// before any computation starts.
struct Tolerances {
  double symmetry_rel = 1e-12;       // jump-measure symmetry at chain construction
  double row_sum = 1e-12;            // stochasticity of jump-kernel rows
  double identity = 1e-10;           // variational / metric / resolvent identities
  double capacity_identity = 1e-10;  // cap(A) = eq_measure(A)
  double mass_bound = 1e-8;          // mu(A) <= cap(A) * ||R_1 mu||_inf
  double stollmann_voigt = 1e-10;    // slack in the Stollmann-Voigt check
  double mc_z = 4.0;                 // standard errors allowed for MC-vs-exact
  double disk_verification = 1e-6;   // equilibrium potential identity
  double disk_verification_hard = 1e-4;
};

inline Tolerances& tolerances() {
  static Tolerances t;
  return t;
}

// Returns false when the key is unknown.
inline bool set_tolerance(const std::string& key, double value) {
  Tolerances& t = tolerances();
  if (key == "symmetry_rel") t.symmetry_rel = value;
  else if (key == "row_sum") t.row_sum = value;
  else if (key == "identity") t.identity = value;
  else if (key == "capacity_identity") t.capacity_identity = value;
  else if (key == "mass_bound") t.mass_bound = value;
  else if (key == "stollmann_voigt") t.stollmann_voigt = value;
  else if (key == "mc_z") t.mc_z = value;
  else if (key == "disk_verification") t.disk_verification = value;
  else if (key == "disk_verification_hard") t.disk_verification_hard = value;
  else return false;
  return true;
}

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kEulerGamma = std::numbers::egamma;

}  // namespace potkit
