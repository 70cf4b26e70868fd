#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <string_view>

#include "biphoton/errors.hpp"

namespace biphoton {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

/// Scheme I: both photons of a pair pass the same slit.
/// Scheme II: the two photons pass opposite slits.
enum class Scheme { SchemeI, SchemeII };

inline std::string_view to_string(Scheme s) { return s == Scheme::SchemeI ? "I" : "II"; }

/// Geometry and wavelengths of one double-slit coincidence experiment.
/// All lengths are in meters.
struct ExperimentConfig {
  Scheme scheme = Scheme::SchemeI;
  double lambda1 = 800e-9;  // detected at D1
  double lambda2 = 800e-9;  // detected at D2
  double slit_spacing = 400e-6;
  double slit_width = 100e-6;
  double distance = 0.547;  // slit plane to detector plane (effective length for Scheme II)
  double window_halfwidth = 3e-3;
  bool envelope = true;  // multiply by the single-slit sinc^2 envelopes

  static constexpr double speed_of_light = kSpeedOfLight;
  /// Upper bound on (window_halfwidth + slit_spacing) / distance.
  static constexpr double kParaxialLimit = 0.05;

  double omega1() const { return 2.0 * std::numbers::pi * kSpeedOfLight / lambda1; }
  double omega2() const { return 2.0 * std::numbers::pi * kSpeedOfLight / lambda2; }
  double omega_plus() const { return omega1() + omega2(); }
  double omega_minus() const { return omega1() - omega2(); }
  bool degenerate() const { return lambda1 == lambda2; }

  /// Throws ConfigError naming the first violated constraint.
  void validate() const {
    auto require = [](bool ok, const char* what) {
      if (!ok) throw ConfigError(std::string("invalid experiment config: ") + what);
    };
    auto finite = [](double v) { return std::isfinite(v); };
    require(finite(lambda1) && lambda1 > 0, "lambda1 > 0");
    require(finite(lambda2) && lambda2 > 0, "lambda2 > 0");
    require(finite(slit_width) && slit_width > 0, "slit_width > 0");
    require(finite(slit_spacing) && slit_spacing > slit_width, "slit_spacing > slit_width");
    require(finite(distance) && distance > 0, "distance > 0");
    require(finite(window_halfwidth) && window_halfwidth > 0, "window_halfwidth > 0");
    require((window_halfwidth + slit_spacing) / distance < kParaxialLimit,
            "paraxial: (window_halfwidth + slit_spacing) / distance < 0.05");
  }

  bool operator==(const ExperimentConfig&) const = default;
};

}  // namespace biphoton
