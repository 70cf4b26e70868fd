#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "biphoton/config.hpp"

namespace biphoton {

namespace detail {

inline double sinc(double u) { return u == 0.0 ? 1.0 : std::sin(u) / u; }

inline void require_finite(double x1, double x2) {
  if (!std::isfinite(x1) || !std::isfinite(x2))
    throw std::invalid_argument("detector positions must be finite");
}

}  // namespace detail

/// Single-slit Fraunhofer envelope sinc^2(pi b x / (lambda z)); 1 when the
/// envelope is disabled in the config.
inline double envelope(double x, double lambda, const ExperimentConfig& cfg) {
  if (!cfg.envelope) return 1.0;
  const double s = detail::sinc(std::numbers::pi * cfg.slit_width * x / (lambda * cfg.distance));
  return s * s;
}

/// Far-field two-photon phase: (w1 x1 +/- w2 x2) d / (c z), plus for Scheme I,
/// minus for Scheme II.
inline double interference_phase(double x1, double x2, const ExperimentConfig& cfg) {
  const double sign = cfg.scheme == Scheme::SchemeI ? 1.0 : -1.0;
  return (cfg.omega1() * x1 + sign * cfg.omega2() * x2) * cfg.slit_spacing /
         (kSpeedOfLight * cfg.distance);
}

/// Same phase written through the sum and difference frequencies.
inline double interference_phase_sum_difference(double x1, double x2,
                                                const ExperimentConfig& cfg) {
  const double wp = cfg.omega_plus();
  const double wm = cfg.omega_minus();
  const double arg = cfg.scheme == Scheme::SchemeI
                         ? wp * (x1 + x2) / 2.0 + wm * (x1 - x2) / 2.0
                         : wp * (x1 - x2) / 2.0 + wm * (x1 + x2) / 2.0;
  return arg * cfg.slit_spacing / (kSpeedOfLight * cfg.distance);
}

/// Unnormalized coincidence rate env1 * env2 * (1 + cos phi), in [0, 2].
inline double coincidence_rate(double x1, double x2, const ExperimentConfig& cfg) {
  detail::require_finite(x1, x2);
  return envelope(x1, cfg.lambda1, cfg) * envelope(x2, cfg.lambda2, cfg) *
         (1.0 + std::cos(interference_phase(x1, x2, cfg)));
}

inline double coincidence_rate_sum_difference(double x1, double x2, const ExperimentConfig& cfg) {
  detail::require_finite(x1, x2);
  return envelope(x1, cfg.lambda1, cfg) * envelope(x2, cfg.lambda2, cfg) *
         (1.0 + std::cos(interference_phase_sum_difference(x1, x2, cfg)));
}

/// Centers of n equal bins spanning [-halfwidth, +halfwidth].
inline std::vector<double> bin_centers(double halfwidth, std::size_t n) {
  std::vector<double> c(n);
  const double h = 2.0 * halfwidth / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) c[i] = -halfwidth + (static_cast<double>(i) + 0.5) * h;
  return c;
}

inline std::vector<double> bin_edges(double halfwidth, std::size_t n) {
  std::vector<double> e(n + 1);
  const double h = 2.0 * halfwidth / static_cast<double>(n);
  for (std::size_t i = 0; i <= n; ++i) e[i] = -halfwidth + static_cast<double>(i) * h;
  e[n] = halfwidth;
  return e;
}

enum class Provenance { Analytic, Oracle };

/// Rate sampled on a uniform (x1, x2) grid. values is row-major: index
/// i * axis2.size() + j holds the rate at (axis1[i], axis2[j]).
struct RateSurface {
  std::vector<double> axis1;
  std::vector<double> axis2;
  std::vector<double> values;
  Provenance provenance = Provenance::Analytic;

  std::size_t rows() const { return axis1.size(); }
  std::size_t cols() const { return axis2.size(); }
  double at(std::size_t i, std::size_t j) const { return values[i * axis2.size() + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * axis2.size() + j]; }
  double max() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, v);
    return m;
  }
};

inline constexpr std::size_t kMinSurfaceBins = 8;

/// Analytic rate at the bin centers of an n_bins x n_bins grid over the window.
inline RateSurface rate_surface(const ExperimentConfig& cfg, std::size_t n_bins) {
  cfg.validate();
  if (n_bins < kMinSurfaceBins) throw std::invalid_argument("rate_surface: n_bins must be >= 8");
  RateSurface s;
  s.axis1 = bin_centers(cfg.window_halfwidth, n_bins);
  s.axis2 = s.axis1;
  s.values.resize(n_bins * n_bins);
  s.provenance = Provenance::Analytic;
  for (std::size_t i = 0; i < n_bins; ++i)
    for (std::size_t j = 0; j < n_bins; ++j)
      s.at(i, j) = coincidence_rate(s.axis1[i], s.axis2[j], cfg);
  return s;
}

}  // namespace biphoton
