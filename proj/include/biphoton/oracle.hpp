#pragma once

// Brute-force path-sum model of the double slit. Each slit is discretized
// into midpoint nodes and every node contributes a unit phasor
// exp(i w r / c) with the exact path length r = sqrt(z^2 + (x - s)^2).
// Shares no code with the paraxial formula in physics.hpp.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "biphoton/config.hpp"
#include "biphoton/physics.hpp"

namespace biphoton {

inline constexpr std::size_t kMinQuadraturePoints = 16;
inline constexpr std::size_t kDefaultQuadraturePoints = 64;

/// Mean phasor of slit `slit_index` (1 at +d/2, 2 at -d/2) seen from x.
inline std::complex<double> slit_propagator(double x, int slit_index, double lambda,
                                            const ExperimentConfig& cfg,
                                            std::size_t quadrature_points = kDefaultQuadraturePoints) {
  if (quadrature_points < kMinQuadraturePoints)
    throw std::invalid_argument("slit_propagator: quadrature_points must be >= 16");
  if (slit_index != 1 && slit_index != 2)
    throw std::invalid_argument("slit_propagator: slit_index must be 1 or 2");
  const double center = slit_index == 1 ? cfg.slit_spacing / 2.0 : -cfg.slit_spacing / 2.0;
  const double k = 2.0 * std::numbers::pi / lambda;
  const double z = cfg.distance;
  const double h = cfg.slit_width / static_cast<double>(quadrature_points);
  const double lo = center - cfg.slit_width / 2.0;
  std::complex<double> sum{0.0, 0.0};
  for (std::size_t n = 0; n < quadrature_points; ++n) {
    const double s = lo + (static_cast<double>(n) + 0.5) * h;
    const double r = std::sqrt(z * z + (x - s) * (x - s));
    // subtract z before multiplying by k to keep the phase argument small
    const double path = (x - s) * (x - s) / (r + z);
    sum += std::polar(1.0, k * path);
  }
  return sum / static_cast<double>(quadrature_points);
}

namespace detail {

struct ArmPhasors {
  std::complex<double> slit1;
  std::complex<double> slit2;
};

inline double oracle_intensity(const ArmPhasors& d1, const ArmPhasors& d2, Scheme scheme) {
  const std::complex<double> amp = scheme == Scheme::SchemeI
                                       ? d1.slit1 * d2.slit1 + d1.slit2 * d2.slit2
                                       : d1.slit1 * d2.slit2 + d1.slit2 * d2.slit1;
  return std::norm(amp);
}

inline ArmPhasors arm_phasors(double x, double lambda, const ExperimentConfig& cfg, std::size_t q) {
  return {slit_propagator(x, 1, lambda, cfg, q), slit_propagator(x, 2, lambda, cfg, q)};
}

}  // namespace detail

/// |A|^2 of the two-photon amplitude summed over both slit histories.
/// Ranges over [0, 4]; the common 1/r decay is dropped.
inline double oracle_rate(double x1, double x2, const ExperimentConfig& cfg,
                          std::size_t quadrature_points = kDefaultQuadraturePoints) {
  detail::require_finite(x1, x2);
  return detail::oracle_intensity(detail::arm_phasors(x1, cfg.lambda1, cfg, quadrature_points),
                                  detail::arm_phasors(x2, cfg.lambda2, cfg, quadrature_points),
                                  cfg.scheme);
}

/// Oracle rate on the same bin-center grid as rate_surface.
inline RateSurface oracle_surface(const ExperimentConfig& cfg, std::size_t n_bins,
                                  std::size_t quadrature_points = kDefaultQuadraturePoints) {
  cfg.validate();
  if (n_bins < kMinSurfaceBins) throw std::invalid_argument("oracle_surface: n_bins must be >= 8");
  RateSurface s;
  s.axis1 = bin_centers(cfg.window_halfwidth, n_bins);
  s.axis2 = s.axis1;
  s.values.resize(n_bins * n_bins);
  s.provenance = Provenance::Oracle;
  std::vector<detail::ArmPhasors> arm1, arm2;
  arm1.reserve(n_bins);
  arm2.reserve(n_bins);
  for (double x : s.axis1) arm1.push_back(detail::arm_phasors(x, cfg.lambda1, cfg, quadrature_points));
  for (double x : s.axis2) arm2.push_back(detail::arm_phasors(x, cfg.lambda2, cfg, quadrature_points));
  for (std::size_t i = 0; i < n_bins; ++i)
    for (std::size_t j = 0; j < n_bins; ++j)
      s.at(i, j) = detail::oracle_intensity(arm1[i], arm2[j], cfg.scheme);
  return s;
}

/// Largest |a/max(a) - b/max(b)| over a common grid: the pointwise deviation
/// of two peak-normalized surfaces, in units of the peak.
inline double max_normalized_deviation(const RateSurface& a, const RateSurface& b) {
  if (a.values.size() != b.values.size() || a.rows() != b.rows())
    throw std::invalid_argument("max_normalized_deviation: grid mismatch");
  const double ma = a.max();
  const double mb = b.max();
  if (!(ma > 0.0) || !(mb > 0.0)) throw PhysicsError("cannot normalize an all-zero surface");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k)
    worst = std::max(worst, std::abs(a.values[k] / ma - b.values[k] / mb));
  return worst;
}

/// Outcome of comparing the analytic surface to the path-sum oracle.
struct OracleCheck {
  double max_deviation = 0.0;        // analytic vs oracle, peak-normalized
  double quadrature_change = 0.0;    // oracle(q) vs oracle(2q), relative to peak
  std::size_t quadrature_points = 0;
  std::size_t n_bins = 0;
  double deviation_tolerance = 0.02;
  double convergence_tolerance = 1e-3;
  bool passed() const {
    return max_deviation < deviation_tolerance && quadrature_change < convergence_tolerance;
  }
};

inline OracleCheck oracle_check(const ExperimentConfig& cfg, std::size_t n_bins,
                                std::size_t quadrature_points = kDefaultQuadraturePoints) {
  const RateSurface analytic = rate_surface(cfg, n_bins);
  const RateSurface coarse = oracle_surface(cfg, n_bins, quadrature_points);
  const RateSurface fine = oracle_surface(cfg, n_bins, 2 * quadrature_points);
  OracleCheck out;
  out.max_deviation = max_normalized_deviation(analytic, coarse);
  const double peak = fine.max();
  for (std::size_t k = 0; k < fine.values.size(); ++k)
    out.quadrature_change =
        std::max(out.quadrature_change, std::abs(coarse.values[k] - fine.values[k]) / peak);
  out.quadrature_points = quadrature_points;
  out.n_bins = n_bins;
  return out;
}

}  // namespace biphoton
