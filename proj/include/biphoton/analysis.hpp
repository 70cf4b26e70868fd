#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "biphoton/config.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/fit.hpp"
#include "biphoton/montecarlo.hpp"
#include "biphoton/physics.hpp"
#include "biphoton/spectral.hpp"

namespace biphoton {

/// The four detector trajectories through the (x1, x2) plane.
enum class CutKind {
  FixD2ScanD1,    // x2 fixed, x1 = x
  FixD1ScanD2,    // x1 fixed, x2 = x
  CounterMoving,  // x1 = -x2 = x
  CoMoving,       // x1 = x2 = x
};

inline constexpr CutKind kAllCuts[] = {CutKind::FixD2ScanD1, CutKind::FixD1ScanD2,
                                       CutKind::CounterMoving, CutKind::CoMoving};

inline std::string_view to_string(CutKind k) {
  switch (k) {
    case CutKind::FixD2ScanD1: return "fix-d2-scan-d1";
    case CutKind::FixD1ScanD2: return "fix-d1-scan-d2";
    case CutKind::CounterMoving: return "counter-moving";
    case CutKind::CoMoving: return "co-moving";
  }
  return "?";
}

/// Detector positions (x1, x2) at scan parameter x.
inline std::pair<double, double> cut_point(CutKind kind, double x, double fixed = 0.0) {
  switch (kind) {
    case CutKind::FixD2ScanD1: return {x, fixed};
    case CutKind::FixD1ScanD2: return {fixed, x};
    case CutKind::CounterMoving: return {x, -x};
    case CutKind::CoMoving: return {x, x};
  }
  return {x, x};
}

/// 1D profile along a cut. For diagonal cuts x is the detector coordinate,
/// not arc length.
struct CutProfile {
  CutKind kind = CutKind::FixD2ScanD1;
  std::vector<double> x;
  std::vector<double> y;
  std::optional<std::vector<double>> y_err;
  double fixed = 0.0;  // position of the parked detector for single-arm cuts
};

inline constexpr std::size_t kMinCutPoints = 16;

namespace detail {

/// Scan range [lo, hi] keeping the cut inside [a1lo, a1hi] x [a2lo, a2hi].
inline std::pair<double, double> scan_range(CutKind kind, double fixed, double a1lo, double a1hi,
                                            double a2lo, double a2hi) {
  auto inside = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  switch (kind) {
    case CutKind::FixD2ScanD1:
      if (!inside(fixed, a2lo, a2hi)) throw std::invalid_argument("cut line exits the grid");
      return {a1lo, a1hi};
    case CutKind::FixD1ScanD2:
      if (!inside(fixed, a1lo, a1hi)) throw std::invalid_argument("cut line exits the grid");
      return {a2lo, a2hi};
    case CutKind::CoMoving: return {std::max(a1lo, a2lo), std::min(a1hi, a2hi)};
    case CutKind::CounterMoving: return {std::max(a1lo, -a2hi), std::min(a1hi, -a2lo)};
  }
  return {0.0, 0.0};
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k)
    v[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
  v.back() = hi;
  return v;
}

inline void check_cut_request(std::size_t n_points, double lo, double hi) {
  if (n_points < kMinCutPoints) throw std::invalid_argument("cut needs at least 16 points");
  if (!(hi > lo)) throw std::invalid_argument("cut line exits the grid");
}

/// Interpolation coordinate of v on a uniform axis: (cell, fraction).
inline std::pair<std::size_t, double> locate(const std::vector<double>& axis, double v) {
  const double h = (axis.back() - axis.front()) / static_cast<double>(axis.size() - 1);
  double t = (v - axis.front()) / h;
  t = std::clamp(t, 0.0, static_cast<double>(axis.size() - 1));
  std::size_t i = std::min(static_cast<std::size_t>(t), axis.size() - 2);
  return {i, t - static_cast<double>(i)};
}

inline std::size_t nearest(const std::vector<double>& centers, double v) {
  const double h = (centers.back() - centers.front()) / static_cast<double>(centers.size() - 1);
  const double t = std::round((v - centers.front()) / h);
  return static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(centers.size() - 1)));
}

}  // namespace detail

/// Bilinear samples of a surface along the cut.
inline CutProfile extract_cut(const RateSurface& s, CutKind kind, std::size_t n_points,
                              double fixed = 0.0) {
  const auto [lo, hi] = detail::scan_range(kind, fixed, s.axis1.front(), s.axis1.back(),
                                           s.axis2.front(), s.axis2.back());
  detail::check_cut_request(n_points, lo, hi);
  CutProfile p;
  p.kind = kind;
  p.fixed = fixed;
  p.x = detail::linspace(lo, hi, n_points);
  p.y.reserve(n_points);
  for (double x : p.x) {
    const auto [x1, x2] = cut_point(kind, x, fixed);
    const auto [i, fi] = detail::locate(s.axis1, x1);
    const auto [j, fj] = detail::locate(s.axis2, x2);
    const double v = (1 - fi) * (1 - fj) * s.at(i, j) + fi * (1 - fj) * s.at(i + 1, j) +
                     (1 - fi) * fj * s.at(i, j + 1) + fi * fj * s.at(i + 1, j + 1);
    p.y.push_back(v);
  }
  return p;
}

/// Nearest-bin counts along the cut with sqrt(N) error bars.
inline CutProfile extract_cut(const CoincidenceHistogram& h, CutKind kind, std::size_t n_points,
                              double fixed = 0.0) {
  const std::vector<double> c1 = h.centers1();
  const std::vector<double> c2 = h.centers2();
  const auto [lo, hi] = detail::scan_range(kind, fixed, c1.front(), c1.back(), c2.front(), c2.back());
  detail::check_cut_request(n_points, lo, hi);
  CutProfile p;
  p.kind = kind;
  p.fixed = fixed;
  p.x = detail::linspace(lo, hi, n_points);
  std::vector<double> err;
  for (double x : p.x) {
    const auto [x1, x2] = cut_point(kind, x, fixed);
    const double n = static_cast<double>(h.at(detail::nearest(c1, x1), detail::nearest(c2, x2)));
    p.y.push_back(n);
    err.push_back(std::sqrt(n));
  }
  p.y_err = std::move(err);
  return p;
}

/// The analytic rate evaluated directly along the cut over the full window.
inline CutProfile analytic_cut(const ExperimentConfig& cfg, CutKind kind, std::size_t n_points,
                               double fixed = 0.0) {
  cfg.validate();
  const double w = cfg.window_halfwidth;
  const auto [lo, hi] = detail::scan_range(kind, fixed, -w, w, -w, w);
  detail::check_cut_request(n_points, lo, hi);
  CutProfile p;
  p.kind = kind;
  p.fixed = fixed;
  p.x = detail::linspace(lo, hi, n_points);
  for (double x : p.x) {
    const auto [x1, x2] = cut_point(kind, x, fixed);
    p.y.push_back(coincidence_rate(x1, x2, cfg));
  }
  return p;
}

/// Product of the two arm envelopes along the cut.
inline double cut_envelope(const ExperimentConfig& cfg, CutKind kind, double x, double fixed = 0.0) {
  const auto [x1, x2] = cut_point(kind, x, fixed);
  return envelope(x1, cfg.lambda1, cfg) * envelope(x2, cfg.lambda2, cfg);
}

/// Angular frequency that drives the fringe along the cut (may be zero).
inline double effective_omega(const ExperimentConfig& cfg, CutKind kind) {
  const bool one = cfg.scheme == Scheme::SchemeI;
  switch (kind) {
    case CutKind::FixD2ScanD1: return cfg.omega1();
    case CutKind::FixD1ScanD2: return cfg.omega2();
    case CutKind::CoMoving: return one ? cfg.omega_plus() : std::abs(cfg.omega_minus());
    case CutKind::CounterMoving: return one ? std::abs(cfg.omega_minus()) : cfg.omega_plus();
  }
  return 0.0;
}

/// Fringe period 2 pi c z / (w_eff d) along the cut; nullopt when w_eff is
/// zero and the cut carries no fringe at all.
inline std::optional<double> predicted_period(const ExperimentConfig& cfg, CutKind kind) {
  const double w = effective_omega(cfg, kind);
  if (w == 0.0) return std::nullopt;
  return 2.0 * std::numbers::pi * kSpeedOfLight * cfg.distance / (w * cfg.slit_spacing);
}

/// Envelope values below this are dropped before fitting.
inline constexpr double kEnvelopeFloor = 0.02;

/// Divides out the cut envelope and fits the fringe model. Points where the
/// envelope falls under kEnvelopeFloor are excluded. With error bars the fit
/// is weighted by 1/err^2 (zero-count bins get err = 1).
inline FringeFit fit_fringe(const CutProfile& profile, const ExperimentConfig& cfg,
                            const FitOptions& opt = {}) {
  if (profile.x.size() < kMinCutPoints || profile.y.size() != profile.x.size())
    throw std::invalid_argument("fit_fringe: profile needs at least 16 points");
  std::vector<double> x, y, w;
  for (std::size_t k = 0; k < profile.x.size(); ++k) {
    const double env = cut_envelope(cfg, profile.kind, profile.x[k], profile.fixed);
    if (env < kEnvelopeFloor) continue;
    double err = 1.0;
    if (profile.y_err) err = std::max((*profile.y_err)[k], 1.0);
    x.push_back(profile.x[k]);
    y.push_back(profile.y[k] / env);
    w.push_back(profile.y_err ? env * env / (err * err) : 1.0);
  }
  return fit_cosine(x, y, w, opt);
}

struct TiltEstimate {
  double angle_deg = 0.0;  // stripe normal, measured from the +x1 axis, in (-90, 90]
  double f1 = 0.0;         // spatial frequency along x1, cycles per meter
  double f2 = 0.0;
  double peak_ratio = 0.0;  // peak power over mean spectral power

  /// Angular distance from the 45 degree diagonal normal (or -45 for mirrored stripes).
  double off_diagonal_deg() const { return std::abs(std::abs(angle_deg) - 45.0); }
};

struct TiltOptions {
  double dc_exclusion = 1.5;  // bins around zero frequency ignored
  int zoom_levels = 4;
  int zoom_half_width = 8;
  double zoom_factor = 8.0;
  double min_peak_ratio = 25.0;
};

namespace detail {

inline std::optional<TiltEstimate> estimate_tilt_grid(std::vector<double> v, std::size_t rows,
                                                      std::size_t cols, double len1, double len2,
                                                      const TiltOptions& opt) {
  if (rows < 32 || cols < 32) throw std::invalid_argument("estimate_tilt: needs at least 32x32");
  double mean = 0.0, total = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double energy = 0.0;
  for (double& x : v) {
    total += x * x;
    x -= mean;
    energy += x * x;
  }
  if (!(energy > 1e-24 * total)) return std::nullopt;

  std::vector<double> f1, f2;
  for (std::size_t a = 0; a <= rows / 2; ++a) f1.push_back(static_cast<double>(a));
  for (long b = -static_cast<long>(cols / 2); b <= static_cast<long>(cols / 2); ++b)
    f2.push_back(static_cast<double>(b));
  std::vector<double> power = spectral::power_grid(v, rows, cols, f1, f2);
  double c1 = 0.0, c2 = 0.0, peak = -1.0;
  for (std::size_t a = 0; a < f1.size(); ++a)
    for (std::size_t b = 0; b < f2.size(); ++b) {
      if (std::hypot(f1[a], f2[b]) < opt.dc_exclusion) continue;
      const double p = power[a * f2.size() + b];
      if (p > peak) {
        peak = p;
        c1 = f1[a];
        c2 = f2[b];
      }
    }
  // Parseval: the mean power over the natural frequency grid equals the energy.
  const double ratio = peak / energy;
  if (ratio < opt.min_peak_ratio) return std::nullopt;

  // Successive zoomed grids around the peak, then a 3x3 centroid.
  double step = 1.0;
  const int n = opt.zoom_half_width;
  std::vector<double> z1(2 * n + 1), z2(2 * n + 1), zp;
  for (int level = 0; level < opt.zoom_levels; ++level) {
    step /= opt.zoom_factor;
    for (int k = -n; k <= n; ++k) {
      z1[k + n] = c1 + k * step;
      z2[k + n] = c2 + k * step;
    }
    zp = spectral::power_grid(v, rows, cols, z1, z2);
    const auto it = std::max_element(zp.begin(), zp.end());
    const auto idx = static_cast<std::size_t>(it - zp.begin());
    c1 = z1[idx / z2.size()];
    c2 = z2[idx % z2.size()];
  }
  {
    const auto idx = static_cast<std::size_t>(std::max_element(zp.begin(), zp.end()) - zp.begin());
    const std::size_t a0 = std::clamp<std::size_t>(idx / z2.size(), 1, z1.size() - 2);
    const std::size_t b0 = std::clamp<std::size_t>(idx % z2.size(), 1, z2.size() - 2);
    double floor = std::numeric_limits<double>::infinity();
    for (std::size_t a = a0 - 1; a <= a0 + 1; ++a)
      for (std::size_t b = b0 - 1; b <= b0 + 1; ++b) floor = std::min(floor, zp[a * z2.size() + b]);
    double sw = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t a = a0 - 1; a <= a0 + 1; ++a)
      for (std::size_t b = b0 - 1; b <= b0 + 1; ++b) {
        const double wgt = zp[a * z2.size() + b] - floor;
        sw += wgt;
        s1 += wgt * z1[a];
        s2 += wgt * z2[b];
      }
    if (sw > 0.0) {
      c1 = s1 / sw;
      c2 = s2 / sw;
    }
  }
  TiltEstimate t;
  t.f1 = c1 / len1;
  t.f2 = c2 / len2;
  t.angle_deg = std::atan2(t.f2, t.f1) * 180.0 / std::numbers::pi;
  t.peak_ratio = ratio;
  return t;
}

}  // namespace detail

/// Orientation of the dominant stripe family of a surface, from the peak of
/// its 2D Fourier spectrum. nullopt when the surface has no stripes.
inline std::optional<TiltEstimate> estimate_tilt(const RateSurface& s, const TiltOptions& opt = {}) {
  const double len1 = (s.axis1.back() - s.axis1.front()) * static_cast<double>(s.rows()) /
                      static_cast<double>(s.rows() - 1);
  const double len2 = (s.axis2.back() - s.axis2.front()) * static_cast<double>(s.cols()) /
                      static_cast<double>(s.cols() - 1);
  return detail::estimate_tilt_grid(s.values, s.rows(), s.cols(), len1, len2, opt);
}

inline std::optional<TiltEstimate> estimate_tilt(const CoincidenceHistogram& h,
                                                 const TiltOptions& opt = {}) {
  std::vector<double> v(h.counts.begin(), h.counts.end());
  return detail::estimate_tilt_grid(std::move(v), h.rows(), h.cols(), h.edges1.back() - h.edges1.front(),
                                    h.edges2.back() - h.edges2.front(), opt);
}

/// Singles counts of one detector as a profile with sqrt(N) error bars.
inline CutProfile singles_profile(const CoincidenceHistogram& h, int arm) {
  if (arm != 1 && arm != 2) throw std::invalid_argument("arm must be 1 or 2");
  CutProfile p;
  p.kind = arm == 1 ? CutKind::FixD2ScanD1 : CutKind::FixD1ScanD2;
  p.x = arm == 1 ? h.centers1() : h.centers2();
  const auto& s = arm == 1 ? h.singles1 : h.singles2;
  std::vector<double> err;
  for (auto n : s) {
    p.y.push_back(static_cast<double>(n));
    err.push_back(std::sqrt(static_cast<double>(n)));
  }
  p.y_err = std::move(err);
  return p;
}

/// Rate integrated over the partner detector (rectangle rule on the grid).
inline CutProfile singles_profile(const RateSurface& s, int arm) {
  if (arm != 1 && arm != 2) throw std::invalid_argument("arm must be 1 or 2");
  CutProfile p;
  p.kind = arm == 1 ? CutKind::FixD2ScanD1 : CutKind::FixD1ScanD2;
  p.x = arm == 1 ? s.axis1 : s.axis2;
  p.y.assign(p.x.size(), 0.0);
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = 0; j < s.cols(); ++j) p.y[arm == 1 ? i : j] += s.at(i, j);
  return p;
}

namespace detail {

inline void require_singles_span(const ExperimentConfig& cfg, int arm) {
  const double period = (arm == 1 ? cfg.lambda1 : cfg.lambda2) * cfg.distance / cfg.slit_spacing;
  if (2.0 * cfg.window_halfwidth < 5.0 * period)
    throw std::invalid_argument("marginal_visibility: window must span >= 5 single-photon periods");
}

// Singles fringes, if any, would have the one-photon period. Searching the
// octave around it keeps the fit off slow trends and sampling aliases, both
// of which trade V against other parameters on a fringeless profile.
inline FitOptions singles_fit_options(const ExperimentConfig& cfg, int arm) {
  const double p = *predicted_period(cfg, arm == 1 ? CutKind::FixD2ScanD1 : CutKind::FixD1ScanD2);
  FitOptions opt;
  opt.min_period = 0.5 * p;
  opt.max_period = std::min(2.0 * p, 2.0 * cfg.window_halfwidth / opt.min_periods_in_span);
  return opt;
}

}  // namespace detail

/// Envelope-corrected fringe fit of one detector's singles. The visibility
/// field is the answer; converged=false marks the period as unreliable.
inline FringeFit marginal_visibility(const CoincidenceHistogram& h, const ExperimentConfig& cfg,
                                     int arm) {
  detail::require_singles_span(cfg, arm);
  return fit_fringe(singles_profile(h, arm), cfg, detail::singles_fit_options(cfg, arm));
}

inline FringeFit marginal_visibility(const RateSurface& s, const ExperimentConfig& cfg, int arm) {
  detail::require_singles_span(cfg, arm);
  return fit_fringe(singles_profile(s, arm), cfg, detail::singles_fit_options(cfg, arm));
}

}  // namespace biphoton
