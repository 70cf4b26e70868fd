#pragma once

// Least-squares fit of y = A (1 + V cos(2 pi x / P + phi)) to profile data
// that already had its envelope divided out.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "biphoton/spectral.hpp"

namespace biphoton {

struct FringeFit {
  double amplitude = 0.0;
  double visibility = 0.0;
  double period = 0.0;  // m
  double phase = 0.0;   // radians, (-pi, pi]
  double rms_residual = 0.0;
  /// True when the optimizer converged and the period is trustworthy: the
  /// data span at least kMinPeriodsInSpan periods and carry visible modulation.
  bool converged = false;
  bool optimizer_converged = false;
  int iterations = 0;
  std::size_t points_used = 0;
};

struct FitOptions {
  double initial_damping = 1e-3;
  double damping_up = 10.0;
  double damping_down = 10.0;
  int max_iterations = 200;
  double relative_tolerance = 1e-8;
  double min_periods_in_span = 2.0;
  double min_visibility = 0.05;
  /// Band for the fitted period, m. The lower end never goes below two
  /// sample spacings.
  double min_period = 0.0;
  double max_period = std::numeric_limits<double>::infinity();
};

namespace detail {

inline double wrap_phase(double phi) {
  phi = std::remainder(phi, 2.0 * std::numbers::pi);
  if (phi <= -std::numbers::pi) phi += 2.0 * std::numbers::pi;
  return phi;
}

struct Params {
  double amplitude, visibility, period, phase;
};

inline double model(const Params& p, double x) {
  return p.amplitude * (1.0 + p.visibility * std::cos(2.0 * std::numbers::pi * x / p.period + p.phase));
}

inline double weighted_cost(const Params& p, std::span<const double> x, std::span<const double> y,
                            std::span<const double> w) {
  double c = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - model(p, x[i]);
    c += w[i] * r * r;
  }
  return c;
}

/// Weighted linear fit of a + b cos(2 pi f x) + c sin(2 pi f x) at fixed f.
inline Params linear_seed(double f, std::span<const double> x, std::span<const double> y,
                          std::span<const double> w) {
  Eigen::Matrix3d n = Eigen::Matrix3d::Zero();
  Eigen::Vector3d rhs = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double t = 2.0 * std::numbers::pi * f * x[i];
    const Eigen::Vector3d basis(1.0, std::cos(t), std::sin(t));
    n += w[i] * basis * basis.transpose();
    rhs += w[i] * y[i] * basis;
  }
  const Eigen::Vector3d abc = n.ldlt().solve(rhs);
  Params p{abc[0], 0.0, 1.0 / f, 0.0};
  if (abc[0] != 0.0) p.visibility = std::hypot(abc[1], abc[2]) / abc[0];
  p.phase = std::atan2(-abc[2], abc[1]);
  return p;
}

struct LmResult {
  Params params;
  double cost;
  bool converged;
  int iterations;
};

inline LmResult levenberg_marquardt(Params p, std::span<const double> x, std::span<const double> y,
                                    std::span<const double> w, const FitOptions& opt,
                                    double min_period = 0.0,
                                    double max_period = std::numeric_limits<double>::infinity()) {
  double cost = weighted_cost(p, x, y, w);
  double damping = opt.initial_damping;
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
    Eigen::Vector4d g = Eigen::Vector4d::Zero();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double theta = 2.0 * std::numbers::pi * x[i] / p.period + p.phase;
      const double c = std::cos(theta);
      const double s = std::sin(theta);
      Eigen::Vector4d jac;
      jac[0] = 1.0 + p.visibility * c;
      jac[1] = p.amplitude * c;
      jac[2] = p.amplitude * p.visibility * s * 2.0 * std::numbers::pi * x[i] / (p.period * p.period);
      jac[3] = -p.amplitude * p.visibility * s;
      const double r = y[i] - p.amplitude * (1.0 + p.visibility * c);
      h += w[i] * jac * jac.transpose();
      g += w[i] * r * jac;
    }
    bool stepped = false;
    while (!stepped) {
      Eigen::Matrix4d a = h;
      for (int k = 0; k < 4; ++k) a(k, k) += damping * std::max(h(k, k), 1e-300);
      const Eigen::Vector4d delta = a.ldlt().solve(g);
      Params trial{p.amplitude + delta[0], p.visibility + delta[1], p.period + delta[2],
                   p.phase + delta[3]};
      const double trial_cost =
          trial.period > min_period && trial.period <= max_period && delta.allFinite() ? weighted_cost(trial, x, y, w)
                                                  : std::numeric_limits<double>::infinity();
      if (trial_cost <= cost) {
        const double scale[4] = {std::max(std::abs(p.amplitude), 1e-300), 1.0, p.period, 1.0};
        double change = 0.0;
        for (int k = 0; k < 4; ++k) change = std::max(change, std::abs(delta[k]) / scale[k]);
        p = trial;
        cost = trial_cost;
        damping = std::max(damping / opt.damping_down, 1e-15);
        stepped = true;
        if (change < opt.relative_tolerance) return {p, cost, true, it + 1};
      } else {
        damping *= opt.damping_up;
        // No downhill step left at any damping: we sit at a minimum.
        if (damping > 1e12) return {p, cost, true, it + 1};
      }
    }
  }
  return {p, cost, false, it};
}

}  // namespace detail

/// Fits the fringe model to (x, y) with weights w (use 1 for unweighted).
/// The period is seeded from the strongest Fourier component of the
/// mean-subtracted data, then all four parameters are refined together.
inline FringeFit fit_cosine(std::span<const double> x, std::span<const double> y,
                            std::span<const double> w, const FitOptions& opt = {}) {
  FringeFit out;
  out.points_used = x.size();
  if (x.size() < 4) return out;

  const double span = x.back() - x.front();
  double min_dx = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < x.size(); ++i) min_dx = std::min(min_dx, x[i] - x[i - 1]);

  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());
  std::vector<double> centered(y.begin(), y.end());
  for (double& v : centered) v -= mean;

  const double f_lo = std::max(0.25 / span, 1.0 / opt.max_period);
  const double p_lo = std::max(2.0 * min_dx, opt.min_period);
  const double f_hi = 1.0 / p_lo;
  const double df = 1.0 / (8.0 * span);
  double best_f = f_lo, best_power = -1.0;
  for (double f = f_lo; f <= f_hi; f += df) {
    const double pw = spectral::power_at(x, centered, f);
    if (pw > best_power) {
      best_power = pw;
      best_f = f;
    }
  }

  detail::LmResult best{{mean, 0.0, 1.0 / best_f, 0.0}, std::numeric_limits<double>::infinity(), false, 0};
  for (double f : {best_f, 0.5 * best_f, 2.0 * best_f}) {
    if (f > f_hi || f < f_lo) continue;
    const detail::Params seed = detail::linear_seed(f, x, y, w);
    if (!std::isfinite(seed.amplitude) || !std::isfinite(seed.visibility)) continue;
    // Periods under two sample spacings are aliases and cannot be told apart.
    const detail::LmResult r = detail::levenberg_marquardt(seed, x, y, w, opt, p_lo, opt.max_period);
    if (r.cost < best.cost) best = r;
  }

  detail::Params p = best.params;
  if (p.visibility < 0.0) {
    p.visibility = -p.visibility;
    p.phase += std::numbers::pi;
  }
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - detail::model(p, x[i]);
    ss += r * r;
  }
  out.amplitude = p.amplitude;
  out.visibility = std::clamp(p.visibility, 0.0, 1.0);
  out.period = p.period;
  out.phase = detail::wrap_phase(p.phase);
  out.rms_residual = std::sqrt(ss / static_cast<double>(x.size()));
  out.optimizer_converged = best.converged;
  out.iterations = best.iterations;
  out.converged = best.converged && std::isfinite(p.period) && p.period > 0.0 &&
                  span >= opt.min_periods_in_span * p.period &&
                  out.visibility >= opt.min_visibility;
  return out;
}

}  // namespace biphoton
