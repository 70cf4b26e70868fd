#pragma once

// Direct discrete-time Fourier transforms evaluated at arbitrary frequencies.
// Grids here are at most a few hundred samples per side, so evaluating the
// transform only where it is needed beats zero-padding a full FFT.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace biphoton::spectral {

/// |sum_n v[n] w[n] exp(-2 pi i f x[n])|^2 for non-uniform sample positions x.
inline double power_at(std::span<const double> x, std::span<const double> v, double f) {
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t n = 0; n < x.size(); ++n)
    acc += v[n] * std::polar(1.0, -2.0 * std::numbers::pi * f * x[n]);
  return std::norm(acc);
}

/// Power of a rows x cols row-major grid at every (f1[a], f2[b]); frequencies
/// are in cycles per grid length. Result is row-major over (a, b).
inline std::vector<double> power_grid(std::span<const double> values, std::size_t rows,
                                      std::size_t cols, std::span<const double> f1,
                                      std::span<const double> f2) {
  // Separable: first transform along axis 2, then along axis 1.
  std::vector<std::complex<double>> partial(rows * f2.size());
  std::vector<std::complex<double>> tw2(cols * f2.size());
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t b = 0; b < f2.size(); ++b)
      tw2[j * f2.size() + b] = std::polar(
          1.0, -2.0 * std::numbers::pi * f2[b] * static_cast<double>(j) / static_cast<double>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const double v = values[i * cols + j];
      if (v == 0.0) continue;
      for (std::size_t b = 0; b < f2.size(); ++b) partial[i * f2.size() + b] += v * tw2[j * f2.size() + b];
    }
  std::vector<double> out(f1.size() * f2.size());
  for (std::size_t a = 0; a < f1.size(); ++a) {
    std::vector<std::complex<double>> acc(f2.size());
    for (std::size_t i = 0; i < rows; ++i) {
      const auto tw = std::polar(
          1.0, -2.0 * std::numbers::pi * f1[a] * static_cast<double>(i) / static_cast<double>(rows));
      for (std::size_t b = 0; b < f2.size(); ++b) acc[b] += tw * partial[i * f2.size() + b];
    }
    for (std::size_t b = 0; b < f2.size(); ++b) out[a * f2.size() + b] = std::norm(acc[b]);
  }
  return out;
}

}  // namespace biphoton::spectral
