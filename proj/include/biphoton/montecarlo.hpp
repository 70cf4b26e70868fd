#pragma once

// Rejection sampler for the coincidence density and the histogram it fills.
//
// Determinism: the event budget is cut into chunks of `chunk_size` accepted
// events. Chunk k draws from std::mt19937_64 seeded with chunk_seed(seed, k),
// so every chunk is reproducible on its own. Chunk histograms are integer
// sums, which makes the merged result independent of how chunks are spread
// over worker threads.
//
//   chunk_seed(seed, k) = mix64(seed ^ mix64(k + 0x9E3779B97F4A7C15))
//   mix64(z): z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//             z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//             return z ^ (z >> 31)
//
// A uniform double in [0, 1) is (engine() >> 11) * 2^-53. Each proposal
// consumes three draws in the order x1, x2, acceptance.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

#include "biphoton/config.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/physics.hpp"

namespace biphoton {

struct SamplerConfig {
  std::uint64_t n_events = 1'000'000;
  std::uint64_t seed = 42;
  std::size_t n_bins = 64;
  bool poisson_noise = false;
  std::uint64_t chunk_size = 65536;

  void validate() const {
    if (n_events < 1) throw ConfigError("invalid sampler config: n_events >= 1");
    if (n_bins < kMinSurfaceBins) throw ConfigError("invalid sampler config: n_bins >= 8");
    if (chunk_size < 1) throw ConfigError("invalid sampler config: chunk_size >= 1");
  }

  bool operator==(const SamplerConfig&) const = default;
};

/// Binned coincidences over the detector window. counts is row-major
/// (i along x1, j along x2).
struct CoincidenceHistogram {
  std::vector<double> edges1;
  std::vector<double> edges2;
  std::vector<std::uint64_t> counts;
  std::vector<std::uint64_t> singles1;
  std::vector<std::uint64_t> singles2;
  std::uint64_t total_events = 0;
  ExperimentConfig experiment;
  SamplerConfig sampler;

  std::size_t rows() const { return edges1.size() - 1; }
  std::size_t cols() const { return edges2.size() - 1; }
  std::uint64_t at(std::size_t i, std::size_t j) const { return counts[i * cols() + j]; }
  std::vector<double> centers1() const { return centers(edges1); }
  std::vector<double> centers2() const { return centers(edges2); }
  std::uint64_t sum() const {
    std::uint64_t s = 0;
    for (auto c : counts) s += c;
    return s;
  }

 private:
  static std::vector<double> centers(const std::vector<double>& e) {
    std::vector<double> c(e.size() - 1);
    for (std::size_t i = 0; i + 1 < e.size(); ++i) c[i] = 0.5 * (e[i] + e[i + 1]);
    return c;
  }
};

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t chunk_seed(std::uint64_t seed, std::uint64_t chunk) {
  return mix64(seed ^ mix64(chunk + 0x9E3779B97F4A7C15ULL));
}

/// Stream index reserved for the per-bin Poisson noise pass.
inline constexpr std::uint64_t kNoiseStream = std::numeric_limits<std::uint64_t>::max();

inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline constexpr std::size_t kDefaultDensityGrid = 512;

/// Integral of the rate over the window, 2D midpoint rule on a grid x grid mesh.
inline double normalize_density(const ExperimentConfig& cfg,
                                std::size_t grid = kDefaultDensityGrid) {
  cfg.validate();
  if (grid < 1) throw std::invalid_argument("normalize_density: grid must be positive");
  const std::vector<double> x = bin_centers(cfg.window_halfwidth, grid);
  const double h = 2.0 * cfg.window_halfwidth / static_cast<double>(grid);
  double sum = 0.0;
  for (double x1 : x) {
    double row = 0.0;
    for (double x2 : x) row += coincidence_rate(x1, x2, cfg);
    sum += row;
  }
  const double z = sum * h * h;
  if (!(z > 0.0)) throw PhysicsError("density normalization is not positive");
  return z;
}

/// Acceptance bound for rejection sampling: 2 * (max envelope product), and
/// the envelope peaks at the window center.
inline double acceptance_bound(const ExperimentConfig& cfg) {
  return 2.0 * envelope(0.0, cfg.lambda1, cfg) * envelope(0.0, cfg.lambda2, cfg);
}

namespace detail {

inline void check_acceptance_bound(const ExperimentConfig& cfg, double bound) {
  constexpr std::size_t kProbe = 256;
  const std::vector<double> x = bin_centers(cfg.window_halfwidth, kProbe);
  for (double x1 : x)
    for (double x2 : x)
      if (coincidence_rate(x1, x2, cfg) > bound)
        throw PhysicsError("acceptance bound violated by the rate at a probe point");
}

inline std::size_t bin_index(double x, double halfwidth, std::size_t n) {
  const double t = (x + halfwidth) / (2.0 * halfwidth) * static_cast<double>(n);
  if (t <= 0.0) return 0;
  return std::min(static_cast<std::size_t>(t), n - 1);
}

inline void run_chunk(const ExperimentConfig& cfg, std::uint64_t seed, std::uint64_t chunk,
                      std::uint64_t n_accept, std::size_t n_bins, double bound,
                      std::vector<std::uint64_t>& counts) {
  std::mt19937_64 rng(chunk_seed(seed, chunk));
  const double w = cfg.window_halfwidth;
  std::uint64_t accepted = 0;
  while (accepted < n_accept) {
    const double x1 = -w + 2.0 * w * uniform01(rng);
    const double x2 = -w + 2.0 * w * uniform01(rng);
    const double u = uniform01(rng);
    if (u * bound < coincidence_rate(x1, x2, cfg)) {
      ++counts[bin_index(x1, w, n_bins) * n_bins + bin_index(x2, w, n_bins)];
      ++accepted;
    }
  }
}

}  // namespace detail

/// Draws scfg.n_events coincidences and bins them. `workers` only affects
/// speed; 0 selects std::thread::hardware_concurrency().
inline CoincidenceHistogram sample_events(const ExperimentConfig& cfg, const SamplerConfig& scfg,
                                          unsigned workers = 0) {
  cfg.validate();
  scfg.validate();
  const double bound = acceptance_bound(cfg);
  detail::check_acceptance_bound(cfg, bound);

  const std::size_t n = scfg.n_bins;
  const std::uint64_t n_chunks = (scfg.n_events + scfg.chunk_size - 1) / scfg.chunk_size;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, n_chunks));

  std::vector<std::vector<std::uint64_t>> partial(workers, std::vector<std::uint64_t>(n * n, 0));
  std::atomic<std::uint64_t> next{0};
  auto worker = [&](unsigned id) {
    for (std::uint64_t k = next++; k < n_chunks; k = next++) {
      const std::uint64_t begin = k * scfg.chunk_size;
      const std::uint64_t take = std::min(scfg.chunk_size, scfg.n_events - begin);
      detail::run_chunk(cfg, scfg.seed, k, take, n, bound, partial[id]);
    }
  };
  if (workers == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned id = 0; id < workers; ++id) pool.emplace_back(worker, id);
  }

  CoincidenceHistogram h;
  h.edges1 = bin_edges(cfg.window_halfwidth, n);
  h.edges2 = h.edges1;
  h.counts.assign(n * n, 0);
  for (const auto& p : partial)
    for (std::size_t k = 0; k < n * n; ++k) h.counts[k] += p[k];

  if (scfg.poisson_noise) {
    std::mt19937_64 rng(chunk_seed(scfg.seed, kNoiseStream));
    for (auto& c : h.counts) {
      if (c == 0) continue;
      std::poisson_distribution<std::uint64_t> draw(static_cast<double>(c));
      c = draw(rng);
    }
  }

  h.singles1.assign(n, 0);
  h.singles2.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      h.singles1[i] += h.counts[i * n + j];
      h.singles2[j] += h.counts[i * n + j];
    }
  h.total_events = scfg.n_events;
  h.experiment = cfg;
  h.sampler = scfg;
  return h;
}

}  // namespace biphoton
