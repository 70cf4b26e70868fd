#pragma once

// Executes a manifest: computes the requested stages in dependency order
// (surface -> histogram -> cuts -> fits/tilt, oracle check independent) and
// writes CSV grids, cut profiles and one JSON summary into output_dir.
//
// Files are first written with a ".partial" suffix and only renamed once
// every stage and self-check has succeeded.

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "biphoton/analysis.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/manifest.hpp"
#include "biphoton/montecarlo.hpp"
#include "biphoton/oracle.hpp"
#include "biphoton/physics.hpp"

namespace biphoton {

inline constexpr std::string_view kSummarySchemaVersion = "1.0.0";

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitPhysics = 2, kExitIo = 3 };

struct RunOptions {
  unsigned workers = 0;
  std::ostream* log = nullptr;  // progress lines; null for silence
};

struct RunResult {
  int exit_code = kExitOk;
  std::string message;
  std::vector<std::filesystem::path> files;  // final names (without .partial)
  nlohmann::json summary;
};

/// Decimal rendering used by every emitted grid and profile.
inline std::string format_sig9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

namespace detail {

class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

  void write(const std::filesystem::path& relative, const std::string& content) {
    const auto target = dir_ / relative;
    std::error_code ec;
    std::filesystem::create_directories(target.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + target.parent_path().string() + ": " + ec.message());
    const auto partial = partial_name(target);
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + partial.string());
    out << content;
    out.close();
    if (!out) throw IoError("write failed for " + partial.string());
    files_.push_back(target);
  }

  void commit() {
    for (const auto& f : files_) {
      std::error_code ec;
      std::filesystem::rename(partial_name(f), f, ec);
      if (ec) throw IoError("cannot finalize " + f.string() + ": " + ec.message());
    }
  }

  const std::vector<std::filesystem::path>& files() const { return files_; }

  static std::filesystem::path partial_name(const std::filesystem::path& p) {
    return p.string() + ".partial";
  }

 private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> files_;
};

inline std::string comment_header(const RunManifest& m, std::string_view kind) {
  std::string h = "# format_version: " + m.format_version + "\n# content: " + std::string(kind) + "\n";
  for (const auto& [k, v] : manifest_entries(m)) h += "# config " + k + " = " + v + "\n";
  return h;
}

template <class Value>
std::string grid_csv(const RunManifest& m, std::string_view kind, const std::vector<double>& a1,
                     const std::vector<double>& a2, const std::vector<Value>& values) {
  std::string out = comment_header(m, kind);
  out += "# x1_m,x2_m,value\n";
  for (std::size_t i = 0; i < a1.size(); ++i)
    for (std::size_t j = 0; j < a2.size(); ++j)
      out += format_sig9(a1[i]) + "," + format_sig9(a2[j]) + "," +
             format_sig9(static_cast<double>(values[i * a2.size() + j])) + "\n";
  return out;
}

inline std::string cut_csv(const RunManifest& m, std::string_view source, const CutProfile& p) {
  std::string out = comment_header(m, std::string(source) + " cut " + std::string(to_string(p.kind)));
  out += "# x_m,value,error\n";
  for (std::size_t k = 0; k < p.x.size(); ++k)
    out += format_sig9(p.x[k]) + "," + format_sig9(p.y[k]) + "," +
           format_sig9(p.y_err ? (*p.y_err)[k] : 0.0) + "\n";
  return out;
}

inline std::string cut_dat(const RunManifest& m, std::string_view source, const CutProfile& p) {
  std::string out = comment_header(m, std::string(source) + " cut " + std::string(to_string(p.kind)));
  out += "# x_m value\n";
  for (std::size_t k = 0; k < p.x.size(); ++k) out += format_sig9(p.x[k]) + " " + format_sig9(p.y[k]) + "\n";
  return out;
}

inline std::string singles_csv(const RunManifest& m, const CoincidenceHistogram& h) {
  std::string out = comment_header(m, "singles");
  out += "# x_m,singles1,singles2\n";
  const auto c = h.centers1();
  for (std::size_t k = 0; k < c.size(); ++k)
    out += format_sig9(c[k]) + "," + std::to_string(h.singles1[k]) + "," + std::to_string(h.singles2[k]) + "\n";
  return out;
}

inline nlohmann::json fit_json(const FringeFit& f) {
  return {{"amplitude", f.amplitude},   {"visibility", f.visibility},
          {"period_m", f.period},       {"phase_rad", f.phase},
          {"rms_residual", f.rms_residual}, {"converged", f.converged},
          {"optimizer_converged", f.optimizer_converged}, {"iterations", f.iterations}};
}

inline double expected_tilt_deg(const ExperimentConfig& cfg) {
  const double sign = cfg.scheme == Scheme::SchemeI ? 1.0 : -1.0;
  return std::atan2(sign * cfg.omega2(), cfg.omega1()) * 180.0 / std::numbers::pi;
}

inline nlohmann::json tilt_json(const std::optional<TiltEstimate>& t, const ExperimentConfig& cfg) {
  if (!t) return {{"stripes", false}};
  return {{"stripes", true},
          {"angle_deg", t->angle_deg},
          {"expected_deg", expected_tilt_deg(cfg)},
          {"off_diagonal_deg", t->off_diagonal_deg()},
          {"f1_per_m", t->f1},
          {"f2_per_m", t->f2}};
}

inline std::string slug(CutKind k) { return std::string(to_string(k)); }

}  // namespace detail

/// Runs every requested stage. Never throws for stage failures; the exit
/// code and message describe the first failure.
inline RunResult run(const RunManifest& m, const RunOptions& opt = {}) {
  RunResult result;
  auto log = [&](const std::string& line) {
    if (opt.log) *opt.log << line << '\n';
  };
  detail::OutputSet files(m.output_dir);
  nlohmann::json summary;
  nlohmann::json checks = nlohmann::json::object();
  summary["schema_version"] = std::string(kSummarySchemaVersion);
  summary["format_version"] = m.format_version;
  nlohmann::json config = nlohmann::json::object();
  for (const auto& [k, v] : manifest_entries(m)) config[k] = v;
  summary["config"] = config;

  auto write_summary = [&](std::string_view status) {
    summary["self_checks"] = checks;
    summary["status"] = std::string(status);
    if (m.wants(Output::Summary)) files.write("summary.json", summary.dump(2) + "\n");
  };

  try {
    m.validate();
    const ExperimentConfig& cfg = m.experiment;
    const bool need_surface = m.wants(Output::Surface) || m.wants(Output::Cuts) ||
                              m.wants(Output::Fits) || m.wants(Output::Tilt);
    const bool need_cuts = m.wants(Output::Cuts) || m.wants(Output::Fits);

    std::optional<RateSurface> surface;
    if (need_surface) {
      log("surface: " + std::to_string(m.n_bins) + "x" + std::to_string(m.n_bins));
      surface = rate_surface(cfg, m.n_bins);
      if (m.wants(Output::Surface))
        files.write("surface.csv", detail::grid_csv(m, "analytic surface", surface->axis1, surface->axis2,
                                                    surface->values));
      summary["surface"] = {{"n_bins", m.n_bins}, {"max", surface->max()}};
    }

    std::optional<CoincidenceHistogram> hist;
    if (m.wants(Output::Histogram)) {
      log("histogram: " + std::to_string(m.sampler->n_events) + " events");
      hist = sample_events(cfg, *m.sampler, opt.workers);
      const auto c1 = hist->centers1();
      files.write("histogram.csv", detail::grid_csv(m, "coincidence histogram", c1, hist->centers2(), hist->counts));
      files.write("singles.csv", detail::singles_csv(m, *hist));
      nlohmann::json h = {{"total_events", hist->total_events}, {"sum_counts", hist->sum()},
                          {"n_bins", hist->rows()}, {"poisson_noise", m.sampler->poisson_noise}};
      if (!m.sampler->poisson_noise) checks["count_conservation"] = hist->sum() == hist->total_events;
      nlohmann::json singles = nlohmann::json::object();
      for (int arm : {1, 2}) {
        try {
          singles["arm" + std::to_string(arm)] = detail::fit_json(marginal_visibility(*hist, cfg, arm));
        } catch (const std::invalid_argument& e) {
          singles["arm" + std::to_string(arm)] = {{"skipped", e.what()}};
        }
      }
      h["singles_fit"] = singles;
      summary["histogram"] = h;
    }

    if (need_cuts) {
      nlohmann::json cuts = nlohmann::json::object();
      auto handle = [&](std::string_view source, const CutProfile& p) {
        const std::string name = std::string(source) + "_" + detail::slug(p.kind);
        if (m.wants(Output::Cuts)) {
          files.write("cuts/" + name + ".csv", detail::cut_csv(m, source, p));
          files.write("cuts/" + name + ".dat", detail::cut_dat(m, source, p));
        }
        if (m.wants(Output::Fits)) {
          nlohmann::json entry = detail::fit_json(fit_fringe(p, cfg));
          if (const auto pp = predicted_period(cfg, p.kind)) {
            entry["predicted_period_m"] = *pp;
            entry["period_ratio"] = entry["period_m"].get<double>() / *pp;
            entry["periods_in_window"] = 2.0 * cfg.window_halfwidth / *pp;
          } else {
            entry["predicted_period_m"] = nullptr;
          }
          cuts[std::string(source)][detail::slug(p.kind)] = entry;
        }
      };
      const std::size_t n_points = std::max<std::size_t>(m.n_bins, kMinCutPoints);
      for (CutKind k : kAllCuts) handle("surface", extract_cut(*surface, k, n_points));
      if (hist)
        for (CutKind k : kAllCuts) handle("histogram", extract_cut(*hist, k, n_points));
      if (m.wants(Output::Fits)) summary["fits"] = cuts;
      log("cuts: done");
    }

    if (m.wants(Output::Tilt)) {
      nlohmann::json tilt = nlohmann::json::object();
      const auto ts = estimate_tilt(*surface);
      tilt["surface"] = detail::tilt_json(ts, cfg);
      checks["surface_stripes_found"] = ts.has_value();
      if (hist) {
        const auto th = estimate_tilt(*hist);
        tilt["histogram"] = detail::tilt_json(th, cfg);
        checks["histogram_stripes_found"] = th.has_value();
      }
      summary["tilt"] = tilt;
      if (ts) log("tilt: " + format_sig9(ts->angle_deg) + " deg");
    }

    if (m.wants(Output::OracleCheck)) {
      log("oracle-check: quadrature " + std::to_string(m.quadrature_points));
      const OracleCheck oc = oracle_check(cfg, m.n_bins, m.quadrature_points);
      summary["oracle_check"] = {{"max_relative_deviation", oc.max_deviation},
                                 {"quadrature_change", oc.quadrature_change},
                                 {"quadrature_points", oc.quadrature_points},
                                 {"n_bins", oc.n_bins},
                                 {"deviation_tolerance", oc.deviation_tolerance},
                                 {"convergence_tolerance", oc.convergence_tolerance},
                                 {"passed", oc.passed()}};
      checks["oracle_equivalence"] = oc.passed();
    }

    bool all_ok = true;
    for (const auto& [name, ok] : checks.items())
      if (!ok.get<bool>()) {
        all_ok = false;
        result.message += "self-check failed: " + name + "\n";
      }
    if (!all_ok) {
      write_summary("failed");
      result.exit_code = kExitPhysics;
    } else {
      write_summary("ok");
      files.commit();
    }
  } catch (const ConfigError& e) {
    result.exit_code = kExitConfig;
    result.message = e.what();
  } catch (const IoError& e) {
    result.exit_code = kExitIo;
    result.message = e.what();
  } catch (const std::exception& e) {
    result.exit_code = kExitPhysics;
    result.message = e.what();
    summary["error"] = e.what();
    try {
      write_summary("failed");
    } catch (const IoError& io) {
      result.exit_code = kExitIo;
      result.message += std::string("; ") + io.what();
    }
  }
  result.files = files.files();
  result.summary = std::move(summary);
  return result;
}

}  // namespace biphoton
