// Command-line driver: analytic patterns, Monte Carlo runs, fringe analysis,
// oracle checks and the four-panel reproduction workflow.

#include <CLI11.hpp>

#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "biphoton/biphoton.hpp"

namespace {

using namespace biphoton;

struct CommonFlags {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> events;
  std::optional<std::size_t> bins;
  std::string out;
  bool no_envelope = false;
  bool quiet = false;
  unsigned workers = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_source = true) {
  if (with_source) {
    auto* cfg = cmd->add_option("--config", f.config, "Config file (key = value format)");
    cmd->add_option("--preset", f.preset, "Bundled preset name")->excludes(cfg);
  }
  cmd->add_option("--seed", f.seed, "Sampler seed");
  cmd->add_option("--events", f.events, "Number of Monte Carlo coincidences");
  cmd->add_option("--bins", f.bins, "Grid bins per axis");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_flag("--no-envelope", f.no_envelope, "Drop the single-slit envelope");
  cmd->add_flag("--quiet", f.quiet, "Suppress progress output");
  cmd->add_option("--workers", f.workers, "Sampler threads (0 = all cores)");
}

RunManifest base_manifest(const CommonFlags& f, std::string_view fallback_preset = "") {
  if (!f.config.empty()) return load_config(f.config);
  if (!f.preset.empty()) return load_preset(f.preset);
  if (!fallback_preset.empty()) return load_preset(fallback_preset);
  throw ConfigError("one of --config or --preset is required");
}

void apply_flags(const CommonFlags& f, RunManifest& m) {
  if (f.bins) m.n_bins = *f.bins;
  if (f.seed || f.events) {
    if (!m.sampler) m.sampler = SamplerConfig{};
    if (f.seed) m.sampler->seed = *f.seed;
    if (f.events) m.sampler->n_events = *f.events;
  }
  if (m.sampler) m.sampler->n_bins = m.n_bins;
  if (!f.out.empty()) m.output_dir = f.out;
  if (f.no_envelope) m.experiment.envelope = false;
}

int execute(RunManifest m, const CommonFlags& f) {
  RunOptions opt;
  opt.workers = f.workers;
  opt.log = f.quiet ? nullptr : &std::cout;
  const RunResult r = run(m, opt);
  if (r.exit_code != kExitOk) std::cerr << "error: " << r.message << '\n';
  if (!f.quiet && r.exit_code == kExitOk)
    for (const auto& p : r.files) std::cout << "wrote " << p.string() << '\n';
  return r.exit_code;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitPhysics;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-color biphoton double-slit simulator"};
  app.require_subcommand(1);

  CommonFlags flags;
  auto* pattern = app.add_subcommand("pattern", "Analytic coincidence-rate surface");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo coincidence histogram");
  auto* analyze = app.add_subcommand("analyze", "Cuts, fringe fits and stripe tilt");
  auto* oracle = app.add_subcommand("oracle-check", "Compare analytic surface with the path-sum oracle");
  auto* fig4 = app.add_subcommand("reproduce-fig4", "Histograms for the four bundled presets");
  auto* runcmd = app.add_subcommand("run", "Run a manifest with the outputs it lists");
  for (auto* c : {pattern, simulate, analyze, oracle, runcmd}) add_common(c, flags);
  add_common(fig4, flags, false);

  auto* presets = app.add_subcommand("presets", "Bundled presets");
  presets->require_subcommand(1);
  auto* list = presets->add_subcommand("list", "List preset names");
  std::string show_name;
  auto* show = presets->add_subcommand("show", "Print a preset's config");
  show->add_option("name", show_name)->required();

  CLI11_PARSE(app, argc, argv);

  auto with_outputs = [&](std::vector<Output> outs) {
    return guarded([&] {
      RunManifest m = base_manifest(flags);
      apply_flags(flags, m);
      m.requested_outputs = std::move(outs);
      if (m.wants(Output::Histogram) && !m.sampler) {
        m.sampler = SamplerConfig{};
        m.sampler->n_bins = m.n_bins;
      }
      return execute(std::move(m), flags);
    });
  };

  if (*pattern) return with_outputs({Output::Surface, Output::Summary});
  if (*simulate) return with_outputs({Output::Histogram, Output::Summary});
  if (*oracle) return with_outputs({Output::OracleCheck, Output::Summary});
  if (*analyze) {
    std::vector<Output> outs{Output::Surface, Output::Cuts, Output::Fits, Output::Tilt, Output::Summary};
    if (flags.events || flags.seed) outs.insert(outs.begin() + 1, Output::Histogram);
    return with_outputs(outs);
  }
  if (*runcmd) {
    return guarded([&] {
      RunManifest m = base_manifest(flags);
      apply_flags(flags, m);
      return execute(std::move(m), flags);
    });
  }
  if (*fig4) {
    return guarded([&] {
      const std::string root = flags.out.empty() ? "fig4" : flags.out;
      int status = kExitOk;
      for (const auto& name : preset_names()) {
        RunManifest m = load_preset(name);
        CommonFlags f = flags;
        f.out = root + "/" + name;
        apply_flags(f, m);
        if (!m.sampler) m.sampler = SamplerConfig{};
        m.sampler->n_bins = m.n_bins;
        m.requested_outputs = {Output::Histogram, Output::Cuts, Output::Fits, Output::Tilt, Output::Summary};
        if (!flags.quiet) std::cout << "== " << name << '\n';
        const int rc = execute(std::move(m), f);
        if (rc != kExitOk && status == kExitOk) status = rc;
      }
      return status;
    });
  }
  if (*list) {
    for (const auto& name : preset_names()) std::cout << name << '\n';
    return kExitOk;
  }
  if (*show) {
    return guarded([&] {
      const auto it = preset_texts().find(show_name);
      if (it == preset_texts().end()) throw ConfigError("unknown preset '" + show_name + "'");
      std::cout << it->second;
      return kExitOk;
    });
  }
  return kExitOk;
}
