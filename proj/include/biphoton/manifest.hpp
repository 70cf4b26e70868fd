#pragma once

// Run manifests and the flat key-value configuration format.
//
// Grammar (one entry per line):
//   line    := blank | comment | entry
//   comment := '#' any*
//   entry   := key ws* '=' ws* value ws* ('#' any*)?
//   length  := number unit      unit := nm | um | µm | mm | cm | m
//
// Keys:
//   preset            bundled preset to start from (applied before other keys)
//   scheme            I | II
//   lambda1, lambda2, slit_spacing, slit_width, distance, window_halfwidth   lengths
//   envelope          true | false
//   n_bins, quadrature_points
//   n_events, seed, poisson_noise, chunk_size   (any of these enables the sampler)
//   outputs           comma list of surface, histogram, cuts, fits, tilt, oracle-check, summary
//   output_dir, format_version

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "biphoton/config.hpp"
#include "biphoton/errors.hpp"
#include "biphoton/montecarlo.hpp"

namespace biphoton {

inline constexpr std::string_view kFormatVersion = "1.0.0";

enum class Output { Surface, Histogram, Cuts, Fits, Tilt, OracleCheck, Summary };

inline constexpr Output kAllOutputs[] = {Output::Surface, Output::Histogram,   Output::Cuts,
                                         Output::Fits,    Output::Tilt,        Output::OracleCheck,
                                         Output::Summary};

inline std::string_view to_string(Output o) {
  switch (o) {
    case Output::Surface: return "surface";
    case Output::Histogram: return "histogram";
    case Output::Cuts: return "cuts";
    case Output::Fits: return "fits";
    case Output::Tilt: return "tilt";
    case Output::OracleCheck: return "oracle-check";
    case Output::Summary: return "summary";
  }
  return "?";
}

inline std::optional<Output> output_from_string(std::string_view s) {
  for (Output o : kAllOutputs)
    if (to_string(o) == s) return o;
  return std::nullopt;
}

struct RunManifest {
  ExperimentConfig experiment;
  std::optional<SamplerConfig> sampler;
  std::vector<Output> requested_outputs{Output::Summary};
  std::filesystem::path output_dir = "out";
  std::string format_version{kFormatVersion};
  std::size_t n_bins = 64;
  std::size_t quadrature_points = 64;

  bool wants(Output o) const {
    return std::find(requested_outputs.begin(), requested_outputs.end(), o) != requested_outputs.end();
  }

  void validate() const {
    experiment.validate();
    if (requested_outputs.empty()) throw ConfigError("invalid manifest: outputs must be non-empty");
    if (n_bins < kMinSurfaceBins) throw ConfigError("invalid manifest: n_bins >= 8");
    if (quadrature_points < 16) throw ConfigError("invalid manifest: quadrature_points >= 16");
    if (output_dir.empty()) throw ConfigError("invalid manifest: output_dir must be set");
    if (sampler) {
      sampler->validate();
      if (sampler->n_bins != n_bins) throw ConfigError("invalid manifest: sampler n_bins mismatch");
    }
    if (wants(Output::Histogram) && !sampler)
      throw ConfigError("invalid manifest: histogram output needs sampler settings");
  }

  bool operator==(const RunManifest&) const = default;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_number(std::string_view text, std::string_view key) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || text.empty())
    throw ConfigError("field '" + std::string(key) + "': not a number: '" + std::string(text) + "'");
  return v;
}

template <class Int>
inline Int parse_integer(std::string_view text, std::string_view key) {
  Int v{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || text.empty())
    throw ConfigError("field '" + std::string(key) + "': not a non-negative integer: '" +
                      std::string(text) + "'");
  return v;
}

inline bool parse_bool(std::string_view text, std::string_view key) {
  if (text == "true" || text == "yes" || text == "1" || text == "on") return true;
  if (text == "false" || text == "no" || text == "0" || text == "off") return false;
  throw ConfigError("field '" + std::string(key) + "': expected true or false");
}

}  // namespace detail

/// Parses "400um", "54.7 cm", "8e-07m" into meters. The unit is required.
inline double parse_length(std::string_view text, std::string_view key = "length") {
  struct Unit {
    std::string_view suffix;
    std::string_view exponent;
  };
  static constexpr Unit units[] = {{"nm", "e-9"}, {"um", "e-6"}, {"\xC2\xB5m", "e-6"},
                                   {"mm", "e-3"}, {"cm", "e-2"}, {"m", ""}};
  text = detail::trim(text);
  for (const Unit& u : units) {
    if (text.size() <= u.suffix.size() || !text.ends_with(u.suffix)) continue;
    const std::string_view number = detail::trim(text.substr(0, text.size() - u.suffix.size()));
    // Splice the unit into the decimal exponent so the conversion rounds once.
    if (number.find_first_of("eE") == std::string_view::npos) {
      const std::string spliced = std::string(number) + std::string(u.exponent);
      return detail::parse_number(spliced, key);
    }
    const double scale = u.exponent.empty() ? 1.0 : detail::parse_number("1" + std::string(u.exponent), key);
    return detail::parse_number(number, key) * scale;
  }
  throw ConfigError("field '" + std::string(key) + "': length needs a unit (nm, um, mm, cm, m): '" +
                    std::string(text) + "'");
}

/// The four bundled configurations, one per panel of the two-axis
/// coincidence figure: Scheme I/II x degenerate/nondegenerate.
inline const std::map<std::string, std::string, std::less<>>& preset_texts() {
  static const std::map<std::string, std::string, std::less<>> presets = {
      {"scheme1-degenerate-800nm",
       "scheme = I\nlambda1 = 800nm\nlambda2 = 800nm\nslit_spacing = 400um\nslit_width = 100um\n"
       "distance = 54.7cm\nwindow_halfwidth = 3mm\n"},
      {"scheme1-nondegenerate",
       "scheme = I\nlambda1 = 760nm\nlambda2 = 840nm\nslit_spacing = 400um\nslit_width = 100um\n"
       "distance = 54.7cm\nwindow_halfwidth = 3mm\n"},
      {"scheme2-degenerate-800nm",
       "scheme = II\nlambda1 = 800nm\nlambda2 = 800nm\nslit_spacing = 400um\nslit_width = 100um\n"
       "distance = 30.3cm\nwindow_halfwidth = 3mm\n"},
      {"scheme2-nondegenerate",
       "scheme = II\nlambda1 = 760nm\nlambda2 = 840nm\nslit_spacing = 400um\nslit_width = 100um\n"
       "distance = 30.3cm\nwindow_halfwidth = 3mm\n"},
  };
  return presets;
}

inline std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, text] : preset_texts()) names.push_back(name);
  return names;
}


namespace detail {

using Entries = std::vector<std::pair<std::string, std::string>>;

inline Entries split_entries(std::string_view text) {
  Entries out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    out.emplace_back(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

inline void apply_entries(const Entries& entries, RunManifest& m) {
  static const std::vector<std::string_view> known = {
      "preset", "scheme", "lambda1", "lambda2", "slit_spacing", "slit_width", "distance",
      "window_halfwidth", "envelope", "n_bins", "quadrature_points", "n_events", "seed",
      "poisson_noise", "chunk_size", "outputs", "output_dir", "format_version"};
  std::vector<std::string> unknown;
  for (const auto& [key, value] : entries)
    if (std::find(known.begin(), known.end(), key) == known.end()) unknown.push_back(key);
  if (!unknown.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }

  // A preset is a base layer; later keys override it wherever they appear.
  for (const auto& [key, value] : entries) {
    if (key != "preset") continue;
    const auto it = preset_texts().find(value);
    if (it == preset_texts().end()) throw ConfigError("field 'preset': unknown preset '" + value + "'");
    apply_entries(split_entries(it->second), m);
  }

  auto& e = m.experiment;
  auto sampler = [&m]() -> SamplerConfig& {
    if (!m.sampler) m.sampler = SamplerConfig{};
    return *m.sampler;
  };
  for (const auto& [key, value] : entries) {
    if (key == "preset") continue;
    if (key == "scheme") {
      if (value == "I" || value == "1") e.scheme = Scheme::SchemeI;
      else if (value == "II" || value == "2") e.scheme = Scheme::SchemeII;
      else throw ConfigError("field 'scheme': expected I or II");
    } else if (key == "lambda1") e.lambda1 = parse_length(value, key);
    else if (key == "lambda2") e.lambda2 = parse_length(value, key);
    else if (key == "slit_spacing") e.slit_spacing = parse_length(value, key);
    else if (key == "slit_width") e.slit_width = parse_length(value, key);
    else if (key == "distance") e.distance = parse_length(value, key);
    else if (key == "window_halfwidth") e.window_halfwidth = parse_length(value, key);
    else if (key == "envelope") e.envelope = parse_bool(value, key);
    else if (key == "n_bins") m.n_bins = parse_integer<std::size_t>(value, key);
    else if (key == "quadrature_points") m.quadrature_points = parse_integer<std::size_t>(value, key);
    else if (key == "n_events") sampler().n_events = parse_integer<std::uint64_t>(value, key);
    else if (key == "seed") sampler().seed = parse_integer<std::uint64_t>(value, key);
    else if (key == "poisson_noise") sampler().poisson_noise = parse_bool(value, key);
    else if (key == "chunk_size") sampler().chunk_size = parse_integer<std::uint64_t>(value, key);
    else if (key == "output_dir") m.output_dir = value;
    else if (key == "format_version") m.format_version = value;
    else if (key == "outputs") {
      m.requested_outputs.clear();
      std::string_view rest = value;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        const std::string_view item = trim(rest.substr(0, comma));
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        if (item.empty()) continue;
        const auto o = output_from_string(item);
        if (!o) throw ConfigError("field 'outputs': unknown output '" + std::string(item) + "'");
        if (!m.wants(*o)) m.requested_outputs.push_back(*o);
      }
    }
  }
}

}  // namespace detail

/// Parses config text into a validated manifest with defaults applied.
inline RunManifest parse_config(std::string_view text) {
  RunManifest m;
  detail::apply_entries(detail::split_entries(text), m);
  if (m.wants(Output::Histogram) && !m.sampler) m.sampler = SamplerConfig{};
  if (m.sampler) m.sampler->n_bins = m.n_bins;
  m.validate();
  return m;
}

inline RunManifest load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline RunManifest load_preset(std::string_view name) {
  const auto it = preset_texts().find(name);
  if (it == preset_texts().end()) throw ConfigError("unknown preset '" + std::string(name) + "'");
  return parse_config(it->second);
}

/// Shortest decimal that reads back to the same double, suffixed with "m".
inline std::string format_length(double meters) {
  char buf[40];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, meters);
  return std::string(buf, end) + "m";
}

/// Resolved key-value pairs of a manifest, in emission order.
inline std::vector<std::pair<std::string, std::string>> manifest_entries(const RunManifest& m) {
  const auto& e = m.experiment;
  std::vector<std::pair<std::string, std::string>> kv = {
      {"scheme", std::string(to_string(e.scheme))},
      {"lambda1", format_length(e.lambda1)},
      {"lambda2", format_length(e.lambda2)},
      {"slit_spacing", format_length(e.slit_spacing)},
      {"slit_width", format_length(e.slit_width)},
      {"distance", format_length(e.distance)},
      {"window_halfwidth", format_length(e.window_halfwidth)},
      {"envelope", e.envelope ? "true" : "false"},
      {"n_bins", std::to_string(m.n_bins)},
      {"quadrature_points", std::to_string(m.quadrature_points)},
  };
  if (m.sampler) {
    kv.emplace_back("n_events", std::to_string(m.sampler->n_events));
    kv.emplace_back("seed", std::to_string(m.sampler->seed));
    kv.emplace_back("poisson_noise", m.sampler->poisson_noise ? "true" : "false");
    kv.emplace_back("chunk_size", std::to_string(m.sampler->chunk_size));
  }
  std::string outs;
  for (Output o : m.requested_outputs) outs += (outs.empty() ? "" : ",") + std::string(to_string(o));
  kv.emplace_back("outputs", outs);
  kv.emplace_back("output_dir", m.output_dir.string());
  kv.emplace_back("format_version", m.format_version);
  return kv;
}

/// Config text that parse_config maps back to the same manifest.
inline std::string emit_config(const RunManifest& m) {
  std::string out;
  for (const auto& [k, v] : manifest_entries(m)) out += k + " = " + v + "\n";
  return out;
}

}  // namespace biphoton
