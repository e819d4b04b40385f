#pragma once

// Flat `section.key = value` configuration for the pipeline. Every key has a
// default, so an empty file is a valid configuration.

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "seisclass/dtw.hpp"
#include "seisclass/error.hpp"
#include "seisclass/forest.hpp"
#include "seisclass/selection.hpp"
#include "seisclass/synth.hpp"
#include "seisclass/text.hpp"
#include "seisclass/timeseries.hpp"

namespace seisclass {

struct PipelineConfig {
  // paths; an empty signal path means "synthesize into the output directory"
  std::string signal_path;
  std::string events_path;
  std::string out_dir = "seisclass-out";
  double fs_hz = 200.0;

  int filter_order = 4;
  double filter_corner_hz = 0.1;

  int ar_max_order = 64;
  double ar_train_fraction = 0.05;

  double window_length_s = 60.0;
  double window_stride_s = 60.0;
  double window_test_stride_s = 60.0;

  LabelPolicy labels;

  std::string catalog_version = "curated-v1";
  double fdr_q = 0.05;
  std::size_t feature_cap = kDefaultFeatureCap;

  ForestParams forest;
  DtwParams dtw;

  double split_ratio = 2.0 / 3.0;

  // which filtered series the single-command train/classify stages read
  std::string train_input = "pef";
  // which side of the split classify/eval score
  std::string classify_part = "test";
  std::uint64_t seed = 42;

  SynthConfig synth;
  std::vector<double> synth_event_offsets_s{420.0, 960.0, 1560.0, 2160.0};
  bool synth_events_explicit = false;

  /// Synthesizer settings with the derived pieces filled in.
  SynthConfig synth_config() const {
    SynthConfig s = synth;
    s.fs_hz = fs_hz;
    s.precursor_lead_s = labels.class2_start_s;
    s.eruption_len_s = labels.class3_len_s;
    s.seed = derive_seed(seed, 0x5e15);
    if (!synth_events_explicit) {
      s.event_times_s.clear();
      for (int d = 0; d < static_cast<int>(std::ceil(s.days)); ++d)
        for (double off : synth_event_offsets_s) {
          const double t = s.t0_s + d * s.day_len_s + off;
          if (t < s.t0_s + s.duration_s()) s.event_times_s.push_back(t);
        }
    }
    return s;
  }

  ForestParams forest_params() const {
    ForestParams p = forest;
    p.seed = derive_seed(seed, 0xf0e57);
    return p;
  }

  /// Text recorded at the top of every output file.
  std::string provenance() const { return "seisclass seed=" + std::to_string(seed); }
};

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

inline bool parse_bool(std::string_view v, const std::string& key) {
  const auto s = lower(text::trim(v));
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + std::string(v) + "'");
}

}  // namespace detail

/// Applies one key/value pair; unknown keys are errors.
inline void apply_config_value(PipelineConfig& c, const std::string& key, std::string_view raw) {
  const auto value = text::trim(raw);
  const auto num = [&] {
    const auto v = text::parse_double(value);
    if (!v || !std::isfinite(*v)) throw ConfigError("config key '" + key + "': expected a number, got '" + std::string(value) + "'");
    return *v;
  };
  const auto integer = [&]() -> long long {
    const auto v = text::parse_int<long long>(value);
    if (!v) throw ConfigError("config key '" + key + "': expected an integer, got '" + std::string(value) + "'");
    return *v;
  };
  const auto count = [&]() -> std::size_t {
    const auto v = integer();
    if (v < 0) throw ConfigError("config key '" + key + "' must be non-negative");
    return static_cast<std::size_t>(v);
  };
  const auto list = [&] {
    try {
      return text::parse_double_list(value);
    } catch (const DataError& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
  };

  if (key == "paths.signal") c.signal_path = std::string(value);
  else if (key == "paths.events") c.events_path = std::string(value);
  else if (key == "paths.out") c.out_dir = std::string(value);
  else if (key == "signal.fs_hz") c.fs_hz = num();
  else if (key == "filter.order") c.filter_order = static_cast<int>(integer());
  else if (key == "filter.corner_hz") c.filter_corner_hz = num();
  else if (key == "ar.max_order") c.ar_max_order = static_cast<int>(integer());
  else if (key == "ar.train_fraction") c.ar_train_fraction = num();
  else if (key == "window.length_s") c.window_length_s = num();
  else if (key == "window.stride_s") c.window_stride_s = num();
  else if (key == "window.test_stride_s") c.window_test_stride_s = num();
  else if (key == "labels.class2_start_s") c.labels.class2_start_s = num();
  else if (key == "labels.class2_end_s") c.labels.class2_end_s = num();
  else if (key == "labels.class3_len_s") c.labels.class3_len_s = num();
  else if (key == "labels.rule") {
    const auto s = detail::lower(value);
    if (s == "window-end-time") c.labels.window_label_rule = WindowLabelRule::window_end_time;
    else if (s == "majority-sample") c.labels.window_label_rule = WindowLabelRule::majority_sample;
    else throw ConfigError("labels.rule must be window-end-time or majority-sample");
  }
  else if (key == "features.catalog") c.catalog_version = std::string(value);
  else if (key == "features.fdr_q") c.fdr_q = num();
  else if (key == "features.cap") c.feature_cap = count();
  else if (key == "forest.n_trees") c.forest.n_trees = count();
  else if (key == "forest.max_features") c.forest.max_features = count();
  else if (key == "forest.min_samples_leaf") c.forest.min_samples_leaf = count();
  else if (key == "forest.max_depth") c.forest.max_depth = count();
  else if (key == "forest.bootstrap") c.forest.bootstrap = detail::parse_bool(value, key);
  else if (key == "dtw.k") c.dtw.k_neighbors = count();
  else if (key == "dtw.local_cost") {
    const auto s = detail::lower(value);
    if (s == "squared") c.dtw.local_cost = LocalCost::squared;
    else if (s == "absolute") c.dtw.local_cost = LocalCost::absolute;
    else throw ConfigError("dtw.local_cost must be squared or absolute");
  }
  else if (key == "dtw.band_radius") {
    if (detail::lower(value) == "none") c.dtw.band_radius.reset();
    else c.dtw.band_radius = count();
  }
  else if (key == "dtw.downsample_to") c.dtw.downsample_to = count();
  else if (key == "dtw.z_normalize") c.dtw.z_normalize = detail::parse_bool(value, key);
  else if (key == "split.ratio") c.split_ratio = num();
  else if (key == "train.input") {
    c.train_input = detail::lower(value);
    if (c.train_input != "pef" && c.train_input != "bh") throw ConfigError("train.input must be pef or bh");
  }
  else if (key == "classify.part") {
    c.classify_part = detail::lower(value);
    if (c.classify_part != "test" && c.classify_part != "train") throw ConfigError("classify.part must be test or train");
  }
  else if (key == "seed") c.seed = static_cast<std::uint64_t>(count());
  else if (key == "synth.days") c.synth.days = num();
  else if (key == "synth.day_len_s") {
    c.synth.day_len_s = num();
    c.synth.seasonal.period_s = c.synth.day_len_s;
  }
  else if (key == "synth.t0_s") c.synth.t0_s = num();
  else if (key == "synth.seasonal_amplitude") c.synth.seasonal.amplitude = num();
  else if (key == "synth.seasonal_period_s") c.synth.seasonal.period_s = num();
  else if (key == "synth.seasonal_phase") c.synth.seasonal.phase = num();
  else if (key == "synth.ar_coefficients") c.synth.ambient.coefficients = list();
  else if (key == "synth.innovation_sigma") c.synth.ambient.innovation_sigma = num();
  else if (key == "synth.burst_rate_per_hour") c.synth.bursts.rate_per_hour = num();
  else if (key == "synth.burst_amplitude_min") c.synth.bursts.amplitude_min = num();
  else if (key == "synth.burst_amplitude_max") c.synth.bursts.amplitude_max = num();
  else if (key == "synth.burst_duration_min_s") c.synth.bursts.duration_min_s = num();
  else if (key == "synth.burst_duration_max_s") c.synth.bursts.duration_max_s = num();
  else if (key == "synth.events") {
    c.synth.event_times_s = list();
    c.synth_events_explicit = true;
  }
  else if (key == "synth.event_offsets_s") c.synth_event_offsets_s = list();
  else if (key == "synth.precursor_amplitude") c.synth.precursor_amplitude = num();
  else if (key == "synth.eruption_amplitude") c.synth.eruption_amplitude = num();
  else if (key == "synth.precursor_f_lo") c.synth.precursor_f_lo = num();
  else if (key == "synth.precursor_f_hi") c.synth.precursor_f_hi = num();
  else if (key == "synth.eruption_f_hz") c.synth.eruption_f_hz = num();
  else throw ConfigError("unknown config key '" + key + "'");
}

inline void validate_config(const PipelineConfig& c) {
  if (!(c.fs_hz > 0.0)) throw ConfigError("signal.fs_hz must be positive");
  if (c.ar_max_order < 1) throw ConfigError("ar.max_order must be at least 1");
  if (!(c.ar_train_fraction > 0.0 && c.ar_train_fraction < 1.0)) throw ConfigError("ar.train_fraction must lie in (0, 1)");
  if (!(c.window_length_s > 0.0) || !(c.window_stride_s > 0.0) || !(c.window_test_stride_s > 0.0))
    throw ConfigError("window lengths and strides must be positive");
  c.labels.validate();
  if (!(c.fdr_q > 0.0 && c.fdr_q <= 1.0)) throw ConfigError("features.fdr_q must lie in (0, 1]");
  if (c.feature_cap < 1) throw ConfigError("features.cap must be at least 1");
  if (c.forest.n_trees < 1) throw ConfigError("forest.n_trees must be at least 1");
  if (c.forest.min_samples_leaf < 1) throw ConfigError("forest.min_samples_leaf must be at least 1");
  c.dtw.validate();
  if (!(c.split_ratio > 0.0 && c.split_ratio < 1.0)) throw ConfigError("split.ratio must lie in (0, 1)");
}

inline PipelineConfig parse_config(const std::string& body, PipelineConfig base = {}) {
  std::size_t line_no = 0;
  for (auto line : text::split(body, '\n')) {
    ++line_no;
    line = text::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    apply_config_value(base, std::string(text::trim(line.substr(0, eq))), line.substr(eq + 1));
  }
  validate_config(base);
  return base;
}

inline PipelineConfig load_config(const std::string& path) {
  std::string body;
  try {
    body = text::read_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(body);
}

/// Canonical dump of the effective configuration.
inline std::string render_config(const PipelineConfig& c) {
  std::ostringstream o;
  const auto f = [](double v) { return text::format_exact(v); };
  o << "paths.signal = " << c.signal_path << '\n'
    << "paths.events = " << c.events_path << '\n'
    << "signal.fs_hz = " << f(c.fs_hz) << '\n'
    << "filter.order = " << c.filter_order << '\n'
    << "filter.corner_hz = " << f(c.filter_corner_hz) << '\n'
    << "ar.max_order = " << c.ar_max_order << '\n'
    << "ar.train_fraction = " << f(c.ar_train_fraction) << '\n'
    << "window.length_s = " << f(c.window_length_s) << '\n'
    << "window.stride_s = " << f(c.window_stride_s) << '\n'
    << "window.test_stride_s = " << f(c.window_test_stride_s) << '\n'
    << "labels.class2_start_s = " << f(c.labels.class2_start_s) << '\n'
    << "labels.class2_end_s = " << f(c.labels.class2_end_s) << '\n'
    << "labels.class3_len_s = " << f(c.labels.class3_len_s) << '\n'
    << "labels.rule = "
    << (c.labels.window_label_rule == WindowLabelRule::window_end_time ? "window-end-time" : "majority-sample") << '\n'
    << "features.catalog = " << c.catalog_version << '\n'
    << "features.fdr_q = " << f(c.fdr_q) << '\n'
    << "features.cap = " << c.feature_cap << '\n'
    << "forest.n_trees = " << c.forest.n_trees << '\n'
    << "forest.max_features = " << c.forest.max_features << '\n'
    << "forest.min_samples_leaf = " << c.forest.min_samples_leaf << '\n'
    << "forest.max_depth = " << c.forest.max_depth << '\n'
    << "forest.bootstrap = " << (c.forest.bootstrap ? "true" : "false") << '\n'
    << "dtw.k = " << c.dtw.k_neighbors << '\n'
    << "dtw.local_cost = " << (c.dtw.local_cost == LocalCost::squared ? "squared" : "absolute") << '\n'
    << "dtw.band_radius = " << (c.dtw.band_radius ? std::to_string(*c.dtw.band_radius) : "none") << '\n'
    << "dtw.downsample_to = " << c.dtw.downsample_to << '\n'
    << "dtw.z_normalize = " << (c.dtw.z_normalize ? "true" : "false") << '\n'
    << "split.ratio = " << f(c.split_ratio) << '\n'
    << "train.input = " << c.train_input << '\n'
    << "classify.part = " << c.classify_part << '\n'
    << "seed = " << c.seed << '\n';
  const auto& s = c.synth;
  o << "synth.days = " << f(s.days) << '\n'
    << "synth.day_len_s = " << f(s.day_len_s) << '\n'
    << "synth.t0_s = " << f(s.t0_s) << '\n'
    << "synth.seasonal_amplitude = " << f(s.seasonal.amplitude) << '\n'
    << "synth.seasonal_period_s = " << f(s.seasonal.period_s) << '\n'
    << "synth.seasonal_phase = " << f(s.seasonal.phase) << '\n'
    << "synth.ar_coefficients = " << text::join_exact(s.ambient.coefficients) << '\n'
    << "synth.innovation_sigma = " << f(s.ambient.innovation_sigma) << '\n'
    << "synth.burst_rate_per_hour = " << f(s.bursts.rate_per_hour) << '\n'
    << "synth.burst_amplitude_min = " << f(s.bursts.amplitude_min) << '\n'
    << "synth.burst_amplitude_max = " << f(s.bursts.amplitude_max) << '\n'
    << "synth.burst_duration_min_s = " << f(s.bursts.duration_min_s) << '\n'
    << "synth.burst_duration_max_s = " << f(s.bursts.duration_max_s) << '\n'
    << "synth.event_offsets_s = " << text::join_exact(c.synth_event_offsets_s) << '\n';
  if (c.synth_events_explicit) o << "synth.events = " << text::join_exact(s.event_times_s) << '\n';
  o << "synth.precursor_amplitude = " << f(s.precursor_amplitude) << '\n'
    << "synth.precursor_f_lo = " << f(s.precursor_f_lo) << '\n'
    << "synth.precursor_f_hi = " << f(s.precursor_f_hi) << '\n'
    << "synth.eruption_amplitude = " << f(s.eruption_amplitude) << '\n'
    << "synth.eruption_f_hz = " << f(s.eruption_f_hz) << '\n';
  return o.str();
}

}  // namespace seisclass
