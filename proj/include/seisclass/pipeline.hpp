#pragma once

// Stage functions behind the command-line driver. Each stage reads its inputs
// from files and writes its outputs to files, so any stage can be rerun alone.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "seisclass/ar_model.hpp"
#include "seisclass/butterworth.hpp"
#include "seisclass/config.hpp"
#include "seisclass/dtw.hpp"
#include "seisclass/error.hpp"
#include "seisclass/features.hpp"
#include "seisclass/forest.hpp"
#include "seisclass/metrics.hpp"
#include "seisclass/selection.hpp"
#include "seisclass/synth.hpp"
#include "seisclass/text.hpp"
#include "seisclass/timeseries.hpp"

namespace seisclass::pipeline {

namespace fs = std::filesystem;

namespace files {
inline constexpr const char* signal = "signal.csv";
inline constexpr const char* events = "events.txt";
inline constexpr const char* truth = "truth.csv";
inline constexpr const char* cascade = "filter.sos";
inline constexpr const char* bh = "xh.csv";
inline constexpr const char* ar_model = "ar_model.txt";
inline constexpr const char* pef = "xpef.csv";
inline constexpr const char* filter_summary = "filter_summary.txt";
inline constexpr const char* classifier = "classifier.txt";
inline constexpr const char* train_windows = "train_windows.csv";
inline constexpr const char* train_features = "train_features.csv";
inline constexpr const char* imputation = "imputation.csv";
inline constexpr const char* mask = "mask.csv";
inline constexpr const char* forest = "forest.txt";
inline constexpr const char* dtw_refs = "dtw_reference.csv";
inline constexpr const char* predictions = "predictions.csv";
inline constexpr const char* report_txt = "report.txt";
inline constexpr const char* report_csv = "report.csv";
inline constexpr const char* comparison_csv = "comparison.csv";
inline constexpr const char* comparison_txt = "comparison.txt";
}  // namespace files

enum class Classifier { rf, dtw };

struct Log {
  bool verbose = false;
  std::ostream* sink = &std::cerr;

  void info(const std::string& msg) const {
    if (sink) *sink << msg << '\n';
  }
  void debug(const std::string& msg) const {
    if (verbose && sink) *sink << msg << '\n';
  }
};

/// Runs `fn`, prefixing any library error with the stage name.
template <class Fn>
auto with_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(stage + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(stage + ": " + e.what());
  } catch (const NumericError& e) {
    throw NumericError(stage + ": " + e.what());
  } catch (const Error& e) {
    throw Error(e.code(), stage + ": " + e.what());
  }
}

inline std::string str(const fs::path& p) { return p.string(); }

inline void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + str(dir) + "': " + ec.message());
}

// ---------------------------------------------------------------------------
// synth

struct SynthOutputs {
  fs::path signal;
  fs::path events;
  fs::path truth;
  SynthResult result;
};

inline SynthOutputs run_synth(const PipelineConfig& cfg, const fs::path& out, const Log& log = {}) {
  return with_stage("synth", [&] {
    ensure_dir(out);
    SynthOutputs o{out / files::signal, out / files::events, out / files::truth, generate(cfg.synth_config())};
    const auto tag = cfg.provenance();
    save_timeseries(o.result.signal, str(o.signal), tag);
    save_events(o.result.events, str(o.events), tag);
    auto tf = text::open_output(str(o.truth));
    tf << "# " << tag << "\ntimestamp_s,class\n";
    for (std::size_t i = 0; i < o.result.classes.size(); ++i)
      tf << text::format_exact(o.result.signal.time_at(i)) << ',' << o.result.classes[i] << '\n';
    log.info("synth: " + std::to_string(o.result.signal.size()) + " samples, " +
             std::to_string(o.result.events.size()) + " events -> " + str(out));
    return o;
  });
}

// ---------------------------------------------------------------------------
// filter

struct FilterOutputs {
  fs::path bh;
  std::optional<fs::path> pef;
  std::optional<ArModel> model;
  double r2_remainder = std::numeric_limits<double>::quiet_NaN();
};

inline fs::path signal_path(const PipelineConfig& cfg, const fs::path& out) {
  return cfg.signal_path.empty() ? out / files::signal : fs::path(cfg.signal_path);
}

inline fs::path events_path(const PipelineConfig& cfg, const fs::path& out) {
  return cfg.events_path.empty() ? out / files::events : fs::path(cfg.events_path);
}

inline EventLog load_checked_events(const PipelineConfig& cfg, const fs::path& path) {
  auto events = load_events(str(path));
  check_event_separation(events, cfg.labels);
  return events;
}

/// R^2 of one-step AR predictions over samples outside [skip_begin, skip_end) with index >= p.
inline double remainder_r2(const ArModel& model, std::span<const double> x, std::size_t skip_begin,
                           std::size_t skip_end) {
  const auto pred = ar_predict_one_step(model, x);
  std::vector<double> a, p;
  for (std::size_t i = static_cast<std::size_t>(model.order); i < x.size(); ++i) {
    if (i >= skip_begin && i < skip_end) continue;
    a.push_back(x[i]);
    p.push_back(pred[i]);
  }
  return r2_score(a, p);
}

inline FilterOutputs run_filter(const PipelineConfig& cfg, const fs::path& out, bool skip_pef, const Log& log = {}) {
  return with_stage("filter", [&] {
    ensure_dir(out);
    const auto raw = load_timeseries(str(signal_path(cfg, out)), cfg.fs_hz);
    const auto events = load_checked_events(cfg, events_path(cfg, out));
    const auto cascade = design_butterworth_highpass(cfg.filter_order, cfg.filter_corner_hz, cfg.fs_hz);
    const auto xh = apply_filter(cascade, raw);
    const auto tag = cfg.provenance();
    FilterOutputs o;
    o.bh = out / files::bh;
    save_cascade(cascade, str(out / files::cascade));
    save_timeseries(xh, str(o.bh), tag);
    log.info("filter: high-pass order " + std::to_string(cfg.filter_order) + " at " +
             text::format_exact(cfg.filter_corner_hz) + " Hz");
    if (skip_pef) return o;

    const auto noise = select_noise_segment(xh, events, cfg.ar_train_fraction, cfg.labels);
    const auto begin = static_cast<std::size_t>(std::llround((noise.t0_s() - xh.t0_s()) * cfg.fs_hz));
    const auto model = fit_ar(noise, cfg.ar_max_order);
    o.r2_remainder = remainder_r2(model, xh.view(), begin, begin + noise.size());
    const auto xpef = pef(xh, model);
    o.pef = out / files::pef;
    o.model = model;
    save_ar_model(model, str(out / files::ar_model));
    save_timeseries(xpef, str(*o.pef), tag);
    {
      auto sf = text::open_output(str(out / files::filter_summary));
      sf << "# " << tag << '\n'
         << "ar_order = " << model.order << '\n'
         << "aic = " << text::format_exact(model.aic) << '\n'
         << "noise_segment_start_s = " << text::format_exact(noise.t0_s()) << '\n'
         << "noise_segment_samples = " << noise.size() << '\n'
         << "r2_remainder = " << text::format_exact(o.r2_remainder) << '\n';
    }
    log.info("filter: AR order p=" + std::to_string(model.order) + ", AIC=" + text::format_fixed(model.aic, 3) +
             ", R^2 on remainder=" + text::format_fixed(o.r2_remainder, 4));
    return o;
  });
}

// ---------------------------------------------------------------------------
// shared windowing

struct Split {
  TimeSeries series;
  EventLog all_events;
  TrainTestSplit parts;
};

inline fs::path input_series_path(const PipelineConfig& cfg, const fs::path& data_dir) {
  return data_dir / (cfg.train_input == "bh" ? files::bh : files::pef);
}

inline Split load_split(const PipelineConfig& cfg, const fs::path& series, const fs::path& events) {
  Split s{load_timeseries(str(series), cfg.fs_hz), load_checked_events(cfg, events), {}};
  s.parts = split_train_test(s.series, s.all_events, cfg.split_ratio, cfg.labels);
  return s;
}

inline std::vector<LabeledWindow> windows_of(const PipelineConfig& cfg, const TimeSeries& part, const EventLog& events,
                                             double stride_s, const Log& log) {
  auto sliced = slice_windows(part, cfg.window_length_s, stride_s);
  if (sliced.warning) log.info("warning: " + *sliced.warning);
  return label_windows(sliced.windows, events, cfg.labels);
}

inline FeatureCatalog catalog_for(const PipelineConfig& cfg) {
  auto catalog = default_catalog();
  if (cfg.catalog_version != catalog.version)
    throw ConfigError("unknown feature catalog '" + cfg.catalog_version + "' (available: " + catalog.version + ")");
  return catalog;
}

inline FeatureMatrix feature_matrix(const std::vector<LabeledWindow>& windows, const FeatureCatalog& catalog,
                                    double fs_hz) {
  FeatureMatrix m;
  m.catalog_version = catalog.version;
  m.names = catalog.names();
  for (const auto& w : windows) m.add_row(extract_features(w.samples, catalog, fs_hz, w.start_s), w.label);
  return m;
}

inline void save_imputation(const std::vector<std::string>& names, const std::vector<double>& medians,
                            const std::string& path, const std::string& comment) {
  auto out = text::open_output(path);
  out << "# " << comment << "\nfeature_name,median\n";
  for (std::size_t j = 0; j < names.size(); ++j) out << names[j] << ',' << text::format_exact(medians[j]) << '\n';
}

inline std::vector<double> load_imputation(const std::string& path, const std::vector<std::string>& names) {
  auto in = text::open_input(path);
  std::vector<double> medians;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = text::trim(line);
    if (row.empty() || row.front() == '#' || row.starts_with("feature_name")) continue;
    const auto fields = text::split(row, ',');
    const auto v = fields.size() == 2 ? text::parse_double(fields[1]) : std::nullopt;
    if (!v) throw DataError("imputation file parse error at line " + std::to_string(line_no));
    if (medians.size() >= names.size() || fields[0] != names[medians.size()])
      throw DataError("imputation file does not match the feature catalog at line " + std::to_string(line_no));
    medians.push_back(*v);
  }
  if (medians.size() != names.size()) throw DataError("imputation file lists too few features");
  return medians;
}

inline std::array<std::size_t, kNumClasses> class_counts(const std::vector<LabeledWindow>& w) {
  std::array<std::size_t, kNumClasses> c{};
  for (const auto& x : w) ++c[static_cast<std::size_t>(x.label - 1)];
  return c;
}

inline std::string describe_counts(const std::array<std::size_t, kNumClasses>& c) {
  std::string s;
  for (int k = 0; k < kNumClasses; ++k)
    s += (k ? ", " : "") + std::string("Class-") + std::to_string(k + 1) + "=" + std::to_string(c[static_cast<std::size_t>(k)]);
  return s;
}

// ---------------------------------------------------------------------------
// train

struct TrainOutputs {
  std::size_t n_windows = 0;
  std::array<std::size_t, kNumClasses> counts{};
  std::size_t n_selected = 0;
  double oob_error = std::numeric_limits<double>::quiet_NaN();
};

inline TrainOutputs run_train(const PipelineConfig& cfg, const fs::path& series, const fs::path& events,
                              const fs::path& out, Classifier classifier, const Log& log = {}) {
  return with_stage("train", [&] {
    ensure_dir(out);
    const auto split = load_split(cfg, series, events);
    const auto windows = windows_of(cfg, split.parts.train.series, split.all_events, cfg.window_stride_s, log);
    if (windows.empty()) throw DataError("no training windows");
    TrainOutputs o;
    o.n_windows = windows.size();
    o.counts = class_counts(windows);
    const auto tag = cfg.provenance();
    save_window_labels(windows, str(out / files::train_windows), tag);
    std::error_code ec;
    fs::remove(out / files::forest, ec);
    fs::remove(out / files::dtw_refs, ec);

    if (classifier == Classifier::dtw) {
      std::set<int> distinct;
      for (const auto& w : windows) distinct.insert(w.label);
      if (distinct.size() < 2) throw DataError("training labels contain a single class");
      save_dtw_references(make_dtw_references(windows, cfg.dtw), str(out / files::dtw_refs), tag);
      text::open_output(str(out / files::classifier)) << "dtw\n";
      log.info("train: " + std::to_string(o.n_windows) + " DTW reference windows (" + describe_counts(o.counts) + ")");
      return o;
    }

    const auto catalog = catalog_for(cfg);
    auto matrix = feature_matrix(windows, catalog, cfg.fs_hz);
    save_feature_matrix(matrix, str(out / files::train_features), tag);
    const auto medians = column_medians(matrix);
    save_imputation(matrix.names, medians, str(out / files::imputation), tag);
    impute(matrix, medians);
    const auto mask = select_features(matrix, cfg.fdr_q, cfg.feature_cap);
    save_feature_mask(mask, str(out / files::mask), tag);
    std::vector<Row> X;
    X.reserve(matrix.n_rows());
    for (const auto& r : matrix.rows) X.push_back(mask.apply(r));
    const auto forest = train_forest(X, matrix.labels, cfg.forest_params(), catalog.version);
    save_forest(forest, str(out / files::forest));
    text::open_output(str(out / files::classifier)) << "rf\n";
    o.n_selected = mask.count();
    o.oob_error = forest.oob_error;
    log.info("train: " + std::to_string(o.n_windows) + " windows (" + describe_counts(o.counts) + "), " +
             std::to_string(o.n_selected) + " of " + std::to_string(catalog.size()) + " features selected, " +
             std::to_string(forest.trees.size()) + " trees");
    log.debug("train: out-of-bag error " + text::format_fixed(o.oob_error, 4));
    return o;
  });
}

// ---------------------------------------------------------------------------
// classify

struct Prediction {
  double window_start_s = 0.0;
  int true_label = 1;
  int pred_label = 1;
  std::array<std::size_t, kNumClasses> votes{};
};

struct ClassifyOutputs {
  std::vector<Prediction> predictions;
  double mean_latency_ms = 0.0;  // forest predict only; 0 for DTW
};

inline Classifier read_classifier(const fs::path& dir) {
  const auto kind = std::string(text::trim(text::read_file(str(dir / files::classifier))));
  if (kind == "rf") return Classifier::rf;
  if (kind == "dtw") return Classifier::dtw;
  throw DataError("unknown classifier kind '" + kind + "' in " + str(dir / files::classifier));
}

inline std::vector<LabeledWindow> scored_windows(const PipelineConfig& cfg, const Split& split, const Log& log) {
  const bool train_side = cfg.classify_part == "train";
  const auto& part = train_side ? split.parts.train : split.parts.test;
  return windows_of(cfg, part.series, split.all_events, train_side ? cfg.window_stride_s : cfg.window_test_stride_s,
                    log);
}

inline void save_predictions(const std::vector<Prediction>& preds, const std::string& path, const std::string& tag) {
  auto out = text::open_output(path);
  out << "# " << tag << "\nwindow_start_s,true_label,pred_label,votes_1,votes_2,votes_3\n";
  for (const auto& p : preds) {
    out << text::format_exact(p.window_start_s) << ',' << p.true_label << ',' << p.pred_label;
    for (auto v : p.votes) out << ',' << v;
    out << '\n';
  }
}

inline std::vector<Prediction> load_predictions(const std::string& path) {
  auto in = text::open_input(path);
  std::vector<Prediction> preds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = text::trim(line);
    if (row.empty() || row.front() == '#' || row.starts_with("window_start_s")) continue;
    const auto f = text::split(row, ',');
    const auto fail = [&] { return DataError("predictions parse error at line " + std::to_string(line_no)); };
    if (f.size() != 6) throw fail();
    Prediction p;
    const auto t = text::parse_double(f[0]);
    const auto tl = text::parse_int<int>(f[1]);
    const auto pl = text::parse_int<int>(f[2]);
    if (!t || !tl || !pl || !is_valid_class(*tl) || !is_valid_class(*pl)) throw fail();
    p.window_start_s = *t;
    p.true_label = *tl;
    p.pred_label = *pl;
    for (std::size_t k = 0; k < 3; ++k) {
      const auto v = text::parse_int<std::size_t>(f[3 + k]);
      if (!v) throw fail();
      p.votes[k] = *v;
    }
    preds.push_back(p);
  }
  return preds;
}

inline ClassifyOutputs run_classify(const PipelineConfig& cfg, const fs::path& series, const fs::path& events,
                                    const fs::path& model_dir, const Log& log = {}) {
  return with_stage("classify", [&] {
    const auto split = load_split(cfg, series, events);
    const auto windows = scored_windows(cfg, split, log);
    if (windows.empty()) throw DataError("empty test window set: no full window fits in the scored part");
    ClassifyOutputs o;
    o.predictions.reserve(windows.size());

    if (read_classifier(model_dir) == Classifier::dtw) {
      const auto refs = load_dtw_references(str(model_dir / files::dtw_refs));
      for (const auto& w : windows) {
        const auto vote = knn_dtw_vote(refs, dtw_representation(w.samples, cfg.dtw), cfg.dtw);
        Prediction p{w.start_s, w.label, vote.label, {}};
        for (std::size_t k = 0; k < p.votes.size() && k < vote.votes.size(); ++k) p.votes[k] = vote.votes[k];
        o.predictions.push_back(p);
      }
      log.info("classify: " + std::to_string(windows.size()) + " windows with DTW " +
               std::to_string(cfg.dtw.k_neighbors) + "-NN");
    } else {
      const auto mask = load_feature_mask(str(model_dir / files::mask));
      const auto forest = load_forest(str(model_dir / files::forest));
      if (mask.catalog_version != forest.catalog_version)
        throw DataError("feature catalog mismatch: mask uses '" + mask.catalog_version + "', forest uses '" +
                        forest.catalog_version + "'");
      const auto catalog = catalog_for(cfg);
      if (mask.catalog_version != catalog.version || mask.names != catalog.names())
        throw DataError("feature catalog mismatch: mask uses '" + mask.catalog_version + "', configured catalog is '" +
                        catalog.version + "'");
      if (mask.count() != forest.n_features)
        throw DataError("mask selects " + std::to_string(mask.count()) + " features but the forest expects " +
                        std::to_string(forest.n_features));
      const auto medians = load_imputation(str(model_dir / files::imputation), catalog.names());
      double total_ms = 0.0;
      for (const auto& w : windows) {
        auto fv = extract_features(w.samples, catalog, cfg.fs_hz, w.start_s);
        impute(fv.values, medians);
        const auto x = mask.apply(fv.values);
        const auto t0 = std::chrono::steady_clock::now();
        const auto pred = forest.predict(x);
        total_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        Prediction p{w.start_s, w.label, pred.label, {}};
        for (std::size_t k = 0; k < p.votes.size() && k < pred.votes.size(); ++k) p.votes[k] = pred.votes[k];
        o.predictions.push_back(p);
      }
      o.mean_latency_ms = total_ms / static_cast<double>(windows.size());
      log.info("classify: " + std::to_string(windows.size()) + " windows, mean forest latency " +
               text::format_fixed(o.mean_latency_ms * 1000.0, 1) + " us/window");
    }
    save_predictions(o.predictions, str(model_dir / files::predictions), cfg.provenance());
    return o;
  });
}

// ---------------------------------------------------------------------------
// eval

struct EvalOutputs {
  ConfusionMatrix cm;
  std::vector<ClassMetrics> per_class;
  ClassMetrics macro;
  ClassMetrics weighted;
  Report report;
};

inline EvalOutputs evaluate_predictions(const std::vector<int>& truth, const std::vector<int>& pred,
                                        const std::string& title) {
  EvalOutputs o;
  o.cm = confusion_matrix(truth, pred);
  o.per_class = per_class_metrics(o.cm);
  o.macro = average_metrics(o.per_class, AverageMode::macro);
  o.weighted = average_metrics(o.per_class, AverageMode::support_weighted);
  o.report = render_report(o.cm, o.per_class, o.macro, o.weighted, title);
  return o;
}

inline EvalOutputs run_eval(const PipelineConfig& cfg, const fs::path& series, const fs::path& events,
                            const fs::path& model_dir, const std::string& title = {}, const Log& log = {}) {
  return with_stage("eval", [&] {
    const auto split = load_split(cfg, series, events);
    const auto expected = scored_windows(cfg, split, log);
    const auto preds = load_predictions(str(model_dir / files::predictions));
    const auto same_time = [](double a, double b) { return std::abs(a - b) <= 1e-6 * std::max(1.0, std::abs(a)); };
    std::vector<int> truth, pred;
    std::size_t j = 0;
    for (const auto& w : expected) {
      while (j < preds.size() && preds[j].window_start_s < w.start_s && !same_time(preds[j].window_start_s, w.start_s)) ++j;
      if (j == preds.size() || !same_time(preds[j].window_start_s, w.start_s))
        throw DataError("predictions missing window at " + text::format_exact(w.start_s) + " s");
      if (preds[j].true_label != w.label)
        throw DataError("label mismatch at window " + text::format_exact(w.start_s) + " s: predictions say Class-" +
                        std::to_string(preds[j].true_label) + ", ground truth is Class-" + std::to_string(w.label));
      truth.push_back(w.label);
      pred.push_back(preds[j].pred_label);
      ++j;
    }
    auto o = evaluate_predictions(truth, pred, title);
    text::open_output(str(model_dir / files::report_txt)) << "# " << cfg.provenance() << '\n' << o.report.text;
    text::open_output(str(model_dir / files::report_csv)) << "# " << cfg.provenance() << '\n' << o.report.csv;
    log.info("eval: macro F1 " + text::format_fixed(o.macro.f1, 4) + ", weighted F1 " +
             text::format_fixed(o.weighted.f1, 4) + " over " + std::to_string(truth.size()) + " windows");
    return o;
  });
}

// ---------------------------------------------------------------------------
// full pipeline

struct ArmResult {
  std::string name;   // directory name
  std::string label;  // table row label
  std::vector<double> window_starts;
  EvalOutputs eval;
  double mean_latency_ms = 0.0;
};

struct PipelineOutputs {
  std::optional<ArModel> model;
  double r2_remainder = std::numeric_limits<double>::quiet_NaN();
  std::vector<ArmResult> arms;
};

inline std::string render_comparison_csv(const std::vector<ArmResult>& arms, const std::string& tag) {
  std::ostringstream o;
  o << "# " << tag << "\nmethod,precision_macro,recall_macro,f1_macro,precision_weighted,recall_weighted,f1_weighted\n";
  for (const auto& a : arms)
    o << a.label << ',' << text::format_fixed(a.eval.macro.precision, 6) << ','
      << text::format_fixed(a.eval.macro.recall, 6) << ',' << text::format_fixed(a.eval.macro.f1, 6) << ','
      << text::format_fixed(a.eval.weighted.precision, 6) << ',' << text::format_fixed(a.eval.weighted.recall, 6)
      << ',' << text::format_fixed(a.eval.weighted.f1, 6) << '\n';
  return o.str();
}

inline std::string render_comparison_text(const std::vector<ArmResult>& arms) {
  std::ostringstream o;
  o << "Method            Precision  Recall  F1-score   (macro; weighted in parentheses)\n";
  for (const auto& a : arms) {
    std::string name = a.label;
    name.resize(18, ' ');
    o << name << text::format_fixed(a.eval.macro.precision, 2) << " (" << text::format_fixed(a.eval.weighted.precision, 2)
      << ")  " << text::format_fixed(a.eval.macro.recall, 2) << " (" << text::format_fixed(a.eval.weighted.recall, 2)
      << ")  " << text::format_fixed(a.eval.macro.f1, 2) << " (" << text::format_fixed(a.eval.weighted.f1, 2) << ")\n";
  }
  return o.str();
}

/// Decimated traces around each event plus class boundaries, for external plotting.
inline void write_plot_data(const PipelineConfig& cfg, const fs::path& out, const fs::path& data_dir,
                            const std::vector<Prediction>* predictions) {
  const auto dir = out / "plots";
  ensure_dir(dir);
  const auto raw = load_timeseries(str(signal_path(cfg, data_dir)), cfg.fs_hz);
  const auto xh = load_timeseries(str(data_dir / files::bh), cfg.fs_hz);
  const bool have_pef = fs::exists(data_dir / files::pef);
  const auto xp = have_pef ? load_timeseries(str(data_dir / files::pef), cfg.fs_hz) : xh;
  const auto events = load_events(str(events_path(cfg, data_dir)));
  const auto tag = cfg.provenance();
  const std::size_t step = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(cfg.fs_hz / 20.0)));
  const double before = cfg.labels.class2_start_s + cfg.window_length_s;
  const double after = cfg.labels.class3_len_s + cfg.window_length_s;

  auto markers = text::open_output(str(dir / "boundaries.csv"));
  markers << "# " << tag << "\nevent,class2_start_s,eruption_s,class3_end_s\n";
  for (std::size_t e = 0; e < events.size(); ++e) {
    const double te = events.times()[e];
    markers << e << ',' << text::format_exact(te - cfg.labels.class2_start_s) << ',' << text::format_exact(te) << ','
            << text::format_exact(te + cfg.labels.class3_len_s) << '\n';
    auto f = text::open_output(str(dir / ("event_" + std::to_string(e) + ".csv")));
    f << "# " << tag << "\ntimestamp_s,raw,bh,pef,true_class,pred_class\n";
    const auto first = raw.index_at_or_after(te - before);
    const auto last = raw.index_at_or_after(te + after);
    for (std::size_t i = first; i < last && i < raw.size(); i += step) {
      const double t = raw.time_at(i);
      f << text::format_exact(t) << ',' << text::format_exact(raw.samples()[i]) << ','
        << text::format_exact(xh.samples()[i]) << ',' << text::format_exact(xp.samples()[i]) << ','
        << class_of_sample(t, events, cfg.labels) << ',';
      if (predictions)
        for (const auto& p : *predictions)
          if (t >= p.window_start_s && t < p.window_start_s + cfg.window_length_s) {
            f << p.pred_label;
            break;
          }
      f << '\n';
    }
  }
}

inline PipelineOutputs run_pipeline(PipelineConfig cfg, const fs::path& out, bool compare, const Log& log = {}) {
  ensure_dir(out);
  const auto tag = cfg.provenance();
  text::open_output(str(out / "config_used.cfg")) << "# " << tag << '\n' << render_config(cfg);
  if (cfg.signal_path.empty()) {
    if (!cfg.events_path.empty()) throw ConfigError("paths.events is set but paths.signal is empty");
    run_synth(cfg, out, log);
  } else if (cfg.events_path.empty()) {
    throw ConfigError("paths.signal is set but paths.events is empty");
  }
  PipelineOutputs result;
  const auto filtered = run_filter(cfg, out, false, log);
  result.model = filtered.model;
  result.r2_remainder = filtered.r2_remainder;

  struct Arm {
    const char* name;
    const char* label;
    const char* input;
    Classifier classifier;
  };
  std::vector<Arm> arms{{"rf_pef", "RF with PEF", files::pef, Classifier::rf}};
  if (compare) {
    arms.insert(arms.begin(), {{"dtw", "DTW 1-NN", files::pef, Classifier::dtw},
                               {"rf_nopef", "RF without PEF", files::bh, Classifier::rf}});
  }
  const auto events = events_path(cfg, out);
  std::vector<Prediction> rf_pef_predictions;
  for (const auto& arm : arms) {
    const auto dir = out / arm.name;
    const auto series = out / arm.input;
    log.info("arm " + std::string(arm.name) + ":");
    run_train(cfg, series, events, dir, arm.classifier, log);
    const auto cls = run_classify(cfg, series, events, dir, log);
    ArmResult r;
    r.name = arm.name;
    r.label = arm.label;
    for (const auto& p : cls.predictions) r.window_starts.push_back(p.window_start_s);
    r.mean_latency_ms = cls.mean_latency_ms;
    r.eval = run_eval(cfg, series, events, dir, arm.label, log);
    if (std::string(arm.name) == "rf_pef") rf_pef_predictions = cls.predictions;
    result.arms.push_back(std::move(r));
  }
  for (const auto& a : result.arms)
    if (a.window_starts != result.arms.front().window_starts)
      throw DataError("pipeline: arms '" + a.name + "' and '" + result.arms.front().name +
                      "' scored different window sets");
  with_stage("plots", [&] { write_plot_data(cfg, out, out, &rf_pef_predictions); });
  if (compare) {
    text::open_output(str(out / files::comparison_csv)) << render_comparison_csv(result.arms, tag);
    text::open_output(str(out / files::comparison_txt)) << "# " << tag << '\n' << render_comparison_text(result.arms);
    log.info("\n" + render_comparison_text(result.arms));
  }
  return result;
}

}  // namespace seisclass::pipeline
