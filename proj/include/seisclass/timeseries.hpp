#pragma once

// Signal representation, CSV/event ingestion, windowing and labeling.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seisclass/error.hpp"
#include "seisclass/text.hpp"

namespace seisclass {

/// Geyser state classes. Class 1 is far from eruption, 2 is the precursor
/// interval, 3 is the eruption itself.
inline constexpr int kNumClasses = 3;

inline bool is_valid_class(int label) { return label >= 1 && label <= kNumClasses; }

/// Uniformly sampled scalar signal. Sample i sits at t0_s + i / fs_hz.
class TimeSeries {
 public:
  TimeSeries() = default;

  TimeSeries(std::vector<double> samples, double fs_hz, double t0_s = 0.0)
      : samples_(std::move(samples)), fs_hz_(fs_hz), t0_s_(t0_s) {
    if (!(fs_hz_ > 0.0) || !std::isfinite(fs_hz_))
      throw ConfigError("sampling rate must be positive, got " + text::format_exact(fs_hz_));
    if (!std::isfinite(t0_s_)) throw DataError("start time must be finite");
  }

  const std::vector<double>& samples() const noexcept { return samples_; }
  std::span<const double> view() const noexcept { return samples_; }
  double fs_hz() const noexcept { return fs_hz_; }
  double t0_s() const noexcept { return t0_s_; }
  std::size_t size() const noexcept { return samples_.size(); }
  bool empty() const noexcept { return samples_.empty(); }
  double operator[](std::size_t i) const { return samples_[i]; }

  double time_at(std::size_t i) const { return t0_s_ + static_cast<double>(i) / fs_hz_; }
  double duration_s() const { return static_cast<double>(samples_.size()) / fs_hz_; }
  double end_s() const { return time_at(samples_.size()); }

  /// Index of the first sample at or after time t (clamped to [0, size]).
  std::size_t index_at_or_after(double t_s) const {
    const double pos = std::ceil((t_s - t0_s_) * fs_hz_ - 1e-9);
    if (pos <= 0.0) return 0;
    return std::min(samples_.size(), static_cast<std::size_t>(pos));
  }

  TimeSeries slice(std::size_t begin, std::size_t count) const {
    if (begin > size() || count > size() - begin) throw DataError("slice out of range");
    return TimeSeries(std::vector<double>(samples_.begin() + static_cast<std::ptrdiff_t>(begin),
                                          samples_.begin() + static_cast<std::ptrdiff_t>(begin + count)),
                      fs_hz_, time_at(begin));
  }

  /// Same timing, different amplitudes.
  TimeSeries with_samples(std::vector<double> samples) const {
    return TimeSeries(std::move(samples), fs_hz_, t0_s_);
  }

  friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

 private:
  std::vector<double> samples_;
  double fs_hz_ = 1.0;
  double t0_s_ = 0.0;
};

/// Eruption onset times, strictly increasing.
class EventLog {
 public:
  EventLog() = default;

  explicit EventLog(std::vector<double> event_times_s) : times_(std::move(event_times_s)) {
    for (std::size_t i = 0; i < times_.size(); ++i) {
      if (!std::isfinite(times_[i])) throw DataError("event time must be finite");
      if (i > 0 && !(times_[i] > times_[i - 1]))
        throw DataError("event times must be strictly increasing (event " + std::to_string(i + 1) + ")");
    }
  }

  const std::vector<double>& times() const noexcept { return times_; }
  std::size_t size() const noexcept { return times_.size(); }
  bool empty() const noexcept { return times_.empty(); }

  /// Events with onset in [begin_s, end_s).
  EventLog within(double begin_s, double end_s) const {
    std::vector<double> out;
    for (double t : times_)
      if (t >= begin_s && t < end_s) out.push_back(t);
    return EventLog(std::move(out));
  }

  friend bool operator==(const EventLog&, const EventLog&) = default;

 private:
  std::vector<double> times_;
};

enum class WindowLabelRule { window_end_time, majority_sample };

/// Offsets (seconds) defining the class intervals around each event onset e:
/// Class 2 is [e - class2_start_s, e - class2_end_s), Class 3 is [e, e + class3_len_s).
struct LabelPolicy {
  double class2_start_s = 180.0;
  double class2_end_s = 0.0;
  double class3_len_s = 120.0;
  WindowLabelRule window_label_rule = WindowLabelRule::window_end_time;

  void validate() const {
    if (!(class2_start_s > class2_end_s) || !(class2_end_s >= 0.0))
      throw ConfigError("label policy requires class2_start_s > class2_end_s >= 0");
    if (!(class3_len_s > 0.0)) throw ConfigError("label policy requires class3_len_s > 0");
  }

  /// Total labeled span around an event.
  double envelope_s() const { return class2_start_s + class3_len_s; }
};

inline int class_of_sample(double t_s, const EventLog& events, const LabelPolicy& policy) {
  // Class 3 wins wherever the intervals of neighbouring events overlap.
  for (double e : events.times())
    if (t_s >= e && t_s < e + policy.class3_len_s) return 3;
  for (double e : events.times())
    if (t_s >= e - policy.class2_start_s && t_s < e - policy.class2_end_s) return 2;
  return 1;
}

/// Consecutive events must be farther apart than the labeled envelope.
inline void check_event_separation(const EventLog& events, const LabelPolicy& policy) {
  const auto& t = events.times();
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] - t[i - 1] > policy.envelope_s()))
      throw DataError("events at " + text::format_exact(t[i - 1]) + " s and " + text::format_exact(t[i]) +
                      " s are closer than the labeled envelope of " + text::format_exact(policy.envelope_s()) + " s");
}

struct Window {
  std::size_t start_index = 0;
  double start_s = 0.0;
  double fs_hz = 1.0;
  std::vector<double> samples;

  double end_time_s() const { return start_s + static_cast<double>(samples.size() - 1) / fs_hz; }
};

struct LabeledWindow {
  std::vector<double> samples;
  double start_s = 0.0;
  int label = 1;
};

struct WindowSlicing {
  std::vector<Window> windows;
  std::optional<std::string> warning;
};

/// Converts a duration to a whole number of samples or throws.
inline std::size_t samples_for(double seconds, double fs_hz, const char* what) {
  const double exact = seconds * fs_hz;
  const double rounded = std::round(exact);
  if (!(rounded >= 1.0) || std::abs(exact - rounded) > 1e-6 * std::max(1.0, rounded))
    throw ConfigError(std::string(what) + " of " + text::format_exact(seconds) +
                      " s is not a positive whole number of samples at " + text::format_exact(fs_hz) + " Hz");
  return static_cast<std::size_t>(rounded);
}

/// Tiles the series with fixed-length windows; the trailing partial window is dropped.
inline WindowSlicing slice_windows(const TimeSeries& ts, double window_len_s, double stride_s) {
  if (!(stride_s > 0.0)) throw ConfigError("window stride must be positive");
  const std::size_t len = samples_for(window_len_s, ts.fs_hz(), "window length");
  const std::size_t stride = samples_for(stride_s, ts.fs_hz(), "window stride");
  WindowSlicing out;
  if (len > ts.size()) {
    out.warning = "window of " + std::to_string(len) + " samples is longer than the series (" +
                  std::to_string(ts.size()) + " samples); no windows produced";
    return out;
  }
  const std::size_t count = (ts.size() - len) / stride + 1;
  out.windows.reserve(count);
  const auto& x = ts.samples();
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t begin = i * stride;
    Window w;
    w.start_index = begin;
    w.start_s = ts.time_at(begin);
    w.fs_hz = ts.fs_hz();
    w.samples.assign(x.begin() + static_cast<std::ptrdiff_t>(begin),
                     x.begin() + static_cast<std::ptrdiff_t>(begin + len));
    out.windows.push_back(std::move(w));
  }
  return out;
}

inline int label_window(const Window& w, const EventLog& events, const LabelPolicy& policy) {
  if (w.samples.empty()) throw DataError("cannot label an empty window");
  if (policy.window_label_rule == WindowLabelRule::window_end_time)
    return class_of_sample(w.end_time_s(), events, policy);
  std::array<std::size_t, kNumClasses> counts{};
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    ++counts[class_of_sample(w.start_s + static_cast<double>(i) / w.fs_hz, events, policy) - 1];
  // ties resolve to the lowest class
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin()) + 1;
}

inline std::vector<LabeledWindow> label_windows(const std::vector<Window>& windows, const EventLog& events,
                                                const LabelPolicy& policy) {
  policy.validate();
  std::vector<LabeledWindow> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back({w.samples, w.start_s, label_window(w, events, policy)});
  return out;
}

/// Earliest contiguous all-Class-1 run of ceil(fraction * n) samples.
inline TimeSeries select_noise_segment(const TimeSeries& ts, const EventLog& events, double fraction,
                                       const LabelPolicy& policy) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("noise fraction must lie in (0, 1)");
  policy.validate();
  const std::size_t need = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(ts.size())));
  std::size_t run_start = 0, run_len = 0;
  std::size_t best_start = 0, best_len = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (class_of_sample(ts.time_at(i), events, policy) == 1) {
      if (run_len == 0) run_start = i;
      if (++run_len >= need) return ts.slice(run_start, need);
      if (run_len > best_len) {
        best_len = run_len;
        best_start = run_start;
      }
    } else {
      run_len = 0;
    }
  }
  throw DataError("no contiguous Class-1 run of " + std::to_string(need) +
                  " samples; longest available run is " + std::to_string(best_len) + " samples starting at " +
                  text::format_exact(best_len ? ts.time_at(best_start) : ts.t0_s()) + " s");
}

// ---------------------------------------------------------------------------
// File formats

/// Reads `timestamp_s,amplitude` rows (or a single amplitude column). Lines
/// starting with '#' and a leading header row are skipped. Timestamps must lie
/// on the fs_hz grid anchored at the first row, within 1e-6 s.
inline TimeSeries load_timeseries(const std::string& path, double fs_hz) {
  if (!(fs_hz > 0.0)) throw ConfigError("sampling rate must be positive");
  auto in = text::open_input(path);
  std::vector<double> samples;
  std::optional<double> t0;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto row = text::trim(line);
    if (row.empty() || row.front() == '#') continue;
    const auto fields = text::split(row, ',');
    if (!header_seen && samples.empty() && !text::parse_double(fields[0])) {
      header_seen = true;
      continue;
    }
    const auto where = " at line " + std::to_string(line_no);
    if (fields.size() > 2) throw DataError("parse error" + where + ": expected at most 2 columns");
    const auto amp = text::parse_double(fields.back());
    if (!amp) throw DataError("parse error" + where);
    if (!std::isfinite(*amp)) throw DataError("non-finite amplitude" + where);
    if (fields.size() == 2) {
      const auto t = text::parse_double(fields[0]);
      if (!t || !std::isfinite(*t)) throw DataError("parse error" + where);
      if (!t0) t0 = *t;
      const double expected = *t0 + static_cast<double>(samples.size()) / fs_hz;
      if (std::abs(*t - expected) > 1e-6) throw DataError("non-uniform spacing" + where);
    }
    samples.push_back(*amp);
  }
  if (samples.empty()) throw DataError("no samples in '" + path + "'");
  return TimeSeries(std::move(samples), fs_hz, t0.value_or(0.0));
}

inline void save_timeseries(const TimeSeries& ts, const std::string& path, const std::string& comment = {}) {
  auto out = text::open_output(path);
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "timestamp_s,amplitude\n";
  for (std::size_t i = 0; i < ts.size(); ++i)
    out << text::format_exact(ts.time_at(i)) << ',' << text::format_exact(ts[i]) << '\n';
  if (!out) throw DataError("write failed for '" + path + "'");
}

inline EventLog load_events(const std::string& path) {
  auto in = text::open_input(path);
  std::vector<double> times;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto row = text::trim(line);
    if (const auto hash = row.find('#'); hash != std::string_view::npos) row = text::trim(row.substr(0, hash));
    if (row.empty()) continue;
    const auto t = text::parse_double(row);
    if (!t || !std::isfinite(*t)) throw DataError("parse error at line " + std::to_string(line_no) + " of '" + path + "'");
    times.push_back(*t);
  }
  return EventLog(std::move(times));
}

inline void save_events(const EventLog& events, const std::string& path, const std::string& comment = {}) {
  auto out = text::open_output(path);
  if (!comment.empty()) out << "# " << comment << '\n';
  for (double t : events.times()) out << text::format_exact(t) << '\n';
}

inline void save_window_labels(const std::vector<LabeledWindow>& windows, const std::string& path,
                               const std::string& comment = {}) {
  auto out = text::open_output(path);
  if (!comment.empty()) out << "# " << comment << '\n';
  out << "window_start_s,label\n";
  for (const auto& w : windows) out << text::format_exact(w.start_s) << ',' << w.label << '\n';
}

}  // namespace seisclass
