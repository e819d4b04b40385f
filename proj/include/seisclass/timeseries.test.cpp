#include "seisclass/timeseries.hpp"

#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

namespace seisclass {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("seisclass_ts_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                                  "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name())) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name, const std::string& body = {}) const {
    const auto p = (path_ / name).string();
    if (!body.empty()) std::ofstream(p) << body;
    return p;
  }

 private:
  fs::path path_;
};

std::string error_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

TEST(TimeSeries, ConstructionAndTiming) {
  const TimeSeries ts({1, 2, 3, 4}, 200.0, 10.0);
  EXPECT_EQ(ts.size(), 4u);
  EXPECT_DOUBLE_EQ(ts.time_at(2), 10.01);
  EXPECT_DOUBLE_EQ(ts.duration_s(), 0.02);
  EXPECT_EQ(ts.index_at_or_after(10.004), 1u);
  EXPECT_EQ(ts.index_at_or_after(10.005), 1u);
  EXPECT_EQ(ts.index_at_or_after(0.0), 0u);
  EXPECT_EQ(ts.index_at_or_after(99.0), 4u);
  EXPECT_THROW(TimeSeries({1.0}, 0.0), ConfigError);
  const auto s = ts.slice(1, 2);
  EXPECT_EQ(s.samples(), (std::vector<double>{2, 3}));
  EXPECT_DOUBLE_EQ(s.t0_s(), 10.005);
  EXPECT_THROW(ts.slice(3, 2), DataError);
}

TEST(EventLog, MustIncreaseStrictly) {
  EXPECT_NO_THROW(EventLog({1.0, 2.0}));
  EXPECT_THROW(EventLog({2.0, 2.0}), DataError);
  EXPECT_THROW(EventLog({3.0, 1.0}), DataError);
  const EventLog log({1.0, 5.0, 9.0});
  EXPECT_EQ(log.within(5.0, 9.0).times(), (std::vector<double>{5.0}));
}

TEST(Labels, ClassIntervalsAroundAnEvent) {
  const EventLog events({10000.0});
  const LabelPolicy policy;
  EXPECT_EQ(class_of_sample(9400.0, events, policy), 1);   // 10 min before
  EXPECT_EQ(class_of_sample(9760.0, events, policy), 1);   // 4 min before: still beyond 3 min
  EXPECT_EQ(class_of_sample(9819.999, events, policy), 1);
  EXPECT_EQ(class_of_sample(9820.0, events, policy), 2);   // exactly 3 min before
  EXPECT_EQ(class_of_sample(9880.0, events, policy), 2);   // 2 min before
  EXPECT_EQ(class_of_sample(9999.999, events, policy), 2);
  EXPECT_EQ(class_of_sample(10000.0, events, policy), 3);
  EXPECT_EQ(class_of_sample(10030.0, events, policy), 3);
  EXPECT_EQ(class_of_sample(10119.999, events, policy), 3);
  EXPECT_EQ(class_of_sample(10120.0, events, policy), 1);
}

TEST(Labels, LiteralGapPolicyLeavesLastMinuteAsClassOne) {
  LabelPolicy literal;
  literal.class2_end_s = 60.0;
  const EventLog events({10000.0});
  EXPECT_EQ(class_of_sample(9880.0, events, literal), 2);
  EXPECT_EQ(class_of_sample(9950.0, events, literal), 1);
}

TEST(Labels, ClassThreeWinsOverlaps) {
  LabelPolicy p;
  const EventLog close({1000.0, 1200.0});  // second event's precursor overlaps the first eruption
  EXPECT_EQ(class_of_sample(1050.0, close, p), 3);
  EXPECT_EQ(class_of_sample(1150.0, close, p), 2);
  EXPECT_THROW(check_event_separation(close, p), DataError);
  EXPECT_NO_THROW(check_event_separation(EventLog({1000.0, 1301.0}), p));
}

TEST(Labels, PolicyValidation) {
  LabelPolicy p;
  p.class2_end_s = 200.0;
  EXPECT_THROW(p.validate(), ConfigError);
  p = {};
  p.class3_len_s = 0.0;
  EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Windows, TilingCounts) {
  const TimeSeries ts(std::vector<double>(300 * 20, 0.0), 20.0);
  EXPECT_EQ(slice_windows(ts, 60.0, 60.0).windows.size(), 5u);
  EXPECT_EQ(slice_windows(ts, 60.0, 10.0).windows.size(), 25u);
  const auto too_long = slice_windows(ts, 400.0, 60.0);
  EXPECT_TRUE(too_long.windows.empty());
  EXPECT_TRUE(too_long.warning.has_value());
  EXPECT_THROW(slice_windows(ts, 60.01, 60.0), ConfigError);
}

TEST(Windows, OneMinuteAt200HzIs12000Samples) {
  const TimeSeries ts(std::vector<double>(12000, 1.0), 200.0);
  const auto w = slice_windows(ts, 60.0, 60.0).windows;
  ASSERT_EQ(w.size(), 1u);
  EXPECT_EQ(w[0].samples.size(), 12000u);
}

TEST(Windows, DisjointTilingConcatenatesToPrefix) {
  std::vector<double> x(1037);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i) * 0.5;
  const TimeSeries ts(x, 10.0, 3.0);
  std::vector<double> joined;
  for (const auto& w : slice_windows(ts, 10.0, 10.0).windows) {
    EXPECT_DOUBLE_EQ(w.start_s, ts.time_at(w.start_index));
    joined.insert(joined.end(), w.samples.begin(), w.samples.end());
  }
  ASSERT_EQ(joined.size(), 1000u);
  EXPECT_TRUE(std::equal(joined.begin(), joined.end(), x.begin()));
}

TEST(Windows, EndTimeAndMajorityRules) {
  const double fs = 10.0;
  const EventLog events({1000.0});
  LabelPolicy end_rule;
  // window ending 120 s before the event
  Window w{0, 880.0 - 59.9, fs, std::vector<double>(600, 0.0)};
  EXPECT_DOUBLE_EQ(w.end_time_s(), 880.0);
  EXPECT_EQ(label_window(w, events, end_rule), 2);
  // window ending 30 s after onset
  w.start_s = 1030.0 - 59.9;
  EXPECT_EQ(label_window(w, events, end_rule), 3);

  // 70% of samples before the Class-2 boundary at 820 s
  LabelPolicy majority;
  majority.window_label_rule = WindowLabelRule::majority_sample;
  Window straddle{0, 820.0 - 42.0, fs, std::vector<double>(600, 0.0)};
  EXPECT_EQ(label_window(straddle, events, end_rule), 2);
  EXPECT_EQ(label_window(straddle, events, majority), 1);
  // exact tie goes to the lower class
  Window tie{0, 820.0 - 30.0, fs, std::vector<double>(600, 0.0)};
  EXPECT_EQ(label_window(tie, events, majority), 1);
}

TEST(NoiseSegment, EarliestQualifyingRun) {
  const double fs = 1.0;
  const TimeSeries day(std::vector<double>(86400, 0.0), fs);
  const auto seg = select_noise_segment(day, EventLog({72000.0}), 0.05, LabelPolicy{});
  EXPECT_DOUBLE_EQ(seg.t0_s(), 0.0);
  EXPECT_EQ(seg.size(), 4320u);  // 1.2 h

  const auto late = select_noise_segment(day, EventLog({60.0}), 0.05, LabelPolicy{});
  EXPECT_DOUBLE_EQ(late.t0_s(), 180.0);
  const EventLog e({60.0});
  for (std::size_t i = 0; i < late.size(); ++i) ASSERT_EQ(class_of_sample(late.time_at(i), e, LabelPolicy{}), 1);
}

TEST(NoiseSegment, NoRunLongEnough) {
  const TimeSeries ts(std::vector<double>(1000, 0.0), 1.0);
  std::vector<double> ev;
  for (double t = 100.0; t < 1000.0; t += 301.0) ev.push_back(t);
  const auto msg = error_of([&] { select_noise_segment(ts, EventLog(ev), 0.5, LabelPolicy{}); });
  EXPECT_NE(msg.find("longest available run"), std::string::npos) << msg;
}

TEST(Files, ParseThreeRows) {
  TempDir dir;
  const auto p = dir.file("a.csv", "timestamp_s,amplitude\n0.0,1.0\n0.005,2.0\n0.010,3.0\n");
  EXPECT_EQ(load_timeseries(p, 200.0), TimeSeries({1, 2, 3}, 200.0, 0.0));
}

TEST(Files, ErrorsNameTheProblem) {
  TempDir dir;
  EXPECT_NE(error_of([&] { load_timeseries(dir.file("e.csv", "\n"), 200.0); }).find("no samples"), std::string::npos);
  EXPECT_NE(error_of([&] { load_timeseries(dir.file("g.csv", "0.0,1\n0.005,2\n0.020,3\n"), 200.0); })
                .find("non-uniform spacing at line 3"),
            std::string::npos);
  EXPECT_NE(error_of([&] { load_timeseries(dir.file("p.csv", "0.0,1\n0.005,x\n"), 200.0); }).find("line 2"),
            std::string::npos);
  EXPECT_NE(error_of([&] { load_timeseries(dir.file("n.csv", "0.0,1\n0.005,nan\n"), 200.0); }).find("non-finite"),
            std::string::npos);
}

TEST(Files, RoundTripIsBitExact) {
  TempDir dir;
  std::vector<double> x;
  for (int i = 0; i < 500; ++i) x.push_back(std::sin(i * 0.37) * 1e3 / (i + 1.0));
  const TimeSeries ts(x, 200.0, 1234.5);
  const auto p = dir.file("rt.csv");
  save_timeseries(ts, p, "comment line");
  const auto back = load_timeseries(p, 200.0);
  EXPECT_EQ(back, ts);

  const EventLog ev({1.5, 1e6 + 0.1});
  const auto q = dir.file("ev.txt");
  save_events(ev, q, "c");
  EXPECT_EQ(load_events(q), ev);
}

TEST(Files, SingleColumnAndComments) {
  TempDir dir;
  const auto ts = load_timeseries(dir.file("s.csv", "# hello\namplitude\n4\n5\n"), 100.0);
  EXPECT_EQ(ts.samples(), (std::vector<double>{4, 5}));
  const auto ev = load_events(dir.file("e.txt", "# events\n10 # first\n\n20\n"));
  EXPECT_EQ(ev.times(), (std::vector<double>{10, 20}));
}

}  // namespace
}  // namespace seisclass
