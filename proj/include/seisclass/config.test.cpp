#include "seisclass/config.hpp"

#include <gtest/gtest.h>

using namespace seisclass;

TEST(Config, DefaultsAreValidAndMatchDocumentedValues) {
  const PipelineConfig c;
  EXPECT_NO_THROW(validate_config(c));
  EXPECT_EQ(c.filter_order, 4);
  EXPECT_EQ(c.filter_corner_hz, 0.1);
  EXPECT_EQ(c.ar_train_fraction, 0.05);
  EXPECT_EQ(c.window_length_s, 60.0);
  EXPECT_EQ(c.forest.n_trees, 100u);
  EXPECT_EQ(c.forest.min_samples_leaf, 1u);
  EXPECT_TRUE(c.forest.bootstrap);
  EXPECT_EQ(c.dtw.k_neighbors, 1u);
  EXPECT_EQ(c.dtw.downsample_to, 600u);
  EXPECT_EQ(c.labels.class2_start_s, 180.0);
  EXPECT_EQ(c.labels.class3_len_s, 120.0);
}

TEST(Config, EmptyBodyGivesDefaults) {
  EXPECT_EQ(render_config(parse_config("")), render_config(PipelineConfig{}));
  EXPECT_EQ(render_config(parse_config("# only a comment\n\n   \n")), render_config(PipelineConfig{}));
}

TEST(Config, DottedKeysApply) {
  const auto c = parse_config(
      "filter.corner_hz = 0.2\n"
      "filter.order=6\n"
      "  ar.max_order = 12  \n"
      "labels.rule = majority-sample\n"
      "forest.n_trees = 7\n"
      "forest.bootstrap = false\n"
      "dtw.band_radius = 15\n"
      "dtw.local_cost = absolute\n"
      "split.ratio = 0.75\n"
      "seed = 9\n"
      "synth.ar_coefficients = 0.5, -0.25\n");
  EXPECT_EQ(c.filter_corner_hz, 0.2);
  EXPECT_EQ(c.filter_order, 6);
  EXPECT_EQ(c.ar_max_order, 12);
  EXPECT_EQ(c.labels.window_label_rule, WindowLabelRule::majority_sample);
  EXPECT_EQ(c.forest.n_trees, 7u);
  EXPECT_FALSE(c.forest.bootstrap);
  ASSERT_TRUE(c.dtw.band_radius);
  EXPECT_EQ(*c.dtw.band_radius, 15u);
  EXPECT_EQ(c.dtw.local_cost, LocalCost::absolute);
  EXPECT_EQ(c.split_ratio, 0.75);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.synth.ambient.coefficients, (std::vector<double>{0.5, -0.25}));
  EXPECT_FALSE(parse_config("dtw.band_radius = none").dtw.band_radius);
}

TEST(Config, RenderedConfigReloadsIdentically) {
  auto c = parse_config(
      "window.stride_s = 30\nfeatures.fdr_q = 0.01\nsynth.events = 700, 1500\nsynth.day_len_s = 900\n"
      "synth.seasonal_period_s = 450\ndtw.z_normalize = true\n");
  const auto text = render_config(c);
  EXPECT_EQ(render_config(parse_config(text)), text);
  EXPECT_EQ(parse_config(text).synth.seasonal.period_s, 450.0);
  EXPECT_EQ(parse_config(text).synth_config().event_times_s, (std::vector<double>{700, 1500}));
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config("no.such.key = 1"), ConfigError);
  EXPECT_THROW(parse_config("filter.order 4"), ConfigError);
  EXPECT_THROW(parse_config("filter.corner_hz = fast"), ConfigError);
  EXPECT_THROW(parse_config("forest.n_trees = 0"), ConfigError);
  EXPECT_THROW(parse_config("forest.n_trees = -3"), ConfigError);
  EXPECT_THROW(parse_config("split.ratio = 1"), ConfigError);
  EXPECT_THROW(parse_config("labels.rule = sometimes"), ConfigError);
  EXPECT_THROW(parse_config("forest.bootstrap = maybe"), ConfigError);
  EXPECT_THROW(parse_config("synth.ar_coefficients = 0.5, x"), ConfigError);
  EXPECT_THROW(parse_config("labels.class2_start_s = 0"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/seisclass.cfg"), ConfigError);
  try {
    parse_config("a = 1\nb\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.code(), ExitCode::config);
  }
}

TEST(Config, SynthEventsRepeatPerDay) {
  auto c = parse_config("synth.days = 3\nsynth.day_len_s = 1000\nsynth.event_offsets_s = 300, 700\n");
  const auto s = c.synth_config();
  EXPECT_EQ(s.event_times_s, (std::vector<double>{300, 700, 1300, 1700, 2300, 2700}));
  EXPECT_EQ(s.precursor_lead_s, c.labels.class2_start_s);
  EXPECT_EQ(s.eruption_len_s, c.labels.class3_len_s);
  EXPECT_EQ(s.seasonal.period_s, 1000.0);
}

TEST(Config, MasterSeedFeedsEveryStream) {
  const auto a = parse_config("seed = 1"), b = parse_config("seed = 2");
  EXPECT_NE(a.synth_config().seed, b.synth_config().seed);
  EXPECT_NE(a.forest_params().seed, b.forest_params().seed);
  EXPECT_NE(a.synth_config().seed, a.forest_params().seed);
  EXPECT_EQ(a.provenance(), "seisclass seed=1");
}
