#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "seisclass/config.hpp"
#include "seisclass/pipeline.hpp"

namespace {

using namespace seisclass;
namespace sp = seisclass::pipeline;

constexpr const char* kOutEnv = "SEISCLASS_OUT";

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool verbose = false;
};

struct Resolved {
  PipelineConfig cfg;
  sp::fs::path out;
  sp::Log log;
};

Resolved resolve(const Globals& g) {
  Resolved r;
  if (!g.config_path.empty()) r.cfg = load_config(g.config_path);
  if (g.seed) r.cfg.seed = *g.seed;
  if (const char* env = std::getenv(kOutEnv); env && *env) r.cfg.out_dir = env;
  if (!g.out.empty()) r.cfg.out_dir = g.out;
  r.out = r.cfg.out_dir;
  r.log.verbose = g.verbose;
  return r;
}

int run(int argc, char** argv) {
  CLI::App app{"Seismic state classification: filtering, features, random forest and DTW baselines"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "key = value configuration file");
  app.add_option("--seed", g.seed, "master seed (overrides the config)");
  app.add_option("--out", g.out, std::string("output directory (overrides the config and ") + kOutEnv + ")");
  app.add_flag("--verbose", g.verbose, "extra diagnostics on stderr");

  auto* synth = app.add_subcommand("synth", "generate a synthetic signal, event log and ground truth");
  auto* filter = app.add_subcommand("filter", "high-pass filter, AR fit and prediction-error filter");
  bool skip_pef = false;
  filter->add_flag("--skip-pef", skip_pef, "write only the high-pass output");
  auto* train = app.add_subcommand("train", "window, label, extract features and fit a classifier");
  std::string classifier = "rf";
  train->add_option("--classifier", classifier, "rf or dtw")->check(CLI::IsMember({"rf", "dtw"}));
  auto* classify = app.add_subcommand("classify", "predict a class for every scored window");
  auto* eval = app.add_subcommand("eval", "per-class and averaged precision/recall/F1 report");
  auto* pipeline = app.add_subcommand("pipeline", "run every stage end to end");
  bool compare = false;
  pipeline->add_flag("--compare", compare, "run RF with PEF, RF without PEF and DTW side by side");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::config);
  }

  try {
    auto r = resolve(g);
    const auto series = sp::input_series_path(r.cfg, r.out);
    const auto events = sp::events_path(r.cfg, r.out);
    if (synth->parsed()) {
      sp::run_synth(r.cfg, r.out, r.log);
    } else if (filter->parsed()) {
      sp::run_filter(r.cfg, r.out, skip_pef, r.log);
    } else if (train->parsed()) {
      sp::run_train(r.cfg, series, events, r.out, classifier == "dtw" ? sp::Classifier::dtw : sp::Classifier::rf,
                    r.log);
    } else if (classify->parsed()) {
      sp::run_classify(r.cfg, series, events, r.out, r.log);
    } else if (eval->parsed()) {
      const auto o = sp::run_eval(r.cfg, series, events, r.out, {}, r.log);
      std::cout << o.report.text;
    } else if (pipeline->parsed()) {
      const auto o = sp::run_pipeline(r.cfg, r.out, compare, r.log);
      if (!compare) std::cout << o.arms.front().eval.report.text;
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::data);
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
