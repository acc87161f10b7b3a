#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mmtc/common.hpp"
#include "mmtc/harness.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  std::string model;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

mmtc::ExperimentConfig load(const Options& o) {
  mmtc::ExperimentConfig c = o.config.empty() ? mmtc::ExperimentConfig{} : mmtc::load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  c.validate();
  return c;
}

fs::path model_dir(const Options& o) { return o.model.empty() ? fs::path(o.out) / "model" : fs::path(o.model); }

void report(const std::string& command, const mmtc::ExperimentConfig& c, double seconds,
            nlohmann::json extra = nlohmann::json::object()) {
  nlohmann::json j = {{"status", "ok"},
                      {"command", command},
                      {"seed", c.seed},
                      {"config_hash", c.hash()},
                      {"elapsed_s", seconds}};
  j.update(extra);
  std::cout << j.dump() << '\n';
}

int fail(const std::string& command, const std::string& kind, const std::string& message) {
  nlohmann::json j = {{"status", "error"}, {"command", command}, {"error", kind}, {"message", message}};
  std::cerr << j.dump() << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mmtc-sim: sensor selection and quantization experiments"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "JSON experiment config")->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--seed", opt.seed, "master seed, overrides the config");
    sub->add_option("--threads", opt.threads, "worker threads, overrides the config")
        ->check(CLI::PositiveNumber);
  };

  CLI::App* bound = app.add_subcommand("bound", "bound versus exact MSE over the sensor grid");
  CLI::App* sweep = app.add_subcommand("sweep", "selection sweep over correlation and active fraction");
  CLI::App* temporal = app.add_subcommand("temporal", "Kalman horizon sweep over correlation and dynamics");
  CLI::App* prep = app.add_subcommand("intel-prepare", "estimate the empirical model from the raw log");
  CLI::App* irun = app.add_subcommand("intel-run", "experiments on a prepared empirical model");
  CLI::App* cons = app.add_subcommand("consistency", "simulated chain against the analytic MSE");
  for (CLI::App* s : {bound, sweep, temporal, prep, irun, cons}) add_common(s);
  for (CLI::App* s : {prep, irun}) s->add_option("--model", opt.model, "model directory (default OUT/model)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    const std::string name = app.get_subcommands().empty() ? "" : app.get_subcommands().front()->get_name();
    return fail(name, "usage", e.what());
  }

  CLI::App* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  try {
    const mmtc::ExperimentConfig c = load(opt);
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    if (cmd == bound) {
      mmtc::run_bound_study(c, opt.out);
    } else if (cmd == sweep) {
      mmtc::run_selection_sweep(c, opt.out);
    } else if (cmd == temporal) {
      mmtc::run_temporal_sweep(c, opt.out);
    } else if (cmd == cons) {
      mmtc::run_consistency(c, opt.out);
    } else if (cmd == prep) {
      const mmtc::IntelPrepareSummary s = mmtc::intel_prepare(c, model_dir(opt));
      report(name, c, elapsed(),
             {{"model_dir", model_dir(opt).string()},
              {"lines_kept", s.parse.kept},
              {"lines_skipped", s.parse.skipped},
              {"days", s.days},
              {"alpha_exclusions", s.alpha_exclusions}});
      return 0;
    } else if (cmd == irun) {
      mmtc::intel_run(c, model_dir(opt), opt.out);
    }
    report(name, c, elapsed(), {{"out", opt.out}});
    return 0;
  } catch (const mmtc::InvalidArgument& e) {
    return fail(name, "invalid_argument", e.what());
  } catch (const mmtc::Infeasible& e) {
    return fail(name, "infeasible", e.what());
  } catch (const std::exception& e) {
    return fail(name, "runtime", e.what());
  }
}
