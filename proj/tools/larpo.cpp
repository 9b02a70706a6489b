#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "larpo/checks.hpp"
#include "larpo/config.hpp"
#include "larpo/errors.hpp"
#include "larpo/eval.hpp"
#include "larpo/experiments.hpp"
#include "larpo/policy.hpp"
#include "larpo/record.hpp"
#include "larpo/rng.hpp"
#include "larpo/trainer.hpp"
#include "larpo/world.hpp"

namespace {

using namespace larpo;

std::string joined(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

int cmd_run(const std::string& config_path, const std::string& out_dir, bool seed_set,
            std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  RunConfig config = load_config(config_path);
  if (seed_set) config.train.seed = seed;

  const SyntheticWorld world = generate_world(config.world);
  auto init = BiEncoderPolicy::init_random(world, config.train.init_std,
                                           mix_seed(config.train.seed, {12}));
  SftResult sft = sft_phase(std::move(init), world, config.train);

  EvalOptions opts;
  opts.recall_without_replacement = config.train.recall_without_replacement;
  opts.mc_trials = config.train.mc_trials;
  opts.seed = mix_seed(config.train.seed, {6});
  const EvalReport sft_eval = evaluate(sft.policy, config.oracle, &sft.policy, opts);

  const TrainResult train =
      larpo_train(sft.policy, world, config.oracle, config.train, &sft.policy);

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::filesystem::create_directories(out_dir);
  write_text_atomic(joined(out_dir, "metrics.csv"), metrics_csv(sft_eval, train.records));
  write_text_atomic(joined(out_dir, "run.json"),
                    run_record_json(config, world, sft, sft_eval, train, wall));

  const EvalReport& final_eval =
      train.records.empty() ? sft_eval : train.records.back().eval;
  std::cout << "run complete: expected_reward " << format_double(final_eval.expected_reward)
            << ", greedy_acc " << format_double(final_eval.greedy_accuracy) << ", winrate "
            << format_double(final_eval.winrate_vs_ref) << "\n";
  return 0;
}

int cmd_sweep(const std::string& study, const std::string& config_path,
              const std::string& out_dir) {
  // An unrecognized study name is a usage error, same class as a bad config.
  StudyAxis axis;
  try {
    axis = study_axis_from_string(study);
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  const RunConfig config = load_config(config_path);

  const TrendResult result = run_study(axis, config);

  std::filesystem::create_directories(out_dir);
  const std::string stem = to_string(axis);
  write_text_atomic(joined(out_dir, stem + ".csv"), study_csv(result));
  write_text_atomic(joined(out_dir, stem + "_summary.json"), study_summary_json(result));

  std::cout << stem << " study: " << (result.trend_pass ? "pass" : "fail") << " ("
            << result.diagnostic << ")\n";
  return result.trend_pass ? 0 : 4;
}

int cmd_check(const std::string& out_dir) {
  CheckHooks hooks;
  if (const char* target = std::getenv("LARPO_CHECK_CORRUPT")) {
    const std::string name(target);
    if (name == "pair_sign") {
      hooks.corrupt_pair_sign = true;
    } else if (!name.empty()) {
      throw ConfigError("unknown LARPO_CHECK_CORRUPT target: " + name);
    }
  }

  const CheckReport report = run_all_checks(hooks);

  std::filesystem::create_directories(out_dir);
  write_text_atomic(joined(out_dir, "check_report.json"), check_report_json(report));

  for (const CheckFamily& family : report.families) {
    std::cout << family.name << ": " << (family.pass ? "pass" : "FAIL") << "\n";
  }
  if (!report.pass) {
    std::cerr << "check failed:";
    for (const CheckFamily& family : report.families) {
      if (!family.pass) std::cerr << ' ' << family.name;
    }
    std::cerr << "\n";
  }
  return report.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"larpo: preference optimization as retriever training, desk scale"};
  app.require_subcommand(1);

  std::string run_config, run_out, sweep_config, sweep_out, sweep_study, check_out;
  std::uint64_t seed = 0;

  CLI::App* run = app.add_subcommand("run", "SFT phase + iterative training on one config");
  run->add_option("--config", run_config, "config file (flat key = value lines)")->required();
  run->add_option("--out", run_out, "output directory for run.json and metrics.csv")
      ->required();
  CLI::Option* seed_opt =
      run->add_option("--seed", seed, "override the training seed from the config");

  CLI::App* sweep = app.add_subcommand("sweep", "run one ablation study across seeds");
  sweep
      ->add_option("--study", sweep_study,
                   "objective | hardness | temperature | listsize | memorization")
      ->required();
  sweep->add_option("--config", sweep_config, "base config file")->required();
  sweep->add_option("--out", sweep_out, "output directory for study CSV + summary JSON")
      ->required();

  CLI::App* check = app.add_subcommand("check", "run the invariant suite");
  check->add_option("--out", check_out, "output directory for check_report.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) return cmd_run(run_config, run_out, seed_opt->count() > 0, seed);
    if (sweep->parsed()) return cmd_sweep(sweep_study, sweep_config, sweep_out);
    return cmd_check(check_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Divergence& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
