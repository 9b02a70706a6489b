#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "larpo/config.hpp"
#include "larpo/trainer.hpp"

namespace larpo {

enum class StudyAxis { Objective, Hardness, ListSize, Memorization, Temperature };

// Names accepted by the CLI: objective, hardness, listsize, memorization,
// temperature.
StudyAxis study_axis_from_string(const std::string& name);
std::string to_string(StudyAxis axis);

// One arm of a study: the axis value it pins plus per-seed outcomes. The
// asserted quality metric is final expected_reward (exact, variance-free per
// seed); winrate vs the seed's SFT policy is reported alongside.
struct ArmResult {
  std::string label;
  std::vector<double> expected_reward;  // per seed
  std::vector<double> winrate;          // per seed
  std::vector<double> duplicate_rate;   // per seed, mean over iterations
  double mean_expected_reward = 0.0;
  double std_expected_reward = 0.0;
  double mean_winrate = 0.0;
  double std_winrate = 0.0;
  Counters counters;  // summed over seeds, for budget-parity inspection
};

// Per-seed comparison of two adjacent arms along the axis.
struct PairSign {
  std::string from, to;
  std::size_t up = 0, tie = 0, down = 0;  // to > from / equal / to < from
};

struct TrendResult {
  StudyAxis axis = StudyAxis::Objective;
  std::vector<std::uint64_t> seeds;
  std::vector<ArmResult> arms;  // in axis order
  std::vector<PairSign> sign_counts;
  bool trend_pass = false;
  std::string diagnostic;  // "ok", "tie", "insufficient seeds", or what failed
};

// Trend suites need at least this many seeds to assert anything.
inline constexpr std::size_t kMinTrendSeeds = 5;

// Derived per-index study seeds from the config's base seed.
std::vector<std::uint64_t> default_study_seeds(const RunConfig& config);

// Each study shares, per seed, one world and one SFT policy across all arms
// (identical budgets up to what the axis itself changes) and asserts the
// direction reported in the source experiments:
//   objective:    best(lambdarank, listmle) >= contrastive >= pair
//   hardness:     nondecreasing easiest..hardest, hardest > easiest
//   temperature:  interior grid maximum (mid > both ends)
//   listsize:     nondecreasing, last marginal gain <= first marginal gain
//   memorization: all_prev >= plus_prev >= current_only
TrendResult run_objective_study(const RunConfig& base, std::span<const std::uint64_t> seeds);
TrendResult run_hardness_study(const RunConfig& base, std::span<const std::uint64_t> seeds);
TrendResult run_temperature_study(const RunConfig& base, std::span<const double> grid,
                                  std::span<const std::uint64_t> seeds);
TrendResult run_listsize_study(const RunConfig& base, std::span<const std::size_t> sizes,
                               std::span<const std::uint64_t> seeds);
TrendResult run_memorization_study(const RunConfig& base, std::span<const std::uint64_t> seeds);

// Dispatch by axis using the config's grid/sizes/seed-count.
TrendResult run_study(StudyAxis axis, const RunConfig& base);

// Plot-ready per-seed rows: value,seed,expected_reward,winrate,duplicate_rate.
std::string study_csv(const TrendResult& result);
// Stable-key-order summary with per-arm stats, sign counts, and pass/fail.
std::string study_summary_json(const TrendResult& result);

}  // namespace larpo
