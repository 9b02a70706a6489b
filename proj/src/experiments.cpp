#include "larpo/experiments.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "larpo/errors.hpp"
#include "larpo/record.hpp"

namespace larpo {

StudyAxis study_axis_from_string(const std::string& name) {
  if (name == "objective") return StudyAxis::Objective;
  if (name == "hardness") return StudyAxis::Hardness;
  if (name == "listsize") return StudyAxis::ListSize;
  if (name == "memorization") return StudyAxis::Memorization;
  if (name == "temperature") return StudyAxis::Temperature;
  throw InvalidArgument("unknown study '" + name + "'");
}

std::string to_string(StudyAxis axis) {
  switch (axis) {
    case StudyAxis::Objective: return "objective";
    case StudyAxis::Hardness: return "hardness";
    case StudyAxis::ListSize: return "listsize";
    case StudyAxis::Memorization: return "memorization";
    case StudyAxis::Temperature: return "temperature";
  }
  throw InvalidArgument("bad study axis");
}

std::vector<std::uint64_t> default_study_seeds(const RunConfig& config) {
  std::vector<std::uint64_t> seeds(config.study_seeds);
  for (std::size_t i = 0; i < seeds.size(); ++i)
    seeds[i] = mix_seed(config.train.seed, {0x5eed, i});
  return seeds;
}

namespace {

struct Arm {
  std::string label;
  TrainConfig train;
};

void add_counters(Counters& into, const Counters& from) {
  into.gradient_updates += from.gradient_updates;
  into.oracle_calls += from.oracle_calls;
  into.sample_draws += from.sample_draws;
  into.duplicate_draws += from.duplicate_draws;
}

void finish_stats(ArmResult& arm) {
  const auto stats = [](const std::vector<double>& xs, double& mean, double& std_dev) {
    mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    std_dev = 0.0;
    if (xs.size() > 1) {
      for (double x : xs) std_dev += (x - mean) * (x - mean);
      std_dev = std::sqrt(std_dev / static_cast<double>(xs.size() - 1));
    }
  };
  stats(arm.expected_reward, arm.mean_expected_reward, arm.std_expected_reward);
  stats(arm.winrate, arm.mean_winrate, arm.std_winrate);
}

// Shared engine: per seed, build one world and one SFT policy, then train
// every arm from that common starting point.
TrendResult run_arms(StudyAxis axis, const RunConfig& base, std::span<const Arm> arms,
                     std::span<const std::uint64_t> seeds) {
  TrendResult result;
  result.axis = axis;
  result.seeds.assign(seeds.begin(), seeds.end());
  result.arms.resize(arms.size());
  for (std::size_t a = 0; a < arms.size(); ++a) result.arms[a].label = arms[a].label;

  for (std::uint64_t seed : seeds) {
    WorldParams wp = base.world;
    wp.seed = mix_seed(seed, {11});
    const SyntheticWorld world = generate_world(wp);

    TrainConfig sft_cfg = base.train;
    sft_cfg.seed = seed;
    SftResult sft = sft_phase(
        BiEncoderPolicy::init_random(world, base.train.init_std, mix_seed(seed, {12})), world,
        sft_cfg);

    for (std::size_t a = 0; a < arms.size(); ++a) {
      TrainConfig cfg = arms[a].train;
      cfg.seed = seed;
      const TrainResult tr = larpo_train(sft.policy, world, base.oracle, cfg, &sft.policy);
      const EvalReport& last = tr.records.back().eval;
      double dup = 0.0;
      for (const auto& record : tr.records) dup += record.duplicate_rate;
      dup /= static_cast<double>(tr.records.size());

      ArmResult& out = result.arms[a];
      out.expected_reward.push_back(last.expected_reward);
      out.winrate.push_back(last.winrate_vs_ref);
      out.duplicate_rate.push_back(dup);
      add_counters(out.counters, tr.counters);
    }
  }

  for (ArmResult& arm : result.arms) finish_stats(arm);

  for (std::size_t a = 0; a + 1 < result.arms.size(); ++a) {
    PairSign sign;
    sign.from = result.arms[a].label;
    sign.to = result.arms[a + 1].label;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      const double lo = result.arms[a].expected_reward[i];
      const double hi = result.arms[a + 1].expected_reward[i];
      if (hi > lo) ++sign.up;
      else if (hi < lo) ++sign.down;
      else ++sign.tie;
    }
    result.sign_counts.push_back(std::move(sign));
  }
  return result;
}

bool all_means_equal(const TrendResult& result) {
  for (std::size_t a = 1; a < result.arms.size(); ++a) {
    if (result.arms[a].mean_expected_reward != result.arms[0].mean_expected_reward)
      return false;
  }
  return true;
}

// Common guards; returns true when the caller should assert the trend.
bool apply_guards(TrendResult& result) {
  if (result.seeds.size() < kMinTrendSeeds) {
    result.trend_pass = false;
    result.diagnostic = "insufficient seeds: need >= " + std::to_string(kMinTrendSeeds) +
                        ", got " + std::to_string(result.seeds.size());
    return false;
  }
  if (all_means_equal(result)) {
    result.trend_pass = false;
    result.diagnostic = "tie: all arm means are equal";
    return false;
  }
  return true;
}

std::string compare_means(const ArmResult& lo, const ArmResult& hi) {
  return hi.label + " (" + format_double(hi.mean_expected_reward) + ") < " + lo.label + " (" +
         format_double(lo.mean_expected_reward) + ")";
}

void assert_nondecreasing(TrendResult& result) {
  for (std::size_t a = 0; a + 1 < result.arms.size(); ++a) {
    if (result.arms[a + 1].mean_expected_reward < result.arms[a].mean_expected_reward) {
      result.trend_pass = false;
      result.diagnostic = "order violated: " + compare_means(result.arms[a], result.arms[a + 1]);
      return;
    }
  }
  result.trend_pass = true;
  result.diagnostic = "ok";
}

}  // namespace

TrendResult run_objective_study(const RunConfig& base, std::span<const std::uint64_t> seeds) {
  std::vector<Arm> arms;
  for (auto kind : {ObjectiveKind::Pair, ObjectiveKind::Contrastive, ObjectiveKind::LambdaRank,
                    ObjectiveKind::ListMLE}) {
    Arm arm;
    arm.label = to_string(kind);
    arm.train = base.train;
    arm.train.objective = kind;
    arm.train.slice = default_slice(kind);
    arms.push_back(std::move(arm));
  }
  TrendResult result = run_arms(StudyAxis::Objective, base, arms, seeds);
  if (!apply_guards(result)) return result;

  const double pair = result.arms[0].mean_expected_reward;
  const double contrastive = result.arms[1].mean_expected_reward;
  const double listwise =
      std::max(result.arms[2].mean_expected_reward, result.arms[3].mean_expected_reward);
  if (listwise < contrastive) {
    result.trend_pass = false;
    result.diagnostic = "order violated: best listwise (" + format_double(listwise) +
                        ") < contrastive (" + format_double(contrastive) + ")";
  } else if (contrastive < pair) {
    result.trend_pass = false;
    result.diagnostic = "order violated: " + compare_means(result.arms[0], result.arms[1]);
  } else {
    result.trend_pass = true;
    result.diagnostic = "ok";
  }
  return result;
}

TrendResult run_hardness_study(const RunConfig& base, std::span<const std::uint64_t> seeds) {
  std::vector<Arm> arms;
  for (auto level : {HardnessLevel::Easiest, HardnessLevel::Easy, HardnessLevel::Hard,
                     HardnessLevel::Hardest}) {
    Arm arm;
    arm.label = to_string(level);
    arm.train = base.train;
    arm.train.negative_source = NegativeSource::Mined;
    arm.train.hardness = level;
    arms.push_back(std::move(arm));
  }
  TrendResult result = run_arms(StudyAxis::Hardness, base, arms, seeds);
  if (!apply_guards(result)) return result;

  assert_nondecreasing(result);
  if (result.trend_pass &&
      result.arms.back().mean_expected_reward <= result.arms.front().mean_expected_reward) {
    result.trend_pass = false;
    result.diagnostic = "no hardest-vs-easiest gap: " +
                        format_double(result.arms.back().mean_expected_reward) + " vs " +
                        format_double(result.arms.front().mean_expected_reward);
  }
  return result;
}

TrendResult run_temperature_study(const RunConfig& base, std::span<const double> grid,
                                  std::span<const std::uint64_t> seeds) {
  if (grid.empty()) throw InvalidArgument("temperature study: empty grid");
  std::vector<Arm> arms;
  for (double t : grid) {
    Arm arm;
    arm.label = format_double(t);
    arm.train = base.train;
    arm.train.temperatures.assign(base.train.iterations, t);
    arms.push_back(std::move(arm));
  }
  TrendResult result = run_arms(StudyAxis::Temperature, base, arms, seeds);

  if (grid.size() < 3) {
    // No interior exists; report values without asserting.
    result.trend_pass = true;
    result.diagnostic = "grid has no interior: no assertion";
    return result;
  }
  if (!apply_guards(result)) return result;

  double interior = result.arms[1].mean_expected_reward;
  for (std::size_t a = 2; a + 1 < result.arms.size(); ++a)
    interior = std::max(interior, result.arms[a].mean_expected_reward);
  const double lo_end = result.arms.front().mean_expected_reward;
  const double hi_end = result.arms.back().mean_expected_reward;
  if (interior > lo_end && interior > hi_end) {
    result.trend_pass = true;
    result.diagnostic = "ok";
  } else {
    result.trend_pass = false;
    result.diagnostic = "no interior maximum: interior " + format_double(interior) +
                        ", ends " + format_double(lo_end) + " / " + format_double(hi_end);
  }
  return result;
}

TrendResult run_listsize_study(const RunConfig& base, std::span<const std::size_t> sizes,
                               std::span<const std::uint64_t> seeds) {
  if (sizes.empty()) throw InvalidArgument("listsize study: empty size list");
  std::vector<Arm> arms;
  for (std::size_t size : sizes) {
    if (size < 2) throw InvalidArgument("listsize study: sizes must be >= 2");
    Arm arm;
    arm.label = std::to_string(size);
    arm.train = base.train;
    arm.train.objective = ObjectiveKind::Contrastive;
    arm.train.k = size;
    arm.train.slice = {1, size - 1};
    arms.push_back(std::move(arm));
  }
  TrendResult result = run_arms(StudyAxis::ListSize, base, arms, seeds);
  if (!apply_guards(result)) return result;

  assert_nondecreasing(result);
  if (result.trend_pass && result.arms.size() >= 3) {
    const double first_gain =
        result.arms[1].mean_expected_reward - result.arms[0].mean_expected_reward;
    const double last_gain = result.arms[result.arms.size() - 1].mean_expected_reward -
                             result.arms[result.arms.size() - 2].mean_expected_reward;
    if (last_gain > first_gain) {
      result.trend_pass = false;
      result.diagnostic = "no diminishing returns: last gain " + format_double(last_gain) +
                          " > first gain " + format_double(first_gain);
    }
  }
  return result;
}

TrendResult run_memorization_study(const RunConfig& base, std::span<const std::uint64_t> seeds) {
  std::vector<Arm> arms;
  for (auto mode : {Memorization::CurrentOnly, Memorization::CurrentPlusPrev,
                    Memorization::CurrentPlusAllPrev}) {
    Arm arm;
    arm.label = to_string(mode);
    arm.train = base.train;
    arm.train.memorization = mode;
    arms.push_back(std::move(arm));
  }
  TrendResult result = run_arms(StudyAxis::Memorization, base, arms, seeds);
  if (!apply_guards(result)) return result;
  assert_nondecreasing(result);
  return result;
}

TrendResult run_study(StudyAxis axis, const RunConfig& base) {
  const auto seeds = default_study_seeds(base);
  switch (axis) {
    case StudyAxis::Objective: return run_objective_study(base, seeds);
    case StudyAxis::Hardness: return run_hardness_study(base, seeds);
    case StudyAxis::ListSize: return run_listsize_study(base, base.list_sizes, seeds);
    case StudyAxis::Memorization: return run_memorization_study(base, seeds);
    case StudyAxis::Temperature:
      return run_temperature_study(base, base.temperature_grid, seeds);
  }
  throw InvalidArgument("bad study axis");
}

std::string study_csv(const TrendResult& result) {
  std::string out = "value,seed,expected_reward,winrate,duplicate_rate\n";
  for (const ArmResult& arm : result.arms) {
    for (std::size_t i = 0; i < result.seeds.size(); ++i) {
      out += arm.label;
      out += ",";
      out += std::to_string(result.seeds[i]);
      out += ",";
      out += format_double(arm.expected_reward[i]);
      out += ",";
      out += format_double(arm.winrate[i]);
      out += ",";
      out += format_double(arm.duplicate_rate[i]);
      out += "\n";
    }
  }
  return out;
}

std::string study_summary_json(const TrendResult& result) {
  nlohmann::ordered_json j;
  j["study"] = to_string(result.axis);
  j["seeds"] = result.seeds;
  nlohmann::ordered_json arms = nlohmann::ordered_json::array();
  for (const ArmResult& arm : result.arms) {
    nlohmann::ordered_json a;
    a["value"] = arm.label;
    a["mean_expected_reward"] = arm.mean_expected_reward;
    a["std_expected_reward"] = arm.std_expected_reward;
    a["mean_winrate"] = arm.mean_winrate;
    a["std_winrate"] = arm.std_winrate;
    a["per_seed_expected_reward"] = arm.expected_reward;
    a["per_seed_winrate"] = arm.winrate;
    a["per_seed_duplicate_rate"] = arm.duplicate_rate;
    nlohmann::ordered_json c;
    c["gradient_updates"] = arm.counters.gradient_updates;
    c["oracle_calls"] = arm.counters.oracle_calls;
    c["sample_draws"] = arm.counters.sample_draws;
    c["duplicate_draws"] = arm.counters.duplicate_draws;
    a["counters"] = std::move(c);
    arms.push_back(std::move(a));
  }
  j["arms"] = std::move(arms);
  nlohmann::ordered_json signs = nlohmann::ordered_json::array();
  for (const PairSign& sign : result.sign_counts) {
    nlohmann::ordered_json s;
    s["from"] = sign.from;
    s["to"] = sign.to;
    s["up"] = sign.up;
    s["tie"] = sign.tie;
    s["down"] = sign.down;
    signs.push_back(std::move(s));
  }
  j["sign_counts"] = std::move(signs);
  j["trend_pass"] = result.trend_pass;
  j["diagnostic"] = result.diagnostic;
  return j.dump(2) + "\n";
}

}  // namespace larpo
