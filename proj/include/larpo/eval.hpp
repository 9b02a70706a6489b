#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "larpo/policy.hpp"
#include "larpo/rng.hpp"
#include "larpo/world.hpp"

namespace larpo {

// Retrieval-style evaluation of a policy against the reward oracle.
struct EvalReport {
  double greedy_accuracy = 0.0;
  double expected_reward = 0.0;
  std::map<std::size_t, double> recall_at;  // N -> mean recall over prompts
  double recall_temperature = 1.0;
  double winrate_vs_ref = 0.5;  // 0.5 when no reference policy was supplied
};

// P(at least one of N i.i.d. samples from pi_t(.|x) is correct), in closed
// form: 1 - (1 - p)^N with p the correct-set probability mass.
double recall_at_n_exact(const BiEncoderPolicy& policy, const RewardOracle& oracle, PromptId x,
                         std::size_t n, double temperature);

// Monte-Carlo estimate of the same quantity over `trials` independent trials.
double recall_at_n_mc(const BiEncoderPolicy& policy, const RewardOracle& oracle, PromptId x,
                      std::size_t n, double temperature, std::size_t trials, Rng& rng);

// Monte-Carlo recall when the N samples are drawn without replacement
// (sequential renormalization). No closed form is attempted.
double recall_at_n_mc_noreplace(const BiEncoderPolicy& policy, const RewardOracle& oracle,
                                PromptId x, std::size_t n, double temperature, std::size_t trials,
                                Rng& rng);

// recall_at_n_exact averaged over all prompts.
double mean_recall_at_n(const BiEncoderPolicy& policy, const RewardOracle& oracle, std::size_t n,
                        double temperature);

// Fraction of prompts whose top-1 retrieval is correct.
double greedy_accuracy(const BiEncoderPolicy& policy, const RewardOracle& oracle);

// Mean over prompts of sum_y pi_t(y|x) r(x,y), by exact enumeration.
double expected_reward(const BiEncoderPolicy& policy, const RewardOracle& oracle,
                       double temperature);

// P(r(x, y_a) > r(x, y_b)) + 0.5 P(tie) with y_a ~ pi_a, y_b ~ pi_b,
// averaged over prompts; exact over the corpus (sorted prefix sums).
double winrate(const BiEncoderPolicy& policy_a, const BiEncoderPolicy& policy_b,
               const RewardOracle& oracle, double temperature);

struct EvalOptions {
  // When set, recall columns come from the without-replacement Monte-Carlo
  // estimator instead of the i.i.d. closed form.
  bool recall_without_replacement = false;
  std::size_t mc_trials = 2000;
  std::uint64_t seed = 0;
};

// Standard report: greedy accuracy, expected reward at t=1, recall@{1,10,50}
// at t=1, and winrate against `baseline` when provided.
EvalReport evaluate(const BiEncoderPolicy& policy, const RewardOracle& oracle,
                    const BiEncoderPolicy* baseline = nullptr, const EvalOptions& opts = {});

}  // namespace larpo
