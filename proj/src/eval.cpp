#include "larpo/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "larpo/errors.hpp"
#include "larpo/kernels.hpp"

namespace larpo {

namespace {

// Probability mass of the correct set under pi_t(.|x).
double correct_mass(const BiEncoderPolicy& policy, const RewardOracle& oracle, PromptId x,
                    double temperature, std::vector<double>& probs) {
  policy.prob_table(x, temperature, probs);
  const auto& world = policy.world();
  double p = 0.0;
  for (std::size_t y = 0; y < probs.size(); ++y) {
    if (is_correct(world, oracle, x, static_cast<ResponseId>(y))) p += probs[y];
  }
  return p;
}

}  // namespace

double recall_at_n_exact(const BiEncoderPolicy& policy, const RewardOracle& oracle, PromptId x,
                         std::size_t n, double temperature) {
  if (n < 1) throw InvalidArgument("recall_at_n_exact: N must be >= 1");
  std::vector<double> probs;
  const double p = correct_mass(policy, oracle, x, temperature, probs);
  if (p >= 1.0) return 1.0;
  // 1 - (1-p)^N, stable for tiny p and large N.
  return -std::expm1(static_cast<double>(n) * std::log1p(-p));
}

double recall_at_n_mc(const BiEncoderPolicy& policy, const RewardOracle& oracle, PromptId x,
                      std::size_t n, double temperature, std::size_t trials, Rng& rng) {
  if (n < 1) throw InvalidArgument("recall_at_n_mc: N must be >= 1");
  if (trials < 1) throw InvalidArgument("recall_at_n_mc: trials must be >= 1");
  std::vector<double> probs;
  policy.prob_table(x, temperature, probs);
  std::vector<double> cdf(probs.size());
  std::partial_sum(probs.begin(), probs.end(), cdf.begin());
  cdf.back() = 1.0;

  const auto& world = policy.world();
  std::vector<char> correct(probs.size());
  for (std::size_t y = 0; y < probs.size(); ++y)
    correct[y] = is_correct(world, oracle, x, static_cast<ResponseId>(y)) ? 1 : 0;

  std::size_t hits = 0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    for (std::size_t draw = 0; draw < n; ++draw) {
      const double u = rng.uniform01();
      const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      const auto y = static_cast<std::size_t>(it - cdf.begin());
      if (correct[std::min(y, probs.size() - 1)]) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(trials);
}

double recall_at_n_mc_noreplace(const BiEncoderPolicy& policy, const RewardOracle& oracle,
                                PromptId x, std::size_t n, double temperature, std::size_t trials,
                                Rng& rng) {
  if (n < 1) throw InvalidArgument("recall_at_n_mc_noreplace: N must be >= 1");
  if (trials < 1) throw InvalidArgument("recall_at_n_mc_noreplace: trials must be >= 1");
  std::vector<double> base;
  policy.prob_table(x, temperature, base);
  const auto& world = policy.world();
  std::vector<char> correct(base.size());
  for (std::size_t y = 0; y < base.size(); ++y)
    correct[y] = is_correct(world, oracle, x, static_cast<ResponseId>(y)) ? 1 : 0;

  const std::size_t draws = std::min(n, base.size());
  std::size_t hits = 0;
  std::vector<double> probs;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    probs = base;
    double remaining = 1.0;
    for (std::size_t d = 0; d < draws; ++d) {
      // Inverse CDF over the unnormalized remaining mass.
      const double u = rng.uniform01() * remaining;
      double acc = 0.0;
      std::size_t pick = base.size() - 1;
      for (std::size_t y = 0; y < probs.size(); ++y) {
        acc += probs[y];
        if (u < acc) {
          pick = y;
          break;
        }
      }
      if (correct[pick]) {
        ++hits;
        break;
      }
      remaining -= probs[pick];
      probs[pick] = 0.0;
      if (remaining <= 0.0) break;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(trials);
}

double mean_recall_at_n(const BiEncoderPolicy& policy, const RewardOracle& oracle, std::size_t n,
                        double temperature) {
  const std::size_t prompts = policy.world().num_prompts();
  double acc = 0.0;
  for (std::size_t x = 0; x < prompts; ++x)
    acc += recall_at_n_exact(policy, oracle, static_cast<PromptId>(x), n, temperature);
  return acc / static_cast<double>(prompts);
}

double greedy_accuracy(const BiEncoderPolicy& policy, const RewardOracle& oracle) {
  const auto& world = policy.world();
  std::size_t hits = 0;
  for (std::size_t x = 0; x < world.num_prompts(); ++x) {
    const auto px = static_cast<PromptId>(x);
    if (is_correct(world, oracle, px, policy.greedy(px))) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(world.num_prompts());
}

double expected_reward(const BiEncoderPolicy& policy, const RewardOracle& oracle,
                       double temperature) {
  const auto& world = policy.world();
  double acc = 0.0;
  std::vector<double> probs;
  for (std::size_t x = 0; x < world.num_prompts(); ++x) {
    const auto px = static_cast<PromptId>(x);
    policy.prob_table(px, temperature, probs);
    double per_prompt = 0.0;
    for (std::size_t y = 0; y < probs.size(); ++y)
      per_prompt += probs[y] * reward(world, oracle, px, static_cast<ResponseId>(y));
    acc += per_prompt;
  }
  return acc / static_cast<double>(world.num_prompts());
}

double winrate(const BiEncoderPolicy& policy_a, const BiEncoderPolicy& policy_b,
               const RewardOracle& oracle, double temperature) {
  const auto& world = policy_a.world();
  if (&world != &policy_b.world())
    throw InvalidArgument("winrate: policies must share a world");
  const std::size_t r = world.num_responses();

  double acc = 0.0;
  std::vector<double> pa, pb, rewards(r);
  std::vector<std::size_t> order(r);
  for (std::size_t x = 0; x < world.num_prompts(); ++x) {
    const auto px = static_cast<PromptId>(x);
    policy_a.prob_table(px, temperature, pa);
    policy_b.prob_table(px, temperature, pb);
    for (std::size_t y = 0; y < r; ++y)
      rewards[y] = reward(world, oracle, px, static_cast<ResponseId>(y));

    // Group responses by exact reward, ascending; for each member y of a
    // group, P(r_b < r_y) is the mass below the group and ties count half.
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return rewards[i] < rewards[j]; });
    double below = 0.0;
    double per_prompt = 0.0;
    std::size_t i = 0;
    while (i < r) {
      std::size_t j = i;
      double group_b = 0.0;
      while (j < r && rewards[order[j]] == rewards[order[i]]) group_b += pb[order[j++]];
      for (std::size_t t = i; t < j; ++t)
        per_prompt += pa[order[t]] * (below + 0.5 * group_b);
      below += group_b;
      i = j;
    }
    acc += per_prompt;
  }
  return acc / static_cast<double>(world.num_prompts());
}

EvalReport evaluate(const BiEncoderPolicy& policy, const RewardOracle& oracle,
                    const BiEncoderPolicy* baseline, const EvalOptions& opts) {
  EvalReport report;
  report.greedy_accuracy = greedy_accuracy(policy, oracle);
  report.expected_reward = expected_reward(policy, oracle, 1.0);
  report.recall_temperature = 1.0;
  for (std::size_t n : {1u, 10u, 50u}) {
    if (opts.recall_without_replacement) {
      const std::size_t prompts = policy.world().num_prompts();
      double acc = 0.0;
      for (std::size_t x = 0; x < prompts; ++x) {
        Rng rng(mix_seed(opts.seed, {0x7ec4, n, x}));
        acc += recall_at_n_mc_noreplace(policy, oracle, static_cast<PromptId>(x), n, 1.0,
                                        opts.mc_trials, rng);
      }
      report.recall_at[n] = acc / static_cast<double>(prompts);
    } else {
      report.recall_at[n] = mean_recall_at_n(policy, oracle, n, 1.0);
    }
  }
  if (baseline != nullptr) report.winrate_vs_ref = winrate(policy, *baseline, oracle, 1.0);
  return report;
}

}  // namespace larpo
