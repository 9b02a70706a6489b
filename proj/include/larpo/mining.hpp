#pragma once

#include <span>
#include <string>
#include <vector>

#include "larpo/objectives.hpp"
#include "larpo/policy.hpp"
#include "larpo/rng.hpp"
#include "larpo/world.hpp"

namespace larpo {

// Negative difficulty, ordered. Easiest/Easy use world structure only; Hard
// and Hardest sample the policy's own distribution (the lower temperature
// concentrates draws near the policy's preferences, producing negatives it
// finds harder to distinguish from its top choice).
enum class HardnessLevel { Easiest, Easy, Hard, Hardest };

HardnessLevel hardness_from_string(const std::string& name);
std::string to_string(HardnessLevel level);

// How much sampling history feeds the candidate list each iteration.
enum class Memorization { CurrentOnly, CurrentPlusPrev, CurrentPlusAllPrev };

Memorization memorization_from_string(const std::string& name);
std::string to_string(Memorization mode);

// Per-prompt sampling history: one distinct-id set per completed iteration.
struct CandidatePool {
  PromptId prompt = 0;
  std::vector<std::vector<ResponseId>> per_iteration;

  // Records an iteration's fresh draws, deduplicated preserving draw order.
  void add_iteration(std::span<const ResponseId> fresh);
};

// One training example: a reward-ranked (sub)list plus the slice widths that
// produced it.
struct PreferenceExample {
  PromptId prompt = 0;
  RankedList list;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

// Draw cap for rejection sampling before exhausted-rejection is raised.
inline constexpr int kRejectionCap = 1000;

// One negative at the requested level.
//   Easiest: uniform over responses that are gold for no prompt in x's cluster
//   Easy:    gold of another prompt in x's cluster
//   Hard:    draw from pi_{t_hi}(.|x), rejecting correct responses
//   Hardest: draw from pi_{t_lo}(.|x), rejecting correct responses
ResponseId make_negative(const SyntheticWorld& world, const BiEncoderPolicy& policy, PromptId x,
                         HardnessLevel level, double t_hi, double t_lo, Rng& rng);

// Merged candidate ids for iteration `iteration` given this iteration's fresh
// draws, per the memorization mode. Duplicates collapse onto their earliest
// appearance, so output order is (iteration tag, draw order).
std::vector<ResponseId> build_candidates(const CandidatePool& pool, Memorization mode,
                                         std::size_t iteration,
                                         std::span<const ResponseId> fresh);

// Sorts ids by descending oracle reward (ties toward the smaller id) and
// records the reward values.
RankedList rank_candidates(const SyntheticWorld& world, const RewardOracle& oracle, PromptId x,
                           std::span<const ResponseId> ids);

// Keeps the reward-top n_pos and reward-bottom n_neg entries of a ranked
// list, preserving rank order.
PreferenceExample select_training_slice(const RankedList& rl, SliceSpec slice);

// Monte-Carlo mean of log pi_theta(negative|x) at the given level, averaged
// over draws spread across all prompts. The hardness metric behind the
// level-ordering diagnostics.
double mean_negative_log_prob(const SyntheticWorld& world, const BiEncoderPolicy& policy,
                              HardnessLevel level, double t_hi, double t_lo, std::size_t draws,
                              std::uint64_t seed);

}  // namespace larpo
