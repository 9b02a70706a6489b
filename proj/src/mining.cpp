#include "larpo/mining.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "larpo/errors.hpp"

namespace larpo {

HardnessLevel hardness_from_string(const std::string& name) {
  if (name == "easiest") return HardnessLevel::Easiest;
  if (name == "easy") return HardnessLevel::Easy;
  if (name == "hard") return HardnessLevel::Hard;
  if (name == "hardest") return HardnessLevel::Hardest;
  throw InvalidArgument("unknown hardness level '" + name + "'");
}

std::string to_string(HardnessLevel level) {
  switch (level) {
    case HardnessLevel::Easiest: return "easiest";
    case HardnessLevel::Easy: return "easy";
    case HardnessLevel::Hard: return "hard";
    case HardnessLevel::Hardest: return "hardest";
  }
  throw InvalidArgument("bad hardness level");
}

Memorization memorization_from_string(const std::string& name) {
  if (name == "current_only") return Memorization::CurrentOnly;
  if (name == "current_plus_prev") return Memorization::CurrentPlusPrev;
  if (name == "current_plus_all_prev") return Memorization::CurrentPlusAllPrev;
  throw InvalidArgument("unknown memorization mode '" + name + "'");
}

std::string to_string(Memorization mode) {
  switch (mode) {
    case Memorization::CurrentOnly: return "current_only";
    case Memorization::CurrentPlusPrev: return "current_plus_prev";
    case Memorization::CurrentPlusAllPrev: return "current_plus_all_prev";
  }
  throw InvalidArgument("bad memorization mode");
}

void CandidatePool::add_iteration(std::span<const ResponseId> fresh) {
  std::vector<ResponseId> distinct;
  distinct.reserve(fresh.size());
  for (ResponseId y : fresh) {
    if (std::find(distinct.begin(), distinct.end(), y) == distinct.end()) distinct.push_back(y);
  }
  per_iteration.push_back(std::move(distinct));
}

ResponseId make_negative(const SyntheticWorld& world, const BiEncoderPolicy& policy, PromptId x,
                         HardnessLevel level, double t_hi, double t_lo, Rng& rng) {
  world.check_prompt(x);
  if (!(t_lo < t_hi)) throw InvalidArgument("make_negative: need t_lo < t_hi");
  const auto& cluster = world.clusters[static_cast<std::size_t>(world.cluster_of[
      static_cast<std::size_t>(x)])];

  switch (level) {
    case HardnessLevel::Easiest: {
      // Uniform over responses that are gold for no prompt in x's cluster.
      std::set<ResponseId> forbidden;
      for (PromptId p : cluster) forbidden.insert(world.gold_of(p));
      for (int draw = 0; draw < kRejectionCap; ++draw) {
        const auto y = static_cast<ResponseId>(rng.uniform_int(world.num_responses()));
        if (!forbidden.contains(y)) return y;
      }
      throw ExhaustedRejection("make_negative: no non-gold response found");
    }
    case HardnessLevel::Easy: {
      std::vector<ResponseId> other_golds;
      for (PromptId p : cluster) {
        if (p != x) other_golds.push_back(world.gold_of(p));
      }
      if (other_golds.empty())
        throw EmptyCluster("make_negative: prompt's cluster has no other member");
      return other_golds[rng.uniform_int(other_golds.size())];
    }
    case HardnessLevel::Hard:
    case HardnessLevel::Hardest: {
      const double t = level == HardnessLevel::Hard ? t_hi : t_lo;
      std::vector<double> probs;
      policy.prob_table(x, t, probs);
      for (int draw = 0; draw < kRejectionCap; ++draw) {
        const ResponseId y = sample_index(probs, rng);
        if (y != world.gold_of(x)) return y;
      }
      throw ExhaustedRejection(
          "make_negative: policy too accurate at this temperature (cap " +
          std::to_string(kRejectionCap) + " draws)");
    }
  }
  throw InvalidArgument("bad hardness level");
}

std::vector<ResponseId> build_candidates(const CandidatePool& pool, Memorization mode,
                                         std::size_t iteration,
                                         std::span<const ResponseId> fresh) {
  if (fresh.empty()) throw InvalidArgument("build_candidates: fresh draws must be nonempty");
  if (pool.per_iteration.size() != iteration)
    throw InvalidArgument("build_candidates: pool holds " +
                          std::to_string(pool.per_iteration.size()) +
                          " past iterations, expected " + std::to_string(iteration));

  std::vector<ResponseId> merged;
  std::set<ResponseId> seen;
  const auto take = [&](std::span<const ResponseId> ids) {
    for (ResponseId y : ids) {
      if (seen.insert(y).second) merged.push_back(y);
    }
  };

  // History first, oldest first: dedupe keeps the earliest iteration tag.
  switch (mode) {
    case Memorization::CurrentOnly:
      break;
    case Memorization::CurrentPlusPrev:
      if (iteration >= 1) take(pool.per_iteration[iteration - 1]);
      break;
    case Memorization::CurrentPlusAllPrev:
      for (const auto& past : pool.per_iteration) take(past);
      break;
  }
  take(fresh);
  return merged;
}

RankedList rank_candidates(const SyntheticWorld& world, const RewardOracle& oracle, PromptId x,
                           std::span<const ResponseId> ids) {
  if (ids.empty()) throw InvalidArgument("rank_candidates: ids must be nonempty");
  std::set<ResponseId> distinct(ids.begin(), ids.end());
  if (distinct.size() != ids.size())
    throw InvalidArgument("rank_candidates: ids must be distinct");

  RankedList rl;
  rl.prompt = x;
  rl.ids.assign(ids.begin(), ids.end());
  std::vector<double> rewards(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) rewards[i] = reward(world, oracle, x, ids[i]);

  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rewards[a] != rewards[b]) return rewards[a] > rewards[b];
    return rl.ids[a] < rl.ids[b];
  });

  RankedList sorted;
  sorted.prompt = x;
  sorted.ids.reserve(ids.size());
  sorted.rewards.reserve(ids.size());
  for (std::size_t i : order) {
    sorted.ids.push_back(rl.ids[i]);
    sorted.rewards.push_back(rewards[i]);
  }
  return sorted;
}

PreferenceExample select_training_slice(const RankedList& rl, SliceSpec slice) {
  if (slice.n_pos < 1 || slice.n_neg < 1)
    throw InvalidArgument("select_training_slice: slice widths must be >= 1");
  const std::size_t need = slice.n_pos + slice.n_neg;
  if (rl.size() < need)
    throw ListTooShort("select_training_slice: list has " + std::to_string(rl.size()) +
                       " entries, slice needs " + std::to_string(need));

  PreferenceExample ex;
  ex.prompt = rl.prompt;
  ex.n_pos = slice.n_pos;
  ex.n_neg = slice.n_neg;
  ex.list.prompt = rl.prompt;
  const std::size_t m = rl.size();
  for (std::size_t i = 0; i < slice.n_pos; ++i) {
    ex.list.ids.push_back(rl.ids[i]);
    ex.list.rewards.push_back(rl.rewards[i]);
  }
  for (std::size_t i = m - slice.n_neg; i < m; ++i) {
    ex.list.ids.push_back(rl.ids[i]);
    ex.list.rewards.push_back(rl.rewards[i]);
  }
  return ex;
}

double mean_negative_log_prob(const SyntheticWorld& world, const BiEncoderPolicy& policy,
                              HardnessLevel level, double t_hi, double t_lo, std::size_t draws,
                              std::uint64_t seed) {
  if (draws < 1) throw InvalidArgument("mean_negative_log_prob: draws must be >= 1");
  Rng rng(mix_seed(seed, {static_cast<std::uint64_t>(level)}));
  double acc = 0.0;
  PromptId x = 0;
  std::size_t done = 0;
  // Round-robin over prompts so every cluster contributes.
  std::vector<std::vector<double>> tables(world.num_prompts());
  while (done < draws) {
    if (tables[static_cast<std::size_t>(x)].empty())
      policy.log_prob_table(x, 1.0, tables[static_cast<std::size_t>(x)]);
    const ResponseId y = make_negative(world, policy, x, level, t_hi, t_lo, rng);
    acc += tables[static_cast<std::size_t>(x)][static_cast<std::size_t>(y)];
    ++done;
    x = static_cast<PromptId>((x + 1) % static_cast<PromptId>(world.num_prompts()));
  }
  return acc / static_cast<double>(draws);
}

}  // namespace larpo
