#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "larpo/eval.hpp"
#include "larpo/mining.hpp"
#include "larpo/objectives.hpp"
#include "larpo/policy.hpp"
#include "larpo/world.hpp"

namespace larpo {

// Where the frozen reference policy in gamma comes from: the per-iteration
// behavior snapshot (default) or the initial (post-SFT) policy.
enum class RefMode { Behavior, Initial };

RefMode ref_mode_from_string(const std::string& name);
std::string to_string(RefMode mode);

// How negatives enter a training example: the reward-bottom of the sampled
// candidate list (default), or mined at a fixed hardness level.
enum class NegativeSource { Ranked, Mined };

NegativeSource negative_source_from_string(const std::string& name);
std::string to_string(NegativeSource source);

struct TrainConfig {
  // Iterative phase.
  std::size_t iterations = 3;        // T
  std::size_t prompts_per_iter = 64; // M; all prompts when M >= P
  std::size_t k = 10;                // fresh draws per prompt per iteration
  std::vector<double> temperatures;  // per-iteration sampling temperature;
                                     // empty = all 1.0
  double lr = 0.1;
  std::size_t epochs_per_iter = 2;   // full-batch updates per iteration
  double beta = 0.1;
  ObjectiveKind objective = ObjectiveKind::Contrastive;
  SliceSpec slice{0, 0};             // zero = use the objective's default
  Memorization memorization = Memorization::CurrentPlusAllPrev;
  NegativeSource negative_source = NegativeSource::Ranked;
  HardnessLevel hardness = HardnessLevel::Hard;  // used by Mined only
  double t_hi = 1.0;
  double t_lo = 0.7;
  RefMode ref_mode = RefMode::Behavior;
  std::uint64_t seed = 0;

  // SFT phase.
  std::size_t sft_steps = 200;       // full-batch updates
  double sft_lr = 0.5;
  bool sft_exact = true;             // full-corpus softmax vs estimator
  std::size_t sft_hard_negatives = 4;  // estimator mode: policy draws per prompt
  double init_std = 0.01;            // starting-weight scale

  // Eval plumbing.
  bool recall_without_replacement = false;
  std::size_t mc_trials = 2000;  // without-replacement estimator only

  // Fills slice/temperatures defaults and validates every invariant;
  // throws ConfigError on violation.
  void finalize();
};

struct IterationRecord {
  std::size_t iteration = 0;
  std::size_t dataset_size = 0;      // prompts that yielded a usable example
  double duplicate_rate = 0.0;       // duplicate fraction of this iteration's draws
  std::vector<double> epoch_losses;  // mean training loss per epoch
  EvalReport eval;
  double wall_time_seconds = 0.0;
};

// Work counters for budget-parity accounting across study arms.
struct Counters {
  std::uint64_t gradient_updates = 0;  // policy.update calls
  std::uint64_t oracle_calls = 0;      // reward evaluations during ranking
  std::uint64_t sample_draws = 0;
  std::uint64_t duplicate_draws = 0;
};

struct TrainResult {
  BiEncoderPolicy policy;
  std::vector<IterationRecord> records;
  Counters counters;
};

struct SftResult {
  BiEncoderPolicy policy;
  std::vector<double> step_losses;
  Counters counters;
};

// Gradient descent on the SFT/InfoNCE loss over all prompts.
SftResult sft_phase(BiEncoderPolicy policy, const SyntheticWorld& world,
                    const TrainConfig& config);

// The iterative loop: per iteration, snapshot the behavior policy, sample k
// responses per prompt at t_s, merge with history per the memorization mode,
// rank by reward, slice per the objective, then run full-batch updates
// against the frozen reference. `baseline` (usually the SFT policy) feeds
// the winrate column of each iteration's eval.
TrainResult larpo_train(BiEncoderPolicy policy, const SyntheticWorld& world,
                        const RewardOracle& oracle, const TrainConfig& config,
                        const BiEncoderPolicy* baseline = nullptr);

}  // namespace larpo
