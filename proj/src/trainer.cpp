#include "larpo/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "larpo/errors.hpp"
#include "larpo/kernels.hpp"
#include "larpo/parallel.hpp"

namespace larpo {

RefMode ref_mode_from_string(const std::string& name) {
  if (name == "behavior") return RefMode::Behavior;
  if (name == "initial") return RefMode::Initial;
  throw InvalidArgument("unknown ref_mode '" + name + "'");
}

std::string to_string(RefMode mode) {
  return mode == RefMode::Behavior ? "behavior" : "initial";
}

NegativeSource negative_source_from_string(const std::string& name) {
  if (name == "ranked") return NegativeSource::Ranked;
  if (name == "mined") return NegativeSource::Mined;
  throw InvalidArgument("unknown negative_source '" + name + "'");
}

std::string to_string(NegativeSource source) {
  return source == NegativeSource::Ranked ? "ranked" : "mined";
}

void TrainConfig::finalize() {
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (prompts_per_iter < 1) throw ConfigError("prompts_per_iter must be >= 1");
  if (k < 2) throw ConfigError("k must be >= 2");
  if (temperatures.empty()) {
    temperatures.assign(iterations, 1.0);
  } else if (temperatures.size() == 1) {
    temperatures.assign(iterations, temperatures[0]);
  } else if (temperatures.size() != iterations) {
    throw ConfigError("temperatures must have 1 or `iterations` entries");
  }
  for (double t : temperatures) {
    if (!(t > 0.0)) throw ConfigError("sampling temperatures must be > 0");
  }
  // lr = 0 is deliberately legal: the no-op trainer is the studies' tie case.
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be finite and >= 0");
  if (!(sft_lr >= 0.0) || !std::isfinite(sft_lr)) throw ConfigError("sft_lr must be finite and >= 0");
  if (!(beta > 0.0)) throw ConfigError("beta must be > 0");
  if (slice.n_pos == 0 && slice.n_neg == 0) slice = default_slice(objective);
  if (slice.n_pos < 1 || slice.n_neg < 1) throw ConfigError("n_pos and n_neg must be >= 1");
  if (objective == ObjectiveKind::Pair && (slice.n_pos != 1 || slice.n_neg != 1))
    throw ConfigError("pair objective requires n_pos = n_neg = 1");
  if (!(t_lo < t_hi)) throw ConfigError("t_lo must be < t_hi");
  if (!(t_lo > 0.0)) throw ConfigError("t_lo must be > 0");
  if (!(init_std >= 0.0)) throw ConfigError("init_std must be >= 0");
  if (mc_trials < 1) throw ConfigError("mc_trials must be >= 1");
}

namespace {

void check_finite(const BiEncoderPolicy& policy, double loss, const std::string& where) {
  if (!std::isfinite(loss)) throw Divergence(where + ": loss is not finite");
  if (!policy.all_finite()) throw Divergence(where + ": weights are not finite");
}

// Estimator-mode SFT negatives: the other prompts' golds (in-batch) plus a
// few fresh policy draws (hard), all distinct and never the gold itself.
std::vector<ResponseId> sft_negatives(const SyntheticWorld& world,
                                      const BiEncoderPolicy& policy, PromptId x,
                                      const TrainConfig& config, Rng& rng) {
  const ResponseId gold = world.gold_of(x);
  std::set<ResponseId> chosen;
  for (std::size_t p = 0; p < world.num_prompts(); ++p) {
    const ResponseId g = world.gold_of(static_cast<PromptId>(p));
    if (g != gold) chosen.insert(g);
  }
  if (config.sft_hard_negatives > 0) {
    std::vector<double> probs;
    policy.prob_table(x, config.t_hi, probs);
    std::size_t added = 0;
    for (int draw = 0; draw < kRejectionCap && added < config.sft_hard_negatives; ++draw) {
      const ResponseId y = sample_index(probs, rng);
      if (y != gold && chosen.insert(y).second) ++added;
    }
  }
  return {chosen.begin(), chosen.end()};
}

struct ExampleBatch {
  std::vector<PreferenceExample> examples;
  double duplicate_rate = 0.0;
};

// One iteration's data: sample, merge with history, rank, slice.
ExampleBatch build_iteration_examples(const SyntheticWorld& world,
                                      const BiEncoderPolicy& behavior,
                                      const RewardOracle& oracle, const TrainConfig& config,
                                      std::vector<CandidatePool>& pools, std::size_t s,
                                      Counters& counters) {
  const std::size_t num_prompts = world.num_prompts();
  const double t_s = config.temperatures[s];

  // Annotation set: every prompt when M covers them all, otherwise a
  // without-replacement sample of M prompts.
  std::vector<PromptId> annotate;
  if (config.prompts_per_iter >= num_prompts) {
    annotate.resize(num_prompts);
    for (std::size_t x = 0; x < num_prompts; ++x) annotate[x] = static_cast<PromptId>(x);
  } else {
    std::vector<PromptId> all(num_prompts);
    for (std::size_t x = 0; x < num_prompts; ++x) all[x] = static_cast<PromptId>(x);
    Rng subset_rng(mix_seed(config.seed, {2, s}));
    for (std::size_t i = 0; i < config.prompts_per_iter; ++i) {
      const std::size_t j = i + subset_rng.uniform_int(all.size() - i);
      std::swap(all[i], all[j]);
    }
    annotate.assign(all.begin(),
                    all.begin() + static_cast<std::ptrdiff_t>(config.prompts_per_iter));
    std::sort(annotate.begin(), annotate.end());
  }

  ExampleBatch batch;
  std::size_t total_draws = 0, duplicate_draws = 0;
  std::vector<char> annotated(num_prompts, 0);
  for (PromptId x : annotate) {
    annotated[static_cast<std::size_t>(x)] = 1;
    Rng draw_rng(mix_seed(config.seed, {1, s, static_cast<std::uint64_t>(x)}));
    const std::vector<ResponseId> fresh = behavior.sample(x, t_s, config.k, draw_rng);
    total_draws += fresh.size();
    {
      const std::set<ResponseId> distinct(fresh.begin(), fresh.end());
      duplicate_draws += fresh.size() - distinct.size();
    }

    auto& pool = pools[static_cast<std::size_t>(x)];
    const std::vector<ResponseId> merged =
        build_candidates(pool, config.memorization, s, fresh);
    pool.add_iteration(fresh);

    counters.sample_draws += fresh.size();

    if (config.negative_source == NegativeSource::Ranked) {
      const RankedList rl = rank_candidates(world, oracle, x, merged);
      counters.oracle_calls += merged.size();
      try {
        batch.examples.push_back(select_training_slice(rl, config.slice));
      } catch (const ListTooShort&) {
        // Degenerate (duplicate-heavy) list: the prompt sits out this round.
      }
      continue;
    }

    // Mined negatives: positives stay the reward-top of the sampled list,
    // negatives are drawn at the configured hardness level.
    const RankedList rl = rank_candidates(world, oracle, x, merged);
    counters.oracle_calls += merged.size();
    if (rl.size() < config.slice.n_pos) continue;
    std::vector<ResponseId> ids(rl.ids.begin(),
                                rl.ids.begin() + static_cast<std::ptrdiff_t>(config.slice.n_pos));
    Rng mine_rng(mix_seed(config.seed, {3, s, static_cast<std::uint64_t>(x)}));
    // A concentrated policy can keep re-drawing the same few ids; when the
    // attempt budget runs out we train on the distinct negatives we did get
    // (the prompt is skipped if there are none) rather than aborting the run.
    std::size_t added = 0;
    int attempts = 0;
    while (added < config.slice.n_neg && ++attempts <= kRejectionCap) {
      const ResponseId y = make_negative(world, behavior, x, config.hardness, config.t_hi,
                                         config.t_lo, mine_rng);
      if (std::find(ids.begin(), ids.end(), y) == ids.end()) {
        ids.push_back(y);
        ++added;
      }
    }
    if (added == 0) continue;
    const RankedList combined = rank_candidates(world, oracle, x, ids);
    counters.oracle_calls += ids.size();
    PreferenceExample ex;
    ex.prompt = x;
    ex.list = combined;
    ex.n_pos = config.slice.n_pos;
    ex.n_neg = added;
    batch.examples.push_back(std::move(ex));
  }

  // Prompts that sat out still advance their history depth, keeping every
  // pool aligned with the global iteration index.
  for (std::size_t x = 0; x < num_prompts; ++x) {
    if (!annotated[x]) pools[x].add_iteration({});
  }

  counters.duplicate_draws += duplicate_draws;
  batch.duplicate_rate =
      total_draws == 0 ? 0.0
                       : static_cast<double>(duplicate_draws) / static_cast<double>(total_draws);
  return batch;
}

// Mean loss and mean gradient over the batch; per-example terms are computed
// in parallel slots, reduced in index order for bit-stable results.
double batch_gradient(const BiEncoderPolicy& policy, const BiEncoderPolicy& ref,
                      const std::vector<PreferenceExample>& examples, const TrainConfig& config,
                      Mat& grad_out) {
  const std::size_t n = examples.size();
  std::vector<LossGrad> slots(n);
  parallel_for(n, [&](std::size_t i) {
    slots[i] = preference_loss_grad(config.objective, policy, ref, examples[i].prompt,
                                    examples[i].list.ids, config.beta);
  });
  const double scale = 1.0 / static_cast<double>(n);
  grad_out = Mat(policy.dim(), policy.dim());
  double loss = 0.0;
  for (const LossGrad& lg : slots) {
    loss += lg.loss;
    kernels::axpy(scale, lg.grad.data(), grad_out.data(), grad_out.size());
  }
  return loss * scale;
}

}  // namespace

SftResult sft_phase(BiEncoderPolicy policy, const SyntheticWorld& world,
                    const TrainConfig& config) {
  if (&policy.world() != &world) throw InvalidArgument("sft_phase: policy/world mismatch");
  SftResult result{std::move(policy), {}, {}};
  const std::size_t num_prompts = world.num_prompts();

  for (std::size_t step = 0; step < config.sft_steps; ++step) {
    std::vector<LossGrad> slots(num_prompts);
    if (config.sft_exact) {
      parallel_for(num_prompts, [&](std::size_t x) {
        slots[x] = sft_loss_grad(result.policy, static_cast<PromptId>(x),
                                 world.gold_of(static_cast<PromptId>(x)), {});
      });
    } else {
      parallel_for(num_prompts, [&](std::size_t x) {
        const auto px = static_cast<PromptId>(x);
        Rng rng(mix_seed(config.seed, {4, step, x}));
        const auto negatives = sft_negatives(world, result.policy, px, config, rng);
        slots[x] = sft_loss_grad(result.policy, px, world.gold_of(px), negatives);
      });
    }
    Mat grad(world.embed_dim, world.embed_dim);
    double loss = 0.0;
    const double scale = 1.0 / static_cast<double>(num_prompts);
    for (const LossGrad& lg : slots) {
      loss += lg.loss;
      kernels::axpy(scale, lg.grad.data(), grad.data(), grad.size());
    }
    loss *= scale;
    result.policy.update(grad, config.sft_lr);
    result.counters.gradient_updates += 1;
    check_finite(result.policy, loss, "sft step " + std::to_string(step));
    result.step_losses.push_back(loss);
  }
  return result;
}

TrainResult larpo_train(BiEncoderPolicy policy, const SyntheticWorld& world,
                        const RewardOracle& oracle, const TrainConfig& config,
                        const BiEncoderPolicy* baseline) {
  if (&policy.world() != &world) throw InvalidArgument("larpo_train: policy/world mismatch");

  TrainResult result{std::move(policy), {}, {}};
  const BiEncoderPolicy initial = result.policy;  // frozen copy
  const BiEncoderPolicy* wr_baseline = baseline != nullptr ? baseline : &initial;

  std::vector<CandidatePool> pools(world.num_prompts());
  for (std::size_t x = 0; x < world.num_prompts(); ++x)
    pools[x].prompt = static_cast<PromptId>(x);

  for (std::size_t s = 0; s < config.iterations; ++s) {
    const auto started = std::chrono::steady_clock::now();

    // Alg. 1 "Update behavior LLM": one frozen snapshot serves both the
    // sampler and (under ref_mode = behavior) the log-ratio reference.
    const BiEncoderPolicy behavior = result.policy;
    const BiEncoderPolicy& ref = config.ref_mode == RefMode::Behavior ? behavior : initial;

    ExampleBatch batch = build_iteration_examples(world, behavior, oracle, config, pools, s,
                                                  result.counters);
    if (batch.examples.empty())
      throw EmptyDataset("iteration " + std::to_string(s) +
                         ": every candidate list was degenerate");

    IterationRecord record;
    record.iteration = s;
    record.dataset_size = batch.examples.size();
    record.duplicate_rate = batch.duplicate_rate;

    for (std::size_t epoch = 0; epoch < config.epochs_per_iter; ++epoch) {
      Mat grad;
      const double loss = batch_gradient(result.policy, ref, batch.examples, config, grad);
      result.policy.update(grad, config.lr);
      result.counters.gradient_updates += 1;
      check_finite(result.policy, loss,
                   "iteration " + std::to_string(s) + " epoch " + std::to_string(epoch));
      record.epoch_losses.push_back(loss);
    }

    EvalOptions opts;
    opts.recall_without_replacement = config.recall_without_replacement;
    opts.mc_trials = config.mc_trials;
    opts.seed = mix_seed(config.seed, {5, s});
    record.eval = evaluate(result.policy, oracle, wr_baseline, opts);

    record.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.records.push_back(std::move(record));
  }
  return result;
}

}  // namespace larpo
