#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "larpo/errors.hpp"
#include "larpo/eval.hpp"
#include "larpo/trainer.hpp"

using namespace larpo;

namespace {

SyntheticWorld small_world() {
  WorldParams p;
  p.prompts = 12;
  p.responses = 48;
  p.embed_dim = 8;
  p.clusters = 3;
  p.seed = 7;
  return generate_world(p);
}

}  // namespace

TEST_CASE("finalize fills slice and temperature defaults") {
  TrainConfig c;
  c.iterations = 4;
  c.objective = ObjectiveKind::LambdaRank;
  c.finalize();
  CHECK(c.slice.n_pos == 2);
  CHECK(c.slice.n_neg == 2);
  REQUIRE(c.temperatures.size() == 4);
  for (double t : c.temperatures) CHECK(t == 1.0);

  TrainConfig b;
  b.iterations = 3;
  b.temperatures = {0.5};
  b.finalize();
  CHECK(b.temperatures == std::vector<double>{0.5, 0.5, 0.5});
  CHECK(b.slice.n_pos == 1);  // contrastive default
  CHECK(b.slice.n_neg == 3);
}

TEST_CASE("finalize rejects invalid configurations") {
  const auto bad = [](auto&& mutate) {
    TrainConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.finalize(), ConfigError);
  };
  bad([](TrainConfig& c) { c.iterations = 0; });
  bad([](TrainConfig& c) { c.prompts_per_iter = 0; });
  bad([](TrainConfig& c) { c.k = 1; });
  bad([](TrainConfig& c) { c.temperatures = {1.0, 1.0}; });  // iterations = 3
  bad([](TrainConfig& c) { c.temperatures = {0.0}; });
  bad([](TrainConfig& c) { c.lr = -0.1; });
  bad([](TrainConfig& c) { c.beta = 0.0; });
  bad([](TrainConfig& c) { c.slice = {0, 2}; });
  bad([](TrainConfig& c) {
    c.objective = ObjectiveKind::Pair;
    c.slice = {2, 1};
  });
  bad([](TrainConfig& c) { c.t_lo = 1.0; });  // t_hi = 1.0
  bad([](TrainConfig& c) { c.init_std = -1.0; });
}

TEST_CASE("ref mode and negative source names round trip") {
  CHECK(ref_mode_from_string("behavior") == RefMode::Behavior);
  CHECK(ref_mode_from_string("initial") == RefMode::Initial);
  CHECK(to_string(RefMode::Initial) == "initial");
  CHECK_THROWS_AS(ref_mode_from_string("self"), InvalidArgument);
  CHECK(negative_source_from_string("ranked") == NegativeSource::Ranked);
  CHECK(negative_source_from_string("mined") == NegativeSource::Mined);
  CHECK(to_string(NegativeSource::Mined) == "mined");
  CHECK_THROWS_AS(negative_source_from_string("random"), InvalidArgument);
}

TEST_CASE("sft with zero steps is a no-op") {
  const auto world = small_world();
  auto policy = BiEncoderPolicy::init_random(world, 0.01, 1);
  const Mat before = policy.weights();
  TrainConfig c;
  c.sft_steps = 0;
  c.finalize();
  const SftResult r = sft_phase(std::move(policy), world, c);
  CHECK(r.policy.weights() == before);
  CHECK(r.step_losses.empty());
  CHECK(r.counters.gradient_updates == 0);
}

TEST_CASE("exact sft drives loss down and accuracy up") {
  const auto world = small_world();
  const auto oracle = RewardOracle::dot_to_gold();
  auto policy = BiEncoderPolicy::init_random(world, 0.01, 1);
  const double acc_before = greedy_accuracy(policy, oracle);

  TrainConfig c;
  c.sft_steps = 60;
  c.sft_lr = 0.5;
  c.finalize();
  const SftResult r = sft_phase(std::move(policy), world, c);
  REQUIRE(r.step_losses.size() == 60);
  CHECK(r.step_losses.back() < 0.5 * r.step_losses.front());
  CHECK(r.counters.gradient_updates == 60);
  CHECK(greedy_accuracy(r.policy, oracle) > acc_before + 0.3);
}

TEST_CASE("estimator sft also trains") {
  const auto world = small_world();
  const auto oracle = RewardOracle::dot_to_gold();
  auto policy = BiEncoderPolicy::init_random(world, 0.01, 1);
  const double acc_before = greedy_accuracy(policy, oracle);

  TrainConfig c;
  c.sft_steps = 60;
  c.sft_lr = 0.5;
  c.sft_exact = false;
  c.sft_hard_negatives = 4;
  c.finalize();
  const SftResult r = sft_phase(std::move(policy), world, c);
  for (double loss : r.step_losses) CHECK(std::isfinite(loss));
  CHECK(r.step_losses.back() < r.step_losses.front());
  CHECK(greedy_accuracy(r.policy, oracle) >= acc_before);
}

TEST_CASE("zero learning rate leaves the policy and metrics frozen") {
  const auto world = small_world();
  const auto oracle = RewardOracle::dot_to_gold();
  auto policy = BiEncoderPolicy::init_perturbed(world, 0.05, 3);
  const Mat before = policy.weights();

  TrainConfig c;
  c.iterations = 2;
  c.epochs_per_iter = 1;
  c.lr = 0.0;
  c.k = 10;
  c.seed = 11;
  c.finalize();
  const TrainResult r = larpo_train(std::move(policy), world, oracle, c);
  CHECK(r.policy.weights() == before);
  REQUIRE(r.records.size() == 2);
  const auto& e0 = r.records[0].eval;
  const auto& e1 = r.records[1].eval;
  CHECK(e0.greedy_accuracy == e1.greedy_accuracy);
  CHECK(e0.expected_reward == e1.expected_reward);
  CHECK(e0.recall_at == e1.recall_at);
  // The default winrate baseline is the initial policy, i.e. itself.
  CHECK(e0.winrate_vs_ref == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(e1.winrate_vs_ref == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("iterative training improves on the sft starting point") {
  const auto world = small_world();
  const auto oracle = RewardOracle::dot_to_gold();

  TrainConfig c;
  c.sft_steps = 15;  // partial sft: leaves headroom
  c.sft_lr = 0.5;
  c.iterations = 3;
  c.epochs_per_iter = 2;
  c.k = 10;
  c.lr = 0.1;
  c.seed = 5;
  c.objective = ObjectiveKind::Contrastive;
  c.finalize();

  const SftResult sft = sft_phase(BiEncoderPolicy::init_random(world, 0.01, 2), world, c);
  const EvalReport base = evaluate(sft.policy, oracle);
  const TrainResult r = larpo_train(sft.policy, world, oracle, c, &sft.policy);

  REQUIRE(r.records.size() == 3);
  const EvalReport& last = r.records.back().eval;
  CHECK(last.expected_reward > base.expected_reward);
  CHECK(last.winrate_vs_ref > 0.5);
  CHECK(last.greedy_accuracy >= base.greedy_accuracy);

  // Bookkeeping: full-prompt annotation, k draws per prompt, per-epoch losses.
  for (const auto& record : r.records) {
    CHECK(record.dataset_size <= world.num_prompts());
    CHECK(record.dataset_size > 0);
    CHECK(record.duplicate_rate >= 0.0);
    CHECK(record.duplicate_rate <= 1.0);
    CHECK(record.epoch_losses.size() == 2);
    for (double loss : record.epoch_losses) CHECK(std::isfinite(loss));
    CHECK(record.wall_time_seconds >= 0.0);
  }
  CHECK(r.counters.sample_draws == 3 * world.num_prompts() * 10);
  CHECK(r.counters.gradient_updates == 3 * 2);
  CHECK(r.counters.oracle_calls > 0);
}

TEST_CASE("training is deterministic given the config seed") {
  const auto world = small_world();
  const auto oracle = RewardOracle::dot_to_gold();
  TrainConfig c;
  c.iterations = 2;
  c.k = 8;
  c.lr = 0.2;
  c.seed = 21;
  c.finalize();

  const auto run = [&] {
    return larpo_train(BiEncoderPolicy::init_perturbed(world, 0.05, 9), world, oracle, c);
  };
  const TrainResult a = run();
  const TrainResult b = run();
  CHECK(a.policy.weights() == b.policy.weights());
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].epoch_losses == b.records[i].epoch_losses);
    CHECK(a.records[i].eval.expected_reward == b.records[i].eval.expected_reward);
  }
}

TEST_CASE("every objective trains end to end") {
  const auto world = small_world();
  const auto oracle = RewardOracle::dot_to_gold();
  for (auto kind : {ObjectiveKind::Pair, ObjectiveKind::Contrastive, ObjectiveKind::LambdaRank,
                    ObjectiveKind::ListMLE}) {
    TrainConfig c;
    c.iterations = 2;
    c.k = 10;
    c.lr = 0.1;
    c.seed = 13;
    c.objective = kind;
    c.finalize();
    const TrainResult r =
        larpo_train(BiEncoderPolicy::init_perturbed(world, 0.05, 6), world, oracle, c);
    CHECK(r.records.size() == 2);
    CHECK(r.policy.all_finite());
  }
}

TEST_CASE("mined negatives train at easy and hard levels") {
  const auto world = small_world();
  const auto oracle = RewardOracle::dot_to_gold();
  for (auto level : {HardnessLevel::Easiest, HardnessLevel::Easy, HardnessLevel::Hard,
                     HardnessLevel::Hardest}) {
    TrainConfig c;
    c.iterations = 2;
    c.k = 10;
    c.lr = 0.1;
    c.seed = 17;
    c.negative_source = NegativeSource::Mined;
    c.hardness = level;
    c.t_hi = 1.0;
    c.t_lo = 0.7;
    c.finalize();
    auto policy = BiEncoderPolicy::init_perturbed(world, 0.05, 8);
    const Mat before = policy.weights();
    const TrainResult r = larpo_train(std::move(policy), world, oracle, c);
    CHECK(r.records.size() == 2);
    CHECK_FALSE(r.policy.weights() == before);
  }
}

TEST_CASE("reference mode changes the trajectory") {
  const auto world = small_world();
  const auto oracle = RewardOracle::dot_to_gold();
  const auto run = [&](RefMode mode) {
    TrainConfig c;
    c.iterations = 3;
    c.k = 10;
    c.lr = 0.2;
    c.seed = 29;
    c.ref_mode = mode;
    c.finalize();
    return larpo_train(BiEncoderPolicy::init_perturbed(world, 0.05, 12), world, oracle, c);
  };
  const TrainResult behavior = run(RefMode::Behavior);
  const TrainResult initial = run(RefMode::Initial);
  CHECK(behavior.policy.all_finite());
  CHECK(initial.policy.all_finite());
  CHECK_FALSE(behavior.policy.weights() == initial.policy.weights());
}

TEST_CASE("prompt subsampling caps the dataset size") {
  const auto world = small_world();
  const auto oracle = RewardOracle::dot_to_gold();
  TrainConfig c;
  c.iterations = 2;
  c.prompts_per_iter = 5;
  c.k = 10;
  c.lr = 0.1;
  c.seed = 31;
  c.finalize();
  const TrainResult r =
      larpo_train(BiEncoderPolicy::init_perturbed(world, 0.05, 14), world, oracle, c);
  for (const auto& record : r.records) CHECK(record.dataset_size <= 5);
  CHECK(r.counters.sample_draws == 2 * 5 * 10);
}

TEST_CASE("an exploding step raises divergence") {
  const auto world = small_world();
  const auto oracle = RewardOracle::dot_to_gold();
  TrainConfig c;
  c.iterations = 1;
  c.epochs_per_iter = 2;
  c.k = 10;
  // Gradient entries scale with beta (embeddings are unit norm), so this
  // combination overflows the first weight update past DBL_MAX.
  c.beta = 100.0;
  c.lr = 1e307;
  c.seed = 37;
  c.finalize();
  CHECK_THROWS_AS(
      larpo_train(BiEncoderPolicy::init_perturbed(world, 0.05, 16), world, oracle, c),
      Divergence);
}

TEST_CASE("near-deterministic sampling empties the dataset") {
  const auto world = small_world();
  const auto oracle = RewardOracle::dot_to_gold();
  TrainConfig c;
  c.iterations = 1;
  c.k = 10;
  c.temperatures = {1e-4};  // every draw is the argmax
  c.seed = 41;
  c.finalize();
  CHECK_THROWS_AS(larpo_train(BiEncoderPolicy::init_identity(world), world, oracle, c),
                  EmptyDataset);
}
