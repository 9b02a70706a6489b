#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "larpo/errors.hpp"
#include "larpo/mining.hpp"

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

std::set<ResponseId> cluster_golds(const SyntheticWorld& world, PromptId x) {
  std::set<ResponseId> golds;
  for (PromptId p : world.clusters[static_cast<std::size_t>(world.cluster_of[
           static_cast<std::size_t>(x)])])
    golds.insert(world.gold_of(p));
  return golds;
}

}  // namespace

TEST_CASE("hardness and memorization names round trip") {
  for (auto level : {HardnessLevel::Easiest, HardnessLevel::Easy, HardnessLevel::Hard,
                     HardnessLevel::Hardest})
    CHECK(hardness_from_string(to_string(level)) == level);
  CHECK_THROWS_AS(hardness_from_string("medium"), InvalidArgument);

  for (auto mode : {Memorization::CurrentOnly, Memorization::CurrentPlusPrev,
                    Memorization::CurrentPlusAllPrev})
    CHECK(memorization_from_string(to_string(mode)) == mode);
  CHECK_THROWS_AS(memorization_from_string("all"), InvalidArgument);
}

TEST_CASE("easy negatives are cluster-mate golds, never the prompt's own") {
  const auto world = small_world();
  const auto policy = BiEncoderPolicy::init_identity(world);
  Rng rng(11);
  for (PromptId x : {PromptId{0}, PromptId{5}, PromptId{11}}) {
    const auto golds = cluster_golds(world, x);
    for (int i = 0; i < 40; ++i) {
      const ResponseId y = make_negative(world, policy, x, HardnessLevel::Easy, 1.0, 0.5, rng);
      CHECK(y != world.gold_of(x));
      CHECK(golds.contains(y));
    }
  }
}

TEST_CASE("easiest negatives are gold for no prompt in the cluster") {
  const auto world = small_world();
  const auto policy = BiEncoderPolicy::init_identity(world);
  Rng rng(12);
  for (PromptId x : {PromptId{1}, PromptId{7}}) {
    const auto golds = cluster_golds(world, x);
    for (int i = 0; i < 40; ++i) {
      const ResponseId y =
          make_negative(world, policy, x, HardnessLevel::Easiest, 1.0, 0.5, rng);
      CHECK(!golds.contains(y));
    }
  }
}

TEST_CASE("hard and hardest negatives are never correct") {
  const auto world = small_world();
  const auto policy = BiEncoderPolicy::init_identity(world);
  Rng rng(13);
  for (auto level : {HardnessLevel::Hard, HardnessLevel::Hardest}) {
    for (int i = 0; i < 40; ++i) {
      const ResponseId y = make_negative(world, policy, PromptId{3}, level, 1.0, 0.5, rng);
      CHECK(y != world.gold_of(3));
    }
  }
}

TEST_CASE("make_negative rejects a non-increasing temperature pair") {
  const auto world = small_world();
  const auto policy = BiEncoderPolicy::init_identity(world);
  Rng rng(14);
  CHECK_THROWS_AS(make_negative(world, policy, 0, HardnessLevel::Hard, 0.5, 0.5, rng),
                  InvalidArgument);
  CHECK_THROWS_AS(make_negative(world, policy, 0, HardnessLevel::Hard, 0.5, 1.0, rng),
                  InvalidArgument);
}

TEST_CASE("easy negatives need a cluster mate") {
  WorldParams p;
  p.prompts = 5;
  p.responses = 8;
  p.embed_dim = 4;
  p.clusters = 5;  // singleton clusters
  p.seed = 3;
  const auto world = generate_world(p);
  const auto policy = BiEncoderPolicy::init_identity(world);
  Rng rng(15);
  CHECK_THROWS_AS(make_negative(world, policy, 0, HardnessLevel::Easy, 1.0, 0.5, rng),
                  EmptyCluster);
}

TEST_CASE("easiest negatives exhaust when every response is a cluster gold") {
  WorldParams p;
  p.prompts = 4;
  p.responses = 4;
  p.embed_dim = 4;
  p.clusters = 1;  // 4 distinct golds cover the whole corpus
  p.seed = 5;
  const auto world = generate_world(p);
  REQUIRE(std::set<ResponseId>(world.gold.begin(), world.gold.end()).size() == 4);
  const auto policy = BiEncoderPolicy::init_identity(world);
  Rng rng(16);
  CHECK_THROWS_AS(make_negative(world, policy, 0, HardnessLevel::Easiest, 1.0, 0.5, rng),
                  ExhaustedRejection);
}

TEST_CASE("candidate pool dedupes each iteration preserving draw order") {
  CandidatePool pool;
  const std::vector<ResponseId> draws = {3, 1, 3, 2, 1};
  pool.add_iteration(draws);
  CHECK(pool.per_iteration.size() == 1);
  CHECK(pool.per_iteration[0] == std::vector<ResponseId>{3, 1, 2});
}

TEST_CASE("build_candidates merges history per memorization mode") {
  CandidatePool pool;
  pool.add_iteration(std::vector<ResponseId>{1, 2});
  pool.add_iteration(std::vector<ResponseId>{3, 2});
  const std::vector<ResponseId> fresh = {4, 2, 5};

  CHECK(build_candidates(pool, Memorization::CurrentOnly, 2, fresh) ==
        std::vector<ResponseId>{4, 2, 5});
  CHECK(build_candidates(pool, Memorization::CurrentPlusPrev, 2, fresh) ==
        std::vector<ResponseId>{3, 2, 4, 5});
  CHECK(build_candidates(pool, Memorization::CurrentPlusAllPrev, 2, fresh) ==
        std::vector<ResponseId>{1, 2, 3, 4, 5});

  SUBCASE("first iteration has no history to merge") {
    CandidatePool empty;
    CHECK(build_candidates(empty, Memorization::CurrentPlusAllPrev, 0, fresh) ==
          std::vector<ResponseId>{4, 2, 5});
  }
  SUBCASE("fresh draws must be nonempty") {
    CHECK_THROWS_AS(build_candidates(pool, Memorization::CurrentOnly, 2, {}), InvalidArgument);
  }
  SUBCASE("pool depth must match the iteration index") {
    CHECK_THROWS_AS(build_candidates(pool, Memorization::CurrentOnly, 1, fresh),
                    InvalidArgument);
    CHECK_THROWS_AS(build_candidates(pool, Memorization::CurrentOnly, 3, fresh),
                    InvalidArgument);
  }
}

TEST_CASE("rank_candidates sorts by reward, gold first under the exact oracle") {
  const auto world = small_world();
  const auto oracle = RewardOracle::dot_to_gold();
  const PromptId x = 4;
  std::vector<ResponseId> ids = {0, 5, world.gold_of(x), 17, 23};
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  const RankedList rl = rank_candidates(world, oracle, x, ids);
  REQUIRE(rl.size() == ids.size());
  CHECK(rl.prompt == x);
  CHECK(rl.ids[0] == world.gold_of(x));
  CHECK(std::is_sorted(rl.rewards.begin(), rl.rewards.end(), std::greater<>()));
  for (std::size_t i = 0; i < rl.size(); ++i)
    CHECK(rl.rewards[i] == reward(world, oracle, x, rl.ids[i]));

  CHECK_THROWS_AS(rank_candidates(world, oracle, x, {}), InvalidArgument);
  const std::vector<ResponseId> dup = {1, 2, 1};
  CHECK_THROWS_AS(rank_candidates(world, oracle, x, dup), InvalidArgument);
}

TEST_CASE("rank_candidates breaks exact reward ties toward the smaller id") {
  // Hand-built world with a duplicated embedding so two rewards tie exactly.
  SyntheticWorld world;
  world.embed_dim = 2;
  world.response_embeddings = Mat(3, 2);
  world.response_embeddings(0, 0) = 1.0;
  world.response_embeddings(1, 1) = 1.0;
  world.response_embeddings(2, 0) = 1.0;  // identical to response 0
  world.prompt_features = Mat(1, 2);
  world.prompt_features(0, 0) = 1.0;
  world.gold = {0};
  world.cluster_of = {0};
  world.clusters = {{0}};

  const auto rl = rank_candidates(world, RewardOracle::dot_to_gold(), 0,
                                  std::vector<ResponseId>{2, 1, 0});
  CHECK(rl.ids == std::vector<ResponseId>{0, 2, 1});
  CHECK(rl.rewards[0] == rl.rewards[1]);
}

TEST_CASE("select_training_slice keeps the reward extremes in order") {
  RankedList rl;
  rl.prompt = 9;
  rl.ids = {10, 11, 12, 13, 14};
  rl.rewards = {5, 4, 3, 2, 1};

  const auto ex = select_training_slice(rl, {2, 2});
  CHECK(ex.prompt == 9);
  CHECK(ex.n_pos == 2);
  CHECK(ex.n_neg == 2);
  CHECK(ex.list.ids == std::vector<ResponseId>{10, 11, 13, 14});
  CHECK(ex.list.rewards == std::vector<double>{5, 4, 2, 1});

  CHECK(select_training_slice(rl, {1, 1}).list.ids == std::vector<ResponseId>{10, 14});
  // Exact fit consumes the whole list.
  CHECK(select_training_slice(rl, {3, 2}).list.ids == rl.ids);

  CHECK_THROWS_AS(select_training_slice(rl, {3, 3}), ListTooShort);
  CHECK_THROWS_AS(select_training_slice(rl, {0, 2}), InvalidArgument);
  CHECK_THROWS_AS(select_training_slice(rl, {2, 0}), InvalidArgument);
}

TEST_CASE("mined negatives are reproducible for a fixed rng seed") {
  const auto world = small_world();
  const auto policy = BiEncoderPolicy::init_identity(world);
  std::vector<ResponseId> a, b;
  {
    Rng rng(77);
    for (int i = 0; i < 20; ++i)
      a.push_back(make_negative(world, policy, 2, HardnessLevel::Hard, 1.0, 0.5, rng));
  }
  {
    Rng rng(77);
    for (int i = 0; i < 20; ++i)
      b.push_back(make_negative(world, policy, 2, HardnessLevel::Hard, 1.0, 0.5, rng));
  }
  CHECK(a == b);
}

TEST_CASE("mean negative log-probability rises from uniform to policy-sharp levels") {
  const auto world = small_world();
  const auto policy = BiEncoderPolicy::init_identity(world);
  const std::size_t draws = 400;
  const auto lp = [&](HardnessLevel level) {
    return mean_negative_log_prob(world, policy, level, 1.0, 0.5, draws, 99);
  };
  const double easiest = lp(HardnessLevel::Easiest);
  const double easy = lp(HardnessLevel::Easy);
  const double hard = lp(HardnessLevel::Hard);
  const double hardest = lp(HardnessLevel::Hardest);

  // Uniform non-gold draws sit below the policy's own draws (Gibbs), and the
  // colder the sampling temperature the likelier the draw.
  CHECK(easiest < hard);
  CHECK(hard < hardest);
  CHECK(easy < 0.0);
  CHECK(std::isfinite(easy));

  // Deterministic in the seed.
  CHECK(lp(HardnessLevel::Hard) == hard);
  CHECK_THROWS_AS(mean_negative_log_prob(world, policy, HardnessLevel::Hard, 1.0, 0.5, 0, 1),
                  InvalidArgument);
}
