#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "larpo/errors.hpp"
#include "larpo/kernels.hpp"
#include "larpo/rng.hpp"
#include "larpo/world.hpp"

using namespace larpo;

TEST_CASE("generate_world produces well-formed default world") {
  const SyntheticWorld w = generate_world({});
  CHECK(w.num_prompts() == 64);
  CHECK(w.num_responses() == 256);
  CHECK(w.embed_dim == 16);
  CHECK(w.clusters.size() == 8);

  for (std::size_t y = 0; y < w.num_responses(); ++y) {
    const auto e = w.response_embedding(static_cast<ResponseId>(y));
    const double norm = std::sqrt(kernels::dot(e.data(), e.data(), e.size()));
    CHECK(std::abs(norm - 1.0) <= 1e-12);
  }

  // Clusters partition the prompts and agree with cluster_of.
  std::set<PromptId> seen;
  for (std::size_t c = 0; c < w.clusters.size(); ++c) {
    for (PromptId x : w.clusters[c]) {
      CHECK(seen.insert(x).second);
      CHECK(w.cluster_of[static_cast<std::size_t>(x)] == static_cast<std::int32_t>(c));
    }
  }
  CHECK(seen.size() == w.num_prompts());

  // Gold ids valid and distinct within each cluster (R is large enough).
  for (const auto& members : w.clusters) {
    std::set<ResponseId> golds;
    for (PromptId x : members) {
      const ResponseId g = w.gold_of(x);
      CHECK(g >= 0);
      CHECK(static_cast<std::size_t>(g) < w.num_responses());
      CHECK(golds.insert(g).second);
    }
  }
}

TEST_CASE("generate_world is deterministic in the seed") {
  WorldParams p;
  const SyntheticWorld a = generate_world(p);
  const SyntheticWorld b = generate_world(p);
  CHECK(a.response_embeddings == b.response_embeddings);
  CHECK(a.prompt_features == b.prompt_features);
  CHECK(a.gold == b.gold);
  CHECK(world_digest(a) == world_digest(b));

  p.seed = 43;
  const SyntheticWorld c = generate_world(p);
  CHECK(world_digest(a) != world_digest(c));
}

TEST_CASE("generate_world rejects degenerate parameters") {
  WorldParams p;
  p.clusters = 0;
  CHECK_THROWS_AS(generate_world(p), InvalidArgument);
  p = {};
  p.prompts = 4;
  p.clusters = 8;
  CHECK_THROWS_AS(generate_world(p), InvalidArgument);
  p = {};
  p.responses = 2;
  CHECK_THROWS_AS(generate_world(p), InvalidArgument);
  p = {};
  p.embed_dim = 1;
  CHECK_THROWS_AS(generate_world(p), InvalidArgument);
}

TEST_CASE("dot-to-gold reward peaks at the gold response") {
  const SyntheticWorld w = generate_world({});
  const RewardOracle oracle = RewardOracle::dot_to_gold();
  for (PromptId x : {PromptId{0}, PromptId{17}, PromptId{63}}) {
    const ResponseId g = w.gold_of(x);
    CHECK(std::abs(reward(w, oracle, x, g) - 1.0) <= 1e-12);  // unit-norm self-dot
    for (std::size_t y = 0; y < w.num_responses(); ++y) {
      if (static_cast<ResponseId>(y) == g) continue;
      CHECK(reward(w, oracle, x, static_cast<ResponseId>(y)) < 1.0);
    }
  }
}

TEST_CASE("noisy oracle is stateless-deterministic and centered") {
  const SyntheticWorld w = generate_world({});
  const RewardOracle clean = RewardOracle::dot_to_gold();
  const RewardOracle noisy = RewardOracle::noisy(0.1, 99);

  CHECK(reward(w, noisy, 3, 12) == reward(w, noisy, 3, 12));

  const RewardOracle zero_noise = RewardOracle::noisy(0.0, 99);
  CHECK(reward(w, zero_noise, 3, 12) == reward(w, clean, 3, 12));

  double acc = 0.0, acc2 = 0.0;
  std::size_t count = 0;
  for (PromptId x = 0; x < 64; ++x) {
    for (ResponseId y = 0; y < 256; y += 4) {
      const double d = reward(w, noisy, x, y) - reward(w, clean, x, y);
      acc += d;
      acc2 += d * d;
      ++count;
    }
  }
  const double mean = acc / static_cast<double>(count);
  const double stddev = std::sqrt(acc2 / static_cast<double>(count) - mean * mean);
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(stddev - 0.1) < 0.01);

  const RewardOracle other_seed = RewardOracle::noisy(0.1, 100);
  CHECK(reward(w, noisy, 3, 12) != reward(w, other_seed, 3, 12));
}

TEST_CASE("correctness rules") {
  const SyntheticWorld w = generate_world({});
  const RewardOracle exact = RewardOracle::dot_to_gold();
  CHECK(is_correct(w, exact, 5, w.gold_of(5)));
  CHECK_FALSE(is_correct(w, exact, 5, w.gold_of(5) == 0 ? 1 : 0));

  RewardOracle thr = RewardOracle::dot_to_gold();
  thr.correctness = CorrectnessRule::RewardThreshold;
  thr.threshold = 0.999;
  CHECK(is_correct(w, thr, 5, w.gold_of(5)));
  thr.threshold = 1.5;
  CHECK_FALSE(is_correct(w, thr, 5, w.gold_of(5)));
}

TEST_CASE("invalid ids are rejected") {
  const SyntheticWorld w = generate_world({});
  const RewardOracle oracle = RewardOracle::dot_to_gold();
  CHECK_THROWS_AS(reward(w, oracle, -1, 0), InvalidId);
  CHECK_THROWS_AS(reward(w, oracle, 0, 256), InvalidId);
  CHECK_THROWS_AS(reward(w, oracle, 64, 0), InvalidId);
}

TEST_CASE("world json round-trips exactly") {
  const SyntheticWorld w = generate_world({});
  const std::string text = world_to_json(w);
  const SyntheticWorld back = world_from_json(text);
  CHECK(back.embed_dim == w.embed_dim);
  CHECK(back.response_embeddings == w.response_embeddings);
  CHECK(back.prompt_features == w.prompt_features);
  CHECK(back.gold == w.gold);
  CHECK(back.clusters == w.clusters);
  CHECK(back.cluster_of == w.cluster_of);
  CHECK(world_digest(back) == world_digest(w));
}

TEST_CASE("digest reacts to any content change") {
  SyntheticWorld w = generate_world({});
  const std::string before = world_digest(w);
  w.response_embeddings(0, 0) += 1e-9;
  CHECK(world_digest(w) != before);
}

TEST_CASE("keyed_normal looks like a unit normal") {
  double acc = 0.0, acc2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double v = keyed_normal(7, static_cast<std::uint64_t>(i), 0);
    acc += v;
    acc2 += v * v;
  }
  const double mean = acc / n;
  const double var = acc2 / n - mean * mean;
  CHECK(std::abs(mean) < 0.03);
  CHECK(std::abs(var - 1.0) < 0.05);
}
