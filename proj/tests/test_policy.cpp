#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "larpo/errors.hpp"
#include "larpo/kernels.hpp"
#include "larpo/policy.hpp"
#include "larpo/world.hpp"

using namespace larpo;

namespace {

const SyntheticWorld& small_world() {
  static const SyntheticWorld w = generate_world({
      .prompts = 8, .responses = 32, .embed_dim = 6, .clusters = 2, .seed = 11});
  return w;
}

}  // namespace

TEST_CASE("identity policy scores are raw feature dots") {
  const auto& w = small_world();
  const auto policy = BiEncoderPolicy::init_identity(w);
  for (PromptId x = 0; x < 8; ++x) {
    for (ResponseId y = 0; y < 32; y += 5) {
      const auto u = w.features(x);
      const auto e = w.response_embedding(y);
      const double direct = kernels::dot(u.data(), e.data(), w.embed_dim);
      CHECK(std::abs(policy.score(x, y) - direct) <= 1e-12);
    }
  }
}

TEST_CASE("log_prob agrees with manual log-sum-exp and the table") {
  const auto& w = small_world();
  const auto policy = BiEncoderPolicy::init_perturbed(w, 0.3, 5);
  std::vector<double> scores;
  policy.score_all(0, scores);
  CHECK(scores.size() == w.num_responses());

  const double lse = kernels::logsumexp(scores.data(), scores.size());
  std::vector<double> table;
  policy.log_prob_table(0, 1.0, table);
  for (ResponseId y = 0; y < 32; ++y) {
    const auto i = static_cast<std::size_t>(y);
    CHECK(std::abs(policy.log_prob(0, y, 1.0) - (scores[i] - lse)) <= 1e-12);
    CHECK(policy.log_prob(0, y, 1.0) == table[i]);
  }
}

TEST_CASE("probability table normalizes at any temperature") {
  const auto& w = small_world();
  const auto policy = BiEncoderPolicy::init_perturbed(w, 0.5, 6);
  for (double t : {0.2, 1.0, 3.7}) {
    std::vector<double> probs;
    policy.prob_table(1, t, probs);
    const double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
  std::vector<double> probs;
  CHECK_THROWS_AS(policy.prob_table(1, 0.0, probs), InvalidArgument);
  CHECK_THROWS_AS(policy.log_prob(1, 0, -1.0), InvalidArgument);
}

TEST_CASE("temperature rescales log-probabilities consistently") {
  const auto& w = small_world();
  const auto policy = BiEncoderPolicy::init_perturbed(w, 0.5, 7);
  std::vector<double> scores;
  policy.score_all(2, scores);
  const double t = 0.5;
  std::vector<double> scaled = scores;
  for (double& s : scaled) s /= t;
  const double lse = kernels::logsumexp(scaled.data(), scaled.size());
  for (ResponseId y = 0; y < 32; y += 7) {
    const auto i = static_cast<std::size_t>(y);
    CHECK(std::abs(policy.log_prob(2, y, t) - (scaled[i] - lse)) <= 1e-12);
  }

  // Lower temperature concentrates mass on the argmax.
  std::vector<double> cold, hot;
  policy.prob_table(2, 0.5, cold);
  policy.prob_table(2, 2.0, hot);
  const auto arg = static_cast<std::size_t>(
      std::max_element(scores.begin(), scores.end()) - scores.begin());
  CHECK(cold[arg] > hot[arg]);
}

TEST_CASE("sampling is seeded and matches probabilities empirically") {
  const auto& w = small_world();
  const auto policy = BiEncoderPolicy::init_perturbed(w, 0.5, 8);

  Rng r1(123), r2(123);
  for (int i = 0; i < 50; ++i) CHECK(policy.sample(0, 1.0, r1) == policy.sample(0, 1.0, r2));

  std::vector<double> probs;
  policy.prob_table(0, 1.0, probs);
  std::vector<int> counts(probs.size(), 0);
  Rng rng(99);
  const int n = 20000;
  for (int i = 0; i < n; ++i) counts[static_cast<std::size_t>(policy.sample(0, 1.0, rng))]++;
  for (std::size_t y = 0; y < probs.size(); ++y) {
    if (probs[y] < 0.01) continue;
    const double freq = static_cast<double>(counts[y]) / n;
    CHECK(std::abs(freq - probs[y]) < 0.02);
  }
}

TEST_CASE("top_k matches a full sort with (-score, id) tie-break") {
  const auto& w = small_world();
  const auto policy = BiEncoderPolicy::init_perturbed(w, 0.4, 9);
  std::vector<double> scores;
  policy.score_all(3, scores);

  std::vector<ResponseId> all(scores.size());
  std::iota(all.begin(), all.end(), 0);
  std::sort(all.begin(), all.end(), [&](ResponseId a, ResponseId b) {
    const double sa = scores[static_cast<std::size_t>(a)];
    const double sb = scores[static_cast<std::size_t>(b)];
    if (sa != sb) return sa > sb;
    return a < b;
  });

  for (std::size_t k : {1u, 5u, 32u}) {
    const auto got = policy.top_k(3, k);
    REQUIRE(got.size() == k);
    for (std::size_t i = 0; i < k; ++i) CHECK(got[i] == all[i]);
  }
  CHECK_THROWS_AS(policy.top_k(3, 0), InvalidArgument);
  CHECK_THROWS_AS(policy.top_k(3, w.num_responses() + 1), InvalidArgument);
  CHECK(policy.greedy(3) == all[0]);
}

TEST_CASE("argmax probability is nonincreasing in temperature") {
  const auto& w = small_world();
  const auto policy = BiEncoderPolicy::init_perturbed(w, 0.5, 10);
  for (PromptId x = 0; x < 4; ++x) {
    const auto arg = static_cast<std::size_t>(policy.greedy(x));
    double prev = 1.1;
    for (double t : {0.1, 0.5, 1.0, 2.0, 5.0}) {
      std::vector<double> probs;
      policy.prob_table(x, t, probs);
      CHECK(probs[arg] <= prev + 1e-15);
      prev = probs[arg];
    }
  }
}

TEST_CASE("k-draw sampling is seeded and uniform under zero weights") {
  const auto& w = small_world();
  const BiEncoderPolicy zero(&w, Mat(w.embed_dim, w.embed_dim));

  Rng r1(5), r2(5);
  CHECK(zero.sample(0, 1.0, 64, r1) == zero.sample(0, 1.0, 64, r2));

  Rng rng(6);
  const auto draws = zero.sample(0, 1.0, 64000, rng);
  std::vector<int> counts(w.num_responses(), 0);
  for (ResponseId y : draws) counts[static_cast<std::size_t>(y)]++;
  for (int c : counts) {
    const double freq = static_cast<double>(c) / static_cast<double>(draws.size());
    CHECK(std::abs(freq - 1.0 / 32.0) < 0.01);
  }
  CHECK_THROWS_AS(zero.sample(0, 1.0, 0, rng), InvalidArgument);
}

TEST_CASE("zero weights give uniform scores and id tie-break") {
  const auto& w = small_world();
  const BiEncoderPolicy policy(&w, Mat(w.embed_dim, w.embed_dim));
  CHECK(policy.greedy(0) == 0);
  const auto top = policy.top_k(0, 4);
  CHECK(top == std::vector<ResponseId>{0, 1, 2, 3});
  std::vector<double> probs;
  policy.prob_table(0, 1.0, probs);
  for (double p : probs) CHECK(std::abs(p - 1.0 / 32.0) <= 1e-15);
}

TEST_CASE("update applies W -= lr * G elementwise") {
  const auto& w = small_world();
  auto policy = BiEncoderPolicy::init_identity(w);
  Mat g(w.embed_dim, w.embed_dim);
  g(0, 0) = 2.0;
  g(1, 2) = -3.0;
  policy.update(g, 0.5);
  CHECK(policy.weights()(0, 0) == 0.0);
  CHECK(policy.weights()(1, 2) == 1.5);
  CHECK(policy.weights()(1, 1) == 1.0);

  auto zero = policy;
  zero.update(zero.weights(), 1.0);
  for (double v : zero.weights().flat()) CHECK(v == 0.0);

  CHECK_THROWS_AS(policy.update(Mat(2, 2), 0.1), ShapeMismatch);
}

TEST_CASE("perturbed init is seed-deterministic") {
  const auto& w = small_world();
  const auto a = BiEncoderPolicy::init_perturbed(w, 0.2, 77);
  const auto b = BiEncoderPolicy::init_perturbed(w, 0.2, 77);
  const auto c = BiEncoderPolicy::init_perturbed(w, 0.2, 78);
  CHECK(a.weights() == b.weights());
  CHECK_FALSE(a.weights() == c.weights());
}

TEST_CASE("random init is near-uniform at small scale") {
  const auto& w = small_world();
  const auto a = BiEncoderPolicy::init_random(w, 0.01, 3);
  const auto b = BiEncoderPolicy::init_random(w, 0.01, 3);
  CHECK(a.weights() == b.weights());
  std::vector<double> probs;
  a.prob_table(0, 1.0, probs);
  for (double p : probs) CHECK(std::abs(p - 1.0 / 32.0) < 0.01);
}
