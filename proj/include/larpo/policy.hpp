#pragma once

#include <cstddef>
#include <vector>

#include "larpo/mat.hpp"
#include "larpo/rng.hpp"
#include "larpo/world.hpp"

namespace larpo {

// Bi-encoder retrieval policy. Prompts and responses share the embedding
// space; the only trainable parameter is a d-by-d projection W applied to the
// prompt features:
//
//   s(x, y) = <W u_x, e_y>          pi_t(y | x) = softmax_y(s(x, y) / t)
//
// The softmax normalizes over the full response corpus, so log-probabilities
// are exact (no sampled partition function).
class BiEncoderPolicy {
 public:
  BiEncoderPolicy(const SyntheticWorld* world, Mat weights);

  // Identity-initialized policy: scores reduce to raw feature/embedding dots.
  static BiEncoderPolicy init_identity(const SyntheticWorld& world);
  // W = I + std * N(0, 1) elementwise.
  static BiEncoderPolicy init_perturbed(const SyntheticWorld& world, double std_dev,
                                        std::uint64_t seed);
  // W = std * N(0, 1) elementwise: the near-uniform starting point for
  // training, leaving the ablations headroom.
  static BiEncoderPolicy init_random(const SyntheticWorld& world, double std_dev,
                                     std::uint64_t seed);

  const SyntheticWorld& world() const { return *world_; }
  const Mat& weights() const { return weights_; }
  std::size_t dim() const { return weights_.rows(); }

  // q = W u_x (the projected prompt vector scores come from).
  std::vector<double> project(PromptId x) const;

  double score(PromptId x, ResponseId y) const;
  // Scores against every response; out.size() == num_responses().
  void score_all(PromptId x, std::vector<double>& out) const;

  // Log pi_t(y | x); exact over the corpus. temperature must be > 0.
  double log_prob(PromptId x, ResponseId y, double temperature = 1.0) const;
  // Full table of log pi_t(. | x). Cheaper than R calls to log_prob.
  void log_prob_table(PromptId x, double temperature, std::vector<double>& out) const;
  // Probability table; returns the log partition value log Z_t(x).
  double prob_table(PromptId x, double temperature, std::vector<double>& out) const;

  // One draw from pi_t(. | x) by inverse-CDF over the exact probabilities.
  ResponseId sample(PromptId x, double temperature, Rng& rng) const;
  // k i.i.d. draws; the probability table is computed once.
  std::vector<ResponseId> sample(PromptId x, double temperature, std::size_t k, Rng& rng) const;
  // Top-k responses by score, ties broken toward smaller id. Requires
  // 1 <= k <= num_responses().
  std::vector<ResponseId> top_k(PromptId x, std::size_t k) const;
  ResponseId greedy(PromptId x) const;

  // W -= lr * grad, where grad has the same d-by-d shape as W.
  void update(const Mat& grad, double lr);

  bool all_finite() const { return weights_.all_finite(); }

 private:
  const SyntheticWorld* world_;
  Mat weights_;
};

// Inverse-CDF draw from an explicit probability table (callers that sample
// repeatedly from one prompt compute the table once and reuse it).
ResponseId sample_index(std::span<const double> probs, Rng& rng);

}  // namespace larpo
