#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "larpo/mat.hpp"

namespace larpo {

using PromptId = std::int32_t;
using ResponseId = std::int32_t;

// Finite synthetic retrieval world: a response corpus with fixed embeddings,
// prompts with raw features and a gold response each, and a cluster structure
// grouping related prompts. Immutable after construction; safe to share
// across threads.
struct SyntheticWorld {
  std::size_t embed_dim = 0;
  std::uint64_t seed = 0;
  Mat response_embeddings;  // R x embed_dim, row y = embedding of response y
  Mat prompt_features;      // P x embed_dim, row x = features of prompt x
  std::vector<ResponseId> gold;             // per prompt
  std::vector<std::int32_t> cluster_of;     // per prompt
  std::vector<std::vector<PromptId>> clusters;

  std::size_t num_responses() const { return response_embeddings.rows(); }
  std::size_t num_prompts() const { return prompt_features.rows(); }

  std::span<const double> response_embedding(ResponseId y) const {
    return response_embeddings.row(static_cast<std::size_t>(y));
  }
  std::span<const double> features(PromptId x) const {
    return prompt_features.row(static_cast<std::size_t>(x));
  }
  ResponseId gold_of(PromptId x) const { return gold[static_cast<std::size_t>(x)]; }

  void check_prompt(PromptId x) const;
  void check_response(ResponseId y) const;
};

struct WorldParams {
  std::size_t prompts = 64;
  std::size_t responses = 256;
  std::size_t embed_dim = 16;
  std::size_t clusters = 8;
  std::uint64_t seed = 42;
  // Scale of the cluster-shared offset added to prompt features. The small
  // per-prompt noise std is fixed at 0.1.
  double cluster_offset_std = 0.25;
};

// Deterministic world generation. Response embeddings are i.i.d. standard
// normal scaled to unit norm; prompt features are the gold embedding plus a
// cluster-shared offset plus i.i.d. noise (std 0.1). Golds within a cluster
// are distinct whenever R permits.
SyntheticWorld generate_world(const WorldParams& params);

enum class RewardKind { DotToGold, NoisyDotToGold };
enum class CorrectnessRule { ExactGold, RewardThreshold };

// Cross-encoder analog: scores (prompt, response) pairs jointly. DotToGold is
// the dot product with the gold embedding; NoisyDotToGold adds a zero-mean
// Gaussian perturbation that is a pure function of (noise_seed, x, y), so
// repeated queries see identical values.
struct RewardOracle {
  RewardKind kind = RewardKind::DotToGold;
  double noise_std = 0.0;
  std::uint64_t noise_seed = 0;
  CorrectnessRule correctness = CorrectnessRule::ExactGold;
  double threshold = 0.0;

  static RewardOracle dot_to_gold() { return {}; }
  static RewardOracle noisy(double std_dev, std::uint64_t seed) {
    RewardOracle o;
    o.kind = RewardKind::NoisyDotToGold;
    o.noise_std = std_dev;
    o.noise_seed = seed;
    return o;
  }
};

double reward(const SyntheticWorld& world, const RewardOracle& oracle, PromptId x, ResponseId y);
bool is_correct(const SyntheticWorld& world, const RewardOracle& oracle, PromptId x,
                ResponseId y);

// JSON round trip (schema: embed_dim, seed, responses[], prompts[], clusters[]).
std::string world_to_json(const SyntheticWorld& world);
SyntheticWorld world_from_json(const std::string& text);

// FNV-1a hash of the canonical JSON serialization, as a hex string.
std::string world_digest(const SyntheticWorld& world);

}  // namespace larpo
