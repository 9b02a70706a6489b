#include "larpo/world.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "larpo/errors.hpp"
#include "larpo/kernels.hpp"
#include "larpo/rng.hpp"

namespace larpo {

namespace {
constexpr double kPromptNoiseStd = 0.1;
}

void SyntheticWorld::check_prompt(PromptId x) const {
  if (x < 0 || static_cast<std::size_t>(x) >= num_prompts())
    throw InvalidId("invalid prompt id " + std::to_string(x));
}

void SyntheticWorld::check_response(ResponseId y) const {
  if (y < 0 || static_cast<std::size_t>(y) >= num_responses())
    throw InvalidId("invalid response id " + std::to_string(y));
}

SyntheticWorld generate_world(const WorldParams& params) {
  if (params.clusters < 1 || params.prompts < params.clusters)
    throw InvalidArgument("generate_world: need P >= n_clusters >= 1");
  if (params.responses < 4) throw InvalidArgument("generate_world: need R >= 4");
  if (params.embed_dim < 2) throw InvalidArgument("generate_world: need embed_dim >= 2");

  const std::size_t P = params.prompts;
  const std::size_t R = params.responses;
  const std::size_t d = params.embed_dim;

  SyntheticWorld world;
  world.embed_dim = d;
  world.seed = params.seed;
  world.response_embeddings = Mat(R, d);
  world.prompt_features = Mat(P, d);
  world.gold.resize(P);
  world.cluster_of.resize(P);
  world.clusters.assign(params.clusters, {});

  Rng root(params.seed);

  // Unit-norm response embeddings make the gold the reward argmax under
  // DotToGold.
  Rng resp_rng = root.derive({0});
  for (std::size_t y = 0; y < R; ++y) {
    auto row = world.response_embeddings.row(y);
    double norm2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      row[j] = resp_rng.normal();
      norm2 += row[j] * row[j];
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (std::size_t j = 0; j < d; ++j) row[j] *= inv;
  }

  // Round-robin cluster assignment keeps sizes within one of each other.
  for (std::size_t x = 0; x < P; ++x) {
    const std::int32_t c = static_cast<std::int32_t>(x % params.clusters);
    world.cluster_of[x] = c;
    world.clusters[static_cast<std::size_t>(c)].push_back(static_cast<PromptId>(x));
  }

  // Golds: sampled without replacement within each cluster when R permits.
  Rng gold_rng = root.derive({1});
  for (std::size_t c = 0; c < params.clusters; ++c) {
    const auto& members = world.clusters[c];
    std::vector<ResponseId> taken;
    for (PromptId x : members) {
      ResponseId g;
      for (;;) {
        g = static_cast<ResponseId>(gold_rng.uniform_int(R));
        if (taken.size() >= R) break;  // cluster larger than corpus; allow repeats
        if (std::find(taken.begin(), taken.end(), g) == taken.end()) break;
      }
      taken.push_back(g);
      world.gold[static_cast<std::size_t>(x)] = g;
    }
  }

  // Cluster-shared offsets.
  Rng offset_rng = root.derive({2});
  Mat offsets(params.clusters, d);
  for (std::size_t c = 0; c < params.clusters; ++c) {
    auto row = offsets.row(c);
    for (std::size_t j = 0; j < d; ++j) row[j] = params.cluster_offset_std * offset_rng.normal();
  }

  // Prompt features: gold embedding + cluster offset + small noise. The task
  // stays learnable without being solvable by the initial random policy.
  Rng noise_rng = root.derive({3});
  for (std::size_t x = 0; x < P; ++x) {
    auto row = world.prompt_features.row(x);
    const auto gold_emb = world.response_embedding(world.gold[x]);
    const auto off = offsets.row(static_cast<std::size_t>(world.cluster_of[x]));
    for (std::size_t j = 0; j < d; ++j) {
      row[j] = gold_emb[j] + off[j] + kPromptNoiseStd * noise_rng.normal();
    }
  }

  return world;
}

double reward(const SyntheticWorld& world, const RewardOracle& oracle, PromptId x, ResponseId y) {
  world.check_prompt(x);
  world.check_response(y);
  const auto ey = world.response_embedding(y);
  const auto eg = world.response_embedding(world.gold_of(x));
  double value = kernels::dot(ey.data(), eg.data(), world.embed_dim);
  if (oracle.kind == RewardKind::NoisyDotToGold) {
    value += oracle.noise_std * keyed_normal(oracle.noise_seed, static_cast<std::uint64_t>(x),
                                             static_cast<std::uint64_t>(y));
  }
  return value;
}

bool is_correct(const SyntheticWorld& world, const RewardOracle& oracle, PromptId x,
                ResponseId y) {
  world.check_prompt(x);
  world.check_response(y);
  if (oracle.correctness == CorrectnessRule::ExactGold) return y == world.gold_of(x);
  return reward(world, oracle, x, y) >= oracle.threshold;
}

std::string world_to_json(const SyntheticWorld& world) {
  nlohmann::ordered_json j;
  j["embed_dim"] = world.embed_dim;
  j["seed"] = world.seed;
  auto responses = nlohmann::ordered_json::array();
  for (std::size_t y = 0; y < world.num_responses(); ++y) {
    nlohmann::ordered_json entry;
    entry["id"] = y;
    entry["embedding"] = std::vector<double>(world.response_embeddings.row(y).begin(),
                                             world.response_embeddings.row(y).end());
    responses.push_back(std::move(entry));
  }
  j["responses"] = std::move(responses);
  auto prompts = nlohmann::ordered_json::array();
  for (std::size_t x = 0; x < world.num_prompts(); ++x) {
    nlohmann::ordered_json entry;
    entry["id"] = x;
    entry["features"] = std::vector<double>(world.prompt_features.row(x).begin(),
                                            world.prompt_features.row(x).end());
    entry["gold"] = world.gold[x];
    prompts.push_back(std::move(entry));
  }
  j["prompts"] = std::move(prompts);
  j["clusters"] = world.clusters;
  return j.dump();
}

SyntheticWorld world_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  SyntheticWorld world;
  world.embed_dim = j.at("embed_dim").get<std::size_t>();
  world.seed = j.at("seed").get<std::uint64_t>();
  const auto& responses = j.at("responses");
  const auto& prompts = j.at("prompts");
  world.response_embeddings = Mat(responses.size(), world.embed_dim);
  world.prompt_features = Mat(prompts.size(), world.embed_dim);
  world.gold.resize(prompts.size());
  for (const auto& entry : responses) {
    const std::size_t y = entry.at("id").get<std::size_t>();
    const auto emb = entry.at("embedding").get<std::vector<double>>();
    if (emb.size() != world.embed_dim) throw InvalidArgument("world json: embedding length");
    std::copy(emb.begin(), emb.end(), world.response_embeddings.row(y).begin());
  }
  for (const auto& entry : prompts) {
    const std::size_t x = entry.at("id").get<std::size_t>();
    const auto feats = entry.at("features").get<std::vector<double>>();
    if (feats.size() != world.embed_dim) throw InvalidArgument("world json: features length");
    std::copy(feats.begin(), feats.end(), world.prompt_features.row(x).begin());
    world.gold[x] = entry.at("gold").get<ResponseId>();
  }
  world.clusters = j.at("clusters").get<std::vector<std::vector<PromptId>>>();
  world.cluster_of.assign(world.num_prompts(), 0);
  for (std::size_t c = 0; c < world.clusters.size(); ++c) {
    for (PromptId x : world.clusters[c]) {
      world.cluster_of[static_cast<std::size_t>(x)] = static_cast<std::int32_t>(c);
    }
  }
  return world;
}

std::string world_digest(const SyntheticWorld& world) {
  const std::string text = world_to_json(world);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace larpo
