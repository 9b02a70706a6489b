#include "larpo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "larpo/errors.hpp"
#include "larpo/kernels.hpp"

namespace larpo {

BiEncoderPolicy::BiEncoderPolicy(const SyntheticWorld* world, Mat weights)
    : world_(world), weights_(std::move(weights)) {
  if (world_ == nullptr) throw InvalidArgument("policy: null world");
  if (weights_.rows() != world_->embed_dim || weights_.cols() != world_->embed_dim)
    throw ShapeMismatch("policy: W must be embed_dim x embed_dim");
}

BiEncoderPolicy BiEncoderPolicy::init_identity(const SyntheticWorld& world) {
  return BiEncoderPolicy(&world, Mat::identity(world.embed_dim));
}

BiEncoderPolicy BiEncoderPolicy::init_perturbed(const SyntheticWorld& world, double std_dev,
                                                std::uint64_t seed) {
  Mat w = Mat::identity(world.embed_dim);
  Rng rng(seed);
  for (double& v : w.flat()) v += std_dev * rng.normal();
  return BiEncoderPolicy(&world, std::move(w));
}

BiEncoderPolicy BiEncoderPolicy::init_random(const SyntheticWorld& world, double std_dev,
                                             std::uint64_t seed) {
  Mat w(world.embed_dim, world.embed_dim);
  Rng rng(seed);
  for (double& v : w.flat()) v = std_dev * rng.normal();
  return BiEncoderPolicy(&world, std::move(w));
}

std::vector<double> BiEncoderPolicy::project(PromptId x) const {
  world_->check_prompt(x);
  std::vector<double> q(dim());
  kernels::matvec(weights_.data(), dim(), dim(), world_->features(x).data(), q.data());
  return q;
}

double BiEncoderPolicy::score(PromptId x, ResponseId y) const {
  world_->check_response(y);
  const auto q = project(x);
  return kernels::dot(q.data(), world_->response_embedding(y).data(), dim());
}

void BiEncoderPolicy::score_all(PromptId x, std::vector<double>& out) const {
  const auto q = project(x);
  out.resize(world_->num_responses());
  kernels::matvec(world_->response_embeddings.data(), world_->num_responses(), dim(), q.data(),
                  out.data());
}

double BiEncoderPolicy::log_prob(PromptId x, ResponseId y, double temperature) const {
  world_->check_response(y);
  if (!(temperature > 0.0)) throw InvalidArgument("log_prob: temperature must be > 0");
  std::vector<double> scores;
  score_all(x, scores);
  for (double& s : scores) s /= temperature;
  const double lse = kernels::logsumexp(scores.data(), scores.size());
  return scores[static_cast<std::size_t>(y)] - lse;
}

void BiEncoderPolicy::log_prob_table(PromptId x, double temperature,
                                     std::vector<double>& out) const {
  if (!(temperature > 0.0)) throw InvalidArgument("log_prob_table: temperature must be > 0");
  score_all(x, out);
  for (double& s : out) s /= temperature;
  const double lse = kernels::logsumexp(out.data(), out.size());
  for (double& s : out) s -= lse;
}

double BiEncoderPolicy::prob_table(PromptId x, double temperature, std::vector<double>& out) const {
  if (!(temperature > 0.0)) throw InvalidArgument("prob_table: temperature must be > 0");
  score_all(x, out);
  for (double& s : out) s /= temperature;
  return kernels::softmax(out.data(), out.size(), out.data());
}

ResponseId BiEncoderPolicy::sample(PromptId x, double temperature, Rng& rng) const {
  std::vector<double> probs;
  prob_table(x, temperature, probs);
  return sample_index(probs, rng);
}

std::vector<ResponseId> BiEncoderPolicy::sample(PromptId x, double temperature, std::size_t k,
                                                Rng& rng) const {
  if (k < 1) throw InvalidArgument("sample: k must be >= 1");
  std::vector<double> probs;
  prob_table(x, temperature, probs);
  std::vector<ResponseId> draws(k);
  for (std::size_t i = 0; i < k; ++i) draws[i] = sample_index(probs, rng);
  return draws;
}

std::vector<ResponseId> BiEncoderPolicy::top_k(PromptId x, std::size_t k) const {
  std::vector<double> scores;
  score_all(x, scores);
  if (k < 1 || k > scores.size()) throw InvalidArgument("top_k: k out of range");
  std::vector<ResponseId> ids(scores.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(),
                    [&](ResponseId a, ResponseId b) {
                      const double sa = scores[static_cast<std::size_t>(a)];
                      const double sb = scores[static_cast<std::size_t>(b)];
                      if (sa != sb) return sa > sb;
                      return a < b;
                    });
  ids.resize(k);
  return ids;
}

ResponseId BiEncoderPolicy::greedy(PromptId x) const {
  return top_k(x, 1).front();
}

void BiEncoderPolicy::update(const Mat& grad, double lr) {
  if (!grad.same_shape(weights_)) throw ShapeMismatch("update: gradient shape");
  kernels::axpy(-lr, grad.data(), weights_.data(), weights_.size());
}

ResponseId sample_index(std::span<const double> probs, Rng& rng) {
  const double u = rng.uniform01();
  double acc = 0.0;
  for (std::size_t y = 0; y < probs.size(); ++y) {
    acc += probs[y];
    if (u < acc) return static_cast<ResponseId>(y);
  }
  return static_cast<ResponseId>(probs.size() - 1);  // guard against rounding
}

}  // namespace larpo
