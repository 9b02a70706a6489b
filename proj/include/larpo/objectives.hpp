#pragma once

#include <span>
#include <string>
#include <vector>

#include "larpo/mat.hpp"
#include "larpo/policy.hpp"
#include "larpo/world.hpp"

namespace larpo {

// Preference-optimization objectives over the log-probability ratio
//
//   gamma_i = beta * (log pi_theta(y_i|x) - log pi_ref(y_i|x))
//
// evaluated at temperature 1. Each loss is the negative log of a ranking
// probability (Bradley-Terry for pair, softmax for contrastive, a product of
// pairwise Bradley-Terry terms for lambdarank, Plackett-Luce for listmle),
// which makes shift invariance in gamma exact by construction.
enum class ObjectiveKind { Pair, Contrastive, LambdaRank, ListMLE };

ObjectiveKind objective_from_string(const std::string& name);
std::string to_string(ObjectiveKind kind);

struct GammaVector {
  std::vector<double> values;  // aligned with the id list it was built from
  double beta = 0.1;

  std::size_t size() const { return values.size(); }
};

// Responses for one prompt ordered best-first by oracle reward.
struct RankedList {
  PromptId prompt = 0;
  std::vector<ResponseId> ids;   // best-first, distinct
  std::vector<double> rewards;   // aligned, nonincreasing

  std::size_t size() const { return ids.size(); }
};

GammaVector gamma(const BiEncoderPolicy& policy, const BiEncoderPolicy& ref, PromptId x,
                  std::span<const ResponseId> ys, double beta);

// L = -log sigmoid(gamma_w - gamma_l), list = (winner, loser).
double loss_pair(const GammaVector& g);
// L = -log softmax(gamma)_winner over the whole list (winner + m losers).
double loss_contrastive(const GammaVector& g, std::size_t winner = 0);
// L = -sum_{i<j} log sigmoid(gamma_i - gamma_j), list best-first.
double loss_lambdarank(const GammaVector& g);
// L = -sum_i log[ exp(gamma_i) / sum_{j>=i} exp(gamma_j) ], list best-first.
double loss_listmle(const GammaVector& g);

double objective_loss(ObjectiveKind kind, const GammaVector& g);

// dL/dgamma_i for the best-first list convention (winner index 0 throughout).
std::vector<double> dloss_dgamma(ObjectiveKind kind, const GammaVector& g);

// The probability each loss is the negative log of, computed directly from
// raw values (reward route). Numerically independent of the loss code paths;
// used by the shift-invariance / Z-cancellation checks.
double ranking_probability(ObjectiveKind kind, std::span<const double> values);

// SFT as InfoNCE. negatives empty = exact mode (softmax over the full
// corpus); otherwise the denominator is {gold} union negatives.
double loss_sft_infonce(const BiEncoderPolicy& policy, PromptId x, ResponseId gold,
                        std::span<const ResponseId> negatives);

struct LossGrad {
  double loss = 0.0;
  Mat grad;  // embed_dim x embed_dim, d loss / d W
};

// Exact analytic gradient of the preference loss for one ranked list,
// chained through gamma and the full-corpus softmax:
//   dL/dW = outer(v, u),  v = beta * [ sum_i a_i e_{y_i} - (sum_i a_i) mu ]
// with a = dL/dgamma and mu the corpus mean embedding under pi_theta(.|x).
LossGrad preference_loss_grad(ObjectiveKind kind, const BiEncoderPolicy& policy,
                              const BiEncoderPolicy& ref, PromptId x,
                              std::span<const ResponseId> ys, double beta);

// Exact analytic gradient of loss_sft_infonce (same conventions).
LossGrad sft_loss_grad(const BiEncoderPolicy& policy, PromptId x, ResponseId gold,
                       std::span<const ResponseId> negatives);

// Per-objective training-slice widths: how many reward-top and reward-bottom
// entries of a ranked list feed the loss.
struct SliceSpec {
  std::size_t n_pos = 1;
  std::size_t n_neg = 1;
};

SliceSpec default_slice(ObjectiveKind kind);

}  // namespace larpo
