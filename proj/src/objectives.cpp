#include "larpo/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "larpo/errors.hpp"
#include "larpo/kernels.hpp"

namespace larpo {

namespace {

double sigmoid(double x) {
  // Evaluated via softplus so both tails stay accurate.
  return std::exp(-kernels::softplus(-x));
}

// A non-finite log-ratio means the policy or reference has already blown up;
// surface it as divergence rather than a caller error.
void check_finite_gamma(const GammaVector& g) {
  for (double v : g.values) {
    if (!std::isfinite(v)) throw Divergence("gamma: non-finite entry");
  }
}

}  // namespace

ObjectiveKind objective_from_string(const std::string& name) {
  if (name == "pair") return ObjectiveKind::Pair;
  if (name == "contrastive") return ObjectiveKind::Contrastive;
  if (name == "lambdarank") return ObjectiveKind::LambdaRank;
  if (name == "listmle") return ObjectiveKind::ListMLE;
  throw InvalidArgument("unknown objective '" + name + "'");
}

std::string to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::Pair: return "pair";
    case ObjectiveKind::Contrastive: return "contrastive";
    case ObjectiveKind::LambdaRank: return "lambdarank";
    case ObjectiveKind::ListMLE: return "listmle";
  }
  throw InvalidArgument("bad objective kind");
}

GammaVector gamma(const BiEncoderPolicy& policy, const BiEncoderPolicy& ref, PromptId x,
                  std::span<const ResponseId> ys, double beta) {
  if (!(beta > 0.0)) throw InvalidArgument("gamma: beta must be > 0");
  std::vector<double> lp_policy, lp_ref;
  policy.log_prob_table(x, 1.0, lp_policy);
  ref.log_prob_table(x, 1.0, lp_ref);
  GammaVector g;
  g.beta = beta;
  g.values.reserve(ys.size());
  for (ResponseId y : ys) {
    policy.world().check_response(y);
    const auto i = static_cast<std::size_t>(y);
    g.values.push_back(beta * (lp_policy[i] - lp_ref[i]));
  }
  return g;
}

double loss_pair(const GammaVector& g) {
  if (g.size() != 2) throw WrongArity("loss_pair: list length must be 2");
  check_finite_gamma(g);
  return kernels::softplus(g.values[1] - g.values[0]);
}

double loss_contrastive(const GammaVector& g, std::size_t winner) {
  if (g.size() < 2) throw WrongArity("loss_contrastive: need at least one loser");
  if (winner >= g.size()) throw InvalidArgument("loss_contrastive: winner index out of range");
  check_finite_gamma(g);
  const double lse = kernels::logsumexp(g.values.data(), g.size());
  return lse - g.values[winner];
}

double loss_lambdarank(const GammaVector& g) {
  const std::size_t m = g.size();
  if (m < 2) throw WrongArity("loss_lambdarank: need m >= 2");
  check_finite_gamma(g);
  double loss = 0.0;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      loss += kernels::softplus(g.values[j] - g.values[i]);
    }
  }
  return loss;
}

double loss_listmle(const GammaVector& g) {
  const std::size_t m = g.size();
  if (m < 2) throw WrongArity("loss_listmle: need m >= 2");
  check_finite_gamma(g);
  double loss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double lse = kernels::logsumexp(g.values.data() + i, m - i);
    loss += lse - g.values[i];
  }
  return loss;
}

double objective_loss(ObjectiveKind kind, const GammaVector& g) {
  switch (kind) {
    case ObjectiveKind::Pair: return loss_pair(g);
    case ObjectiveKind::Contrastive: return loss_contrastive(g);
    case ObjectiveKind::LambdaRank: return loss_lambdarank(g);
    case ObjectiveKind::ListMLE: return loss_listmle(g);
  }
  throw InvalidArgument("bad objective kind");
}

std::vector<double> dloss_dgamma(ObjectiveKind kind, const GammaVector& g) {
  const std::size_t m = g.size();
  std::vector<double> a(m, 0.0);
  switch (kind) {
    case ObjectiveKind::Pair: {
      if (m != 2) throw WrongArity("loss_pair: list length must be 2");
      const double s = sigmoid(g.values[1] - g.values[0]);
      a[0] = -s;
      a[1] = s;
      break;
    }
    case ObjectiveKind::Contrastive: {
      if (m < 2) throw WrongArity("loss_contrastive: need at least one loser");
      kernels::softmax(g.values.data(), m, a.data());
      a[0] -= 1.0;
      break;
    }
    case ObjectiveKind::LambdaRank: {
      if (m < 2) throw WrongArity("loss_lambdarank: need m >= 2");
      for (std::size_t i = 0; i + 1 < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
          const double s = sigmoid(g.values[j] - g.values[i]);
          a[j] += s;
          a[i] -= s;
        }
      }
      break;
    }
    case ObjectiveKind::ListMLE: {
      if (m < 2) throw WrongArity("loss_listmle: need m >= 2");
      std::vector<double> probs(m);
      for (std::size_t i = 0; i < m; ++i) {
        kernels::softmax(g.values.data() + i, m - i, probs.data());
        for (std::size_t j = i; j < m; ++j) a[j] += probs[j - i];
        a[i] -= 1.0;
      }
      break;
    }
  }
  return a;
}

double ranking_probability(ObjectiveKind kind, std::span<const double> values) {
  const std::size_t m = values.size();
  if (m < 2) throw WrongArity("ranking_probability: need m >= 2");
  // Deliberately raw exponentials (no max-shift): this is the "reward route"
  // the shift-invariance check compares against the stabilized loss route.
  // Callers keep |values| modest, so overflow is not a concern here.
  std::vector<double> e(m);
  for (std::size_t i = 0; i < m; ++i) e[i] = std::exp(values[i]);
  switch (kind) {
    case ObjectiveKind::Pair: {
      if (m != 2) throw WrongArity("ranking_probability(pair): list length must be 2");
      return e[0] / (e[0] + e[1]);
    }
    case ObjectiveKind::Contrastive: {
      double denom = 0.0;
      for (double v : e) denom += v;
      return e[0] / denom;
    }
    case ObjectiveKind::LambdaRank: {
      double prob = 1.0;
      for (std::size_t i = 0; i + 1 < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) prob *= e[i] / (e[i] + e[j]);
      }
      return prob;
    }
    case ObjectiveKind::ListMLE: {
      double prob = 1.0;
      for (std::size_t i = 0; i < m; ++i) {
        double denom = 0.0;
        for (std::size_t j = i; j < m; ++j) denom += e[j];
        prob *= e[i] / denom;
      }
      return prob;
    }
  }
  throw InvalidArgument("bad objective kind");
}

double loss_sft_infonce(const BiEncoderPolicy& policy, PromptId x, ResponseId gold,
                        std::span<const ResponseId> negatives) {
  policy.world().check_response(gold);
  if (negatives.empty()) {
    return -policy.log_prob(x, gold, 1.0);
  }
  std::vector<double> scores;
  policy.score_all(x, scores);
  std::vector<double> subset;
  subset.reserve(negatives.size() + 1);
  subset.push_back(scores[static_cast<std::size_t>(gold)]);
  for (ResponseId y : negatives) {
    policy.world().check_response(y);
    if (y == gold) throw GoldInNegatives("sft: gold id appears among negatives");
    subset.push_back(scores[static_cast<std::size_t>(y)]);
  }
  return kernels::logsumexp(subset.data(), subset.size()) - subset[0];
}

namespace {

// dL/dW = outer(v, u) with u the prompt features; shared by both gradients.
Mat outer_with_features(const BiEncoderPolicy& policy, PromptId x, const std::vector<double>& v) {
  const std::size_t d = policy.dim();
  Mat grad(d, d);
  kernels::ger(grad.data(), d, d, 1.0, v.data(), policy.world().features(x).data());
  return grad;
}

// mu = sum_y pi_theta(y|x) e_y, the corpus mean embedding under the policy.
std::vector<double> corpus_mean_embedding(const BiEncoderPolicy& policy, PromptId x) {
  std::vector<double> probs;
  policy.prob_table(x, 1.0, probs);
  std::vector<double> mu(policy.dim(), 0.0);
  kernels::weighted_rowsum(policy.world().response_embeddings.data(), probs.size(), policy.dim(),
                           probs.data(), mu.data());
  return mu;
}

}  // namespace

LossGrad preference_loss_grad(ObjectiveKind kind, const BiEncoderPolicy& policy,
                              const BiEncoderPolicy& ref, PromptId x,
                              std::span<const ResponseId> ys, double beta) {
  const GammaVector g = gamma(policy, ref, x, ys, beta);
  const std::vector<double> a = dloss_dgamma(kind, g);

  // v = beta * [ sum_i a_i e_{y_i} - (sum_i a_i) mu ]
  const std::size_t d = policy.dim();
  std::vector<double> v(d, 0.0);
  double a_total = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    kernels::axpy(a[i], policy.world().response_embedding(ys[i]).data(), v.data(), d);
    a_total += a[i];
  }
  const std::vector<double> mu = corpus_mean_embedding(policy, x);
  kernels::axpy(-a_total, mu.data(), v.data(), d);
  for (double& vi : v) vi *= beta;

  LossGrad out;
  out.loss = objective_loss(kind, g);
  out.grad = outer_with_features(policy, x, v);
  return out;
}

LossGrad sft_loss_grad(const BiEncoderPolicy& policy, PromptId x, ResponseId gold,
                       std::span<const ResponseId> negatives) {
  const std::size_t d = policy.dim();
  std::vector<double> v(d, 0.0);
  LossGrad out;
  out.loss = loss_sft_infonce(policy, x, gold, negatives);

  if (negatives.empty()) {
    // v = mu - e_gold over the full corpus.
    v = corpus_mean_embedding(policy, x);
  } else {
    // v = sum over the subset of its softmax weights times embeddings - e_gold.
    std::vector<double> scores;
    policy.score_all(x, scores);
    std::vector<ResponseId> subset;
    subset.reserve(negatives.size() + 1);
    subset.push_back(gold);
    subset.insert(subset.end(), negatives.begin(), negatives.end());
    std::vector<double> sub_scores(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i)
      sub_scores[i] = scores[static_cast<std::size_t>(subset[i])];
    std::vector<double> probs(subset.size());
    kernels::softmax(sub_scores.data(), sub_scores.size(), probs.data());
    for (std::size_t i = 0; i < subset.size(); ++i) {
      kernels::axpy(probs[i], policy.world().response_embedding(subset[i]).data(), v.data(), d);
    }
  }
  kernels::axpy(-1.0, policy.world().response_embedding(gold).data(), v.data(), d);

  out.grad = outer_with_features(policy, x, v);
  return out;
}

SliceSpec default_slice(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::Pair: return {1, 1};
    case ObjectiveKind::Contrastive: return {1, 3};
    case ObjectiveKind::LambdaRank: return {2, 2};
    case ObjectiveKind::ListMLE: return {2, 2};
  }
  throw InvalidArgument("bad objective kind");
}

}  // namespace larpo
