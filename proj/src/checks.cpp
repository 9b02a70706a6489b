#include "larpo/checks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "larpo/eval.hpp"
#include "larpo/objectives.hpp"
#include "larpo/policy.hpp"
#include "larpo/rng.hpp"
#include "larpo/world.hpp"

namespace larpo {

namespace {

SyntheticWorld check_world(std::uint64_t seed) {
  WorldParams p;
  p.prompts = 6;
  p.responses = 12;
  p.embed_dim = 5;
  p.clusters = 2;
  p.seed = seed;
  return generate_world(p);
}

// Central finite differences of a scalar function of the policy weights.
template <typename Fn>
Mat fd_gradient(const SyntheticWorld& world, const Mat& w0, Fn&& fn, double h = 1e-5) {
  Mat grad(w0.rows(), w0.cols());
  for (std::size_t r = 0; r < w0.rows(); ++r) {
    for (std::size_t c = 0; c < w0.cols(); ++c) {
      Mat wp = w0, wm = w0;
      wp(r, c) += h;
      wm(r, c) -= h;
      const double fp = fn(BiEncoderPolicy(&world, wp));
      const double fm = fn(BiEncoderPolicy(&world, wm));
      grad(r, c) = (fp - fm) / (2.0 * h);
    }
  }
  return grad;
}

// Worst entry of |analytic - fd| measured against the mixed tolerance
// 1e-8 + 1e-5 * |fd|; <= 1 passes.
double tolerance_ratio(const Mat& analytic, const Mat& fd) {
  double worst = 0.0;
  for (std::size_t i = 0; i < fd.size(); ++i) {
    const double a = analytic.flat()[i];
    const double f = fd.flat()[i];
    worst = std::max(worst, std::abs(a - f) / (1e-8 + 1e-5 * std::abs(f)));
  }
  return worst;
}

std::vector<ResponseId> random_distinct_ids(Rng& rng, std::size_t count, std::size_t corpus) {
  std::vector<ResponseId> all(corpus);
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.uniform_int(corpus - i);
    std::swap(all[i], all[j]);
  }
  all.resize(count);
  return all;
}

std::vector<double> random_gamma(Rng& rng, std::size_t m) {
  std::vector<double> g(m);
  for (double& v : g) v = -2.0 + 4.0 * rng.uniform01();
  return g;
}

// Direct Plackett-Luce probability of the order as listed, raw exponentials.
double pl_order_probability(std::span<const double> values) {
  double prob = 1.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    double denom = 0.0;
    for (std::size_t j = i; j < values.size(); ++j) denom += std::exp(values[j]);
    prob *= std::exp(values[i]) / denom;
  }
  return prob;
}

void finish(CheckFamily& family) {
  family.pass = std::all_of(family.items.begin(), family.items.end(),
                            [](const CheckItem& item) { return item.pass; });
}

CheckItem item_abs(std::string name, double observed, double tolerance, std::string note = "") {
  CheckItem item;
  item.name = std::move(name);
  item.observed = observed;
  item.tolerance = tolerance;
  item.pass = observed <= tolerance;
  item.note = std::move(note);
  return item;
}

CheckFamily gradient_fidelity(const CheckHooks& hooks) {
  CheckFamily family;
  family.name = "gradient_fidelity";

  const SyntheticWorld worlds[2] = {check_world(101), check_world(102)};
  Rng rng(2117);

  struct LossCase {
    const char* name;
    ObjectiveKind kind;
    bool is_sft;
  };
  const LossCase cases[] = {
      {"pair", ObjectiveKind::Pair, false},
      {"contrastive", ObjectiveKind::Contrastive, false},
      {"lambdarank", ObjectiveKind::LambdaRank, false},
      {"listmle", ObjectiveKind::ListMLE, false},
      {"sft_infonce", ObjectiveKind::Pair, true},
  };

  for (const LossCase& c : cases) {
    double worst = 0.0;
    for (int instance = 0; instance < 20; ++instance) {
      const SyntheticWorld& world = worlds[instance % 2];
      const auto policy =
          BiEncoderPolicy::init_perturbed(world, 0.3, rng.next_u64());
      const auto ref = BiEncoderPolicy::init_perturbed(world, 0.3, rng.next_u64());
      const auto x = static_cast<PromptId>(rng.uniform_int(world.num_prompts()));
      const double beta = 0.05 * (1.0 + static_cast<double>(instance % 3));

      Mat analytic;
      Mat fd;
      if (c.is_sft) {
        const ResponseId gold = world.gold_of(x);
        std::vector<ResponseId> negatives;
        if (instance % 2 == 1) {
          for (ResponseId y : random_distinct_ids(rng, 4, world.num_responses())) {
            if (y != gold && negatives.size() < 3) negatives.push_back(y);
          }
        }
        analytic = sft_loss_grad(policy, x, gold, negatives).grad;
        fd = fd_gradient(world, policy.weights(), [&](const BiEncoderPolicy& p) {
          return loss_sft_infonce(p, x, gold, negatives);
        });
      } else {
        const std::size_t m = c.kind == ObjectiveKind::Pair ? 2 : 2 + instance % 4;
        const auto ids = random_distinct_ids(rng, m, world.num_responses());
        analytic = preference_loss_grad(c.kind, policy, ref, x, ids, beta).grad;
        if (hooks.corrupt_pair_sign && c.kind == ObjectiveKind::Pair) {
          for (double& v : analytic.flat()) v = -v;
        }
        fd = fd_gradient(world, policy.weights(), [&](const BiEncoderPolicy& p) {
          return objective_loss(c.kind, gamma(p, ref, x, ids, beta));
        });
      }
      worst = std::max(worst, tolerance_ratio(analytic, fd));
    }
    family.items.push_back(item_abs(
        c.name, worst, 1.0, "max |analytic-fd| / (1e-8 + 1e-5|fd|) over 20 instances"));
  }
  finish(family);
  return family;
}

CheckFamily reduction_identities() {
  CheckFamily family;
  family.name = "reduction_identities";
  Rng rng(2209);
  double worst_con = 0.0, worst_lam = 0.0, worst_mle = 0.0;
  for (int i = 0; i < 100; ++i) {
    GammaVector g{random_gamma(rng, 2), 0.1};
    const double pair = loss_pair(g);
    worst_con = std::max(worst_con, std::abs(loss_contrastive(g) - pair));
    worst_lam = std::max(worst_lam, std::abs(loss_lambdarank(g) - pair));
    worst_mle = std::max(worst_mle, std::abs(loss_listmle(g) - pair));
  }
  family.items.push_back(item_abs("contrastive_single_negative_equals_pair", worst_con, 1e-12));
  family.items.push_back(item_abs("lambdarank_list2_equals_pair", worst_lam, 1e-12));
  family.items.push_back(item_abs("listmle_list2_equals_pair", worst_mle, 1e-12));
  finish(family);
  return family;
}

CheckFamily plackett_luce() {
  CheckFamily family;
  family.name = "plackett_luce";
  Rng rng(2311);
  for (std::size_t m = 2; m <= 5; ++m) {
    const std::vector<double> values = random_gamma(rng, m);
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), 0);

    double total = 0.0;
    double worst_order = 0.0;
    do {
      std::vector<double> ordered(m);
      for (std::size_t i = 0; i < m; ++i) ordered[i] = values[perm[i]];
      const double direct = pl_order_probability(ordered);
      total += direct;
      const double via_loss = std::exp(-loss_listmle(GammaVector{ordered, 0.1}));
      worst_order = std::max(worst_order, std::abs(via_loss - direct));
    } while (std::next_permutation(perm.begin(), perm.end()));

    family.items.push_back(item_abs("order_probability_m" + std::to_string(m), worst_order,
                                    1e-10, "exp(-listmle) vs direct product, all orders"));
    family.items.push_back(item_abs("orders_sum_to_one_m" + std::to_string(m),
                                    std::abs(total - 1.0), 1e-10));
  }
  finish(family);
  return family;
}

CheckFamily z_cancellation() {
  CheckFamily family;
  family.name = "z_cancellation";
  Rng rng(2417);
  const struct {
    const char* name;
    ObjectiveKind kind;
    std::size_t m;
  } cases[] = {
      {"pair", ObjectiveKind::Pair, 2},
      {"contrastive", ObjectiveKind::Contrastive, 4},
      {"lambdarank", ObjectiveKind::LambdaRank, 3},
      {"listmle", ObjectiveKind::ListMLE, 4},
  };
  for (const auto& c : cases) {
    double worst = 0.0;
    for (int i = 0; i < 25; ++i) {
      const std::vector<double> g = random_gamma(rng, c.m);
      const double shift = -10.0 + 20.0 * rng.uniform01();
      std::vector<double> shifted(g);
      for (double& v : shifted) v += shift;
      worst = std::max(worst, std::abs(ranking_probability(c.kind, shifted) -
                                       ranking_probability(c.kind, g)));
    }
    family.items.push_back(
        item_abs(c.name, worst, 1e-12, "|P(gamma + c) - P(gamma)|, c in [-10, 10]"));
  }
  finish(family);
  return family;
}

CheckFamily normalization() {
  CheckFamily family;
  family.name = "normalization";

  const SyntheticWorld world = check_world(103);
  const auto policy = BiEncoderPolicy::init_perturbed(world, 0.4, 9);
  double worst_sum = 0.0;
  std::vector<double> probs;
  for (double t : {0.5, 1.0, 2.0}) {
    for (std::size_t x = 0; x < world.num_prompts(); ++x) {
      policy.prob_table(static_cast<PromptId>(x), t, probs);
      double total = 0.0;
      for (double p : probs) total += p;
      worst_sum = std::max(worst_sum, std::abs(total - 1.0));
    }
  }
  family.items.push_back(item_abs("prob_table_sums_to_one", worst_sum, 1e-12,
                                  "all prompts, t in {0.5, 1, 2}"));

  Rng rng(2503);
  const struct {
    const char* name;
    ObjectiveKind kind;
    std::size_t m;
  } cases[] = {
      {"pair", ObjectiveKind::Pair, 2},
      {"contrastive", ObjectiveKind::Contrastive, 4},
      {"lambdarank", ObjectiveKind::LambdaRank, 3},
      {"listmle", ObjectiveKind::ListMLE, 4},
  };
  for (const auto& c : cases) {
    double worst = 0.0;
    for (int i = 0; i < 25; ++i) {
      const GammaVector g{random_gamma(rng, c.m), 0.1};
      worst = std::max(worst, std::abs(std::exp(-objective_loss(c.kind, g)) -
                                       ranking_probability(c.kind, g.values)));
    }
    family.items.push_back(item_abs(std::string("exp_neg_loss_is_probability_") + c.name,
                                    worst, 1e-12));
  }
  finish(family);
  return family;
}

CheckFamily closed_form_spots() {
  CheckFamily family;
  family.name = "closed_form_spots";
  constexpr double kLn2 = 0.6931471805599453;
  constexpr double kLn4 = 1.3862943611198906;
  constexpr double kLn6 = 1.791759469228055;
  constexpr double k3Ln2 = 2.0794415416798357;

  double worst_pair = 0.0;
  for (double c : {0.0, 1.7, -2.0}) {
    worst_pair = std::max(
        worst_pair, std::abs(loss_pair(GammaVector{{c, c}, 0.1}) - kLn2));
  }
  family.items.push_back(item_abs("pair_equal_gammas_ln2", worst_pair, 1e-12));
  family.items.push_back(item_abs(
      "lambdarank_equal_m3_3ln2",
      std::abs(loss_lambdarank(GammaVector{{0.4, 0.4, 0.4}, 0.1}) - k3Ln2), 1e-12));
  family.items.push_back(item_abs(
      "listmle_equal_m3_ln6",
      std::abs(loss_listmle(GammaVector{{-0.2, -0.2, -0.2}, 0.1}) - kLn6), 1e-12));
  family.items.push_back(item_abs(
      "contrastive_equal_m4_ln4",
      std::abs(loss_contrastive(GammaVector{{1.1, 1.1, 1.1, 1.1}, 0.1}) - kLn4), 1e-12));
  finish(family);
  return family;
}

CheckFamily recall_mc() {
  CheckFamily family;
  family.name = "recall_mc";

  const SyntheticWorld worlds[2] = {check_world(104), check_world(105)};
  const auto oracle = RewardOracle::dot_to_gold();
  Rng rng(2609);
  const std::size_t trials = 10000;
  const std::size_t n_grid[] = {1, 2, 5, 10, 20, 50};

  double worst_z = 0.0;  // |mc - exact| in standard-error units
  int accepted = 0;
  while (accepted < 20) {
    const SyntheticWorld& world = worlds[rng.uniform_int(2)];
    const auto policy = BiEncoderPolicy::init_perturbed(
        world, 0.1 + 0.5 * rng.uniform01(), rng.next_u64());
    const auto x = static_cast<PromptId>(rng.uniform_int(world.num_prompts()));
    const std::size_t n = n_grid[rng.uniform_int(6)];
    const double t = 0.5 + 1.5 * rng.uniform01();
    const double exact = recall_at_n_exact(policy, oracle, x, n, t);
    if (exact < 0.05 || exact > 0.95) continue;  // keep the SE well-defined
    ++accepted;
    Rng mc_rng(rng.next_u64());
    const double mc = recall_at_n_mc(policy, oracle, x, n, t, trials, mc_rng);
    const double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(trials));
    worst_z = std::max(worst_z, std::abs(mc - exact) / se);
  }
  family.items.push_back(item_abs("mc_within_3_standard_errors", worst_z, 3.0,
                                  "20 random (policy, prompt, N, t), 1e4 trials"));

  double worst_drop = 0.0;
  for (int i = 0; i < 10; ++i) {
    const SyntheticWorld& world = worlds[i % 2];
    const auto policy = BiEncoderPolicy::init_perturbed(world, 0.3, rng.next_u64());
    const auto x = static_cast<PromptId>(rng.uniform_int(world.num_prompts()));
    const double t = 0.5 + 1.5 * rng.uniform01();
    double prev = 0.0;
    for (std::size_t n : n_grid) {
      const double value = recall_at_n_exact(policy, oracle, x, n, t);
      worst_drop = std::max(worst_drop, prev - value);
      prev = value;
    }
  }
  family.items.push_back(item_abs("monotone_nondecreasing_in_n", worst_drop, 1e-15,
                                  "exact recall over N grid; slack for pow rounding"));
  finish(family);
  return family;
}

CheckFamily temperature_crossover() {
  CheckFamily family;
  family.name = "temperature_crossover";

  // Prompt 0's gold dominates (score 4); prompt 1's gold scores 0 behind a
  // score-4 distractor. Cold sampling wins recall@1 on the mean, hot sampling
  // wins recall@50.
  SyntheticWorld world;
  world.embed_dim = 2;
  world.response_embeddings = Mat(20, 2);
  world.response_embeddings(0, 0) = 4.0;
  world.response_embeddings(2, 1) = 4.0;
  world.prompt_features = Mat(2, 2);
  world.prompt_features(0, 0) = 1.0;
  world.prompt_features(1, 1) = 1.0;
  world.gold = {0, 1};
  world.cluster_of = {0, 1};
  world.clusters = {{0}, {1}};
  const auto policy = BiEncoderPolicy::init_identity(world);
  const auto oracle = RewardOracle::dot_to_gold();

  const double r1_cold = mean_recall_at_n(policy, oracle, 1, 0.5);
  const double r1_hot = mean_recall_at_n(policy, oracle, 1, 2.0);
  const double r50_cold = mean_recall_at_n(policy, oracle, 50, 0.5);
  const double r50_hot = mean_recall_at_n(policy, oracle, 50, 2.0);

  CheckItem low_wins;
  low_wins.name = "low_t_wins_recall_at_1";
  low_wins.observed = r1_cold - r1_hot;  // here observed must EXCEED tolerance
  low_wins.tolerance = 0.0;
  low_wins.pass = r1_cold > r1_hot;
  low_wins.note = "margin t=0.5 minus t=2.0; pass iff positive";
  family.items.push_back(low_wins);

  CheckItem high_wins;
  high_wins.name = "high_t_wins_recall_at_50";
  high_wins.observed = r50_hot - r50_cold;
  high_wins.tolerance = 0.0;
  high_wins.pass = r50_hot > r50_cold;
  high_wins.note = "margin t=2.0 minus t=0.5; pass iff positive";
  family.items.push_back(high_wins);
  finish(family);
  return family;
}

}  // namespace

CheckReport run_all_checks(const CheckHooks& hooks) {
  CheckReport report;
  report.families.push_back(gradient_fidelity(hooks));
  report.families.push_back(reduction_identities());
  report.families.push_back(plackett_luce());
  report.families.push_back(z_cancellation());
  report.families.push_back(normalization());
  report.families.push_back(closed_form_spots());
  report.families.push_back(recall_mc());
  report.families.push_back(temperature_crossover());
  report.pass = std::all_of(report.families.begin(), report.families.end(),
                            [](const CheckFamily& f) { return f.pass; });
  return report;
}

std::string check_report_json(const CheckReport& report) {
  nlohmann::ordered_json j;
  j["pass"] = report.pass;
  nlohmann::ordered_json families = nlohmann::ordered_json::array();
  for (const CheckFamily& family : report.families) {
    nlohmann::ordered_json f;
    f["name"] = family.name;
    f["pass"] = family.pass;
    nlohmann::ordered_json items = nlohmann::ordered_json::array();
    for (const CheckItem& item : family.items) {
      nlohmann::ordered_json it;
      it["name"] = item.name;
      it["pass"] = item.pass;
      it["observed"] = item.observed;
      it["tolerance"] = item.tolerance;
      if (!item.note.empty()) it["note"] = item.note;
      items.push_back(std::move(it));
    }
    f["items"] = std::move(items);
    families.push_back(std::move(f));
  }
  j["families"] = std::move(families);
  return j.dump(2) + "\n";
}

}  // namespace larpo
