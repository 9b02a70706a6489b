#include "larpo/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "larpo/errors.hpp"

namespace larpo {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw ConfigError("");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  if (!value.empty() && value[0] == '-')
    throw ConfigError("config key '" + key + "': expected a nonnegative integer, got '" +
                      value + "'");
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(value, &used);
    if (used != value.size()) throw ConfigError("");
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a nonnegative integer, got '" +
                      value + "'");
  }
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  return static_cast<std::size_t>(parse_u64(key, value));
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + value + "'");
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& key, const std::string& value, Parse parse) {
  std::vector<T> out;
  if (trim(value).empty()) return out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse(key, trim(item)));
  return out;
}

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ",";
    if constexpr (std::is_floating_point_v<T>)
      out += format_g17(values[i]);
    else
      out += std::to_string(values[i]);
  }
  return out;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;

  std::stringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (!seen.insert(key).second)
      throw ConfigError("config key '" + key + "' appears more than once");

    // World.
    if (key == "prompts") cfg.world.prompts = parse_size(key, value);
    else if (key == "responses") cfg.world.responses = parse_size(key, value);
    else if (key == "embed_dim") cfg.world.embed_dim = parse_size(key, value);
    else if (key == "clusters") cfg.world.clusters = parse_size(key, value);
    else if (key == "world_seed") cfg.world.seed = parse_u64(key, value);
    else if (key == "cluster_offset_std") cfg.world.cluster_offset_std = parse_double(key, value);
    // Reward oracle.
    else if (key == "reward_kind") {
      if (value == "dot_to_gold") cfg.oracle.kind = RewardKind::DotToGold;
      else if (value == "noisy_dot_to_gold") cfg.oracle.kind = RewardKind::NoisyDotToGold;
      else throw ConfigError("config key 'reward_kind': unknown value '" + value + "'");
    } else if (key == "reward_noise_std") cfg.oracle.noise_std = parse_double(key, value);
    else if (key == "reward_noise_seed") cfg.oracle.noise_seed = parse_u64(key, value);
    else if (key == "correctness") {
      if (value == "exact_gold") cfg.oracle.correctness = CorrectnessRule::ExactGold;
      else if (value == "reward_threshold")
        cfg.oracle.correctness = CorrectnessRule::RewardThreshold;
      else throw ConfigError("config key 'correctness': unknown value '" + value + "'");
    } else if (key == "reward_threshold") cfg.oracle.threshold = parse_double(key, value);
    // Trainer.
    else if (key == "iterations") cfg.train.iterations = parse_size(key, value);
    else if (key == "prompts_per_iter") cfg.train.prompts_per_iter = parse_size(key, value);
    else if (key == "k") cfg.train.k = parse_size(key, value);
    else if (key == "temperatures")
      cfg.train.temperatures = parse_list<double>(key, value, parse_double);
    else if (key == "lr") cfg.train.lr = parse_double(key, value);
    else if (key == "epochs_per_iter") cfg.train.epochs_per_iter = parse_size(key, value);
    else if (key == "beta") cfg.train.beta = parse_double(key, value);
    else if (key == "objective") {
      try {
        cfg.train.objective = objective_from_string(value);
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "n_pos") cfg.train.slice.n_pos = parse_size(key, value);
    else if (key == "n_neg") cfg.train.slice.n_neg = parse_size(key, value);
    else if (key == "memorization") {
      try {
        cfg.train.memorization = memorization_from_string(value);
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "negative_source") {
      try {
        cfg.train.negative_source = negative_source_from_string(value);
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "hardness_level") {
      try {
        cfg.train.hardness = hardness_from_string(value);
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "t_hi") cfg.train.t_hi = parse_double(key, value);
    else if (key == "t_lo") cfg.train.t_lo = parse_double(key, value);
    else if (key == "ref_mode") {
      try {
        cfg.train.ref_mode = ref_mode_from_string(value);
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
    } else if (key == "seed") cfg.train.seed = parse_u64(key, value);
    // SFT and init.
    else if (key == "sft_steps") cfg.train.sft_steps = parse_size(key, value);
    else if (key == "sft_lr") cfg.train.sft_lr = parse_double(key, value);
    else if (key == "sft_exact") cfg.train.sft_exact = parse_bool(key, value);
    else if (key == "sft_hard_negatives") cfg.train.sft_hard_negatives = parse_size(key, value);
    else if (key == "init_std") cfg.train.init_std = parse_double(key, value);
    // Eval.
    else if (key == "recall_without_replacement")
      cfg.train.recall_without_replacement = parse_bool(key, value);
    else if (key == "mc_trials") cfg.train.mc_trials = parse_size(key, value);
    // Studies.
    else if (key == "study_seeds") cfg.study_seeds = parse_size(key, value);
    else if (key == "temperature_grid")
      cfg.temperature_grid = parse_list<double>(key, value, parse_double);
    else if (key == "list_sizes") cfg.list_sizes = parse_list<std::size_t>(key, value, parse_size);
    else throw ConfigError("unknown config key '" + key + "'");
  }

  // Validation beyond the trainer's own invariants.
  if (cfg.world.clusters < 1 || cfg.world.prompts < cfg.world.clusters ||
      cfg.world.responses < 4 || cfg.world.embed_dim < 2)
    throw ConfigError("world: need clusters >= 1, prompts >= clusters, responses >= 4, "
                      "embed_dim >= 2");
  if (cfg.oracle.noise_std < 0.0) throw ConfigError("reward_noise_std must be >= 0");
  if (cfg.train.mc_trials < 1) throw ConfigError("mc_trials must be >= 1");
  if (cfg.temperature_grid.empty()) throw ConfigError("temperature_grid must be nonempty");
  for (double t : cfg.temperature_grid) {
    if (!(t > 0.0)) throw ConfigError("temperature_grid entries must be > 0");
  }
  if (cfg.list_sizes.empty()) throw ConfigError("list_sizes must be nonempty");
  for (std::size_t sz : cfg.list_sizes) {
    if (sz < 2) throw ConfigError("list_sizes entries must be >= 2");
  }
  cfg.train.finalize();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& config) {
  std::vector<std::pair<std::string, std::string>> kv;
  const auto add = [&](const char* key, std::string value) {
    kv.emplace_back(key, std::move(value));
  };
  add("prompts", std::to_string(config.world.prompts));
  add("responses", std::to_string(config.world.responses));
  add("embed_dim", std::to_string(config.world.embed_dim));
  add("clusters", std::to_string(config.world.clusters));
  add("world_seed", std::to_string(config.world.seed));
  add("cluster_offset_std", format_g17(config.world.cluster_offset_std));
  add("reward_kind",
      config.oracle.kind == RewardKind::DotToGold ? "dot_to_gold" : "noisy_dot_to_gold");
  add("reward_noise_std", format_g17(config.oracle.noise_std));
  add("reward_noise_seed", std::to_string(config.oracle.noise_seed));
  add("correctness", config.oracle.correctness == CorrectnessRule::ExactGold
                         ? "exact_gold"
                         : "reward_threshold");
  add("reward_threshold", format_g17(config.oracle.threshold));
  add("iterations", std::to_string(config.train.iterations));
  add("prompts_per_iter", std::to_string(config.train.prompts_per_iter));
  add("k", std::to_string(config.train.k));
  add("temperatures", join(config.train.temperatures));
  add("lr", format_g17(config.train.lr));
  add("epochs_per_iter", std::to_string(config.train.epochs_per_iter));
  add("beta", format_g17(config.train.beta));
  add("objective", to_string(config.train.objective));
  add("n_pos", std::to_string(config.train.slice.n_pos));
  add("n_neg", std::to_string(config.train.slice.n_neg));
  add("memorization", to_string(config.train.memorization));
  add("negative_source", to_string(config.train.negative_source));
  add("hardness_level", to_string(config.train.hardness));
  add("t_hi", format_g17(config.train.t_hi));
  add("t_lo", format_g17(config.train.t_lo));
  add("ref_mode", to_string(config.train.ref_mode));
  add("seed", std::to_string(config.train.seed));
  add("sft_steps", std::to_string(config.train.sft_steps));
  add("sft_lr", format_g17(config.train.sft_lr));
  add("sft_exact", config.train.sft_exact ? "true" : "false");
  add("sft_hard_negatives", std::to_string(config.train.sft_hard_negatives));
  add("init_std", format_g17(config.train.init_std));
  add("recall_without_replacement",
      config.train.recall_without_replacement ? "true" : "false");
  add("mc_trials", std::to_string(config.train.mc_trials));
  add("study_seeds", std::to_string(config.study_seeds));
  add("temperature_grid", join(config.temperature_grid));
  add("list_sizes", join(config.list_sizes));
  return kv;
}

}  // namespace larpo
