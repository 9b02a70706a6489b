#include "larpo/record.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "larpo/errors.hpp"
#include "larpo/kernels.hpp"

namespace larpo {

namespace {

nlohmann::ordered_json eval_json(const EvalReport& eval) {
  nlohmann::ordered_json j;
  j["greedy_acc"] = eval.greedy_accuracy;
  j["expected_reward"] = eval.expected_reward;
  for (const auto& [n, value] : eval.recall_at) j["recall@" + std::to_string(n)] = value;
  j["recall_temperature"] = eval.recall_temperature;
  j["winrate"] = eval.winrate_vs_ref;
  return j;
}

nlohmann::ordered_json counters_json(const Counters& counters) {
  nlohmann::ordered_json j;
  j["gradient_updates"] = counters.gradient_updates;
  j["oracle_calls"] = counters.oracle_calls;
  j["sample_draws"] = counters.sample_draws;
  j["duplicate_draws"] = counters.duplicate_draws;
  return j;
}

void append_row(std::string& out, long long iter, const EvalReport& eval) {
  out += std::to_string(iter);
  for (double v : {eval.greedy_accuracy, eval.expected_reward, eval.recall_at.at(1),
                   eval.recall_at.at(10), eval.recall_at.at(50), eval.winrate_vs_ref}) {
    out += ",";
    out += format_double(v);
  }
  out += "\n";
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write to '" + tmp + "' failed");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw IoError("rename '" + tmp + "' -> '" + path + "' failed");
  }
}

std::string metrics_csv(const EvalReport& sft_eval,
                        const std::vector<IterationRecord>& records) {
  std::string out = "iter,greedy_acc,expected_reward,recall@1,recall@10,recall@50,winrate\n";
  append_row(out, -1, sft_eval);
  for (const auto& record : records)
    append_row(out, static_cast<long long>(record.iteration), record.eval);
  return out;
}

std::string run_record_json(const RunConfig& config, const SyntheticWorld& world,
                            const SftResult& sft, const EvalReport& sft_eval,
                            const TrainResult& train, double wall_time_seconds) {
  nlohmann::ordered_json j;
  j["tool"] = "larpo";
  j["version"] = kToolVersion;
  j["kernel_backend"] = kernels::active().name;

  nlohmann::ordered_json cfg;
  for (const auto& [key, value] : config_echo(config)) cfg[key] = value;
  j["config"] = std::move(cfg);
  j["world_digest"] = world_digest(world);

  nlohmann::ordered_json sft_j;
  sft_j["steps"] = sft.step_losses.size();
  sft_j["step_losses"] = sft.step_losses;
  sft_j["eval"] = eval_json(sft_eval);
  sft_j["counters"] = counters_json(sft.counters);
  j["sft"] = std::move(sft_j);

  nlohmann::ordered_json iters = nlohmann::ordered_json::array();
  for (const auto& record : train.records) {
    nlohmann::ordered_json r;
    r["iteration"] = record.iteration;
    r["dataset_size"] = record.dataset_size;
    r["duplicate_rate"] = record.duplicate_rate;
    r["epoch_losses"] = record.epoch_losses;
    r["eval"] = eval_json(record.eval);
    r["wall_time_seconds"] = record.wall_time_seconds;
    iters.push_back(std::move(r));
  }
  j["iterations"] = std::move(iters);
  j["train_counters"] = counters_json(train.counters);
  j["final_eval"] =
      train.records.empty() ? eval_json(sft_eval) : eval_json(train.records.back().eval);

  nlohmann::ordered_json policy;
  policy["embed_dim"] = train.policy.dim();
  policy["weights"] = std::vector<double>(train.policy.weights().flat().begin(),
                                          train.policy.weights().flat().end());
  j["policy"] = std::move(policy);
  j["wall_time_seconds"] = wall_time_seconds;
  return j.dump(2) + "\n";
}

}  // namespace larpo
