#pragma once

#include <string>
#include <vector>

#include "larpo/config.hpp"
#include "larpo/eval.hpp"
#include "larpo/trainer.hpp"
#include "larpo/world.hpp"

namespace larpo {

inline constexpr const char* kToolVersion = "0.1.0";

// Shortest text that parses back to exactly this double.
std::string format_double(double v);

// Writes via a temp file in the same directory plus rename, so readers never
// observe a partial file. Throws IoError.
void write_text_atomic(const std::string& path, const std::string& text);

// The run's metric table. One row per eval: iter = -1 is the post-SFT
// baseline, then one row per training iteration. Fixed columns:
//   iter,greedy_acc,expected_reward,recall@1,recall@10,recall@50,winrate
std::string metrics_csv(const EvalReport& sft_eval, const std::vector<IterationRecord>& records);

// Full machine-readable run record (stable key order).
std::string run_record_json(const RunConfig& config, const SyntheticWorld& world,
                            const SftResult& sft, const EvalReport& sft_eval,
                            const TrainResult& train, double wall_time_seconds);

}  // namespace larpo
