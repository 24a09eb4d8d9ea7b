#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "json.hpp"
#include "space3/corpus/example.hpp"
#include "space3/eval/finetune.hpp"
#include "space3/model/config.hpp"
#include "space3/objectives/trainer.hpp"

namespace space3::cli {

struct TrainingSection {
  std::size_t batch_size = 8;
  std::int64_t steps = 500;
  double learning_rate = 1e-3;
  std::int64_t warmup_steps = 0;
  double weight_decay = 0.01;
  double dropout = 0.2;
  double temperature = 0.07;
  std::size_t labeled_ratio = 1;
  std::size_t unlabeled_ratio = 1;
  bool psm_stop_gradient = false;
  bool scl_include_self = false;
  std::uint64_t seed = 0;
  std::int64_t checkpoint_every = 100;  // 0 = final checkpoint only
  std::uint64_t init_seed = 1;

  bool operator==(const TrainingSection&) const = default;
};

struct DataSection {
  std::string labeled_path;
  std::string unlabeled_path;
  std::size_t max_context_len = 256;
  std::size_t max_response_len = 50;
  std::size_t min_freq = 1;
  std::string offensive_words_path;  // optional word list for cleaning

  bool operator==(const DataSection&) const = default;
};

struct RunConfig {
  model::ModelConfig model;  // dropout_rate mirrors training.dropout
  TrainingSection training;
  DataSection data;
  eval::IntentConfig intent;
  eval::E2EConfig e2e;
  std::string output_dir = "runs/default";

  bool operator==(const RunConfig& other) const;

  objectives::TrainingConfig training_config() const;
  corpus::Limits limits() const;
};

nlohmann::json to_json(const RunConfig& config);
/// Missing keys keep their defaults. Unknown keys anywhere, wrong value types
/// and a model.dropout_rate that disagrees with training.dropout throw
/// std::invalid_argument.
RunConfig run_config_from_json(const nlohmann::json& j);

/// Throws std::runtime_error when the file cannot be read or is not JSON.
RunConfig load_run_config(const std::filesystem::path& path);
/// Writes <dir>/effective_config.json and returns its path.
std::filesystem::path write_effective_config(const RunConfig& config,
                                             const std::filesystem::path& dir);

}  // namespace space3::cli
