#pragma once

#include <initializer_list>
#include <string>

#include "json.hpp"

namespace space3::model {

struct ModelConfig {
  int num_layers = 2;
  int hidden_dim = 64;
  int num_heads = 4;
  int ffn_dim = 256;
  int vocab_size = 0;  // filled from the vocabulary
  int max_positions = 512;
  int max_turns = 32;
  double dropout_rate = 0.2;
  int prompt_len_understanding = 5;  // A
  int prompt_len_policy = 5;         // B
  double init_std = 0.02;
  double prompt_init_std = 0.02;

  /// Throws std::invalid_argument describing the first violated constraint.
  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& config);
/// Missing keys keep their defaults; unknown keys throw std::invalid_argument.
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Throws std::invalid_argument naming the first key of `j` not in `known`.
void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> known,
                         const std::string& where);

}  // namespace space3::model
