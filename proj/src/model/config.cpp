#include "space3/model/config.hpp"

#include <stdexcept>

namespace space3::model {

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw std::invalid_argument("model config: " + msg); };
  if (num_layers < 1) fail("num_layers must be >= 1");
  if (hidden_dim < 1 || num_heads < 1) fail("hidden_dim and num_heads must be positive");
  if (hidden_dim % num_heads != 0) fail("hidden_dim must be divisible by num_heads");
  if (ffn_dim < 1) fail("ffn_dim must be positive");
  if (vocab_size < 8) fail("vocab_size must cover the special tokens plus one word");
  if (max_positions < 3) fail("max_positions too small");
  if (max_turns < 1) fail("max_turns must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout_rate must be in [0, 1)");
  if (prompt_len_understanding < 1) fail("prompt_len_understanding must be >= 1");
  if (prompt_len_policy < 1) fail("prompt_len_policy must be >= 1");
  if (!(init_std > 0) || !(prompt_init_std > 0)) fail("init std must be positive");
}

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> known,
                         const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw std::invalid_argument(where + ": unknown key '" + key + "'");
  }
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"num_layers", c.num_layers},
          {"hidden_dim", c.hidden_dim},
          {"num_heads", c.num_heads},
          {"ffn_dim", c.ffn_dim},
          {"vocab_size", c.vocab_size},
          {"max_positions", c.max_positions},
          {"max_turns", c.max_turns},
          {"dropout_rate", c.dropout_rate},
          {"prompt_len_understanding", c.prompt_len_understanding},
          {"prompt_len_policy", c.prompt_len_policy},
          {"init_std", c.init_std},
          {"prompt_init_std", c.prompt_init_std}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"num_layers", "hidden_dim", "num_heads", "ffn_dim", "vocab_size",
                       "max_positions", "max_turns", "dropout_rate", "prompt_len_understanding",
                       "prompt_len_policy", "init_std", "prompt_init_std"},
                      "model");
  ModelConfig c;
  c.num_layers = j.value("num_layers", c.num_layers);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.num_heads = j.value("num_heads", c.num_heads);
  c.ffn_dim = j.value("ffn_dim", c.ffn_dim);
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.max_positions = j.value("max_positions", c.max_positions);
  c.max_turns = j.value("max_turns", c.max_turns);
  c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
  c.prompt_len_understanding = j.value("prompt_len_understanding", c.prompt_len_understanding);
  c.prompt_len_policy = j.value("prompt_len_policy", c.prompt_len_policy);
  c.init_std = j.value("init_std", c.init_std);
  c.prompt_init_std = j.value("prompt_init_std", c.prompt_init_std);
  return c;
}

}  // namespace space3::model
