#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "space3/autodiff/parameter.hpp"

namespace space3::objectives {

struct AdamWConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
  std::int64_t warmup_steps = 0;  // linear ramp, then constant
};

/// Biases and layer-norm parameters are not decayed.
bool decays(const std::string& param_name);

/// Adam with decoupled weight decay. Only the parameters named at
/// construction are ever read or written.
class AdamW {
 public:
  AdamW(AdamWConfig config, std::vector<std::string> trainable);

  /// Learning rate used by update number `step` (1-based).
  double learning_rate_at(std::int64_t step) const;

  /// One update from the gradients currently stored in `params`; returns the
  /// learning rate used.
  double step(ad::ParameterStore& params);

  std::int64_t steps_taken() const { return t_; }
  const std::vector<std::string>& trainable() const { return names_; }
  const AdamWConfig& config() const { return config_; }

  /// Moments as tensors named "m/<param>", "v/<param>" plus "t".
  ad::ParameterStore export_state() const;
  void import_state(const ad::ParameterStore& state);

 private:
  AdamWConfig config_;
  std::vector<std::string> names_;
  std::vector<ad::Matrix> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace space3::objectives
