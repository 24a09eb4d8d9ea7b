#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "space3/corpus/example.hpp"
#include "space3/model/transformer.hpp"
#include "space3/objectives/optimizer.hpp"

namespace space3::objectives {

/// Mixes a base seed with up to three counters (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

struct LossOptions {
  double temperature = 0.07;
  bool psm_stop_gradient = false;
  bool scl_include_self = false;
  corpus::SpanMaskConfig mask;
  bool train = true;  // dropout on
};

struct LossBundle {
  double slm = 0, scl = 0, bow = 0, psm = 0, rgm = 0, joint = 0;
  nlohmann::json to_json() const;
};

struct LossGraph {
  ad::Var slm, scl, bow, psm, rgm, joint;
  LossBundle values() const;
};

/// Builds all five losses for one homogeneous batch on `tape`. Every sample
/// is run twice through QUERY and RESPONSE_POSTERIOR with distinct dropout
/// seeds for the contrastive pair; masks and dropout are derived from
/// `batch_seed`. Labeled batches need annotations on every example and throw
/// std::invalid_argument otherwise.
LossGraph build_joint_loss(ad::Tape& tape, const model::Transformer& model,
                           ad::ParameterStore& params,
                           const std::vector<const corpus::TrainingExample*>& batch, bool labeled,
                           const LossOptions& options, std::uint64_t batch_seed);

class NonFiniteLoss : public std::runtime_error {
 public:
  NonFiniteLoss(std::string component, double value);
  const std::string& component() const { return component_; }

 private:
  std::string component_;
};

/// Forward, backward and one optimizer update. Throws NonFiniteLoss before
/// touching the parameters when any component is not finite.
LossBundle joint_training_step(const model::Transformer& model, ad::ParameterStore& params,
                               AdamW& optimizer,
                               const std::vector<const corpus::TrainingExample*>& batch,
                               bool labeled, const LossOptions& options, std::uint64_t batch_seed);

struct TrainingConfig {
  std::size_t batch_size = 8;
  std::int64_t steps = 500;
  AdamWConfig optimizer;
  LossOptions loss;
  std::size_t labeled_ratio = 1;    // labeled batches per cycle
  std::size_t unlabeled_ratio = 1;  // unlabeled batches per cycle
  std::uint64_t seed = 0;
};

struct StepRecord {
  std::int64_t step = 0;  // 1-based index of the completed step
  bool labeled = false;
  double learning_rate = 0;
  LossBundle losses;
  double wall_seconds = 0;
  nlohmann::json to_json() const;
};

/// Backbone plus projection and bag-of-words heads.
ad::ParameterStore init_pretraining_params(const model::Transformer& model, std::uint64_t seed);

/// Stateless batch selection: batch contents depend only on (seed, step), so
/// resuming needs nothing beyond parameters, optimizer moments and the step.
class Pretrainer {
 public:
  Pretrainer(model::Transformer model, ad::ParameterStore params, TrainingConfig config,
             std::vector<corpus::TrainingExample> labeled,
             std::vector<corpus::TrainingExample> unlabeled);

  StepRecord step();
  std::int64_t steps_done() const { return steps_done_; }

  bool is_labeled_step(std::int64_t step) const;
  std::vector<std::size_t> batch_indices(std::int64_t step, bool labeled) const;

  /// Losses on the batch of `step` with dropout off and no update.
  LossBundle evaluate_step(std::int64_t step);

  void restore(ad::ParameterStore params, const ad::ParameterStore& optimizer_state,
               std::int64_t steps_done);

  const model::Transformer& model() const { return model_; }
  ad::ParameterStore& params() { return params_; }
  const ad::ParameterStore& params() const { return params_; }
  const AdamW& optimizer() const { return optimizer_; }
  const TrainingConfig& config() const { return config_; }

 private:
  std::vector<const corpus::TrainingExample*> batch_for(std::int64_t step, bool labeled) const;

  model::Transformer model_;
  ad::ParameterStore params_;
  TrainingConfig config_;
  std::vector<corpus::TrainingExample> labeled_, unlabeled_;
  AdamW optimizer_;
  std::int64_t steps_done_ = 0;
};

}  // namespace space3::objectives
