#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "space3/autodiff/parameter.hpp"
#include "space3/corpus/vocabulary.hpp"
#include "space3/eval/metrics.hpp"
#include "space3/eval/synthetic.hpp"
#include "space3/model/transformer.hpp"

namespace space3::eval {

enum class Task { kIntent, kDstFormula, kE2E };
std::string task_name(Task task);
/// Throws std::invalid_argument on an unknown name.
Task task_from_name(const std::string& name);

struct EvalReport {
  Task task = Task::kIntent;
  std::map<std::string, double> metrics;
  std::string dataset_id;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  /// Aligned metric table, one "name  value" line per metric.
  std::string table() const;
};

/// Report for an e2e run; Inform and Success are on the 0..100 scale and Comb
/// is derived from them.
EvalReport make_e2e_report(double inform, double success, double bleu_score,
                           std::string dataset_id, nlohmann::json config);

namespace intent_names {
inline const std::string kWeight = "intent.w";  // num_classes x hidden_dim
inline const std::string kBias = "intent.b";
}  // namespace intent_names

struct IntentConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 20;
  std::size_t batch_size = 8;
  double weight_decay = 0.01;
  bool head_only = false;
  double train_fraction = 1.0;  // few-shot subsampling of the training split
  std::uint64_t seed = 0;
  nlohmann::json to_json() const;
};

/// Parameters updated by intent fine-tuning: the head, plus every backbone
/// parameter on the QUERY path unless head_only.
std::vector<std::string> intent_trainable(const ad::ParameterStore& params, bool head_only);

/// Single-turn input: the utterance as the only context turn.
model::ModelInput utterance_input(const std::string& text, const corpus::Vocabulary& vocab);

/// Predicted label per utterance (argmax over the head on h^q).
std::vector<std::string> predict_intents(const model::Transformer& model,
                                         ad::ParameterStore& params,
                                         const corpus::Vocabulary& vocab,
                                         const std::vector<std::string>& labels,
                                         const std::vector<IntentExample>& examples);

/// correct / total. Gold labels outside `labels` count as wrong and add a
/// warning.
double intent_accuracy(const std::vector<std::string>& predicted,
                       const std::vector<IntentExample>& gold,
                       const std::vector<std::string>& labels,
                       std::vector<std::string>* warnings = nullptr);

/// Adds a fresh head to `params` (replacing any existing one), trains with
/// cross-entropy on h^q and reports ACC on the test split.
EvalReport finetune_intent(const model::Transformer& model, ad::ParameterStore& params,
                           const corpus::Vocabulary& vocab, const IntentDataset& data,
                           const IntentConfig& config);

struct GridPoint {
  double learning_rate = 0;
  std::size_t epochs = 0;
  double mean_validation_accuracy = 0;
};

struct GridResult {
  std::vector<GridPoint> points;
  GridPoint best;
};

/// Every (learning rate, epochs) pair is fine-tuned from a copy of `params`
/// once per seed; validation ACC is averaged over seeds. Ties keep the first
/// point in grid order.
GridResult grid_search_intent(const model::Transformer& model, const ad::ParameterStore& params,
                              const corpus::Vocabulary& vocab, const IntentDataset& data,
                              IntentConfig base, const std::vector<double>& learning_rates,
                              const std::vector<std::size_t>& epochs,
                              const std::vector<std::uint64_t>& seeds = {0, 1, 2});

struct E2EConfig {
  double learning_rate = 3e-3;
  std::size_t steps = 500;
  std::size_t batch_size = 8;
  double weight_decay = 0.01;
  std::int64_t warmup_steps = 50;
  bool auxiliary_psm = false;
  std::size_t max_response_len = 40;
  std::uint64_t seed = 0;
  nlohmann::json to_json() const;
};

/// Trains on every turn pair of the training dialogs with L_rgm (+ L_psm).
/// Returns the loss of the last step.
double finetune_e2e(const model::Transformer& model, ad::ParameterStore& params,
                    const corpus::Vocabulary& vocab, const std::vector<GoalDialog>& train,
                    const E2EConfig& config);

/// Mean L_rgm over every turn pair of `dialogs` with dropout off.
double e2e_generation_loss(const model::Transformer& model, ad::ParameterStore& params,
                           const corpus::Vocabulary& vocab, const std::vector<GoalDialog>& dialogs);

/// Greedy-decodes every system turn from its gold context and scores BLEU,
/// Inform, Success and Comb.
EvalReport evaluate_e2e(const model::Transformer& model, ad::ParameterStore& params,
                        const corpus::Vocabulary& vocab, const std::vector<GoalDialog>& dialogs,
                        const std::vector<Entity>& db, const E2EConfig& config,
                        const std::string& dataset_id);

}  // namespace space3::eval
