#include "space3/eval/finetune.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "space3/corpus/example.hpp"
#include "space3/model/decode.hpp"
#include "space3/objectives/losses.hpp"
#include "space3/objectives/optimizer.hpp"
#include "space3/objectives/trainer.hpp"

namespace space3::eval {

using model::Mode;
using objectives::derive_seed;

namespace {

enum Stream : std::uint64_t { kShuffle = 11, kQuery, kPosterior, kPrior, kGenerate };

bool starts_with(const std::string& s, const std::string& prefix) {
  return s.compare(0, prefix.size(), prefix) == 0;
}

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  return idx;
}

void init_intent_head(ad::ParameterStore& params, int classes, int hidden, double std,
                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, std);
  ad::Matrix w(classes, hidden);
  for (Eigen::Index c = 0; c < w.cols(); ++c) {
    for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = dist(rng);
  }
  ad::Matrix b = ad::Matrix::Zero(1, classes);
  for (auto [name, value] : {std::pair{intent_names::kWeight, w}, std::pair{intent_names::kBias, b}}) {
    if (params.contains(name)) {
      params.get(name).value = value;
      params.get(name).zero_grad();
    } else {
      params.add(name, value);
    }
  }
}

ad::Var intent_logits(ad::Tape& tape, ad::ParameterStore& params, ad::Var h) {
  return ad::add_row(ad::matmul_nt(h, tape.param(params.get(intent_names::kWeight))),
                     tape.param(params.get(intent_names::kBias)));
}

std::vector<corpus::TrainingExample> turn_examples(const std::vector<GoalDialog>& dialogs,
                                                   const corpus::Vocabulary& vocab) {
  std::vector<corpus::TrainingExample> out;
  for (const GoalDialog& gd : dialogs) {
    auto all = corpus::assemble_all(gd.dialog, vocab);
    out.insert(out.end(), all.begin(), all.end());
  }
  return out;
}

Tokens words_of(const std::vector<corpus::TokenId>& ids, const corpus::Vocabulary& vocab) {
  Tokens out;
  for (corpus::TokenId id : ids) out.push_back(vocab.token(id));
  return out;
}

}  // namespace

std::string task_name(Task task) {
  switch (task) {
    case Task::kIntent: return "intent";
    case Task::kDstFormula: return "dst_formula";
    case Task::kE2E: return "e2e";
  }
  return "?";
}

Task task_from_name(const std::string& name) {
  for (Task t : {Task::kIntent, Task::kDstFormula, Task::kE2E}) {
    if (task_name(t) == name) return t;
  }
  throw std::invalid_argument("unknown task '" + name + "' (expected intent, dst_formula or e2e)");
}

nlohmann::json EvalReport::to_json() const {
  return {{"task", task_name(task)},
          {"metrics", metrics},
          {"dataset_id", dataset_id},
          {"config", config},
          {"warnings", warnings}};
}

std::string EvalReport::table() const {
  std::size_t width = 6;
  for (const auto& [k, v] : metrics) width = std::max(width, k.size());
  std::ostringstream out;
  out << "task: " << task_name(task) << "  dataset: " << dataset_id << '\n';
  for (const auto& [k, v] : metrics) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    out << k << std::string(width - k.size() + 2, ' ') << buf << '\n';
  }
  for (const std::string& w : warnings) out << "warning: " << w << '\n';
  return out.str();
}

EvalReport make_e2e_report(double inform, double success, double bleu_score,
                           std::string dataset_id, nlohmann::json config) {
  EvalReport r;
  r.task = Task::kE2E;
  r.metrics = {{"BLEU", bleu_score},
               {"Inform", inform},
               {"Success", success},
               {"Comb", combined_score(inform, success, bleu_score)}};
  r.dataset_id = std::move(dataset_id);
  r.config = std::move(config);
  return r;
}

nlohmann::json IntentConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"epochs", epochs},
          {"batch_size", batch_size},       {"weight_decay", weight_decay},
          {"head_only", head_only},         {"train_fraction", train_fraction},
          {"seed", seed}};
}

nlohmann::json E2EConfig::to_json() const {
  return {{"learning_rate", learning_rate}, {"steps", steps},
          {"batch_size", batch_size},       {"weight_decay", weight_decay},
          {"warmup_steps", warmup_steps},   {"auxiliary_psm", auxiliary_psm}, {"max_response_len", max_response_len},
          {"seed", seed}};
}

std::vector<std::string> intent_trainable(const ad::ParameterStore& params, bool head_only) {
  std::vector<std::string> out;
  for (const auto& p : params) {
    const std::string& n = p->name;
    const bool head = starts_with(n, "intent.");
    if (head_only && !head) continue;
    // Not on the QUERY path.
    if (n == model::names::kPolicyPrompt || starts_with(n, model::names::kGenerationHeadPrefix) ||
        starts_with(n, "proj.") || starts_with(n, "bow.")) {
      continue;
    }
    out.push_back(n);
  }
  return out;
}

model::ModelInput utterance_input(const std::string& text, const corpus::Vocabulary& vocab) {
  corpus::Dialog d;
  d.dialog_id = "utterance";
  d.turns = {{corpus::Speaker::kUser, text, std::nullopt},
             {corpus::Speaker::kSystem, "", std::nullopt}};
  return model::context_input(corpus::assemble_example(d, 1, vocab));
}

std::vector<std::string> predict_intents(const model::Transformer& model,
                                         ad::ParameterStore& params,
                                         const corpus::Vocabulary& vocab,
                                         const std::vector<std::string>& labels,
                                         const std::vector<IntentExample>& examples) {
  std::vector<std::string> out;
  for (const IntentExample& ex : examples) {
    ad::Tape tape;
    auto fwd = model.forward(tape, params, utterance_input(ex.text, vocab), Mode::kQuery);
    const ad::Matrix& logits = intent_logits(tape, params, fwd.h_q).value();
    Eigen::Index best = 0;
    logits.row(0).maxCoeff(&best);
    out.push_back(labels.at(static_cast<std::size_t>(best)));
  }
  return out;
}

double intent_accuracy(const std::vector<std::string>& predicted,
                       const std::vector<IntentExample>& gold,
                       const std::vector<std::string>& labels,
                       std::vector<std::string>* warnings) {
  if (predicted.size() != gold.size() || gold.empty()) {
    throw std::invalid_argument("intent_accuracy: need aligned, non-empty lists");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (std::find(labels.begin(), labels.end(), gold[i].label) == labels.end()) {
      if (warnings) warnings->push_back("unseen label '" + gold[i].label + "' counted wrong");
      continue;
    }
    correct += predicted[i] == gold[i].label;
  }
  return static_cast<double>(correct) / static_cast<double>(gold.size());
}

EvalReport finetune_intent(const model::Transformer& model, ad::ParameterStore& params,
                           const corpus::Vocabulary& vocab, const IntentDataset& data,
                           const IntentConfig& config) {
  if (data.labels.empty() || data.train.empty()) {
    throw std::invalid_argument("finetune_intent: empty label set or training split");
  }
  if (config.batch_size == 0) throw std::invalid_argument("finetune_intent: batch_size must be positive");
  if (!(config.train_fraction > 0 && config.train_fraction <= 1)) {
    throw std::invalid_argument("finetune_intent: train_fraction must be in (0, 1]");
  }
  const auto& mc = model.config();
  init_intent_head(params, static_cast<int>(data.labels.size()), mc.hidden_dim, mc.init_std,
                   derive_seed(config.seed, 0x1e7));

  std::vector<IntentExample> train = data.train;
  if (config.train_fraction < 1) {
    auto idx = shuffled(train.size(), derive_seed(config.seed, kShuffle, 0xfe));
    const auto keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(config.train_fraction * static_cast<double>(train.size())));
    std::vector<IntentExample> sub;
    for (std::size_t i = 0; i < keep; ++i) sub.push_back(train[idx[i]]);
    train = std::move(sub);
  }
  std::vector<int> targets;
  std::vector<model::ModelInput> inputs;
  for (const IntentExample& ex : train) {
    auto it = std::find(data.labels.begin(), data.labels.end(), ex.label);
    if (it == data.labels.end()) throw std::invalid_argument("training label not in label set: " + ex.label);
    targets.push_back(static_cast<int>(it - data.labels.begin()));
    inputs.push_back(utterance_input(ex.text, vocab));
  }

  objectives::AdamWConfig oc;
  oc.learning_rate = config.learning_rate;
  oc.weight_decay = config.weight_decay;
  objectives::AdamW opt(oc, intent_trainable(params, config.head_only));
  std::uint64_t update = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    auto order = shuffled(train.size(), derive_seed(config.seed, kShuffle, epoch));
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      ad::Tape tape;
      std::vector<ad::Var> rows;
      std::vector<int> row_ids, cols;
      for (std::size_t k = start; k < end; ++k) {
        auto out = model.forward(tape, params, inputs[order[k]], Mode::kQuery,
                                 {true, derive_seed(config.seed, kQuery, update, k)});
        rows.push_back(out.h_q);
        row_ids.push_back(static_cast<int>(k - start));
        cols.push_back(targets[order[k]]);
      }
      ad::Var logp = ad::log_softmax_rows(intent_logits(tape, params, ad::concat_rows(rows)));
      ad::Var loss = ad::scale(ad::pick_sum(logp, row_ids, cols),
                               -1.0 / static_cast<double>(rows.size()));
      params.zero_grad();
      tape.backward(loss);
      opt.step(params);
      ++update;
    }
  }

  EvalReport report;
  report.task = Task::kIntent;
  report.dataset_id = data.id;
  report.config = config.to_json();
  auto acc = [&](const std::vector<IntentExample>& split) {
    return intent_accuracy(predict_intents(model, params, vocab, data.labels, split), split,
                           data.labels, &report.warnings);
  };
  report.metrics["ACC_train"] = acc(train);
  if (!data.validation.empty()) report.metrics["ACC_validation"] = acc(data.validation);
  if (!data.test.empty()) report.metrics["ACC"] = acc(data.test);
  return report;
}

GridResult grid_search_intent(const model::Transformer& model, const ad::ParameterStore& params,
                              const corpus::Vocabulary& vocab, const IntentDataset& data,
                              IntentConfig base, const std::vector<double>& learning_rates,
                              const std::vector<std::size_t>& epochs,
                              const std::vector<std::uint64_t>& seeds) {
  if (learning_rates.empty() || epochs.empty() || seeds.empty() || data.validation.empty()) {
    throw std::invalid_argument("grid_search_intent: empty grid, seed list or validation split");
  }
  IntentDataset no_test = data;
  no_test.test.clear();
  GridResult result;
  for (double lr : learning_rates) {
    for (std::size_t ep : epochs) {
      double total = 0;
      for (std::uint64_t seed : seeds) {
        ad::ParameterStore copy = params;
        IntentConfig c = base;
        c.learning_rate = lr;
        c.epochs = ep;
        c.seed = seed;
        total += finetune_intent(model, copy, vocab, no_test, c).metrics.at("ACC_validation");
      }
      GridPoint p{lr, ep, total / static_cast<double>(seeds.size())};
      if (result.points.empty() || p.mean_validation_accuracy > result.best.mean_validation_accuracy) {
        result.best = p;
      }
      result.points.push_back(p);
    }
  }
  return result;
}

double finetune_e2e(const model::Transformer& model, ad::ParameterStore& params,
                    const corpus::Vocabulary& vocab, const std::vector<GoalDialog>& train,
                    const E2EConfig& config) {
  auto examples = turn_examples(train, vocab);
  if (examples.empty()) throw std::invalid_argument("finetune_e2e: no training turns");
  if (config.batch_size == 0) throw std::invalid_argument("finetune_e2e: batch_size must be positive");

  std::vector<std::string> trainable;
  for (const auto& p : params) {
    const std::string& n = p->name;
    if (starts_with(n, "intent.") || starts_with(n, "proj.") || starts_with(n, "bow.")) continue;
    trainable.push_back(n);
  }
  objectives::AdamWConfig oc;
  oc.learning_rate = config.learning_rate;
  oc.weight_decay = config.weight_decay;
  oc.warmup_steps = config.warmup_steps;
  objectives::AdamW opt(oc, trainable);

  double last = 0;
  const std::size_t per_epoch = (examples.size() + config.batch_size - 1) / config.batch_size;
  std::vector<std::size_t> order;
  for (std::size_t step = 0; step < config.steps; ++step) {
    const std::size_t slot = step % per_epoch;
    if (slot == 0) order = shuffled(examples.size(), derive_seed(config.seed, kShuffle, step / per_epoch));
    const std::size_t start = slot * config.batch_size;
    const std::size_t end = std::min(examples.size(), start + config.batch_size);

    ad::Tape tape;
    std::vector<ad::Var> lm, ho, hr;
    std::vector<std::vector<corpus::TokenId>> targets;
    for (std::size_t k = start; k < end; ++k) {
      const auto& ex = examples[order[k]];
      lm.push_back(model.forward(tape, params, model::generate_input(ex), Mode::kGenerate,
                                 {true, derive_seed(config.seed, kGenerate, step, k)})
                       .lm_logits);
      targets.emplace_back(ex.response_tokens.begin() + 1, ex.response_tokens.end());
      if (config.auxiliary_psm) {
        ho.push_back(model.forward(tape, params, model::context_input(ex), Mode::kPolicyPrior,
                                   {true, derive_seed(config.seed, kPrior, step, k)})
                         .h_o);
        hr.push_back(model.forward(tape, params, model::posterior_input(ex),
                                   Mode::kResponsePosterior,
                                   {true, derive_seed(config.seed, kPosterior, step, k)})
                         .h_r);
      }
    }
    ad::Var loss = objectives::response_generation_loss(lm, targets);
    if (config.auxiliary_psm) {
      ad::Var parts[] = {loss, objectives::policy_semantic_loss(ad::concat_rows(ho),
                                                                ad::concat_rows(hr))};
      loss = ad::sum_all(parts);
    }
    last = loss.scalar();
    if (!std::isfinite(last)) throw objectives::NonFiniteLoss("e2e", last);
    params.zero_grad();
    tape.backward(loss);
    opt.step(params);
  }
  return last;
}

double e2e_generation_loss(const model::Transformer& model, ad::ParameterStore& params,
                           const corpus::Vocabulary& vocab, const std::vector<GoalDialog>& dialogs) {
  auto examples = turn_examples(dialogs, vocab);
  if (examples.empty()) throw std::invalid_argument("e2e_generation_loss: no turns");
  double total = 0;
  for (const auto& ex : examples) {
    ad::Tape tape;
    ad::Var lm[] = {model.forward(tape, params, model::generate_input(ex), Mode::kGenerate).lm_logits};
    std::vector<std::vector<corpus::TokenId>> target{{ex.response_tokens.begin() + 1, ex.response_tokens.end()}};
    total += objectives::response_generation_loss(lm, target).scalar();
  }
  return total / static_cast<double>(examples.size());
}

EvalReport evaluate_e2e(const model::Transformer& model, ad::ParameterStore& params,
                        const corpus::Vocabulary& vocab, const std::vector<GoalDialog>& dialogs,
                        const std::vector<Entity>& db, const E2EConfig& config,
                        const std::string& dataset_id) {
  if (dialogs.empty()) throw std::invalid_argument("evaluate_e2e: no dialogs");
  std::vector<Tokens> hyps, refs;
  std::vector<std::vector<Tokens>> per_dialog;
  std::vector<Goal> goals;
  for (const GoalDialog& gd : dialogs) {
    per_dialog.emplace_back();
    goals.push_back(gd.goal);
    for (const auto& ex : corpus::assemble_all(gd.dialog, vocab)) {
      Tokens hyp = words_of(model::decode_response(model, params, model::context_input(ex),
                                                   model::DecodeStrategy::greedy(),
                                                   config.max_response_len),
                            vocab);
      per_dialog.back().push_back(hyp);
      hyps.push_back(std::move(hyp));
      refs.push_back(words_of(ex.response_content(), vocab));
    }
  }
  const InformSuccess is = inform_success(per_dialog, goals, db);
  return make_e2e_report(100.0 * is.inform, 100.0 * is.success, bleu(hyps, refs), dataset_id,
                         config.to_json());
}

}  // namespace space3::eval
