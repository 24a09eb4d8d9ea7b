#include "space3/objectives/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "space3/objectives/heads.hpp"
#include "space3/objectives/losses.hpp"
#include "space3/semtree/semantic_tree.hpp"
#include "space3/semtree/similarity.hpp"

namespace space3::objectives {

using corpus::TrainingExample;
using model::Mode;

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream tags for derive_seed.
enum Stream : std::uint64_t {
  kMaskStream = 1,
  kMlmDropout,
  kQueryDropout,
  kPosteriorDropout,
  kPriorDropout,
  kGenerateDropout,
  kBatchStream,
};

ad::Matrix similarity_block(const std::vector<const TrainingExample*>& batch, bool query_side) {
  std::vector<semtree::SemanticTree> trees;
  for (const TrainingExample* ex : batch) {
    const auto& ann = query_side ? ex->query_annotations : ex->response_annotations;
    if (!ann) {
      throw std::invalid_argument("labeled batch: example " + ex->dialog_id + "/" +
                                  std::to_string(ex->pair_index) + " has no annotations");
    }
    trees.push_back(semtree::build_semantic_tree(*ann));
  }
  semtree::SimilarityMatrix sm =
      semtree::duplicate_for_augmentation(semtree::batch_similarity_matrix(trees));
  ad::Matrix f(static_cast<Eigen::Index>(sm.n), static_cast<Eigen::Index>(sm.n));
  for (std::size_t i = 0; i < sm.n; ++i) {
    for (std::size_t j = 0; j < sm.n; ++j) {
      f(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = sm.coef(i, j);
    }
  }
  return f;
}

void require_finite(const char* name, double v) {
  if (!std::isfinite(v)) throw NonFiniteLoss(name, v);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix(mix(mix(mix(base) ^ a) ^ b) ^ c);
}

nlohmann::json LossBundle::to_json() const {
  return {{"L_slm", slm}, {"L_scl", scl}, {"L_bow", bow},
          {"L_psm", psm}, {"L_rgm", rgm}, {"L_joint", joint}};
}

LossBundle LossGraph::values() const {
  LossBundle b;
  b.slm = slm.scalar();
  b.scl = scl.scalar();
  b.bow = bow.scalar();
  b.psm = psm.scalar();
  b.rgm = rgm.scalar();
  b.joint = joint.scalar();
  return b;
}

NonFiniteLoss::NonFiniteLoss(std::string component, double value)
    : std::runtime_error(component + " diverged (value " + std::to_string(value) + ")"),
      component_(std::move(component)) {}

nlohmann::json StepRecord::to_json() const {
  nlohmann::json j = losses.to_json();
  j["step"] = step;
  j["batch"] = labeled ? "labeled" : "unlabeled";
  j["learning_rate"] = learning_rate;
  j["wall_seconds"] = wall_seconds;
  return j;
}

LossGraph build_joint_loss(ad::Tape& tape, const model::Transformer& model,
                           ad::ParameterStore& params,
                           const std::vector<const TrainingExample*>& batch, bool labeled,
                           const LossOptions& opt, std::uint64_t batch_seed) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const std::size_t L = batch.size();
  auto fwd = [&](const model::ModelInput& in, Mode mode, std::uint64_t seed) {
    return model.forward(tape, params, in, mode, {opt.train, seed});
  };

  // Span MLM over the masked context, pooled over the batch.
  std::vector<ad::Var> mlm_rows;
  std::vector<TokenId> mlm_targets;
  for (std::size_t i = 0; i < L; ++i) {
    corpus::MaskedExample masked =
        corpus::apply_span_mask(*batch[i], derive_seed(batch_seed, kMaskStream, i), opt.mask);
    if (masked.masked_positions.empty()) continue;
    auto out = fwd(model::mlm_input(masked), Mode::kMlm, derive_seed(batch_seed, kMlmDropout, i));
    mlm_rows.push_back(out.mlm_logits);
    mlm_targets.insert(mlm_targets.end(), masked.original_tokens.begin(),
                       masked.original_tokens.end());
  }
  LossGraph g;
  g.slm = span_mlm_loss(tape, mlm_rows.empty() ? ad::Var{} : ad::concat_rows(mlm_rows),
                        mlm_targets);

  // Two dropout copies per sample: rows 0..L-1 then L..2L-1.
  std::vector<ad::Var> hq(2 * L), hr(2 * L);
  for (std::size_t copy = 0; copy < 2; ++copy) {
    for (std::size_t i = 0; i < L; ++i) {
      hq[copy * L + i] = fwd(model::context_input(*batch[i]), Mode::kQuery,
                             derive_seed(batch_seed, kQueryDropout, i, copy))
                             .h_q;
      hr[copy * L + i] = fwd(model::posterior_input(*batch[i]), Mode::kResponsePosterior,
                             derive_seed(batch_seed, kPosteriorDropout, i, copy))
                             .h_r;
    }
  }
  ad::Var zq = projection(tape, params, ad::concat_rows(hq));
  ad::Var zr = projection(tape, params, ad::concat_rows(hr));
  if (labeled) {
    ad::Matrix fq = similarity_block(batch, true);
    ad::Matrix fr = similarity_block(batch, false);
    g.scl = ad::add(supervised_contrastive_loss(zq, fq, opt.temperature, opt.scl_include_self),
                    supervised_contrastive_loss(zr, fr, opt.temperature, opt.scl_include_self));
  } else {
    std::vector<int> pairing = dropout_pairing(2 * L);
    g.scl = ad::add(self_supervised_contrastive_loss(zq, pairing, opt.temperature),
                    self_supervised_contrastive_loss(zr, pairing, opt.temperature));
  }

  // Bag-of-words on the first copy of h^q and h^r.
  std::vector<ad::Var> hq0(hq.begin(), hq.begin() + static_cast<long>(L));
  std::vector<ad::Var> hr0(hr.begin(), hr.begin() + static_cast<long>(L));
  std::vector<std::vector<TokenId>> q_targets, r_targets;
  for (const TrainingExample* ex : batch) {
    q_targets.push_back(ex->query_tokens);
    r_targets.push_back(ex->response_content());
  }
  ad::Var hr_rows = ad::concat_rows(hr0);
  g.bow = ad::add(bow_loss(bow_log_probs(tape, params, ad::concat_rows(hq0)), q_targets),
                  bow_loss(bow_log_probs(tape, params, hr_rows), r_targets));

  std::vector<ad::Var> ho(L), lm(L);
  std::vector<std::vector<TokenId>> gen_targets;
  for (std::size_t i = 0; i < L; ++i) {
    ho[i] = fwd(model::context_input(*batch[i]), Mode::kPolicyPrior,
                derive_seed(batch_seed, kPriorDropout, i))
                .h_o;
    lm[i] = fwd(model::generate_input(*batch[i]), Mode::kGenerate,
                derive_seed(batch_seed, kGenerateDropout, i))
                .lm_logits;
    const auto& r = batch[i]->response_tokens;
    gen_targets.emplace_back(r.begin() + 1, r.end());
  }
  g.psm = policy_semantic_loss(ad::concat_rows(ho), hr_rows, opt.psm_stop_gradient);
  g.rgm = response_generation_loss(lm, gen_targets);

  ad::Var parts[] = {g.slm, g.scl, g.bow, g.psm, g.rgm};
  g.joint = ad::sum_all(parts);
  return g;
}

LossBundle joint_training_step(const model::Transformer& model, ad::ParameterStore& params,
                               AdamW& optimizer, const std::vector<const TrainingExample*>& batch,
                               bool labeled, const LossOptions& options,
                               std::uint64_t batch_seed) {
  ad::Tape tape;
  LossGraph g = build_joint_loss(tape, model, params, batch, labeled, options, batch_seed);
  LossBundle b = g.values();
  require_finite("L_slm", b.slm);
  require_finite("L_scl", b.scl);
  require_finite("L_bow", b.bow);
  require_finite("L_psm", b.psm);
  require_finite("L_rgm", b.rgm);
  params.zero_grad();
  tape.backward(g.joint);
  optimizer.step(params);
  return b;
}

ad::ParameterStore init_pretraining_params(const model::Transformer& model, std::uint64_t seed) {
  ad::ParameterStore params;
  model.init_parameters(params, derive_seed(seed, 0xA11));
  const auto& c = model.config();
  init_heads(params, c.hidden_dim, c.vocab_size, c.init_std, derive_seed(seed, 0xBEAD));
  return params;
}

namespace {
std::vector<std::string> all_names(const ad::ParameterStore& ps) {
  std::vector<std::string> names;
  for (const auto& p : ps) names.push_back(p->name);
  return names;
}
}  // namespace

Pretrainer::Pretrainer(model::Transformer model, ad::ParameterStore params, TrainingConfig config,
                       std::vector<TrainingExample> labeled,
                       std::vector<TrainingExample> unlabeled)
    : model_(std::move(model)),
      params_(std::move(params)),
      config_(config),
      labeled_(std::move(labeled)),
      unlabeled_(std::move(unlabeled)),
      optimizer_(config.optimizer, all_names(params_)) {
  if (labeled_.empty() && unlabeled_.empty()) throw std::invalid_argument("no training examples");
  if (config_.batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  if (config_.labeled_ratio + config_.unlabeled_ratio == 0) {
    throw std::invalid_argument("labeled/unlabeled ratio cannot be 0:0");
  }
}

bool Pretrainer::is_labeled_step(std::int64_t step) const {
  if (labeled_.empty()) return false;
  if (unlabeled_.empty()) return true;
  if (config_.unlabeled_ratio == 0) return true;
  if (config_.labeled_ratio == 0) return false;
  const auto cycle = static_cast<std::int64_t>(config_.labeled_ratio + config_.unlabeled_ratio);
  return step % cycle < static_cast<std::int64_t>(config_.labeled_ratio);
}

std::vector<std::size_t> Pretrainer::batch_indices(std::int64_t step, bool labeled) const {
  const std::size_t pool = labeled ? labeled_.size() : unlabeled_.size();
  std::vector<std::size_t> idx(pool);
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t n = std::min(config_.batch_size, pool);
  std::mt19937_64 rng(derive_seed(config_.seed, kBatchStream, static_cast<std::uint64_t>(step),
                                  labeled ? 1 : 0));
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(n);
  return idx;
}

std::vector<const TrainingExample*> Pretrainer::batch_for(std::int64_t step, bool labeled) const {
  const auto& pool = labeled ? labeled_ : unlabeled_;
  std::vector<const TrainingExample*> batch;
  for (std::size_t i : batch_indices(step, labeled)) batch.push_back(&pool[i]);
  return batch;
}

StepRecord Pretrainer::step() {
  const auto start = std::chrono::steady_clock::now();
  const std::int64_t s = steps_done_;
  const bool labeled = is_labeled_step(s);
  StepRecord rec;
  rec.labeled = labeled;
  rec.learning_rate = optimizer_.learning_rate_at(s + 1);
  rec.losses = joint_training_step(model_, params_, optimizer_, batch_for(s, labeled), labeled,
                                   config_.loss,
                                   derive_seed(config_.seed, static_cast<std::uint64_t>(s)));
  rec.step = ++steps_done_;
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

LossBundle Pretrainer::evaluate_step(std::int64_t step) {
  const bool labeled = is_labeled_step(step);
  LossOptions opt = config_.loss;
  opt.train = false;
  ad::Tape tape;
  return build_joint_loss(tape, model_, params_, batch_for(step, labeled), labeled, opt,
                          derive_seed(config_.seed, static_cast<std::uint64_t>(step)))
      .values();
}

void Pretrainer::restore(ad::ParameterStore params, const ad::ParameterStore& optimizer_state,
                         std::int64_t steps_done) {
  for (const auto& p : params_) {
    if (!params.contains(p->name)) throw std::invalid_argument("restore: missing " + p->name);
  }
  params_ = std::move(params);
  optimizer_ = AdamW(config_.optimizer, all_names(params_));
  optimizer_.import_state(optimizer_state);
  if (optimizer_.steps_taken() != steps_done) {
    throw std::invalid_argument("restore: optimizer state does not match the step count");
  }
  steps_done_ = steps_done;
}

}  // namespace space3::objectives
