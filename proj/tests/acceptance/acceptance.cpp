// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances are fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "space3/eval/finetune.hpp"
#include "space3/eval/metrics.hpp"
#include "space3/eval/synthetic.hpp"
#include "space3/model/transformer.hpp"
#include "space3/objectives/losses.hpp"
#include "space3/objectives/trainer.hpp"
#include "space3/semtree/annotation_parser.hpp"
#include "space3/semtree/semantic_tree.hpp"
#include "space3/semtree/similarity.hpp"
#include "space3/semtree/tree_edit_distance.hpp"
#include "support/contrastive_reference.hpp"
#include "support/generators.hpp"
#include "support/loss_gradcheck.hpp"
#include "support/ted_oracle.hpp"

using namespace space3;
using ad::Matrix;

namespace {

constexpr double kIsolationTol = 1e-7;
constexpr double kGradRelTol = 1e-4;
constexpr std::size_t kGradProbes = 100;
constexpr double kContrastiveTol = 1e-6;
constexpr double kClosedFormTol = 1e-9;
constexpr double kJointSumTol = 1e-9;
constexpr double kOverfitLoss = 0.1;
constexpr double kOverfitBleu = 95.0;
constexpr double kIntentAcc = 0.95;
constexpr double kDeterminismTol = 1e-9;
constexpr double kPaperRowTol = 1e-9;
constexpr double kTedSeconds = 60;
constexpr double kGradSeconds = 300;
constexpr double kOverfitSeconds = 600;

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

const char* kFigure = "restaurant-inform(food=indian, area=park); restaurant-request(name=?)";

semtree::SemanticTree canonical_tree(const std::vector<corpus::ActAnnotation>& anns) {
  return semtree::canonicalize(semtree::build_semantic_tree(anns));
}

Outcome ted_oracle() {
  auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> size(1, 8);
  int mismatches = 0;
  const int trials = 250;
  for (int i = 0; i < trials; ++i) {
    auto a = semtree::canonicalize(testing::random_tree(rng, size(rng)));
    auto b = semtree::canonicalize(testing::random_tree(rng, size(rng)));
    if (semtree::tree_edit_distance(a, b) != testing::TedOracle::distance(a, b)) ++mismatches;
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < kTedSeconds,
          fmt("%d pairs, %d mismatches, %.2f s", trials, mismatches, secs)};
}

Outcome similarity_kernel() {
  std::mt19937_64 rng(2);
  std::bernoulli_distribution copy(0.3);
  int violations = 0;
  int equal_pairs = 0;
  const int trials = 1000;
  for (int i = 0; i < trials; ++i) {
    auto a = testing::random_annotations(rng, 3, 3);
    auto b = copy(rng) ? a : testing::random_annotations(rng, 3, 3);
    auto a_perm = a;
    std::shuffle(a_perm.begin(), a_perm.end(), rng);
    for (auto& act : a_perm) std::shuffle(act.slots.begin(), act.slots.end(), rng);
    const auto ta = canonical_tree(a), tb = canonical_tree(b), tp = canonical_tree(a_perm);
    const double f = semtree::similarity_coefficient(ta, tb);
    const bool equal = ta == tb;
    equal_pairs += equal;
    if (f != semtree::similarity_coefficient(tb, ta)) ++violations;
    if (!(f >= 0.0 && f <= 1.0)) ++violations;
    if ((f == 1.0) != equal) ++violations;
    if (semtree::similarity_coefficient(tp, tb) != f) ++violations;
    if (semtree::similarity_coefficient(ta, ta) != 1.0) ++violations;
  }
  return {violations == 0,
          fmt("%d trials (%d equal pairs), %d violations", trials, equal_pairs, violations)};
}

Outcome figure_example() {
  const auto fig = canonical_tree(semtree::parse_annotations(kFigure));
  const auto changed = canonical_tree(semtree::parse_annotations(
      "restaurant-inform(food=chinese, area=park); restaurant-request(name=?)"));
  const std::size_t d = semtree::tree_edit_distance(fig, changed);
  const std::size_t oracle = testing::TedOracle::distance(fig.root, changed.root, 10);
  const double f = semtree::similarity_coefficient(fig, changed);
  const bool pass = fig.size() == 10 && changed.size() == 10 && d == 1 && oracle == 1 &&
                    std::abs(f - 0.9) <= 1e-12;
  return {pass, fmt("|T|=%zu, d=%zu (oracle %zu), f=%.6f", fig.size(), d, oracle, f)};
}

struct DeskWorld {
  std::vector<corpus::Dialog> dialogs = eval::overfit_dialogs(1);
  corpus::Vocabulary vocab = corpus::Vocabulary::build(dialogs, 1);
  std::vector<corpus::TrainingExample> labeled, unlabeled;

  DeskWorld() {
    for (const auto& d : dialogs) {
      for (auto& ex : corpus::assemble_all(d, vocab)) {
        (d.source == corpus::Source::kLabeled ? labeled : unlabeled).push_back(std::move(ex));
      }
    }
  }

  model::ModelConfig config(double dropout) const {
    model::ModelConfig c;
    c.vocab_size = static_cast<int>(vocab.size());
    c.dropout_rate = dropout;
    return c;
  }
};

double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

Outcome mask_isolation(const DeskWorld& w) {
  model::Transformer model(w.config(0.0));
  ad::ParameterStore params;
  model.init_parameters(params, 4);
  const int V = model.config().vocab_size;
  double worst_sem = 0, worst_logit = 0;
  std::size_t perturbations = 0;
  for (std::size_t e = 0; e < w.labeled.size(); e += 7) {
    const model::ModelInput gen = model::generate_input(w.labeled[e]);
    ad::Tape t;
    const auto base = model.forward(t, params, gen, model::Mode::kGenerate);
    for (std::size_t n = 0; n < gen.response_tokens.size(); ++n) {
      model::ModelInput pert = gen;
      pert.response_tokens[n] = (pert.response_tokens[n] + 1) % V;
      ad::Tape tp;
      const auto out = model.forward(tp, params, pert, model::Mode::kGenerate);
      worst_sem = std::max({worst_sem, max_abs_diff(out.h_q.value(), base.h_q.value()),
                            max_abs_diff(out.h_o.value(), base.h_o.value())});
      for (std::size_t s = 0; s < n; ++s) {
        const auto r = static_cast<Eigen::Index>(s);
        worst_logit = std::max(worst_logit, max_abs_diff(out.lm_logits.value().row(r),
                                                         base.lm_logits.value().row(r)));
      }
      ++perturbations;
    }
  }
  const bool pass = perturbations > 0 && worst_sem <= kIsolationTol && worst_logit <= kIsolationTol;
  return {pass, fmt("%zu perturbations, max |dh|=%.3g, max |dlogits|=%.3g", perturbations,
                    worst_sem, worst_logit)};
}

Outcome gradient_checks() {
  using testing::LossComponent;
  auto t0 = Clock::now();
  bool pass = true;
  std::string detail;
  for (auto c : {LossComponent::kSlm, LossComponent::kScl, LossComponent::kBow,
                 LossComponent::kPsm, LossComponent::kRgm}) {
    double worst = 0;
    for (bool labeled : {false, true}) {
      const auto res = testing::check_loss_gradient(c, labeled, kGradProbes, 21);
      worst = std::max(worst, res.report.max_rel_error);
      pass = pass && res.report.probes.size() >= kGradProbes && res.report.max_rel_error <= kGradRelTol;
    }
    detail += fmt("%s %.1e, ", testing::component_name(c), worst);
  }
  const double secs = seconds_since(t0);
  pass = pass && secs < kGradSeconds;
  return {pass, detail + fmt("%zu probes each, %.1f s", kGradProbes, secs)};
}

Outcome contrastive_reduction() {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0, 1);
  double worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int L = 1 + trial % 8;
    Matrix z(2 * L, 6);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      for (Eigen::Index k = 0; k < z.cols(); ++k) z(i, k) = g(rng);
      z.row(i).normalize();
    }
    const auto pairing = objectives::dropout_pairing(static_cast<std::size_t>(2 * L));
    Matrix f = Matrix::Identity(2 * L, 2 * L);
    for (int i = 0; i < 2 * L; ++i) f(i, pairing[static_cast<std::size_t>(i)]) = 1;
    ad::Tape t;
    const double sup = objectives::supervised_contrastive_loss(t.constant(z), f, 0.07).scalar();
    const double self =
        objectives::self_supervised_contrastive_loss(t.constant(z), pairing, 0.07).scalar();
    worst = std::max(worst, std::abs(sup - self));
  }
  return {worst <= kContrastiveTol, fmt("50 batches, max |sup - self|=%.3g", worst)};
}

Outcome closed_forms() {
  ad::Tape t;
  std::vector<std::string> failed;
  auto check = [&](bool ok, const char* what) {
    if (!ok) failed.push_back(what);
  };
  for (int V : {7, 50, 301}) {
    const double lnv = std::log(static_cast<double>(V));
    std::vector<objectives::TokenId> targets = {1, 2, 3, 4, 5};
    const double slm =
        objectives::span_mlm_loss(t, t.constant(Matrix::Zero(5, V)), targets).scalar();
    check(std::abs(slm - lnv) <= kClosedFormTol, "uniform SLM");
    ad::Var parts[] = {t.constant(Matrix::Zero(3, V)), t.constant(Matrix::Zero(6, V))};
    const double rgm =
        objectives::response_generation_loss(parts, {{1, 2, 3}, {4, 4, 4, 4, 5, 6}}).scalar();
    check(std::abs(rgm - lnv) <= kClosedFormTol, "uniform RGM");
  }
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> tok(0, 19);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix logits = Matrix::Random(2, 20);
    ad::Var lp = ad::log_softmax_rows(t.constant(logits));
    std::vector<std::vector<objectives::TokenId>> bag(2);
    for (auto& b : bag) {
      for (int k = 0; k < 6; ++k) b.push_back(tok(rng));
    }
    auto shuffled = bag;
    for (auto& b : shuffled) std::shuffle(b.begin(), b.end(), rng);
    check(std::abs(objectives::bow_loss(lp, bag).scalar() -
                   objectives::bow_loss(lp, shuffled).scalar()) <= kClosedFormTol,
          "BOW order");
  }
  Matrix v(1, 4);
  v << 0.5, -1.0, 2.0, 3.0;
  Matrix u = v;
  u(0, 2) += 1.0;
  Matrix p(1, 2), zero = Matrix::Zero(1, 2);
  p << 1.0, 2.0;
  check(objectives::policy_semantic_loss(t.constant(v), t.constant(v)).scalar() == 0.0, "PSM zero");
  check(objectives::policy_semantic_loss(t.constant(u), t.constant(v)).scalar() == 1.0, "PSM unit");
  check(objectives::policy_semantic_loss(t.constant(p), t.constant(zero)).scalar() == 5.0,
        "PSM (1,2)");
  std::string detail = failed.empty() ? "all closed forms hold" : "failed:";
  for (const auto& f : failed) detail += " " + f;
  return {failed.empty(), detail};
}

objectives::TrainingConfig desk_training(std::int64_t steps) {
  objectives::TrainingConfig c;
  c.steps = steps;
  c.seed = 9;
  return c;
}

Outcome joint_sum(const DeskWorld& w) {
  model::Transformer model(w.config(0.2));
  objectives::Pretrainer trainer(model, objectives::init_pretraining_params(model, 1),
                                 desk_training(30), w.labeled, w.unlabeled);
  double worst = 0;
  int labeled_steps = 0;
  for (int s = 0; s < 30; ++s) {
    const auto rec = trainer.step();
    const auto& b = rec.losses;
    labeled_steps += rec.labeled;
    worst = std::max(worst, std::abs(b.joint - (b.slm + b.scl + b.bow + b.psm + b.rgm)));
  }
  return {worst <= kJointSumTol && labeled_steps > 0 && labeled_steps < 30,
          fmt("30 steps (%d labeled), max |L_joint - sum|=%.3g", labeled_steps, worst)};
}

// Twenty synthetic dialogs memorized through the end-to-end fine-tuning path.
Outcome overfit_run() {
  auto t0 = Clock::now();
  const auto corpus = eval::synthetic_e2e_corpus(20, 0, 1);
  const auto vocab = corpus::Vocabulary::build(eval::dialogs_of(corpus.train), 1);
  model::ModelConfig mc;
  mc.vocab_size = static_cast<int>(vocab.size());
  mc.dropout_rate = 0.1;
  model::Transformer model(mc);
  auto params = objectives::init_pretraining_params(model, 1);
  const eval::E2EConfig cfg;
  eval::finetune_e2e(model, params, vocab, corpus.train, cfg);
  const double loss = eval::e2e_generation_loss(model, params, vocab, corpus.train);
  auto report = eval::evaluate_e2e(model, params, vocab, corpus.train, corpus.db, cfg, "overfit");
  const double bleu = report.metrics.at("BLEU");
  const double secs = seconds_since(t0);
  return {loss < kOverfitLoss && bleu >= kOverfitBleu && secs < kOverfitSeconds,
          fmt("%zu steps, L_rgm=%.4f, BLEU=%.2f, Inform=%.0f, Success=%.0f, %.1f s", cfg.steps,
              loss, bleu, report.metrics.at("Inform"), report.metrics.at("Success"), secs)};
}

Outcome metric_rows() {
  const double a = eval::combined_score(95.30, 88.00, 19.30);
  const double b = eval::combined_score(97.74, 88.24, 23.68);
  const bool pass = std::abs(a - 110.95) <= kPaperRowTol && std::abs(b - 116.67) <= kPaperRowTol &&
                    fmt("%.2f", a) == "110.95" && fmt("%.2f", b) == "116.67";
  return {pass, fmt("Comb %.10g and %.10g", a, b)};
}

Outcome intent_task() {
  const auto data = eval::synthetic_intent_dataset(1);
  const auto vocab = corpus::Vocabulary::build(eval::dialogs_of(data), 1);
  model::ModelConfig mc;
  mc.vocab_size = static_cast<int>(vocab.size());
  model::Transformer model(mc);
  const auto init = objectives::init_pretraining_params(model, 1);
  double acc[2] = {0, 0};
  std::string detail;
  for (bool head_only : {true, false}) {
    eval::IntentConfig base;
    base.head_only = head_only;
    const auto grid =
        eval::grid_search_intent(model, init, vocab, data, base, {1e-3, 3e-3, 1e-2}, {10, 20});
    base.learning_rate = grid.best.learning_rate;
    base.epochs = grid.best.epochs;
    auto params = init;
    const auto report = eval::finetune_intent(model, params, vocab, data, base);
    acc[head_only] = report.metrics.at("ACC");
    if (!detail.empty()) detail += "; ";
    detail += fmt("%s lr=%.0e ep=%zu val=%.3f test=%.3f", head_only ? "frozen" : "fine-tuned",
                  base.learning_rate, base.epochs, grid.best.mean_validation_accuracy,
                  acc[head_only]);
  }
  return {acc[0] >= kIntentAcc && acc[0] > acc[1], detail};
}

Outcome determinism(const DeskWorld& w) {
  model::Transformer model(w.config(0.2));
  const auto init = objectives::init_pretraining_params(model, 1);
  const std::int64_t steps = 12, cut = 5;
  auto run = [&](std::vector<double>& traj) {
    objectives::Pretrainer t(model, init, desk_training(steps), w.labeled, w.unlabeled);
    for (std::int64_t s = 0; s < steps; ++s) traj.push_back(t.step().losses.joint);
  };
  std::vector<double> first, second;
  run(first);
  run(second);

  objectives::Pretrainer head(model, init, desk_training(steps), w.labeled, w.unlabeled);
  for (std::int64_t s = 0; s < cut; ++s) head.step();
  objectives::Pretrainer tail(model, init, desk_training(steps), w.labeled, w.unlabeled);
  tail.restore(head.params(), head.optimizer().export_state(), cut);
  double resume_diff = 0;
  for (std::int64_t s = cut; s < steps; ++s) {
    resume_diff = std::max(resume_diff,
                           std::abs(tail.step().losses.joint - first[static_cast<std::size_t>(s)]));
  }
  const double rerun_diff = std::abs(first.back() - second.back());
  return {rerun_diff <= kDeterminismTol && resume_diff <= kDeterminismTol,
          fmt("final L_joint %.9f, rerun diff %.3g, resume diff %.3g", first.back(), rerun_diff,
              resume_diff)};
}

}  // namespace

int main() {
  DeskWorld world;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"TED oracle equivalence", ted_oracle},
      {"similarity kernel properties", similarity_kernel},
      {"figure example", figure_example},
      {"mask isolation", [&] { return mask_isolation(world); }},
      {"gradient checks", gradient_checks},
      {"contrastive reduction", contrastive_reduction},
      {"closed-form loss values", closed_forms},
      {"joint-sum identity", [&] { return joint_sum(world); }},
      {"overfit run", overfit_run},
      {"metric formulas", metric_rows},
      {"synthetic intent task", intent_task},
      {"determinism and resume", [&] { return determinism(world); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
