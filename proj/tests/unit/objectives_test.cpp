#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "space3/objectives/heads.hpp"
#include "space3/objectives/losses.hpp"
#include "space3/objectives/optimizer.hpp"
#include "space3/objectives/trainer.hpp"
#include "space3/semtree/annotation_parser.hpp"
#include "space3/semtree/semantic_tree.hpp"
#include "space3/semtree/similarity.hpp"
#include "support/contrastive_reference.hpp"
#include "support/fixtures.hpp"
#include "support/loss_gradcheck.hpp"

using namespace space3;
using namespace space3::objectives;
using ad::Matrix;
using ad::Var;

namespace {

const std::string kFigureAnnotation =
    "restaurant-inform(area=park, food=indian); restaurant-request(name=?)";

Matrix random_unit_rows(std::mt19937_64& rng, int n, int d) {
  std::normal_distribution<double> g(0, 1);
  Matrix z(n, d);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) z(i, k) = g(rng);
    z.row(i).normalize();
  }
  return z;
}

testing::Rows to_rows(const Matrix& m) {
  testing::Rows r(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) r[static_cast<std::size_t>(i)].push_back(m(i, k));
  }
  return r;
}

Matrix random_f(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0, 1);
  Matrix f(n, n);
  for (int i = 0; i < n; ++i) {
    f(i, i) = 1;
    for (int j = 0; j < i; ++j) f(i, j) = f(j, i) = u(rng);
  }
  return f;
}

Matrix indicator(const std::vector<int>& pairing) {
  const auto n = static_cast<Eigen::Index>(pairing.size());
  Matrix f = Matrix::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) f(i, pairing[static_cast<std::size_t>(i)]) = 1;
  return f;
}

}  // namespace

TEST_CASE("span MLM loss closed forms") {
  ad::Tape t;
  int targets[] = {4};
  Var uniform = t.constant(Matrix::Zero(1, 10));
  CHECK(span_mlm_loss(t, uniform, targets).scalar() == doctest::Approx(std::log(10.0)).epsilon(1e-12));
  Matrix sharp = Matrix::Constant(1, 10, -50.0);
  sharp(0, 4) = 50.0;
  CHECK(span_mlm_loss(t, t.constant(sharp), targets).scalar() < 1e-30);
  CHECK(span_mlm_loss(t, Var{}, {}).scalar() == 0.0);
  int three[] = {1, 2, 3};
  CHECK(span_mlm_loss(t, t.constant(Matrix::Zero(3, 7)), three).scalar() ==
        doctest::Approx(std::log(7.0)));
}

TEST_CASE("projection head normalizes") {
  std::mt19937_64 rng(1);
  ad::ParameterStore ps;
  init_heads(ps, 4, 10, 0.5, 3);
  ps.get(head_names::kProjectionW).value = Matrix::Identity(4, 4);
  ad::Tape t;
  Matrix h(1, 4);
  h << 3, 4, 0, 0;
  Matrix z = projection(t, ps, t.constant(h)).value();
  CHECK(z(0, 0) == doctest::Approx(0.6));
  CHECK(z(0, 1) == doctest::Approx(0.8));
  CHECK(z(0, 2) == 0.0);

  ad::ParameterStore rnd;
  init_heads(rnd, 6, 10, 0.5, 9);
  std::normal_distribution<double> g(0, 3);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix x(2, 6);
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = g(rng);
    Matrix a = projection(t, rnd, t.constant(x)).value();
    Matrix b = projection(t, rnd, t.constant(2.0 * x)).value();
    for (int r = 0; r < 2; ++r) CHECK(std::abs(a.row(r).norm() - 1.0) <= 1e-6);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);  // b1 = 0 at init
  }
  ps.get(head_names::kProjectionW).value.setZero();
  ad::Tape fresh;
  CHECK_THROWS_AS(projection(fresh, ps, fresh.constant(h)), std::domain_error);
}

TEST_CASE("supervised contrastive loss matches the reference evaluator") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    Matrix z = random_unit_rows(rng, 4, 3);
    Matrix f = random_f(rng, 4);
    ad::Tape t;
    double got = supervised_contrastive_loss(t.constant(z), f, 0.5).scalar();
    double want = testing::reference_supervised(to_rows(z), to_rows(f), 0.5);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
    double got_self = supervised_contrastive_loss(t.constant(z), f, 0.5, true).scalar();
    double want_self = testing::reference_supervised(to_rows(z), to_rows(f), 0.5, true);
    CHECK(got_self == doctest::Approx(want_self).epsilon(1e-12));
  }
}

TEST_CASE("contrastive degenerate cases") {
  ad::Tape t;
  Matrix z(2, 3);
  z << 1, 0, 0, 1, 0, 0;
  Matrix f(2, 2);
  f << 1, 1, 1, 1;
  CHECK(std::abs(supervised_contrastive_loss(t.constant(z), f, 1.0).scalar()) < 1e-15);
  int pair2[] = {1, 0};
  CHECK(std::abs(self_supervised_contrastive_loss(t.constant(z), pair2, 1.0).scalar()) < 1e-15);

  // Positives identical, negatives orthogonal.
  Matrix z4(4, 4);
  z4 << 1, 0, 0, 0,  //
      0, 1, 0, 0,    //
      1, 0, 0, 0,    //
      0, 1, 0, 0;
  auto pairing = dropout_pairing(4);
  const double e = std::exp(1.0);
  double per_anchor = -std::log(e / (e + 2.0));
  CHECK(per_anchor == doctest::Approx(0.551).epsilon(1e-3));
  double total = self_supervised_contrastive_loss(t.constant(z4), pairing, 1.0).scalar();
  CHECK(total == doctest::Approx(4 * per_anchor).epsilon(1e-12));
  CHECK(total == doctest::Approx(2.206).epsilon(1e-3));

  // An anchor whose weights are all zero contributes nothing.
  Matrix fz = Matrix::Zero(4, 4);
  fz(0, 2) = fz(2, 0) = 1;
  std::mt19937_64 rng(2);
  Matrix zr = random_unit_rows(rng, 4, 3);
  double only = supervised_contrastive_loss(t.constant(zr), fz, 0.3).scalar();
  testing::Rows zz = to_rows(zr);
  CHECK(only == doctest::Approx(-testing::reference_log_prob(zz, 0, 2, 0.3) -
                                testing::reference_log_prob(zz, 2, 0, 0.3)));

  CHECK_THROWS_AS(dropout_pairing(3), std::invalid_argument);
  int bad[] = {0, 1};
  CHECK_THROWS_AS(self_supervised_contrastive_loss(t.constant(z), bad, 1.0), std::invalid_argument);
}

TEST_CASE("indicator weights reduce the supervised loss to the self-supervised one") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int L = 1 + trial % 6;
    Matrix z = random_unit_rows(rng, 2 * L, 5);
    auto pairing = dropout_pairing(static_cast<std::size_t>(2 * L));
    ad::Tape t;
    double sup = supervised_contrastive_loss(t.constant(z), indicator(pairing), 0.07).scalar();
    double self = self_supervised_contrastive_loss(t.constant(z), pairing, 0.07).scalar();
    CHECK(std::abs(sup - self) <= 1e-6);
    CHECK(self == doctest::Approx(testing::reference_self_supervised(to_rows(z), pairing, 0.07)));
  }
}

TEST_CASE("contrastive losses are invariant to consistent reordering") {
  std::mt19937_64 rng(4);
  const int n = 6;
  Matrix z = random_unit_rows(rng, n, 4);
  Matrix f = random_f(rng, n);
  auto pairing = dropout_pairing(n);
  std::vector<int> perm = {3, 0, 5, 1, 4, 2};
  Matrix zp(n, 4), fp(n, n);
  std::vector<int> inverse(n), pp(n);
  for (int i = 0; i < n; ++i) inverse[perm[i]] = i;
  for (int i = 0; i < n; ++i) {
    zp.row(i) = z.row(perm[i]);
    pp[i] = inverse[pairing[perm[i]]];
    for (int j = 0; j < n; ++j) fp(i, j) = f(perm[i], perm[j]);
  }
  ad::Tape t;
  CHECK(supervised_contrastive_loss(t.constant(zp), fp, 0.2).scalar() ==
        doctest::Approx(supervised_contrastive_loss(t.constant(z), f, 0.2).scalar()).epsilon(1e-12));
  CHECK(self_supervised_contrastive_loss(t.constant(zp), pp, 0.2).scalar() ==
        doctest::Approx(self_supervised_contrastive_loss(t.constant(z), pairing, 0.2).scalar())
            .epsilon(1e-12));
}

TEST_CASE("tree-weighted rows follow the batch similarity matrix") {
  auto a = semtree::build_semantic_tree(semtree::parse_annotations(kFigureAnnotation));
  auto b = semtree::build_semantic_tree(semtree::parse_annotations(
      "restaurant-inform(area=centre, food=indian); restaurant-request(name=?)"));
  auto sm = semtree::duplicate_for_augmentation(semtree::batch_similarity_matrix({a, b}));
  Matrix f(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) f(i, j) = sm.coef(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  CHECK(f(0, 2) == 1.0);
  CHECK(f(0, 1) == doctest::Approx(0.9));
  CHECK(f(0, 3) == doctest::Approx(0.9));
  std::mt19937_64 rng(8);
  Matrix z = random_unit_rows(rng, 4, 3);
  ad::Tape t;
  CHECK(supervised_contrastive_loss(t.constant(z), f, 0.07).scalar() ==
        doctest::Approx(testing::reference_supervised(to_rows(z), to_rows(f), 0.07)).epsilon(1e-12));

  // All trees identical: every other sample weighs 1 / (2L - 1).
  Matrix ones = Matrix::Ones(4, 4);
  double uniform = supervised_contrastive_loss(t.constant(z), ones, 0.07).scalar();
  testing::Rows zz = to_rows(z);
  double want = 0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if (i != j) want -= testing::reference_log_prob(zz, i, j, 0.07) / 3.0;
  CHECK(std::isfinite(uniform));
  CHECK(uniform == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("bag-of-words loss") {
  ad::Tape t;
  Var uniform = ad::log_softmax_rows(t.constant(Matrix::Zero(1, 10)));
  CHECK(bow_loss(uniform, {{7, 8, 9}}).scalar() == doctest::Approx(3 * std::log(10.0)).epsilon(1e-12));
  CHECK(bow_loss(uniform, {{7, 8, 9}}).scalar() == doctest::Approx(6.9078).epsilon(1e-4));

  std::mt19937_64 rng(3);
  Matrix logits = Matrix::Random(2, 12);
  Var lp = ad::log_softmax_rows(t.constant(logits));
  double a = bow_loss(lp, {{1, 5, 5, 9}, {2, 3}}).scalar();
  double b = bow_loss(lp, {{5, 9, 1, 5}, {3, 2}}).scalar();
  CHECK(std::abs(a - b) <= 1e-9);
  double once = bow_loss(lp, {{1, 5, 9}, {2, 3}}).scalar();
  CHECK(a - once == doctest::Approx(-lp.value()(0, 5) / 2.0).epsilon(1e-12));
}

TEST_CASE("policy semantic loss") {
  ad::Tape t;
  Matrix v(1, 3);
  v << 0.3, -1, 2;
  CHECK(policy_semantic_loss(t.constant(v), t.constant(v)).scalar() == 0.0);
  Matrix u = v;
  u(0, 1) += 1.0;
  CHECK(policy_semantic_loss(t.constant(u), t.constant(v)).scalar() == doctest::Approx(1.0).epsilon(1e-15));
  Matrix p(1, 2), q(1, 2);
  p << 1, 2;
  q << 0, 0;
  CHECK(policy_semantic_loss(t.constant(p), t.constant(q)).scalar() == 5.0);
  CHECK_THROWS_AS(policy_semantic_loss(t.constant(p), t.constant(v)), std::invalid_argument);

  std::mt19937_64 rng(1);
  ad::ParameterStore ps;
  auto& ho = ps.add("ho", 2, 3, ad::Init::kNormal, 1.0, rng);
  auto& hr = ps.add("hr", 2, 3, ad::Init::kNormal, 1.0, rng);
  for (bool stop : {false, true}) {
    ps.zero_grad();
    ad::Tape tt;
    Var loss = policy_semantic_loss(tt.param(ho), tt.param(hr), stop);
    CHECK(loss.scalar() == doctest::Approx((ho.value - hr.value).squaredNorm() / 2.0));
    tt.backward(loss);
    CHECK(ho.grad.isApprox(ho.value - hr.value));
    if (stop) {
      CHECK(hr.grad.isZero(0));
    } else {
      CHECK(hr.grad.isApprox(hr.value - ho.value));
    }
  }
}

TEST_CASE("response generation loss") {
  ad::Tape t;
  Var u4 = t.constant(Matrix::Zero(4, 10));
  Var parts[] = {u4};
  CHECK(response_generation_loss(parts, {{1, 2, 3, 6}}).scalar() ==
        doctest::Approx(std::log(10.0)).epsilon(1e-12));
  Matrix sharp = Matrix::Constant(2, 10, -60.0);
  sharp(0, 3) = sharp(1, 6) = 60.0;
  Var two[] = {t.constant(sharp), u4};
  // Per-example means, then the batch mean.
  CHECK(response_generation_loss(two, {{3, 6}, {1, 1, 1, 1}}).scalar() ==
        doctest::Approx(std::log(10.0) / 2.0).epsilon(1e-12));
  CHECK_THROWS_AS(response_generation_loss(two, {{3, 6}}), std::invalid_argument);
}

TEST_CASE("per-loss gradients match central finite differences") {
  using testing::LossComponent;
  for (auto c : {LossComponent::kSlm, LossComponent::kScl, LossComponent::kBow,
                 LossComponent::kPsm, LossComponent::kRgm}) {
    for (bool labeled : {false, true}) {
      if (labeled && c != LossComponent::kScl && c != LossComponent::kSlm) continue;
      auto res = testing::check_loss_gradient(c, labeled, 100, 21);
      INFO(testing::component_name(c), " labeled=", labeled, " max rel err=", res.report.max_rel_error);
      CHECK(res.report.probes.size() == 100);
      CHECK(res.report.nonzero_probes == 100);
      CHECK(res.report.max_rel_error <= 1e-4);
    }
  }
}

namespace {

struct TrainWorld {
  corpus::Vocabulary vocab = testing::word_vocab(50);
  model::Transformer model{testing::gradcheck_config()};
  ad::ParameterStore params = init_pretraining_params(model, 3);
  std::vector<corpus::TrainingExample> labeled = testing::random_examples(vocab, 6, true, 1);
  std::vector<corpus::TrainingExample> unlabeled = testing::random_examples(vocab, 6, false, 2);
};

}  // namespace

TEST_CASE("labeled batches route through the tree-weighted branch") {
  TrainWorld w;
  LossOptions opt;
  opt.train = false;
  auto batch = testing::pointers(w.unlabeled);
  batch.resize(3);
  ad::Tape t;
  LossGraph g = build_joint_loss(t, w.model, w.params, batch, false, opt, 9);
  // Unlabeled: L_scl equals self-supervised on both sides, recomputed here.
  std::vector<Var> hq, hr;
  for (int copy = 0; copy < 2; ++copy) {
    for (auto* ex : batch) {
      hq.push_back(w.model.forward(t, w.params, model::context_input(*ex), model::Mode::kQuery).h_q);
      hr.push_back(w.model
                       .forward(t, w.params, model::posterior_input(*ex),
                                model::Mode::kResponsePosterior)
                       .h_r);
    }
  }
  auto pairing = dropout_pairing(6);
  double expect =
      self_supervised_contrastive_loss(projection(t, w.params, ad::concat_rows(hq)), pairing, 0.07)
          .scalar() +
      self_supervised_contrastive_loss(projection(t, w.params, ad::concat_rows(hr)), pairing, 0.07)
          .scalar();
  CHECK(g.scl.scalar() == doctest::Approx(expect).epsilon(1e-12));

  // With dropout off, the two copies coincide exactly.
  CHECK(hq[0].value() == hq[3].value());

  // Labeled batch without annotations is rejected.
  CHECK_THROWS_AS(build_joint_loss(t, w.model, w.params, batch, true, opt, 9), std::invalid_argument);
  CHECK_NOTHROW(build_joint_loss(t, w.model, w.params, testing::pointers(w.labeled), true, opt, 9));
}

TEST_CASE("joint loss is the plain sum and is order invariant") {
  TrainWorld w;
  LossOptions opt;
  opt.train = false;
  auto batch = testing::pointers(w.labeled);
  ad::Tape t;
  LossBundle b = build_joint_loss(t, w.model, w.params, batch, true, opt, 4).values();
  CHECK(std::abs(b.joint - (b.slm + b.scl + b.bow + b.psm + b.rgm)) <= 1e-9);
  CHECK(b.slm > 0);
  CHECK(b.scl > 0);
  CHECK(b.bow > 0);
  CHECK(b.psm >= 0);
  CHECK(b.rgm > 0);

  // Labeled masks depend only on the annotations, so permuting the batch
  // permutes nothing observable.
  std::reverse(batch.begin(), batch.end());
  ad::Tape t2;
  LossBundle r = build_joint_loss(t2, w.model, w.params, batch, true, opt, 4).values();
  CHECK(r.slm == doctest::Approx(b.slm).epsilon(1e-12));
  CHECK(r.scl == doctest::Approx(b.scl).epsilon(1e-12));
  CHECK(r.bow == doctest::Approx(b.bow).epsilon(1e-12));
  CHECK(r.psm == doctest::Approx(b.psm).epsilon(1e-12));
  CHECK(r.rgm == doctest::Approx(b.rgm).epsilon(1e-12));
}

TEST_CASE("psm and scl do not depend on the generation head") {
  TrainWorld w;
  LossOptions opt;
  opt.train = false;
  auto batch = testing::pointers(w.unlabeled);
  ad::Tape t;
  LossBundle before = build_joint_loss(t, w.model, w.params, batch, false, opt, 2).values();
  for (auto& p : w.params) {
    if (p->name.rfind(model::names::kGenerationHeadPrefix, 0) == 0) p->value.setZero();
  }
  ad::Tape t2;
  LossBundle after = build_joint_loss(t2, w.model, w.params, batch, false, opt, 2).values();
  CHECK(after.psm == before.psm);
  CHECK(after.scl == before.scl);
  CHECK(after.rgm != before.rgm);
}

TEST_CASE("AdamW update rule") {
  std::mt19937_64 rng(1);
  ad::ParameterStore ps;
  auto& w = ps.add("x.w", 2, 2, ad::Init::kNormal, 1.0, rng);
  auto& b = ps.add("x.b", 1, 2, ad::Init::kNormal, 1.0, rng);
  auto& frozen = ps.add("y.w", 1, 2, ad::Init::kNormal, 1.0, rng);
  AdamWConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.weight_decay = 0.5;
  AdamW opt(cfg, {"x.w", "x.b"});
  Matrix w0 = w.value, b0 = b.value, f0 = frozen.value;
  w.grad = Matrix::Constant(2, 2, 3.0);
  b.grad = Matrix::Constant(1, 2, -2.0);
  frozen.grad = Matrix::Constant(1, 2, 1.0);
  opt.step(ps);
  // First step: m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
  Matrix expect_w = w0 * (1 - 0.1 * 0.5) - Matrix::Constant(2, 2, 0.1 * 3.0 / (3.0 + 1e-8));
  CHECK((w.value - expect_w).cwiseAbs().maxCoeff() < 1e-12);
  Matrix expect_b = b0 + Matrix::Constant(1, 2, 0.1 * 2.0 / (2.0 + 1e-8));
  CHECK((b.value - expect_b).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(frozen.value == f0);
  CHECK_FALSE(decays("lm_head.bias"));
  CHECK_FALSE(decays("final_ln.gamma"));
  CHECK(decays("embed.token"));

  AdamWConfig warm;
  warm.learning_rate = 1.0;
  warm.warmup_steps = 4;
  AdamW ramp(warm, {});
  CHECK(ramp.learning_rate_at(1) == 0.25);
  CHECK(ramp.learning_rate_at(4) == 1.0);
  CHECK(ramp.learning_rate_at(100) == 1.0);

  AdamW copy(cfg, {"x.w", "x.b"});
  copy.import_state(opt.export_state());
  CHECK(copy.steps_taken() == 1);
  ad::ParameterStore p1 = ps, p2 = ps;
  opt.step(p1);
  copy.step(p2);
  CHECK(p1.get("x.w").value == p2.get("x.w").value);
}

TEST_CASE("training steps report consistent bundles and abort on divergence") {
  TrainWorld w;
  TrainingConfig cfg;
  cfg.batch_size = 3;
  cfg.seed = 5;
  cfg.optimizer.learning_rate = 1e-3;
  Pretrainer trainer(w.model, w.params, cfg, w.labeled, w.unlabeled);
  CHECK(trainer.is_labeled_step(0));
  CHECK_FALSE(trainer.is_labeled_step(1));
  for (int s = 0; s < 4; ++s) {
    StepRecord rec = trainer.step();
    CHECK(rec.step == s + 1);
    CHECK(rec.labeled == (s % 2 == 0));
    const auto& b = rec.losses;
    CHECK(std::abs(b.joint - (b.slm + b.scl + b.bow + b.psm + b.rgm)) <= 1e-9);
    CHECK(rec.to_json().contains("L_joint"));
  }
  auto idx = trainer.batch_indices(7, false);
  CHECK(idx.size() == 3);
  CHECK(idx == trainer.batch_indices(7, false));
  std::sort(idx.begin(), idx.end());
  CHECK(std::adjacent_find(idx.begin(), idx.end()) == idx.end());

  ad::ParameterStore snapshot = trainer.params();
  trainer.params().get(model::names::kPolicyPrompt).value(0, 0) = std::nan("");
  ad::ParameterStore poisoned = trainer.params();
  try {
    trainer.step();
    FAIL("expected divergence");
  } catch (const NonFiniteLoss& e) {
    CHECK(e.component() == "L_psm");
  }
  CHECK(trainer.steps_done() == 4);
  for (std::size_t i = 0; i < poisoned.size(); ++i) {
    const Matrix& a = poisoned.at(i).value;
    const Matrix& b = trainer.params().at(i).value;
    CHECK(((a.array() == b.array()) || (a.array().isNaN() && b.array().isNaN())).all());
  }
}

TEST_CASE("resume reproduces the uninterrupted trajectory") {
  TrainWorld w;
  TrainingConfig cfg;
  cfg.batch_size = 2;
  cfg.seed = 13;
  Pretrainer full(w.model, w.params, cfg, w.labeled, w.unlabeled);
  std::vector<double> traj;
  ad::ParameterStore mid_params, mid_opt;
  for (int s = 0; s < 6; ++s) {
    traj.push_back(full.step().losses.joint);
    if (s == 2) {
      mid_params = full.params();
      mid_opt = full.optimizer().export_state();
    }
  }
  Pretrainer resumed(w.model, w.params, cfg, w.labeled, w.unlabeled);
  resumed.restore(mid_params, mid_opt, 3);
  for (int s = 3; s < 6; ++s) CHECK(resumed.step().losses.joint == traj[static_cast<std::size_t>(s)]);
  CHECK_THROWS_AS(resumed.restore(mid_params, mid_opt, 4), std::invalid_argument);
}
