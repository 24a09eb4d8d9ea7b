#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "doctest.h"
#include "space3/eval/finetune.hpp"
#include "space3/eval/metrics.hpp"
#include "space3/eval/synthetic.hpp"
#include "space3/model/transformer.hpp"
#include "space3/objectives/trainer.hpp"
#include "support/fixtures.hpp"

using namespace space3;
using namespace space3::eval;

namespace {

Tokens words(const std::string& s) { return corpus::tokenize(s); }

// Brute-force corpus BLEU: clipped counts by scanning every window pair.
double oracle_bleu(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs) {
  double match[4] = {}, total[4] = {}, hl = 0, rl = 0;
  for (std::size_t s = 0; s < hyps.size(); ++s) {
    const Tokens& h = hyps[s];
    const Tokens& r = refs[s];
    hl += static_cast<double>(h.size());
    rl += static_cast<double>(r.size());
    for (std::size_t n = 1; n <= 4; ++n) {
      if (h.size() < n) continue;
      std::vector<bool> used(r.size() + 1, false);
      for (std::size_t i = 0; i + n <= h.size(); ++i) {
        total[n - 1] += 1;
        for (std::size_t j = 0; j + n <= r.size(); ++j) {
          if (used[j]) continue;
          if (std::equal(h.begin() + static_cast<long>(i), h.begin() + static_cast<long>(i + n),
                         r.begin() + static_cast<long>(j))) {
            used[j] = true;
            match[n - 1] += 1;
            break;
          }
        }
      }
    }
  }
  if (match[0] == 0) return 0;
  double logp = 0;
  int k = 0;
  for (int n = 0; n < 4; ++n) {
    if (total[n] == 0) continue;
    logp += std::log(match[n] > 0 ? match[n] / total[n] : 0.1 / total[n]);
    ++k;
  }
  const double bp = hl >= rl ? 1 : std::exp(1 - rl / hl);
  return 100 * bp * std::exp(logp / k);
}

Tokens random_sentence(std::mt19937_64& rng, int vocab, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(0, max_len);
  std::uniform_int_distribution<int> w(0, vocab - 1);
  Tokens t(len(rng));
  for (auto& x : t) x = "t" + std::to_string(w(rng));
  return t;
}

std::vector<Entity> two_entity_db() {
  return {{"golden_curry", "restaurant", {{"area", "north"}, {"price", "cheap"}}},
          {"royal_wok", "restaurant", {{"area", "south"}, {"price", "cheap"}}}};
}

}  // namespace

TEST_CASE("bleu: identical corpus scores 100 and disjoint scores 0") {
  std::vector<Tokens> c = {words("the hotel is in the north ."), words("value_phone is the number")};
  CHECK(bleu(c, c) == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(bleu({words("a b c")}, {words("x y z")}) == 0.0);
  CHECK(bleu({Tokens{}}, {words("x y z")}) == 0.0);
  CHECK_THROWS_AS(bleu({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(bleu({words("a")}, {words("a"), words("b")}), std::invalid_argument);
}

TEST_CASE("bleu: short hypothesis uses brevity penalty and drops empty orders") {
  // p1 = p2 = p3 = 1, no 4-grams in the hypothesis; BP = exp(1 - 4/3).
  const double expected = 100.0 * std::exp(1.0 - 4.0 / 3.0);
  CHECK(bleu({words("the cat sat")}, {words("the cat sat down")}) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(71.6531).epsilon(1e-5));
}

TEST_CASE("bleu: zero-match orders are smoothed with epsilon over candidates") {
  // p1 = 3/4, p2 = 1/3, p3 = 0.1/2, p4 = 0.1/1
  const double expected =
      100.0 * std::exp((std::log(0.75) + std::log(1.0 / 3) + std::log(0.05) + std::log(0.1)) / 4);
  CHECK(bleu({words("a b c d")}, {words("a b x d")}) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("bleu: matches a brute-force oracle and ignores corpus order") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Tokens> h, r;
    const int n = 1 + trial % 5;
    for (int i = 0; i < n; ++i) {
      h.push_back(random_sentence(rng, 6, 8));
      r.push_back(random_sentence(rng, 6, 8));
      if (r.back().empty()) r.back().push_back("t0");
    }
    if (std::all_of(h.begin(), h.end(), [](const Tokens& t) { return t.empty(); })) continue;
    const double b = bleu(h, r);
    CHECK(b == doctest::Approx(oracle_bleu(h, r)).epsilon(1e-10));
    CHECK(b >= 0.0);
    CHECK(b <= 100.0 + 1e-9);
    std::vector<std::size_t> perm(h.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Tokens> hp, rp;
    for (std::size_t i : perm) {
      hp.push_back(h[i]);
      rp.push_back(r[i]);
    }
    CHECK(bleu(hp, rp) == doctest::Approx(b).epsilon(1e-12));
  }
}

TEST_CASE("combined score reproduces the published rows") {
  CHECK(std::abs(combined_score(95.30, 88.00, 19.30) - 110.95) < 1e-9);
  CHECK(std::abs(combined_score_camrest(97.74, 88.24, 23.68) - 116.67) < 1e-9);
  CHECK(combined_score(0, 0, 0) == 0.0);
  CHECK(combined_score(0, 0, 17.5) == 17.5);
}

TEST_CASE("combined score is monotone in every argument") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 100), step(0, 5);
  for (int i = 0; i < 500; ++i) {
    const double a = u(rng), b = u(rng), c = u(rng), d = step(rng);
    const double base = combined_score(a, b, c);
    CHECK(combined_score(a + d, b, c) >= base);
    CHECK(combined_score(a, b + d, c) >= base);
    CHECK(combined_score(a, b, c + d) >= base);
    CHECK(combined_score_camrest(a + d, b, c) >= combined_score_camrest(a, b, c));
  }
}

TEST_CASE("joint goal accuracy counts exact turns after normalization") {
  std::vector<BeliefState> gold = {{{"area", "north"}},
                                   {{"area", "north"}, {"price", "cheap"}},
                                   {{"area", "north"}, {"price", "cheap"}, {"food", "indian"}},
                                   {}};
  std::vector<BeliefState> pred = gold;
  CHECK(joint_goal_accuracy(pred, gold) == 1.0);
  pred[2]["food"] = "chinese";
  CHECK(joint_goal_accuracy(pred, gold) == doctest::Approx(0.75));
  pred[2]["food"] = "  Indian ";
  CHECK(joint_goal_accuracy(pred, gold) == 1.0);
  pred[1].erase("price");
  CHECK(joint_goal_accuracy(pred, gold) == doctest::Approx(0.75));
  CHECK(joint_goal_accuracy({{}}, {{}}) == 1.0);
  CHECK_THROWS_AS(joint_goal_accuracy({}, {}), std::invalid_argument);
}

TEST_CASE("joint goal accuracy is permutation invariant") {
  std::mt19937_64 rng(9);
  std::vector<BeliefState> gold, pred;
  for (int i = 0; i < 40; ++i) {
    BeliefState g = {{"area", std::to_string(i % 3)}};
    gold.push_back(g);
    if (i % 4 == 0) g["area"] = "x";
    pred.push_back(g);
  }
  const double base = joint_goal_accuracy(pred, gold);
  std::vector<std::size_t> perm(gold.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<BeliefState> gp, pp;
  for (std::size_t i : perm) {
    gp.push_back(gold[i]);
    pp.push_back(pred[i]);
  }
  CHECK(joint_goal_accuracy(pp, gp) == base);
}

TEST_CASE("inform and success follow the goal") {
  const auto db = two_entity_db();
  Goal goal{"restaurant", {{"area", "north"}, {"price", "cheap"}}, {"phone", "address"}};
  std::vector<Tokens> full = {words("golden_curry is a cheap place in the north ."),
                              words("the phone is value_phone and the address is value_address .")};
  auto r = inform_success({full}, {goal}, db);
  CHECK(r.inform == 1.0);
  CHECK(r.success == 1.0);

  std::vector<Tokens> missing = {full[0], words("the phone is value_phone .")};
  r = inform_success({missing}, {goal}, db);
  CHECK(r.inform == 1.0);
  CHECK(r.success == 0.0);

  // Wrong entity: placeholders alone do not make a success.
  std::vector<Tokens> wrong = {words("royal_wok is cheap ."), full[1]};
  r = inform_success({wrong}, {goal}, db);
  CHECK(r.inform == 0.0);
  CHECK(r.success == 0.0);

  r = inform_success({full, missing}, {goal, goal}, db);
  CHECK(r.inform == 1.0);
  CHECK(r.success == 0.5);
  CHECK_THROWS_AS(inform_success({full}, {}, db), std::invalid_argument);
}

TEST_CASE("e2e report derives Comb from its parts") {
  auto r = make_e2e_report(0, 0, 42.5, "d", {});
  CHECK(r.metrics.at("Comb") == 42.5);
  r = make_e2e_report(95.30, 88.00, 19.30, "d", {});
  CHECK(std::abs(r.metrics.at("Comb") - 110.95) < 1e-9);
  auto j = r.to_json();
  CHECK(j.at("task") == "e2e");
  CHECK(j.at("metrics").contains("BLEU"));
  CHECK(r.table().find("Comb") != std::string::npos);
  CHECK(task_from_name("intent") == Task::kIntent);
  CHECK_THROWS_AS(task_from_name("nlu"), std::invalid_argument);
}

TEST_CASE("synthetic e2e corpus: unique dialogs, annotations and a consistent database") {
  auto c = synthetic_e2e_corpus(30, 10, 4);
  REQUIRE(c.train.size() == 30);
  REQUIRE(c.test.size() == 10);
  std::set<std::pair<std::string, std::string>> seen;
  std::vector<std::vector<Tokens>> gold;
  std::vector<Goal> goals;
  for (const auto* split : {&c.train, &c.test}) {
    for (const GoalDialog& g : *split) {
      REQUIRE(g.dialog.turns.size() == 6);
      CHECK(seen.insert({g.dialog.turns[0].text, g.dialog.turns[2].text}).second);
      CHECK(g.dialog.source == corpus::Source::kLabeled);
      CHECK(!g.goal.requests.empty());
      gold.emplace_back();
      for (const auto& t : g.dialog.turns) {
        REQUIRE(t.annotations.has_value());
        CHECK(!t.annotations->empty());
        if (t.speaker == corpus::Speaker::kSystem) gold.back().push_back(words(t.text));
      }
      goals.push_back(g.goal);
    }
  }
  // The reference responses satisfy every goal.
  auto r = inform_success(gold, goals, c.db);
  CHECK(r.inform == 1.0);
  CHECK(r.success == 1.0);
  for (const Entity& e : c.db) CHECK(words(e.name).size() == 1);

  auto again = synthetic_e2e_corpus(30, 10, 4);
  CHECK(again.train.front().dialog == c.train.front().dialog);

  auto unl = synthetic_e2e_corpus(3, 0, 4, false);
  for (const auto& t : unl.train[0].dialog.turns) CHECK(!t.annotations.has_value());
}

TEST_CASE("overfit corpus: twenty dialogs, half labeled") {
  auto d = overfit_dialogs(1);
  REQUIRE(d.size() == 20);
  CHECK(std::count_if(d.begin(), d.end(), [](const corpus::Dialog& x) {
          return x.source == corpus::Source::kLabeled;
        }) == 10);
  for (const auto& x : d) {
    for (const auto& t : x.turns) CHECK(t.annotations.has_value() == (x.source == corpus::Source::kLabeled));
  }
}

TEST_CASE("synthetic intent set is separable by a bag-of-words linear probe") {
  auto data = synthetic_intent_dataset(0);
  CHECK(data.train.size() == 50);
  CHECK(!data.validation.empty());
  CHECK(!data.test.empty());
  std::set<std::string> texts;
  for (const auto* s : {&data.train, &data.validation, &data.test}) {
    for (const auto& ex : *s) CHECK(texts.insert(ex.text).second);
  }

  // Averaged multiclass perceptron on word counts, trained on the 50 examples.
  std::map<std::string, std::vector<double>> w, sum;
  auto score = [&](const std::string& text) {
    std::vector<double> s(data.labels.size(), 0.0);
    for (const auto& tok : words(text)) {
      auto it = w.find(tok);
      if (it == w.end()) continue;
      for (std::size_t c = 0; c < s.size(); ++c) s[c] += it->second[c];
    }
    return static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
  };
  for (int epoch = 0; epoch < 20; ++epoch) {
    for (const auto& ex : data.train) {
      const auto gold = static_cast<std::size_t>(
          std::find(data.labels.begin(), data.labels.end(), ex.label) - data.labels.begin());
      const std::size_t pred = score(ex.text);
      if (pred != gold) {
        for (const auto& tok : words(ex.text)) {
          auto& row = w.try_emplace(tok, data.labels.size(), 0.0).first->second;
          row[gold] += 1;
          row[pred] -= 1;
        }
      }
      for (const auto& [tok, row] : w) {
        auto& acc = sum.try_emplace(tok, data.labels.size(), 0.0).first->second;
        for (std::size_t c = 0; c < row.size(); ++c) acc[c] += row[c];
      }
    }
  }
  w = sum;
  std::size_t correct = 0;
  for (const auto& ex : data.test) correct += data.labels[score(ex.text)] == ex.label;
  CHECK(static_cast<double>(correct) / static_cast<double>(data.test.size()) >= 0.95);
}

TEST_CASE("intent accuracy counts unseen labels as wrong and warns") {
  std::vector<std::string> labels = {"a", "b"};
  std::vector<IntentExample> gold = {{"x", "a"}, {"y", "b"}, {"z", "c"}};
  std::vector<std::string> warnings;
  CHECK(intent_accuracy({"a", "b", "a"}, gold, labels, &warnings) == doctest::Approx(2.0 / 3));
  CHECK(warnings.size() == 1);
  CHECK(intent_accuracy({"a", "b"}, {{"x", "a"}, {"y", "b"}}, labels) == 1.0);
  CHECK(intent_accuracy({"b", "a"}, {{"y", "b"}, {"x", "a"}}, labels) == 1.0);
}

TEST_CASE("intent fine-tuning leaves policy and generation parameters untouched") {
  auto data = synthetic_intent_dataset(2);
  data.train.resize(12);
  data.validation.resize(6);
  data.test.resize(6);
  auto vocab = corpus::Vocabulary::build(dialogs_of(data), 1);
  model::Transformer m(testing::tiny_config(static_cast<int>(vocab.size())));
  const ad::ParameterStore before = objectives::init_pretraining_params(m, 3);

  auto changed = [&](const ad::ParameterStore& after, const std::string& name) {
    return (after.get(name).value - before.get(name).value).cwiseAbs().maxCoeff() > 0;
  };
  auto frozen_by_design = [](const std::string& n) {
    return n == model::names::kPolicyPrompt || n.rfind("lm_head.", 0) == 0 ||
           n.rfind("proj.", 0) == 0 || n.rfind("bow.", 0) == 0;
  };

  for (bool head_only : {false, true}) {
    CAPTURE(head_only);
    ad::ParameterStore params = before;
    IntentConfig cfg;
    cfg.epochs = 2;
    cfg.head_only = head_only;
    cfg.learning_rate = 1e-2;
    auto report = finetune_intent(m, params, vocab, data, cfg);
    CHECK(report.task == Task::kIntent);
    CHECK(report.metrics.count("ACC") == 1);
    CHECK(params.contains(intent_names::kWeight));
    CHECK(params.get(intent_names::kWeight).value.rows() == 3);
    for (const auto& p : before) {
      if (frozen_by_design(p->name) || head_only) {
        CHECK_MESSAGE(!changed(params, p->name), p->name);
      }
    }
    CHECK(changed(params, model::names::kUnderstandingPrompt) == !head_only);
    CHECK(changed(params, "layer0.attn.q.w") == !head_only);
  }
}

TEST_CASE("intent fine-tuning is deterministic per seed") {
  auto data = synthetic_intent_dataset(2);
  data.train.resize(9);
  data.test.resize(6);
  data.validation.resize(3);
  auto vocab = corpus::Vocabulary::build(dialogs_of(data), 1);
  auto cfg_model = testing::tiny_config(static_cast<int>(vocab.size()));
  cfg_model.dropout_rate = 0.1;
  model::Transformer m(cfg_model);
  const ad::ParameterStore init = objectives::init_pretraining_params(m, 3);
  IntentConfig cfg;
  cfg.epochs = 2;
  ad::ParameterStore a = init, b = init;
  finetune_intent(m, a, vocab, data, cfg);
  finetune_intent(m, b, vocab, data, cfg);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.at(i).value == b.at(i).value);
}

TEST_CASE("grid search averages seeds and keeps the best point") {
  auto data = synthetic_intent_dataset(2);
  data.train.resize(9);
  data.validation.resize(6);
  auto vocab = corpus::Vocabulary::build(dialogs_of(data), 1);
  model::Transformer m(testing::tiny_config(static_cast<int>(vocab.size())));
  const ad::ParameterStore init = objectives::init_pretraining_params(m, 3);
  IntentConfig cfg;
  cfg.head_only = true;
  auto g = grid_search_intent(m, init, vocab, data, cfg, {1e-3, 1e-2}, {1, 2}, {0, 1});
  REQUIRE(g.points.size() == 4);
  double best = 0;
  for (const auto& p : g.points) best = std::max(best, p.mean_validation_accuracy);
  CHECK(g.best.mean_validation_accuracy == best);
  CHECK_THROWS_AS(grid_search_intent(m, init, vocab, data, cfg, {}, {1}), std::invalid_argument);
}

TEST_CASE("e2e fine-tuning reduces the generation loss and reports every metric") {
  auto c = synthetic_e2e_corpus(2, 1, 6);
  auto vocab = corpus::Vocabulary::build(dialogs_of(c.train), 1);
  model::Transformer m(testing::tiny_config(static_cast<int>(vocab.size())));
  ad::ParameterStore params = objectives::init_pretraining_params(m, 2);
  E2EConfig cfg;
  cfg.learning_rate = 1e-2;
  cfg.max_response_len = 12;
  cfg.steps = 1;
  ad::ParameterStore start = params;
  const double first = finetune_e2e(m, start, vocab, c.train, cfg);
  cfg.steps = 60;
  const double last = finetune_e2e(m, params, vocab, c.train, cfg);
  CHECK(last < first);
  auto report = evaluate_e2e(m, params, vocab, c.test, c.db, cfg, "synthetic");
  for (const char* k : {"BLEU", "Inform", "Success", "Comb"}) CHECK(report.metrics.count(k) == 1);
  CHECK(report.metrics.at("Comb") ==
        doctest::Approx((report.metrics.at("Inform") + report.metrics.at("Success")) * 0.5 +
                        report.metrics.at("BLEU")));
}
