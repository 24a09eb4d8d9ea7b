#include "space3/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace space3::eval {

namespace {

std::map<Tokens, int> ngram_counts(const Tokens& t, std::size_t n) {
  std::map<Tokens, int> counts;
  for (std::size_t i = 0; i + n <= t.size(); ++i) {
    ++counts[Tokens(t.begin() + static_cast<long>(i), t.begin() + static_cast<long>(i + n))];
  }
  return counts;
}

std::string normalize(const std::string& s) {
  std::istringstream in(s);
  std::string word, out;
  while (in >> word) {
    if (!out.empty()) out += ' ';
    out += word;
  }
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

BeliefState normalize(const BeliefState& s) {
  BeliefState out;
  for (const auto& [k, v] : s) out[normalize(k)] = normalize(v);
  return out;
}

}  // namespace

double bleu(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs) {
  if (hyps.empty() || hyps.size() != refs.size()) {
    throw std::invalid_argument("bleu: need equally many non-zero hypotheses and references");
  }
  constexpr std::size_t kMaxOrder = 4;
  double matches[kMaxOrder] = {}, totals[kMaxOrder] = {};
  double hyp_len = 0, ref_len = 0;
  for (std::size_t s = 0; s < hyps.size(); ++s) {
    hyp_len += static_cast<double>(hyps[s].size());
    ref_len += static_cast<double>(refs[s].size());
    for (std::size_t n = 1; n <= kMaxOrder; ++n) {
      auto hc = ngram_counts(hyps[s], n);
      auto rc = ngram_counts(refs[s], n);
      for (const auto& [gram, c] : hc) {
        auto it = rc.find(gram);
        if (it != rc.end()) matches[n - 1] += std::min(c, it->second);
        totals[n - 1] += c;
      }
    }
  }
  if (matches[0] == 0) return 0.0;
  double log_sum = 0;
  int orders = 0;
  for (std::size_t n = 0; n < kMaxOrder; ++n) {
    if (totals[n] == 0) continue;
    const double p = matches[n] > 0 ? matches[n] / totals[n] : kBleuZeroMatchEpsilon / totals[n];
    log_sum += std::log(p);
    ++orders;
  }
  const double bp = hyp_len >= ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len);
  return 100.0 * bp * std::exp(log_sum / orders);
}

std::string slot_placeholder(const std::string& slot) { return "value_" + slot; }

InformSuccess inform_success(const std::vector<std::vector<Tokens>>& dialogs,
                             const std::vector<Goal>& goals, const std::vector<Entity>& db) {
  if (dialogs.size() != goals.size()) {
    throw std::invalid_argument("inform_success: one goal per dialog required");
  }
  if (dialogs.empty()) return {};
  double inform = 0, success = 0;
  for (std::size_t d = 0; d < dialogs.size(); ++d) {
    std::set<std::string> said;
    for (const Tokens& r : dialogs[d]) said.insert(r.begin(), r.end());
    const Goal& g = goals[d];
    bool informed = false;
    for (const Entity& e : db) {
      if (e.domain != g.domain || !said.count(e.name)) continue;
      bool ok = true;
      for (const auto& [slot, value] : g.constraints) {
        auto it = e.attributes.find(slot);
        ok = ok && it != e.attributes.end() && it->second == value;
      }
      informed = informed || ok;
    }
    bool answered = true;
    for (const std::string& slot : g.requests) answered = answered && said.count(slot_placeholder(slot));
    inform += informed ? 1 : 0;
    success += informed && answered ? 1 : 0;
  }
  const auto n = static_cast<double>(dialogs.size());
  return {inform / n, success / n};
}

double joint_goal_accuracy(const std::vector<BeliefState>& predicted,
                           const std::vector<BeliefState>& gold) {
  if (predicted.size() != gold.size() || gold.empty()) {
    throw std::invalid_argument("joint_goal_accuracy: need aligned, non-empty turn lists");
  }
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) correct += normalize(predicted[i]) == normalize(gold[i]);
  return static_cast<double>(correct) / static_cast<double>(gold.size());
}

double combined_score(double inform, double success, double bleu) {
  return (inform + success) * 0.5 + bleu;
}

double combined_score_camrest(double match, double succ_f1, double bleu) {
  return (match + succ_f1) * 0.5 + bleu;
}

}  // namespace space3::eval
