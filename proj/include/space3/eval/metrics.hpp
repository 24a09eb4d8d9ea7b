#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace space3::eval {

using Tokens = std::vector<std::string>;

inline constexpr double kBleuZeroMatchEpsilon = 0.1;

/// Corpus BLEU-4 on a 0..100 scale with uniform weights and brevity penalty.
/// An order with candidates but no matches uses epsilon / candidates as its
/// precision; an order with no candidates at all (every hypothesis shorter
/// than n) is left out of the geometric mean. No unigram match gives 0.
/// Throws std::invalid_argument on empty or misaligned input.
double bleu(const std::vector<Tokens>& hypotheses, const std::vector<Tokens>& references);

struct Entity {
  std::string name;  // single token, e.g. golden_curry
  std::string domain;
  std::map<std::string, std::string> attributes;
};

struct Goal {
  std::string domain;
  std::map<std::string, std::string> constraints;
  std::set<std::string> requests;  // slot names
};

/// Placeholder token for a requested slot, e.g. value_phone.
std::string slot_placeholder(const std::string& slot);

struct InformSuccess {
  double inform = 0;
  double success = 0;
};

/// Per dialog: Inform when some response contains the name of an entity of
/// the goal domain that satisfies every constraint; Success when Inform holds
/// and every requested slot's placeholder appears somewhere in the responses.
/// Returns fractions over dialogs.
InformSuccess inform_success(const std::vector<std::vector<Tokens>>& dialog_responses,
                             const std::vector<Goal>& goals, const std::vector<Entity>& db);

using BeliefState = std::map<std::string, std::string>;

/// Fraction of turns whose predicted state equals the gold state after
/// lowercasing and whitespace normalization of slots and values.
double joint_goal_accuracy(const std::vector<BeliefState>& predicted,
                           const std::vector<BeliefState>& gold);

double combined_score(double inform, double success, double bleu);
double combined_score_camrest(double match, double succ_f1, double bleu);

}  // namespace space3::eval
