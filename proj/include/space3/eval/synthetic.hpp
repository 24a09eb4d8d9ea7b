#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "space3/corpus/dialog.hpp"
#include "space3/eval/metrics.hpp"

namespace space3::eval {

// Two-domain (restaurant, hotel) goal-oriented dialogs generated from a small
// entity database. Entity names are single tokens; requested attributes are
// delexicalized to value_<slot> placeholders.

struct GoalDialog {
  corpus::Dialog dialog;
  Goal goal;
};

struct E2ECorpus {
  std::vector<Entity> db;
  std::vector<GoalDialog> train;
  std::vector<GoalDialog> test;
};

std::vector<Entity> synthetic_database();

/// Dialogs are distinct by their opening user turn and request set. When
/// `labeled`, every turn carries dialog-act annotations.
E2ECorpus synthetic_e2e_corpus(std::size_t train_dialogs, std::size_t test_dialogs,
                               std::uint64_t seed, bool labeled = true);

/// The 20-dialog corpus for the memorization run; the first half is labeled,
/// the second half unlabeled.
std::vector<corpus::Dialog> overfit_dialogs(std::uint64_t seed);

struct IntentExample {
  std::string text;
  std::string label;
};

struct IntentDataset {
  std::string id;
  std::vector<std::string> labels;
  std::vector<IntentExample> train, validation, test;
};

/// Three intents, each marked by one of two keywords mixed into shared filler
/// words. 50 training utterances plus separate validation and test splits.
IntentDataset synthetic_intent_dataset(std::uint64_t seed);

/// Plain dialogs, e.g. for building a vocabulary. Intent utterances become
/// one user turn followed by an empty system turn.
std::vector<corpus::Dialog> dialogs_of(const std::vector<GoalDialog>& dialogs);
std::vector<corpus::Dialog> dialogs_of(const IntentDataset& data);

}  // namespace space3::eval
