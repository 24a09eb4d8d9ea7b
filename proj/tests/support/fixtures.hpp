#pragma once

#include <random>
#include <string>
#include <vector>

#include "space3/corpus/dialog.hpp"
#include "space3/corpus/example.hpp"
#include "space3/corpus/vocabulary.hpp"
#include "space3/model/config.hpp"
#include "space3/semtree/annotation_parser.hpp"

namespace space3::testing {

inline corpus::Dialog make_dialog(const std::vector<std::string>& texts,
                                  corpus::Source source = corpus::Source::kUnlabeled,
                                  const std::string& id = "d") {
  corpus::Dialog d;
  d.dialog_id = id;
  d.source = source;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    corpus::Turn t;
    t.speaker = i % 2 == 0 ? corpus::Speaker::kUser : corpus::Speaker::kSystem;
    t.text = texts[i];
    if (source == corpus::Source::kLabeled) t.annotations = std::vector<corpus::ActAnnotation>{};
    d.turns.push_back(t);
  }
  return d;
}

inline std::vector<corpus::Dialog> small_corpus() {
  return {make_dialog({"i need a cheap hotel in the north", "the alpha lodge is cheap and in the north",
                       "what is the phone number ?", "the phone is value_phone"},
                      corpus::Source::kUnlabeled, "a"),
          make_dialog({"find me an indian restaurant", "golden_curry serves indian food",
                       "book it for two people", "booked , reference value_reference"},
                      corpus::Source::kUnlabeled, "b")};
}

inline model::ModelConfig tiny_config(int vocab_size) {
  model::ModelConfig c;
  c.num_layers = 2;
  c.hidden_dim = 16;
  c.num_heads = 2;
  c.ffn_dim = 32;
  c.vocab_size = vocab_size;
  c.max_positions = 64;
  c.max_turns = 8;
  c.dropout_rate = 0.0;
  c.prompt_len_understanding = 3;
  c.prompt_len_policy = 2;
  return c;
}


/// Vocabulary of exactly `size` tokens: the specials plus w0, w1, ...
inline corpus::Vocabulary word_vocab(int size) {
  std::vector<std::string> tokens = corpus::Vocabulary::special_tokens();
  for (int i = 0; static_cast<int>(tokens.size()) < size; ++i) tokens.push_back("w" + std::to_string(i));
  return corpus::Vocabulary::from_tokens(tokens);
}

/// Random two-pair dialogs over the w* words. Labeled dialogs annotate each
/// turn with an act whose value is one of its own words.
inline std::vector<corpus::TrainingExample> random_examples(const corpus::Vocabulary& vocab,
                                                            std::size_t count, bool labeled,
                                                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int words = static_cast<int>(vocab.size()) - corpus::Vocabulary::kNumSpecial;
  std::uniform_int_distribution<int> word(0, words - 1), len(2, 5), pick(0, 2);
  const char* intents[] = {"inform", "request", "book"};
  const char* slots[] = {"area", "food", "price"};
  std::vector<corpus::TrainingExample> out;
  for (std::size_t n = 0; n < count; ++n) {
    corpus::Dialog d;
    d.dialog_id = "r" + std::to_string(n);
    d.source = labeled ? corpus::Source::kLabeled : corpus::Source::kUnlabeled;
    for (int t = 0; t < 4; ++t) {
      corpus::Turn turn;
      turn.speaker = t % 2 == 0 ? corpus::Speaker::kUser : corpus::Speaker::kSystem;
      std::vector<std::string> ws;
      for (int k = len(rng); k > 0; --k) ws.push_back("w" + std::to_string(word(rng)));
      for (const auto& w : ws) turn.text += (turn.text.empty() ? "" : " ") + w;
      if (labeled) {
        std::string ann = std::string("hotel-") + intents[pick(rng)] + "(" + slots[pick(rng)] +
                          "=" + ws[static_cast<std::size_t>(pick(rng)) % ws.size()] + ")";
        turn.annotations = semtree::parse_annotations(ann);
      }
      d.turns.push_back(turn);
    }
    out.push_back(corpus::assemble_example(d, 2, vocab));
  }
  return out;
}

inline std::vector<const corpus::TrainingExample*> pointers(
    const std::vector<corpus::TrainingExample>& xs) {
  std::vector<const corpus::TrainingExample*> out;
  for (const auto& x : xs) out.push_back(&x);
  return out;
}

}  // namespace space3::testing
