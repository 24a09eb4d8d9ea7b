#include "space3/corpus/example.hpp"

#include <algorithm>
#include <stdexcept>

namespace space3::corpus {

std::vector<TokenId> TrainingExample::response_content() const {
  if (response_tokens.size() < 2) return {};
  return {response_tokens.begin() + 1, response_tokens.end() - 1};
}

namespace {

struct Utterance {
  std::vector<std::string> words;
  Speaker speaker;
  std::size_t pair;  // 1-based pair index in the dialog
  const Turn* turn;
};

}  // namespace

TrainingExample assemble_example(const Dialog& dialog, std::size_t k,
                                 const Vocabulary& vocab, const Limits& limits) {
  if (k < 1 || k > dialog.num_pairs()) {
    throw std::out_of_range("turn pair index " + std::to_string(k) +
                            " out of range [1, " + std::to_string(dialog.num_pairs()) + "]");
  }
  if (limits.max_context_len < 3 || limits.max_response_len < 2) {
    throw std::invalid_argument("limits too small to hold boundary tokens");
  }

  std::vector<Utterance> history;
  for (std::size_t j = 1; j < k; ++j) {
    history.push_back({tokenize(dialog.turns[2 * j - 2].text), Speaker::kUser, j,
                       &dialog.turns[2 * j - 2]});
    history.push_back({tokenize(dialog.turns[2 * j - 1].text), Speaker::kSystem, j,
                       &dialog.turns[2 * j - 1]});
  }
  Utterance query{tokenize(dialog.turns[2 * k - 2].text), Speaker::kUser, k,
                  &dialog.turns[2 * k - 2]};
  const Turn& reply = dialog.turns[2 * k - 1];

  auto bracketed = [](const Utterance& u) { return u.words.size() + 2; };
  std::size_t total = bracketed(query);
  for (const auto& u : history) total += bracketed(u);

  // Drop whole pairs, oldest first.
  std::size_t first = 0;
  while (total > limits.max_context_len && first < history.size()) {
    total -= bracketed(history[first]) + bracketed(history[first + 1]);
    first += 2;
  }
  if (total > limits.max_context_len) {
    std::size_t keep = limits.max_context_len - 2;
    query.words.erase(query.words.begin(), query.words.end() - static_cast<long>(keep));
  }

  TrainingExample ex;
  ex.dialog_id = dialog.dialog_id;
  ex.pair_index = k;
  ex.source = dialog.source;

  auto append = [&](const Utterance& u, bool current) {
    bool user = u.speaker == Speaker::kUser;
    TokenId open = user ? Vocabulary::kBou : Vocabulary::kBos;
    TokenId close = user ? Vocabulary::kEou : Vocabulary::kEos;
    int role = user ? kUserRole : kSystemRole;
    int turn = static_cast<int>(k - u.pair);
    int pos = 0;
    auto push = [&](TokenId id, const std::string& word) {
      ex.context_tokens.push_back(id);
      ex.context_words.push_back(word);
      ex.context_roles.push_back(role);
      ex.context_turns.push_back(turn);
      ex.context_positions.push_back(pos++);
    };
    push(open, vocab.token(open));
    UtteranceSpan span;
    span.begin = ex.context_tokens.size();
    span.length = u.words.size();
    span.speaker = u.speaker;
    span.is_current_query = current;
    if (u.turn->annotations) span.annotations = *u.turn->annotations;
    for (const auto& w : u.words) push(vocab.id(w), w);
    push(close, vocab.token(close));
    ex.utterances.push_back(std::move(span));
  };
  for (std::size_t i = first; i < history.size(); ++i) append(history[i], false);
  append(query, true);

  for (const auto& w : query.words) ex.query_tokens.push_back(vocab.id(w));

  auto reply_words = tokenize(reply.text);
  if (reply_words.size() > limits.max_response_len - 2) {
    reply_words.resize(limits.max_response_len - 2);
  }
  int pos = 0;
  auto push_response = [&](TokenId id) {
    ex.response_tokens.push_back(id);
    ex.response_roles.push_back(kSystemRole);
    ex.response_turns.push_back(0);
    ex.response_positions.push_back(pos++);
  };
  push_response(Vocabulary::kBos);
  for (const auto& w : reply_words) push_response(vocab.id(w));
  push_response(Vocabulary::kEos);

  if (dialog.source == Source::kLabeled) {
    ex.query_annotations = query.turn->annotations.value_or(std::vector<ActAnnotation>{});
    ex.response_annotations = reply.annotations.value_or(std::vector<ActAnnotation>{});
  }
  return ex;
}

std::vector<TrainingExample> assemble_all(const Dialog& dialog, const Vocabulary& vocab,
                                          const Limits& limits) {
  std::vector<TrainingExample> out;
  for (std::size_t k = 1; k <= dialog.num_pairs(); ++k) {
    out.push_back(assemble_example(dialog, k, vocab, limits));
  }
  return out;
}

}  // namespace space3::corpus
