#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "space3/corpus/dialog.hpp"
#include "space3/corpus/vocabulary.hpp"

namespace space3::corpus {

inline constexpr int kUserRole = 0;
inline constexpr int kSystemRole = 1;

struct Limits {
  std::size_t max_context_len = 256;
  std::size_t max_response_len = 50;
};

/// Location of one utterance inside an assembled context. `begin` indexes the
/// first content token (just after the opening boundary token).
struct UtteranceSpan {
  std::size_t begin = 0;
  std::size_t length = 0;
  Speaker speaker = Speaker::kUser;
  bool is_current_query = false;
  std::vector<ActAnnotation> annotations;
};

/// Flattened view of turn pair k: context c = d_1..d_{k-1} + u_k, query q = u_k,
/// response r = s_k.
struct TrainingExample {
  std::string dialog_id;
  std::size_t pair_index = 0;  // k, 1-based
  Source source = Source::kUnlabeled;

  std::vector<TokenId> context_tokens;
  std::vector<std::string> context_words;  // surface form per position
  std::vector<int> context_roles;
  std::vector<int> context_turns;
  std::vector<int> context_positions;
  std::vector<UtteranceSpan> utterances;

  // q_1..q_M, no boundary tokens.
  std::vector<TokenId> query_tokens;
  // [BOS] r_1..r_N [EOS]
  std::vector<TokenId> response_tokens;
  std::vector<int> response_roles;
  std::vector<int> response_turns;
  std::vector<int> response_positions;

  // Present for labeled data; feed the semantic trees.
  std::optional<std::vector<ActAnnotation>> query_annotations;
  std::optional<std::vector<ActAnnotation>> response_annotations;

  /// r_1..r_N without the boundary tokens.
  std::vector<TokenId> response_content() const;
};

/// Builds the example for turn pair k (1-based). Whole oldest turn pairs are
/// dropped until the context fits; if the current query alone is still too
/// long its head is cut. Throws std::out_of_range if k is not in [1, K].
TrainingExample assemble_example(const Dialog& dialog, std::size_t k,
                                 const Vocabulary& vocab, const Limits& limits = {});

/// All examples of a dialog, one per complete turn pair.
std::vector<TrainingExample> assemble_all(const Dialog& dialog, const Vocabulary& vocab,
                                          const Limits& limits = {});

struct SpanMaskConfig {
  double mask_fraction = 0.15;
  double mean_span_length = 3.0;
  std::size_t min_span_length = 1;
  std::size_t max_span_length = 8;
};

struct MaskedExample {
  TrainingExample base;
  std::vector<TokenId> masked_context;
  std::vector<std::size_t> masked_positions;  // ascending
  std::vector<TokenId> original_tokens;       // aligned with masked_positions
  std::size_t unlocated_values = 0;

  /// Restores the original tokens at the masked positions.
  std::vector<TokenId> unmask() const;
};

/// Labeled examples mask the first located occurrence of every annotated
/// value; unlabeled examples mask random contiguous spans. Boundary tokens are
/// never masked. Deterministic per (example, seed).
MaskedExample apply_span_mask(const TrainingExample& example, std::uint64_t seed,
                              const SpanMaskConfig& config = {});

}  // namespace space3::corpus
