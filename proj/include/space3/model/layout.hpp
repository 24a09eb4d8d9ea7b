#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "space3/autodiff/tape.hpp"

namespace space3::model {

enum class Mode { kQuery, kResponsePosterior, kPolicyPrior, kGenerate, kMlm };
enum class SegmentKind { kContext, kUnderstandingPrompt, kPolicyPrompt, kResponse };

const char* mode_name(Mode m);

struct Segment {
  SegmentKind kind;
  std::size_t begin = 0;
  std::size_t length = 0;
};

/// Ordered segments covering the whole input sequence.
///   QUERY              c, p^u
///   RESPONSE_POSTERIOR c, r, p^u
///   POLICY_PRIOR       c, p^u, p^o
///   GENERATE           c, p^u, p^o, r_<n
///   MLM                c
struct SegmentLayout {
  Mode mode = Mode::kQuery;
  std::vector<Segment> segments;

  std::size_t total_length() const;
  /// Throws std::invalid_argument if the layout has no such segment.
  const Segment& segment(SegmentKind kind) const;
  bool has(SegmentKind kind) const;
  /// Segment index owning position `pos`.
  std::size_t segment_of(std::size_t pos) const;
};

/// Throws std::invalid_argument when the lengths are inconsistent with the
/// mode, e.g. a response in QUERY mode or an empty context.
SegmentLayout make_layout(Mode mode, std::size_t context_len, std::size_t response_len,
                          std::size_t prompt_u, std::size_t prompt_p);

/// visible(i, j): may position i attend to position j.
ad::BoolMatrix build_attention_mask(const SegmentLayout& layout);

}  // namespace space3::model
