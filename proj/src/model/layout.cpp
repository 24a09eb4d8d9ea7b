#include "space3/model/layout.hpp"

#include <stdexcept>

namespace space3::model {

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::kQuery: return "QUERY";
    case Mode::kResponsePosterior: return "RESPONSE_POSTERIOR";
    case Mode::kPolicyPrior: return "POLICY_PRIOR";
    case Mode::kGenerate: return "GENERATE";
    case Mode::kMlm: return "MLM";
  }
  return "?";
}

std::size_t SegmentLayout::total_length() const {
  std::size_t n = 0;
  for (const auto& s : segments) n += s.length;
  return n;
}

bool SegmentLayout::has(SegmentKind kind) const {
  for (const auto& s : segments) {
    if (s.kind == kind) return true;
  }
  return false;
}

const Segment& SegmentLayout::segment(SegmentKind kind) const {
  for (const auto& s : segments) {
    if (s.kind == kind) return s;
  }
  throw std::invalid_argument(std::string("layout for ") + mode_name(mode) +
                              " has no such segment");
}

std::size_t SegmentLayout::segment_of(std::size_t pos) const {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (pos >= segments[i].begin && pos < segments[i].begin + segments[i].length) return i;
  }
  throw std::out_of_range("position outside layout");
}

SegmentLayout make_layout(Mode mode, std::size_t context_len, std::size_t response_len,
                          std::size_t prompt_u, std::size_t prompt_p) {
  if (context_len == 0) throw std::invalid_argument("layout: empty context");
  const bool wants_response = mode == Mode::kResponsePosterior || mode == Mode::kGenerate;
  if (wants_response && response_len == 0) {
    throw std::invalid_argument(std::string("layout: ") + mode_name(mode) + " needs a response");
  }
  if (!wants_response && response_len != 0) {
    throw std::invalid_argument(std::string("layout: ") + mode_name(mode) +
                                " does not take response tokens");
  }
  SegmentLayout layout;
  layout.mode = mode;
  std::size_t at = 0;
  auto push = [&](SegmentKind kind, std::size_t len) {
    layout.segments.push_back({kind, at, len});
    at += len;
  };
  push(SegmentKind::kContext, context_len);
  switch (mode) {
    case Mode::kQuery:
      push(SegmentKind::kUnderstandingPrompt, prompt_u);
      break;
    case Mode::kResponsePosterior:
      push(SegmentKind::kResponse, response_len);
      push(SegmentKind::kUnderstandingPrompt, prompt_u);
      break;
    case Mode::kPolicyPrior:
      push(SegmentKind::kUnderstandingPrompt, prompt_u);
      push(SegmentKind::kPolicyPrompt, prompt_p);
      break;
    case Mode::kGenerate:
      push(SegmentKind::kUnderstandingPrompt, prompt_u);
      push(SegmentKind::kPolicyPrompt, prompt_p);
      push(SegmentKind::kResponse, response_len);
      break;
    case Mode::kMlm:
      break;
  }
  return layout;
}

ad::BoolMatrix build_attention_mask(const SegmentLayout& layout) {
  const auto n = static_cast<Eigen::Index>(layout.total_length());
  ad::BoolMatrix visible = ad::BoolMatrix::Constant(n, n, false);
  const bool posterior = layout.mode == Mode::kResponsePosterior;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Segment& si = layout.segments[layout.segment_of(static_cast<std::size_t>(i))];
    for (Eigen::Index j = 0; j < n; ++j) {
      const Segment& sj = layout.segments[layout.segment_of(static_cast<std::size_t>(j))];
      bool same = &si == &sj;
      bool ok = false;
      switch (si.kind) {
        case SegmentKind::kContext:
          ok = sj.kind == SegmentKind::kContext;
          break;
        case SegmentKind::kUnderstandingPrompt:
          ok = sj.kind == SegmentKind::kContext || (posterior && sj.kind == SegmentKind::kResponse) ||
               (same && j <= i);
          break;
        case SegmentKind::kPolicyPrompt:
          ok = sj.kind == SegmentKind::kContext || sj.kind == SegmentKind::kUnderstandingPrompt ||
               (same && j <= i);
          break;
        case SegmentKind::kResponse:
          if (posterior) {
            ok = sj.kind == SegmentKind::kContext || same;
          } else {
            ok = sj.kind != SegmentKind::kResponse || j <= i;
          }
          break;
      }
      visible(i, j) = ok;
    }
  }
  return visible;
}

}  // namespace space3::model
