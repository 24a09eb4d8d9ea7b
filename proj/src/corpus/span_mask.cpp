#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "space3/corpus/example.hpp"

namespace space3::corpus {

std::vector<TokenId> MaskedExample::unmask() const {
  std::vector<TokenId> out = masked_context;
  for (std::size_t i = 0; i < masked_positions.size(); ++i) {
    out[masked_positions[i]] = original_tokens[i];
  }
  return out;
}

namespace {

// Search order for value spans: the current query, then earlier utterances
// from newest to oldest.
std::vector<const UtteranceSpan*> search_order(const TrainingExample& ex) {
  std::vector<const UtteranceSpan*> order;
  for (auto it = ex.utterances.rbegin(); it != ex.utterances.rend(); ++it) {
    if (it->is_current_query) order.insert(order.begin(), &*it);
    else order.push_back(&*it);
  }
  return order;
}

std::optional<std::size_t> locate(const TrainingExample& ex, const UtteranceSpan& span,
                                  const std::vector<std::string>& value) {
  if (value.empty() || value.size() > span.length) return std::nullopt;
  for (std::size_t s = span.begin; s + value.size() <= span.begin + span.length; ++s) {
    bool match = true;
    for (std::size_t i = 0; i < value.size() && match; ++i) {
      match = ex.context_words[s + i] == value[i];
    }
    if (match) return s;
  }
  return std::nullopt;
}

void mask_labeled(const TrainingExample& ex, std::set<std::size_t>& masked,
                  std::size_t& unlocated) {
  std::vector<std::string> values;
  for (const auto& u : ex.utterances) {
    for (const auto& ann : u.annotations) {
      for (const auto& sv : ann.slots) {
        if (!sv.value) continue;
        if (std::find(values.begin(), values.end(), *sv.value) == values.end()) {
          values.push_back(*sv.value);
        }
      }
    }
  }
  auto order = search_order(ex);
  for (const auto& value : values) {
    // tokenize() lowercases, which makes the match case-insensitive.
    auto words = tokenize(value);
    bool found = false;
    for (const UtteranceSpan* span : order) {
      if (auto start = locate(ex, *span, words)) {
        for (std::size_t i = 0; i < words.size(); ++i) masked.insert(*start + i);
        found = true;
        break;
      }
    }
    if (!found) ++unlocated;
  }
}

void mask_random_spans(const TrainingExample& ex, std::uint64_t seed,
                       const SpanMaskConfig& cfg, std::set<std::size_t>& masked) {
  std::vector<std::size_t> maskable;
  for (const auto& u : ex.utterances) {
    for (std::size_t i = 0; i < u.length; ++i) maskable.push_back(u.begin + i);
  }
  if (maskable.empty()) return;
  auto budget = static_cast<std::size_t>(
      std::lround(cfg.mask_fraction * static_cast<double>(maskable.size())));
  if (budget == 0) return;

  std::mt19937_64 rng(seed);
  // Geometric over {0,1,...} shifted by one so the mean is mean_span_length.
  std::geometric_distribution<int> extra(1.0 / cfg.mean_span_length);
  std::uniform_int_distribution<std::size_t> pick(0, maskable.size() - 1);

  // Utterance end (exclusive) for each context position.
  std::vector<std::size_t> span_end(ex.context_tokens.size(), 0);
  for (const auto& u : ex.utterances) {
    for (std::size_t i = 0; i < u.length; ++i) span_end[u.begin + i] = u.begin + u.length;
  }

  std::size_t attempts = 0;
  while (masked.size() < budget && attempts++ < 100 * budget) {
    std::size_t len = static_cast<std::size_t>(extra(rng)) + 1;
    len = std::clamp(len, cfg.min_span_length, cfg.max_span_length);
    len = std::min(len, budget - masked.size());
    std::size_t start = maskable[pick(rng)];
    std::size_t end = std::min(start + len, span_end[start]);
    for (std::size_t p = start; p < end; ++p) masked.insert(p);
  }
}

}  // namespace

MaskedExample apply_span_mask(const TrainingExample& example, std::uint64_t seed,
                              const SpanMaskConfig& config) {
  MaskedExample out;
  out.base = example;
  std::set<std::size_t> masked;
  if (example.source == Source::kLabeled) {
    mask_labeled(example, masked, out.unlocated_values);
  } else {
    mask_random_spans(example, seed, config, masked);
  }
  out.masked_context = example.context_tokens;
  for (std::size_t p : masked) {
    out.masked_positions.push_back(p);
    out.original_tokens.push_back(example.context_tokens[p]);
    out.masked_context[p] = Vocabulary::kMask;
  }
  return out;
}

}  // namespace space3::corpus
