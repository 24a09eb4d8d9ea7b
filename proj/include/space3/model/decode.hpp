#pragma once

#include <cstddef>
#include <vector>

#include "space3/model/transformer.hpp"

namespace space3::model {

struct DecodeStrategy {
  bool beam = false;
  std::size_t beam_width = 1;

  static DecodeStrategy greedy() { return {false, 1}; }
  static DecodeStrategy beam_search(std::size_t width) { return {true, width}; }
};

/// Generates a response for the context of `input` (its response fields are
/// ignored). At most `max_len` tokens are emitted, counting [EOS]; the result
/// excludes [BOS] and [EOS]. Beam hypotheses are ranked by mean token
/// log-probability. Runs with dropout off.
std::vector<TokenId> decode_response(const Transformer& model, ad::ParameterStore& params,
                                     const ModelInput& input, DecodeStrategy strategy,
                                     std::size_t max_len);

}  // namespace space3::model
