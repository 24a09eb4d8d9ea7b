#pragma once

#include <span>
#include <vector>

#include "space3/autodiff/parameter.hpp"
#include "space3/autodiff/tape.hpp"
#include "space3/corpus/vocabulary.hpp"

namespace space3::objectives {

using corpus::TokenId;

/// Mean over rows of -log softmax(logits)[row, target]. `logits` holds the
/// masked positions of a whole batch stacked; an invalid Var or zero rows
/// gives 0.
ad::Var span_mlm_loss(ad::Tape& tape, ad::Var logits, std::span<const TokenId> targets);

/// Tree-weighted contrastive loss over 2L unit rows of z. Anchor i weighs
/// candidate j by f(i,j) / sum_{v != i} f(i,v); the log-probability uses the
/// normalizer over l != i. Summed over anchors. With include_self the j = i
/// term also enters both the outer sum and the weight normalization.
ad::Var supervised_contrastive_loss(ad::Var z, const ad::Matrix& f, double tau,
                                    bool include_self = false);

/// -sum_i log p(i+ | i) with positives given by `pairing` (pairing[i] = i+).
ad::Var self_supervised_contrastive_loss(ad::Var z, std::span<const int> pairing, double tau);

/// Indicator pairing i <-> i + L for a batch of 2L.
std::vector<int> dropout_pairing(std::size_t twice_l);

/// Row-wise bag-of-words loss -sum_m log H(row)[target_m], averaged over rows.
ad::Var bow_loss(ad::Var log_probs, const std::vector<std::vector<TokenId>>& targets);

/// Mean over rows of ||h_o - h_r||^2. With stop_gradient, no gradient reaches
/// h_r.
ad::Var policy_semantic_loss(ad::Var h_o, ad::Var h_r, bool stop_gradient = false);

/// Per example: mean over steps of -log p(target_n); then averaged over the
/// batch.
ad::Var response_generation_loss(std::span<const ad::Var> logits,
                                 const std::vector<std::vector<TokenId>>& targets);

}  // namespace space3::objectives
