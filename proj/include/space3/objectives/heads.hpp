#pragma once

#include <cstdint>
#include <string>

#include "space3/autodiff/parameter.hpp"
#include "space3/autodiff/tape.hpp"

namespace space3::objectives {

namespace head_names {
inline const std::string kProjectionW = "proj.w";  // W1, H x H
inline const std::string kProjectionB = "proj.b";  // b1
inline const std::string kBowW = "bow.w";          // W2, H x |V|
inline const std::string kBowB = "bow.b";          // b2
}  // namespace head_names

/// Adds the projection and bag-of-words heads.
void init_heads(ad::ParameterStore& params, int hidden_dim, int vocab_size, double init_std,
                std::uint64_t seed);

/// Norm(h W1 + b1) row by row. Throws std::domain_error on a zero row.
ad::Var projection(ad::Tape& tape, ad::ParameterStore& params, ad::Var h);

/// log softmax(h W2 + b2) row by row.
ad::Var bow_log_probs(ad::Tape& tape, ad::ParameterStore& params, ad::Var h);

}  // namespace space3::objectives
