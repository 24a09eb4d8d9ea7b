#include "space3/objectives/heads.hpp"

#include <random>

namespace space3::objectives {

void init_heads(ad::ParameterStore& params, int hidden_dim, int vocab_size, double init_std,
                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  params.add(head_names::kProjectionW, hidden_dim, hidden_dim, ad::Init::kNormal, init_std, rng);
  params.add(head_names::kProjectionB, 1, hidden_dim, ad::Init::kZeros, 0, rng);
  params.add(head_names::kBowW, hidden_dim, vocab_size, ad::Init::kNormal, init_std, rng);
  params.add(head_names::kBowB, 1, vocab_size, ad::Init::kZeros, 0, rng);
}

ad::Var projection(ad::Tape& t, ad::ParameterStore& ps, ad::Var h) {
  ad::Var z = ad::add_row(ad::matmul(h, t.param(ps.get(head_names::kProjectionW))),
                          t.param(ps.get(head_names::kProjectionB)));
  return ad::l2_normalize_rows(z);
}

ad::Var bow_log_probs(ad::Tape& t, ad::ParameterStore& ps, ad::Var h) {
  ad::Var logits = ad::add_row(ad::matmul(h, t.param(ps.get(head_names::kBowW))),
                               t.param(ps.get(head_names::kBowB)));
  return ad::log_softmax_rows(logits);
}

}  // namespace space3::objectives
