#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "space3/autodiff/parameter.hpp"
#include "space3/autodiff/tape.hpp"
#include "space3/corpus/example.hpp"
#include "space3/model/config.hpp"
#include "space3/model/layout.hpp"

namespace space3::model {

using corpus::TokenId;

/// Id sequences for one forward pass. Prompt segments carry no ids; they are
/// inserted by the model according to the layout.
struct ModelInput {
  std::vector<TokenId> context_tokens;
  std::vector<int> context_roles;
  std::vector<int> context_turns;
  std::vector<int> context_positions;

  std::vector<TokenId> response_tokens;
  std::vector<int> response_roles;
  std::vector<int> response_turns;
  std::vector<int> response_positions;

  // Context positions whose MLM logits are wanted (MLM mode).
  std::vector<std::size_t> mlm_positions;
};

/// Context only, for QUERY and POLICY_PRIOR.
ModelInput context_input(const corpus::TrainingExample& ex);
/// Context plus the full [BOS] r [EOS] block, for RESPONSE_POSTERIOR.
ModelInput posterior_input(const corpus::TrainingExample& ex);
/// Context plus the teacher-forced prefix [BOS] r_1..r_N, for GENERATE. The
/// logits at response row n predict response_tokens[n + 1].
ModelInput generate_input(const corpus::TrainingExample& ex);
/// Masked context with the masked positions flagged, for MLM.
ModelInput mlm_input(const corpus::MaskedExample& ex);

/// Appends one generated token to a GENERATE input (role system, turn 0, next
/// position).
void append_response_token(ModelInput& input, TokenId token);

struct ForwardOptions {
  bool train = false;  // dropout on
  std::uint64_t dropout_seed = 0;
};

struct ForwardOutput {
  SegmentLayout layout;
  ad::Var hidden;      // T x H, after the final layer norm
  ad::Var mlm_logits;  // |mlm_positions| x |V|, MLM mode
  ad::Var lm_logits;   // N x |V| over response rows, GENERATE mode
  ad::Var h_q;         // state at p^u_A (QUERY, POLICY_PRIOR, GENERATE)
  ad::Var h_r;         // state at p^u_A in RESPONSE_POSTERIOR
  ad::Var h_o;         // state at p^o_B (POLICY_PRIOR, GENERATE)
};

namespace names {
inline const std::string kTokenEmbedding = "embed.token";
inline const std::string kRoleEmbedding = "embed.role";
inline const std::string kTurnEmbedding = "embed.turn";
inline const std::string kPositionEmbedding = "embed.position";
inline const std::string kUnderstandingPrompt = "prompt.understanding";
inline const std::string kPolicyPrompt = "prompt.policy";
inline const std::string kGenerationHeadPrefix = "lm_head.";
}  // namespace names

/// Pre-LN transformer shared by all stages. The LM output reuses the token
/// embedding matrix after a dense + GELU + layer-norm transform.
class Transformer {
 public:
  explicit Transformer(ModelConfig config);

  const ModelConfig& config() const { return config_; }

  /// Adds every backbone parameter to `params` with stable names.
  void init_parameters(ad::ParameterStore& params, std::uint64_t seed) const;

  /// Per-position sum of token, role, turn and position embeddings; prompt rows
  /// hold the prompt vectors alone. Throws std::out_of_range on a position id
  /// >= max_positions or a token id outside the vocabulary.
  ad::Var embed(ad::Tape& tape, ad::ParameterStore& params, const ModelInput& input,
                const SegmentLayout& layout) const;

  /// Throws std::invalid_argument when the input does not fit the mode.
  ForwardOutput forward(ad::Tape& tape, ad::ParameterStore& params, const ModelInput& input,
                        Mode mode, const ForwardOptions& options = {}) const;

  /// LM logits for rows of final hidden states.
  ad::Var lm_logits(ad::Tape& tape, ad::ParameterStore& params, ad::Var hidden_rows) const;

  SegmentLayout layout_for(const ModelInput& input, Mode mode) const;

 private:
  ModelConfig config_;
};

}  // namespace space3::model
