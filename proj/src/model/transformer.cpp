#include "space3/model/transformer.hpp"

#include <random>
#include <stdexcept>

namespace space3::model {

namespace {

std::string layer_name(int l, const char* leaf) { return "layer" + std::to_string(l) + "." + leaf; }

ad::Var linear(ad::Tape& t, ad::ParameterStore& ps, ad::Var x, const std::string& prefix) {
  return ad::add_row(ad::matmul(x, t.param(ps.get(prefix + ".w"))), t.param(ps.get(prefix + ".b")));
}

ad::Var norm(ad::Tape& t, ad::ParameterStore& ps, ad::Var x, const std::string& prefix) {
  return ad::layer_norm(x, t.param(ps.get(prefix + ".gamma")), t.param(ps.get(prefix + ".beta")));
}

void check_aligned(std::size_t n, std::size_t roles, std::size_t turns, std::size_t pos,
                   const char* what) {
  if (roles != n || turns != n || pos != n) {
    throw std::invalid_argument(std::string("model input: misaligned ") + what + " ids");
  }
}

}  // namespace

ModelInput context_input(const corpus::TrainingExample& ex) {
  ModelInput in;
  in.context_tokens = ex.context_tokens;
  in.context_roles = ex.context_roles;
  in.context_turns = ex.context_turns;
  in.context_positions = ex.context_positions;
  return in;
}

ModelInput posterior_input(const corpus::TrainingExample& ex) {
  ModelInput in = context_input(ex);
  in.response_tokens = ex.response_tokens;
  in.response_roles = ex.response_roles;
  in.response_turns = ex.response_turns;
  in.response_positions = ex.response_positions;
  return in;
}

ModelInput generate_input(const corpus::TrainingExample& ex) {
  ModelInput in = posterior_input(ex);
  in.response_tokens.pop_back();
  in.response_roles.pop_back();
  in.response_turns.pop_back();
  in.response_positions.pop_back();
  return in;
}

ModelInput mlm_input(const corpus::MaskedExample& ex) {
  ModelInput in = context_input(ex.base);
  in.context_tokens = ex.masked_context;
  in.mlm_positions = ex.masked_positions;
  return in;
}

void append_response_token(ModelInput& input, TokenId token) {
  input.response_tokens.push_back(token);
  input.response_roles.push_back(corpus::kSystemRole);
  input.response_turns.push_back(0);
  input.response_positions.push_back(static_cast<int>(input.response_positions.size()));
}

Transformer::Transformer(ModelConfig config) : config_(config) { config_.validate(); }

void Transformer::init_parameters(ad::ParameterStore& ps, std::uint64_t seed) const {
  const ModelConfig& c = config_;
  std::mt19937_64 rng(seed);
  const double sd = c.init_std;
  using ad::Init;
  ps.add(names::kTokenEmbedding, c.vocab_size, c.hidden_dim, Init::kNormal, sd, rng);
  ps.add(names::kRoleEmbedding, 2, c.hidden_dim, Init::kNormal, sd, rng);
  ps.add(names::kTurnEmbedding, c.max_turns, c.hidden_dim, Init::kNormal, sd, rng);
  ps.add(names::kPositionEmbedding, c.max_positions, c.hidden_dim, Init::kNormal, sd, rng);
  ps.add(names::kUnderstandingPrompt, c.prompt_len_understanding, c.hidden_dim, Init::kNormal,
         c.prompt_init_std, rng);
  ps.add(names::kPolicyPrompt, c.prompt_len_policy, c.hidden_dim, Init::kNormal,
         c.prompt_init_std, rng);

  auto dense = [&](const std::string& prefix, int in, int out) {
    ps.add(prefix + ".w", in, out, Init::kNormal, sd, rng);
    ps.add(prefix + ".b", 1, out, Init::kZeros, 0, rng);
  };
  auto ln = [&](const std::string& prefix, int dim) {
    ps.add(prefix + ".gamma", 1, dim, Init::kOnes, 0, rng);
    ps.add(prefix + ".beta", 1, dim, Init::kZeros, 0, rng);
  };
  for (int l = 0; l < c.num_layers; ++l) {
    ln(layer_name(l, "ln1"), c.hidden_dim);
    dense(layer_name(l, "attn.q"), c.hidden_dim, c.hidden_dim);
    dense(layer_name(l, "attn.k"), c.hidden_dim, c.hidden_dim);
    dense(layer_name(l, "attn.v"), c.hidden_dim, c.hidden_dim);
    dense(layer_name(l, "attn.out"), c.hidden_dim, c.hidden_dim);
    ln(layer_name(l, "ln2"), c.hidden_dim);
    dense(layer_name(l, "ffn.in"), c.hidden_dim, c.ffn_dim);
    dense(layer_name(l, "ffn.out"), c.ffn_dim, c.hidden_dim);
  }
  ln("final_ln", c.hidden_dim);
  dense(names::kGenerationHeadPrefix + "dense", c.hidden_dim, c.hidden_dim);
  ln(names::kGenerationHeadPrefix + "ln", c.hidden_dim);
  ps.add(names::kGenerationHeadPrefix + "bias", 1, c.vocab_size, Init::kZeros, 0, rng);
}

SegmentLayout Transformer::layout_for(const ModelInput& in, Mode mode) const {
  return make_layout(mode, in.context_tokens.size(), in.response_tokens.size(),
                     static_cast<std::size_t>(config_.prompt_len_understanding),
                     static_cast<std::size_t>(config_.prompt_len_policy));
}

ad::Var Transformer::embed(ad::Tape& t, ad::ParameterStore& ps, const ModelInput& in,
                           const SegmentLayout& layout) const {
  check_aligned(in.context_tokens.size(), in.context_roles.size(), in.context_turns.size(),
                in.context_positions.size(), "context");
  check_aligned(in.response_tokens.size(), in.response_roles.size(), in.response_turns.size(),
                in.response_positions.size(), "response");

  auto text_rows = [&](const std::vector<TokenId>& tokens, const std::vector<int>& roles,
                       const std::vector<int>& turns, const std::vector<int>& positions) {
    std::vector<int> turn_ids(turns.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i] < 0 || tokens[i] >= config_.vocab_size) {
        throw std::out_of_range("token id " + std::to_string(tokens[i]) + " outside vocabulary");
      }
      if (roles[i] != corpus::kUserRole && roles[i] != corpus::kSystemRole) {
        throw std::out_of_range("role id " + std::to_string(roles[i]) + " invalid");
      }
      if (positions[i] < 0 || positions[i] >= config_.max_positions) {
        throw std::out_of_range("position id " + std::to_string(positions[i]) +
                                " >= max_positions " + std::to_string(config_.max_positions));
      }
      if (turns[i] < 0) throw std::out_of_range("negative turn id");
      turn_ids[i] = std::min(turns[i], config_.max_turns - 1);
    }
    ad::Var e = ad::gather_rows(t.param(ps.get(names::kTokenEmbedding)), tokens);
    e = ad::add(e, ad::gather_rows(t.param(ps.get(names::kRoleEmbedding)), roles));
    e = ad::add(e, ad::gather_rows(t.param(ps.get(names::kTurnEmbedding)), turn_ids));
    return ad::add(e, ad::gather_rows(t.param(ps.get(names::kPositionEmbedding)), positions));
  };

  std::vector<ad::Var> parts;
  for (const Segment& s : layout.segments) {
    switch (s.kind) {
      case SegmentKind::kContext:
        parts.push_back(text_rows(in.context_tokens, in.context_roles, in.context_turns,
                                  in.context_positions));
        break;
      case SegmentKind::kResponse:
        parts.push_back(text_rows(in.response_tokens, in.response_roles, in.response_turns,
                                  in.response_positions));
        break;
      case SegmentKind::kUnderstandingPrompt:
        parts.push_back(t.param(ps.get(names::kUnderstandingPrompt)));
        break;
      case SegmentKind::kPolicyPrompt:
        parts.push_back(t.param(ps.get(names::kPolicyPrompt)));
        break;
    }
  }
  return ad::concat_rows(parts);
}

ad::Var Transformer::lm_logits(ad::Tape& t, ad::ParameterStore& ps, ad::Var rows) const {
  const std::string& p = names::kGenerationHeadPrefix;
  ad::Var h = ad::gelu(linear(t, ps, rows, p + "dense"));
  h = norm(t, ps, h, p + "ln");
  return ad::add_row(ad::matmul_nt(h, t.param(ps.get(names::kTokenEmbedding))),
                     t.param(ps.get(p + "bias")));
}

ForwardOutput Transformer::forward(ad::Tape& t, ad::ParameterStore& ps, const ModelInput& in,
                                   Mode mode, const ForwardOptions& opt) const {
  if (mode != Mode::kMlm && !in.mlm_positions.empty()) {
    throw std::invalid_argument(std::string("forward: MLM positions given in ") + mode_name(mode));
  }
  ForwardOutput out;
  out.layout = layout_for(in, mode);
  const ad::BoolMatrix mask = build_attention_mask(out.layout);

  std::mt19937_64 rng(opt.dropout_seed);
  const double rate = opt.train ? config_.dropout_rate : 0.0;

  ad::Var x = ad::dropout(embed(t, ps, in, out.layout), rate, rng);
  for (int l = 0; l < config_.num_layers; ++l) {
    ad::Var h = norm(t, ps, x, layer_name(l, "ln1"));
    ad::Var q = linear(t, ps, h, layer_name(l, "attn.q"));
    ad::Var k = linear(t, ps, h, layer_name(l, "attn.k"));
    ad::Var v = linear(t, ps, h, layer_name(l, "attn.v"));
    ad::Var a = ad::attention(q, k, v, mask, config_.num_heads);
    a = linear(t, ps, a, layer_name(l, "attn.out"));
    x = ad::add(x, ad::dropout(a, rate, rng));

    h = norm(t, ps, x, layer_name(l, "ln2"));
    h = ad::gelu(linear(t, ps, h, layer_name(l, "ffn.in")));
    h = linear(t, ps, h, layer_name(l, "ffn.out"));
    x = ad::add(x, ad::dropout(h, rate, rng));
  }
  out.hidden = norm(t, ps, x, "final_ln");

  auto last_row = [&](SegmentKind kind) {
    const Segment& s = out.layout.segment(kind);
    return ad::slice_rows(out.hidden, static_cast<Eigen::Index>(s.begin + s.length - 1), 1);
  };
  switch (mode) {
    case Mode::kQuery:
      out.h_q = last_row(SegmentKind::kUnderstandingPrompt);
      break;
    case Mode::kResponsePosterior:
      out.h_r = last_row(SegmentKind::kUnderstandingPrompt);
      break;
    case Mode::kPolicyPrior:
    case Mode::kGenerate:
      out.h_q = last_row(SegmentKind::kUnderstandingPrompt);
      out.h_o = last_row(SegmentKind::kPolicyPrompt);
      break;
    case Mode::kMlm:
      break;
  }
  if (mode == Mode::kGenerate) {
    const Segment& r = out.layout.segment(SegmentKind::kResponse);
    out.lm_logits = lm_logits(
        t, ps,
        ad::slice_rows(out.hidden, static_cast<Eigen::Index>(r.begin),
                       static_cast<Eigen::Index>(r.length)));
  }
  if (mode == Mode::kMlm && !in.mlm_positions.empty()) {
    std::vector<int> rows;
    for (std::size_t p : in.mlm_positions) {
      if (p >= in.context_tokens.size()) throw std::out_of_range("MLM position outside context");
      rows.push_back(static_cast<int>(p));
    }
    out.mlm_logits = lm_logits(t, ps, ad::gather_rows(out.hidden, rows));
  }
  return out;
}

}  // namespace space3::model
