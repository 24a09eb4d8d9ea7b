#include "space3/model/decode.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace space3::model {

namespace {

using corpus::Vocabulary;

Eigen::VectorXd next_log_probs(const Transformer& model, ad::ParameterStore& params,
                               const ModelInput& prefix) {
  ad::Tape tape;
  ForwardOutput out = model.forward(tape, params, prefix, Mode::kGenerate);
  const ad::Matrix& logits = out.lm_logits.value();
  Eigen::VectorXd row = logits.row(logits.rows() - 1).transpose();
  const double mx = row.maxCoeff();
  const double lse = mx + std::log((row.array() - mx).exp().sum());
  return row.array() - lse;
}

ModelInput start_input(const ModelInput& input) {
  ModelInput in = input;
  in.response_tokens.clear();
  in.response_roles.clear();
  in.response_turns.clear();
  in.response_positions.clear();
  in.mlm_positions.clear();
  append_response_token(in, Vocabulary::kBos);
  return in;
}

struct Hypothesis {
  ModelInput input;
  std::vector<TokenId> tokens;  // emitted, may end with EOS
  double log_prob = 0;
  double mean() const { return log_prob / static_cast<double>(tokens.size()); }
};

std::vector<TokenId> strip_eos(std::vector<TokenId> tokens) {
  if (!tokens.empty() && tokens.back() == Vocabulary::kEos) tokens.pop_back();
  return tokens;
}

std::vector<TokenId> greedy(const Transformer& model, ad::ParameterStore& params,
                            const ModelInput& input, std::size_t max_len) {
  ModelInput in = start_input(input);
  std::vector<TokenId> out;
  for (std::size_t step = 0; step < max_len; ++step) {
    Eigen::VectorXd lp = next_log_probs(model, params, in);
    Eigen::Index best = 0;
    lp.maxCoeff(&best);
    auto tok = static_cast<TokenId>(best);
    if (tok == Vocabulary::kEos) break;
    out.push_back(tok);
    append_response_token(in, tok);
  }
  return out;
}

}  // namespace

std::vector<TokenId> decode_response(const Transformer& model, ad::ParameterStore& params,
                                     const ModelInput& input, DecodeStrategy strategy,
                                     std::size_t max_len) {
  if (strategy.beam_width == 0) throw std::invalid_argument("beam width must be >= 1");
  if (max_len == 0) return {};
  if (!strategy.beam) return greedy(model, params, input, max_len);

  const std::size_t width = strategy.beam_width;
  std::vector<Hypothesis> alive{{start_input(input), {}, 0.0}};
  std::vector<Hypothesis> finished;
  bool hit_cap = true;
  for (std::size_t step = 0; step < max_len; ++step) {
    std::vector<Hypothesis> candidates;
    for (const Hypothesis& h : alive) {
      Eigen::VectorXd lp = next_log_probs(model, params, h.input);
      std::vector<int> order(static_cast<std::size_t>(lp.size()));
      std::iota(order.begin(), order.end(), 0);
      const std::size_t k = std::min(width, order.size());
      std::partial_sort(order.begin(), order.begin() + static_cast<long>(k), order.end(),
                        [&](int a, int b) { return lp(a) > lp(b) || (lp(a) == lp(b) && a < b); });
      for (std::size_t i = 0; i < k; ++i) {
        Hypothesis c = h;
        c.tokens.push_back(order[i]);
        c.log_prob += lp(order[i]);
        candidates.push_back(std::move(c));
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Hypothesis& a, const Hypothesis& b) { return a.mean() > b.mean(); });
    std::vector<Hypothesis> next;
    for (Hypothesis& c : candidates) {
      if (next.size() == width) break;
      if (c.tokens.back() == Vocabulary::kEos) {
        finished.push_back(std::move(c));
      } else {
        append_response_token(c.input, c.tokens.back());
        next.push_back(std::move(c));
      }
    }
    alive = std::move(next);
    if (finished.size() >= width || alive.empty()) {
      hit_cap = false;
      break;
    }
  }
  std::vector<Hypothesis> pool = std::move(finished);
  if (hit_cap) {
    for (Hypothesis& h : alive) pool.push_back(std::move(h));
  }
  auto best = std::max_element(pool.begin(), pool.end(), [](const Hypothesis& a, const Hypothesis& b) {
    return a.mean() < b.mean();
  });
  return strip_eos(best->tokens);
}

}  // namespace space3::model
