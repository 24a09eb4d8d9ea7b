#include "space3/objectives/losses.hpp"

#include <numeric>
#include <stdexcept>

namespace space3::objectives {

namespace {

ad::Var mean_nll(ad::Var logits, std::span<const TokenId> targets) {
  if (static_cast<std::size_t>(logits.rows()) != targets.size()) {
    throw std::invalid_argument("loss: logits rows and targets differ");
  }
  std::vector<int> rows(targets.size());
  std::iota(rows.begin(), rows.end(), 0);
  ad::Var picked = ad::pick_sum(ad::log_softmax_rows(logits), rows, targets);
  return ad::scale(picked, -1.0 / static_cast<double>(targets.size()));
}

ad::Var scaled_scores(ad::Var z, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw std::invalid_argument("temperature must be in (0, 1]");
  return ad::scale(ad::matmul_nt(z, z), 1.0 / tau);
}

}  // namespace

ad::Var span_mlm_loss(ad::Tape& tape, ad::Var logits, std::span<const TokenId> targets) {
  if (!logits.valid() || targets.empty()) return tape.constant(ad::Matrix::Zero(1, 1));
  return mean_nll(logits, targets);
}

ad::Var supervised_contrastive_loss(ad::Var z, const ad::Matrix& f, double tau,
                                    bool include_self) {
  const Eigen::Index n = z.rows();
  if (f.rows() != n || f.cols() != n) throw std::invalid_argument("f must be 2L x 2L");
  if (n < 2) throw std::invalid_argument("contrastive loss needs at least two samples");
  ad::Matrix w = f;
  if (!include_self) w.diagonal().setZero();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double total = w.row(i).sum();
    if (total > 0) {
      w.row(i) /= total;
    } else {
      w.row(i).setZero();
    }
  }
  ad::Var lp = ad::contrastive_log_prob(scaled_scores(z, tau));
  return ad::scale(ad::weighted_sum(lp, w), -1.0);
}

ad::Var self_supervised_contrastive_loss(ad::Var z, std::span<const int> pairing, double tau) {
  const Eigen::Index n = z.rows();
  if (static_cast<Eigen::Index>(pairing.size()) != n) {
    throw std::invalid_argument("pairing size must equal the batch");
  }
  ad::Matrix w = ad::Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int j = pairing[static_cast<std::size_t>(i)];
    if (j < 0 || j >= n || j == i) throw std::invalid_argument("invalid positive pairing");
    w(i, j) = 1.0;
  }
  ad::Var lp = ad::contrastive_log_prob(scaled_scores(z, tau));
  return ad::scale(ad::weighted_sum(lp, w), -1.0);
}

std::vector<int> dropout_pairing(std::size_t twice_l) {
  if (twice_l % 2 != 0) throw std::invalid_argument("duplicated batch must have even size");
  const std::size_t l = twice_l / 2;
  std::vector<int> p(twice_l);
  for (std::size_t i = 0; i < twice_l; ++i) p[i] = static_cast<int>(i < l ? i + l : i - l);
  return p;
}

ad::Var bow_loss(ad::Var log_probs, const std::vector<std::vector<TokenId>>& targets) {
  if (static_cast<std::size_t>(log_probs.rows()) != targets.size() || targets.empty()) {
    throw std::invalid_argument("bow_loss: one target multiset per row required");
  }
  std::vector<int> rows, cols;
  for (std::size_t r = 0; r < targets.size(); ++r) {
    for (TokenId t : targets[r]) {
      rows.push_back(static_cast<int>(r));
      cols.push_back(t);
    }
  }
  ad::Var picked = ad::pick_sum(log_probs, rows, cols);
  return ad::scale(picked, -1.0 / static_cast<double>(targets.size()));
}

ad::Var policy_semantic_loss(ad::Var h_o, ad::Var h_r, bool stop_gradient) {
  if (h_o.rows() != h_r.rows() || h_o.cols() != h_r.cols()) {
    throw std::invalid_argument("policy_semantic_loss: dimension mismatch");
  }
  ad::Var target = stop_gradient ? ad::detach(h_r) : h_r;
  return ad::scale(ad::sum_squares(ad::sub(h_o, target)), 1.0 / static_cast<double>(h_o.rows()));
}

ad::Var response_generation_loss(std::span<const ad::Var> logits,
                                 const std::vector<std::vector<TokenId>>& targets) {
  if (logits.size() != targets.size() || logits.empty()) {
    throw std::invalid_argument("response_generation_loss: one target sequence per example");
  }
  std::vector<ad::Var> per_example;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    per_example.push_back(ad::scale(mean_nll(logits[i], targets[i]),
                                    1.0 / static_cast<double>(logits.size())));
  }
  return ad::sum_all(per_example);
}

}  // namespace space3::objectives
