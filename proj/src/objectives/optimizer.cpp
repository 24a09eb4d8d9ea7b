#include "space3/objectives/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace space3::objectives {

namespace {
bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}
}  // namespace

bool decays(const std::string& name) {
  return !(ends_with(name, ".b") || ends_with(name, ".bias") || ends_with(name, ".gamma") ||
           ends_with(name, ".beta"));
}

AdamW::AdamW(AdamWConfig config, std::vector<std::string> trainable)
    : config_(config), names_(std::move(trainable)) {
  if (!(config_.learning_rate > 0)) throw std::invalid_argument("learning rate must be positive");
  m_.resize(names_.size());
  v_.resize(names_.size());
}

double AdamW::learning_rate_at(std::int64_t step) const {
  if (config_.warmup_steps <= 0 || step >= config_.warmup_steps) return config_.learning_rate;
  return config_.learning_rate * static_cast<double>(step) / static_cast<double>(config_.warmup_steps);
}

double AdamW::step(ad::ParameterStore& params) {
  ++t_;
  const double lr = learning_rate_at(t_);
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < names_.size(); ++i) {
    ad::Parameter& p = params.get(names_[i]);
    if (m_[i].size() == 0) {
      m_[i].setZero(p.value.rows(), p.value.cols());
      v_[i].setZero(p.value.rows(), p.value.cols());
    }
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * p.grad;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * p.grad.cwiseProduct(p.grad);
    if (decays(p.name)) p.value *= 1.0 - lr * config_.weight_decay;
    p.value.array() -= lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + config_.epsilon);
  }
  return lr;
}

ad::ParameterStore AdamW::export_state() const {
  ad::ParameterStore out;
  out.add("t", ad::Matrix::Constant(1, 1, static_cast<double>(t_)));
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (m_[i].size() == 0) continue;
    out.add("m/" + names_[i], m_[i]);
    out.add("v/" + names_[i], v_[i]);
  }
  return out;
}

void AdamW::import_state(const ad::ParameterStore& state) {
  t_ = static_cast<std::int64_t>(state.get("t").value(0, 0));
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (state.contains("m/" + names_[i])) {
      m_[i] = state.get("m/" + names_[i]).value;
      v_[i] = state.get("v/" + names_[i]).value;
    } else {
      m_[i].resize(0, 0);
      v_[i].resize(0, 0);
    }
  }
}

}  // namespace space3::objectives
