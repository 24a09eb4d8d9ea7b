#include "space3/autodiff/parameter.hpp"

#include <stdexcept>

namespace space3::ad {

ParameterStore::ParameterStore(const ParameterStore& other) { *this = other; }

ParameterStore& ParameterStore::operator=(const ParameterStore& other) {
  if (this == &other) return *this;
  params_.clear();
  index_.clear();
  for (const auto& p : other.params_) {
    params_.push_back(std::make_unique<Parameter>(*p));
    index_[p->name] = params_.back().get();
  }
  return *this;
}

Parameter& ParameterStore::add(const std::string& name, Matrix value) {
  if (index_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = std::move(value);
  p->zero_grad();
  params_.push_back(std::move(p));
  index_[name] = params_.back().get();
  return *params_.back();
}

Parameter& ParameterStore::add(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                               Init init, double stddev, std::mt19937_64& rng) {
  Matrix value(rows, cols);
  switch (init) {
    case Init::kZeros: value.setZero(); break;
    case Init::kOnes: value.setOnes(); break;
    case Init::kNormal: {
      std::normal_distribution<double> dist(0.0, stddev);
      // Column-major fill order is part of the seeded-init contract.
      for (Eigen::Index c = 0; c < cols; ++c) {
        for (Eigen::Index r = 0; r < rows; ++r) value(r, c) = dist(rng);
      }
      break;
    }
  }
  return add(name, std::move(value));
}

Parameter& ParameterStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
  return *it->second;
}

const Parameter& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
  return *it->second;
}

std::size_t ParameterStore::num_scalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

}  // namespace space3::ad
