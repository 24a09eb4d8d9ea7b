#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace space3::ad {

using Matrix = Eigen::MatrixXd;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

enum class Init { kZeros, kOnes, kNormal };

/// Owns named parameters with stable addresses. Iteration order is insertion
/// order, which fixes the layout of checkpoints and optimizer state.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore& other);
  ParameterStore& operator=(const ParameterStore& other);
  ParameterStore(ParameterStore&&) noexcept = default;
  ParameterStore& operator=(ParameterStore&&) noexcept = default;

  Parameter& add(const std::string& name, Eigen::Index rows, Eigen::Index cols, Init init,
                 double stddev, std::mt19937_64& rng);
  Parameter& add(const std::string& name, Matrix value);

  bool contains(const std::string& name) const { return index_.count(name) > 0; }
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  Parameter& at(std::size_t i) { return *params_[i]; }
  const Parameter& at(std::size_t i) const { return *params_[i]; }

  /// Total number of scalar entries.
  std::size_t num_scalars() const;
  void zero_grad();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.cbegin(); }
  auto end() const { return params_.cend(); }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, Parameter*> index_;
};

}  // namespace space3::ad
