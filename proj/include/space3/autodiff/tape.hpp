#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "space3/autodiff/parameter.hpp"

// Reverse-mode automatic differentiation over dense double matrices.
//
// A Tape records every operation in creation order; backward() walks it in
// reverse. Row-vector convention throughout: a sequence of T hidden states is
// a T x H matrix and a linear layer computes x * W + b.

namespace space3::ad {

using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

class Tape;

struct Var {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  double scalar() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool valid() const { return tape != nullptr && id >= 0; }
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Leaf bound to a parameter; repeated calls return the same node, and
  /// backward() accumulates into Parameter::grad.
  Var param(Parameter& p);

  /// Seeds d(root)/d(root) = 1 (root must be 1 x 1) and propagates.
  void backward(Var root);

  const Matrix& value(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
  bool requires_grad(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Op plumbing, used by the free functions below.
  using Backward = std::function<void(Tape&, const Matrix& grad)>;
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Matrix value, std::span<const Var> inputs, Backward backward);
  /// Adds `delta` into the gradient buffer of `v` when it requires grad.
  void accumulate(Var v, const Matrix& delta);
  template <typename F>
  void accumulate_with(Var v, F&& fn) {
    Node& n = nodes_[static_cast<std::size_t>(v.id)];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) n.grad.setZero(n.value.rows(), n.value.cols());
    fn(n.grad);
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  std::vector<std::pair<Parameter*, int>> param_nodes_;
};

// Elementwise / structural ops.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
Var add_row(Var a, Var row);  // broadcast a 1 x n row over every row of a
Var sum_all(std::span<const Var> scalars);  // sum of 1 x 1 vars
Var detach(Var a);

Var matmul(Var a, Var b);
Var matmul_nt(Var a, Var b);  // a * b^T

Var gelu(Var a);
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
Var dropout(Var a, double rate, std::mt19937_64& rng);

Var gather_rows(Var table, std::span<const int> ids);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);

/// Multi-head scaled dot-product attention on projected q, k, v (T x H each).
/// visible(i, j) states whether query i may attend key j; every row must have
/// at least one visible key.
Var attention(Var q, Var k, Var v, const BoolMatrix& visible, int num_heads);

Var log_softmax_rows(Var a);
/// Sum of a(rows[i], cols[i]).
Var pick_sum(Var a, std::span<const int> rows, std::span<const int> cols);
Var sum(Var a);
Var sum_squares(Var a);
/// sum(W .* a) for a constant weight matrix W.
Var weighted_sum(Var a, const Matrix& weights);

/// Each row divided by its Euclidean norm; throws std::domain_error when a
/// row norm is below 1e-12.
Var l2_normalize_rows(Var a);

/// out(i, j) = S(i, j) - log sum_{l != i} exp(S(i, l)) for square S: the
/// log-probability of candidate j for anchor i with the anchor itself removed
/// from the normalizer.
Var contrastive_log_prob(Var scores);

}  // namespace space3::ad
