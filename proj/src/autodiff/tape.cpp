#include "space3/autodiff/tape.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace space3::ad {

const Matrix& Var::value() const { return tape->value(*this); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw std::logic_error("scalar() on a non-scalar var");
  return v(0, 0);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back({std::move(value), {}, {}, nullptr, false});
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::param(Parameter& p) {
  for (auto& [ptr, id] : param_nodes_) {
    if (ptr == &p) return {this, id};
  }
  nodes_.push_back({p.value, {}, {}, &p, true});
  int id = static_cast<int>(nodes_.size() - 1);
  param_nodes_.emplace_back(&p, id);
  return {this, id};
}

Var Tape::record(Matrix value, std::span<const Var> inputs, Backward backward) {
  bool needs = false;
  for (const Var& v : inputs) needs = needs || requires_grad(v);
  nodes_.push_back({std::move(value), {}, needs ? std::move(backward) : Backward{}, nullptr, needs});
  return {this, static_cast<int>(nodes_.size() - 1)};
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

void Tape::accumulate(Var v, const Matrix& delta) {
  accumulate_with(v, [&](Matrix& g) { g += delta; });
}

void Tape::backward(Var root) {
  Node& r = nodes_[static_cast<std::size_t>(root.id)];
  if (r.value.size() != 1) throw std::logic_error("backward() needs a scalar root");
  if (!r.requires_grad) return;
  r.grad = Matrix::Ones(1, 1);
  for (int i = root.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, n.grad);
    if (n.param) n.param->grad += n.grad;
  }
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                " vs " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()));
  }
}

Matrix row_softmax_excluding_diag(const Matrix& s, Eigen::VectorXd& lse) {
  const Eigen::Index n = s.rows();
  Matrix p = Matrix::Zero(n, n);
  lse.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index l = 0; l < n; ++l) {
      if (l != i) mx = std::max(mx, s(i, l));
    }
    double z = 0;
    for (Eigen::Index l = 0; l < n; ++l) {
      if (l != i) z += std::exp(s(i, l) - mx);
    }
    lse(i) = mx + std::log(z);
    for (Eigen::Index l = 0; l < n; ++l) {
      if (l != i) p(i, l) = std::exp(s(i, l) - lse(i));
    }
  }
  return p;
}

}  // namespace

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  return a.tape->record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  return a.tape->record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate_with(b, [&](Matrix& gb) { gb -= g; });
  });
}

Var scale(Var a, double s) {
  return a.tape->record(a.value() * s, {a}, [a, s](Tape& t, const Matrix& g) {
    t.accumulate_with(a, [&](Matrix& ga) { ga += s * g; });
  });
}

Var add_row(Var a, Var row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw std::invalid_argument("add_row: row must be 1 x cols(a)");
  }
  Matrix out = a.value().rowwise() + row.value().row(0);
  return a.tape->record(std::move(out), {a, row}, [a, row](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate_with(row, [&](Matrix& gr) { gr += g.colwise().sum(); });
  });
}

Var sum_all(std::span<const Var> scalars) {
  if (scalars.empty()) throw std::invalid_argument("sum_all of nothing");
  double total = 0;
  for (const Var& v : scalars) total += v.scalar();
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  return scalars[0].tape->record(Matrix::Constant(1, 1, total), scalars,
                                 [inputs](Tape& t, const Matrix& g) {
                                   for (const Var& v : inputs) t.accumulate(v, g);
                                 });
}

Var detach(Var a) { return a.tape->constant(a.value()); }

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
  return a.tape->record(a.value() * b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate_with(a, [&](Matrix& ga) { ga.noalias() += g * b.value().transpose(); });
    t.accumulate_with(b, [&](Matrix& gb) { gb.noalias() += a.value().transpose() * g; });
  });
}

Var matmul_nt(Var a, Var b) {
  if (a.cols() != b.cols()) throw std::invalid_argument("matmul_nt: inner dimension mismatch");
  return a.tape->record(a.value() * b.value().transpose(), {a, b},
                        [a, b](Tape& t, const Matrix& g) {
                          t.accumulate_with(a, [&](Matrix& ga) { ga.noalias() += g * b.value(); });
                          t.accumulate_with(
                              b, [&](Matrix& gb) { gb.noalias() += g.transpose() * a.value(); });
                        });
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Var gelu(Var a) {
  constexpr double kC = kGeluC;
  constexpr double kA = kGeluA;
  const Matrix& x = a.value();
  Matrix th = (kC * (x.array() + kA * x.array().cube())).tanh().matrix();
  Matrix out = (0.5 * x.array() * (1.0 + th.array())).matrix();
  return a.tape->record(std::move(out), {a}, [a, th](Tape& t, const Matrix& g) {
    const auto& xa = a.value().array();
    auto d = 0.5 * (1.0 + th.array()) + 0.5 * xa * (1.0 - th.array().square()) * kGeluC *
                                            (1.0 + 3.0 * kGeluA * xa.square());
    t.accumulate_with(a, [&](Matrix& ga) { ga.array() += g.array() * d; });
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  const Matrix& xv = x.value();
  const Eigen::Index n = xv.rows(), h = xv.cols();
  if (gamma.rows() != 1 || gamma.cols() != h || beta.rows() != 1 || beta.cols() != h) {
    throw std::invalid_argument("layer_norm: gamma/beta must be 1 x H");
  }
  Matrix xhat(n, h);
  Eigen::VectorXd inv_std(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double mean = xv.row(i).mean();
    double var = (xv.row(i).array() - mean).square().mean();
    inv_std(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = (xv.row(i).array() - mean) * inv_std(i);
  }
  Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array()).matrix();
  out.rowwise() += beta.value().row(0);
  return x.tape->record(std::move(out), {x, gamma, beta},
                        [x, gamma, beta, xhat, inv_std](Tape& t, const Matrix& g) {
                          t.accumulate_with(gamma, [&](Matrix& gg) {
                            gg += (g.array() * xhat.array()).colwise().sum().matrix();
                          });
                          t.accumulate_with(beta, [&](Matrix& gb) { gb += g.colwise().sum(); });
                          t.accumulate_with(x, [&](Matrix& gx) {
                            Matrix dxhat =
                                (g.array().rowwise() * gamma.value().row(0).array()).matrix();
                            for (Eigen::Index i = 0; i < dxhat.rows(); ++i) {
                              double m1 = dxhat.row(i).mean();
                              double m2 = (dxhat.row(i).array() * xhat.row(i).array()).mean();
                              gx.row(i).array() += inv_std(i) * (dxhat.row(i).array() - m1 -
                                                                 xhat.row(i).array() * m2);
                            }
                          });
                        });
}

Var dropout(Var a, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) throw std::invalid_argument("dropout rate must be < 1");
  std::bernoulli_distribution keep(1.0 - rate);
  Matrix mask(a.rows(), a.cols());
  const double s = 1.0 / (1.0 - rate);
  for (Eigen::Index c = 0; c < mask.cols(); ++c) {
    for (Eigen::Index r = 0; r < mask.rows(); ++r) mask(r, c) = keep(rng) ? s : 0.0;
  }
  Matrix out = a.value().cwiseProduct(mask);
  return a.tape->record(std::move(out), {a}, [a, mask](Tape& t, const Matrix& g) {
    t.accumulate_with(a, [&](Matrix& ga) { ga += g.cwiseProduct(mask); });
  });
}

Var gather_rows(Var table, std::span<const int> ids) {
  const Matrix& tv = table.value();
  Matrix out(static_cast<Eigen::Index>(ids.size()), tv.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tv.rows()) {
      throw std::out_of_range("gather_rows: index " + std::to_string(ids[i]) +
                              " outside [0, " + std::to_string(tv.rows()) + ")");
    }
    out.row(static_cast<Eigen::Index>(i)) = tv.row(ids[i]);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return table.tape->record(std::move(out), {table}, [table, idx](Tape& t, const Matrix& g) {
    t.accumulate_with(table, [&](Matrix& gt) {
      for (std::size_t i = 0; i < idx.size(); ++i) {
        gt.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
      }
    });
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows of nothing");
  Eigen::Index rows = 0, cols = parts[0].cols();
  for (const Var& p : parts) {
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<Var> inputs(parts.begin(), parts.end());
  std::vector<Eigen::Index> offsets;
  Eigen::Index off = 0;
  for (const Var& p : parts) {
    offsets.push_back(off);
    out.middleRows(off, p.rows()) = p.value();
    off += p.rows();
  }
  return parts[0].tape->record(std::move(out), parts,
                               [inputs, offsets](Tape& t, const Matrix& g) {
                                 for (std::size_t i = 0; i < inputs.size(); ++i) {
                                   t.accumulate_with(inputs[i], [&](Matrix& gi) {
                                     gi += g.middleRows(offsets[i], gi.rows());
                                   });
                                 }
                               });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw std::out_of_range("slice_rows out of range");
  }
  return a.tape->record(a.value().middleRows(start, count), {a},
                        [a, start, count](Tape& t, const Matrix& g) {
                          t.accumulate_with(a, [&](Matrix& ga) { ga.middleRows(start, count) += g; });
                        });
}

Var attention(Var q, Var k, Var v, const BoolMatrix& visible, int num_heads) {
  const Matrix& Q = q.value();
  const Matrix& K = k.value();
  const Matrix& V = v.value();
  const Eigen::Index T = Q.rows(), H = Q.cols();
  if (K.rows() != T || V.rows() != T || K.cols() != H || V.cols() != H) {
    throw std::invalid_argument("attention: q, k, v shape mismatch");
  }
  if (visible.rows() != T || visible.cols() != T) {
    throw std::invalid_argument("attention: mask shape mismatch");
  }
  if (num_heads <= 0 || H % num_heads != 0) {
    throw std::invalid_argument("attention: hidden size not divisible by heads");
  }
  const Eigen::Index d = H / num_heads;
  const double scl = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<Matrix> probs(static_cast<std::size_t>(num_heads));
  Matrix out(T, H);
  for (int h = 0; h < num_heads; ++h) {
    Matrix s = Q.middleCols(h * d, d) * K.middleCols(h * d, d).transpose() * scl;
    Matrix& p = probs[static_cast<std::size_t>(h)];
    p = Matrix::Zero(T, T);
    for (Eigen::Index i = 0; i < T; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      bool any = false;
      for (Eigen::Index j = 0; j < T; ++j) {
        if (visible(i, j)) {
          // NaN scores propagate so callers can report divergence.
          mx = any ? std::max(mx, s(i, j)) : s(i, j);
          any = true;
        }
      }
      if (!any) throw std::invalid_argument("attention: row with no visible key");
      double z = 0;
      for (Eigen::Index j = 0; j < T; ++j) {
        if (visible(i, j)) {
          p(i, j) = std::exp(s(i, j) - mx);
          z += p(i, j);
        }
      }
      p.row(i) /= z;
    }
    out.middleCols(h * d, d).noalias() = p * V.middleCols(h * d, d);
  }
  return q.tape->record(
      std::move(out), {q, k, v}, [q, k, v, probs, d, scl](Tape& t, const Matrix& g) {
        const Matrix& Q = q.value();
        const Matrix& K = k.value();
        const Matrix& V = v.value();
        const Eigen::Index T = Q.rows();
        Matrix dq = Matrix::Zero(T, Q.cols()), dk = dq, dv = dq;
        for (std::size_t h = 0; h < probs.size(); ++h) {
          const Eigen::Index c0 = static_cast<Eigen::Index>(h) * d;
          const Matrix& p = probs[h];
          Matrix go = g.middleCols(c0, d);
          dv.middleCols(c0, d).noalias() += p.transpose() * go;
          Matrix dp = go * V.middleCols(c0, d).transpose();
          Eigen::VectorXd rs = (dp.array() * p.array()).rowwise().sum();
          Matrix ds = (p.array() * (dp.array().colwise() - rs.array())).matrix() * scl;
          dq.middleCols(c0, d).noalias() += ds * K.middleCols(c0, d);
          dk.middleCols(c0, d).noalias() += ds.transpose() * Q.middleCols(c0, d);
        }
        t.accumulate(q, dq);
        t.accumulate(k, dk);
        t.accumulate(v, dv);
      });
}

Var log_softmax_rows(Var a) {
  const Matrix& x = a.value();
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double mx = x.row(i).maxCoeff();
    double lse = mx + std::log((x.row(i).array() - mx).exp().sum());
    out.row(i) = x.row(i).array() - lse;
  }
  Matrix probs = out.array().exp().matrix();
  return a.tape->record(std::move(out), {a}, [a, probs](Tape& t, const Matrix& g) {
    Eigen::VectorXd gs = g.rowwise().sum();
    t.accumulate_with(a, [&](Matrix& ga) {
      ga += g - (probs.array().colwise() * gs.array()).matrix();
    });
  });
}

Var pick_sum(Var a, std::span<const int> rows, std::span<const int> cols) {
  if (rows.size() != cols.size()) throw std::invalid_argument("pick_sum: index length mismatch");
  const Matrix& x = a.value();
  double total = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= x.rows() || cols[i] < 0 || cols[i] >= x.cols()) {
      throw std::out_of_range("pick_sum index out of range");
    }
    total += x(rows[i], cols[i]);
  }
  std::vector<int> r(rows.begin(), rows.end()), c(cols.begin(), cols.end());
  return a.tape->record(Matrix::Constant(1, 1, total), {a}, [a, r, c](Tape& t, const Matrix& g) {
    t.accumulate_with(a, [&](Matrix& ga) {
      for (std::size_t i = 0; i < r.size(); ++i) ga(r[i], c[i]) += g(0, 0);
    });
  });
}

Var sum(Var a) {
  return a.tape->record(Matrix::Constant(1, 1, a.value().sum()), {a},
                        [a](Tape& t, const Matrix& g) {
                          t.accumulate_with(a, [&](Matrix& ga) { ga.array() += g(0, 0); });
                        });
}

Var sum_squares(Var a) {
  return a.tape->record(Matrix::Constant(1, 1, a.value().squaredNorm()), {a},
                        [a](Tape& t, const Matrix& g) {
                          t.accumulate_with(a, [&](Matrix& ga) { ga += 2.0 * g(0, 0) * a.value(); });
                        });
}

Var weighted_sum(Var a, const Matrix& weights) {
  require_same_shape(a.value(), weights, "weighted_sum");
  double total = a.value().cwiseProduct(weights).sum();
  return a.tape->record(Matrix::Constant(1, 1, total), {a},
                        [a, weights](Tape& t, const Matrix& g) {
                          t.accumulate_with(a, [&](Matrix& ga) { ga += g(0, 0) * weights; });
                        });
}

Var l2_normalize_rows(Var a) {
  const Matrix& x = a.value();
  Eigen::VectorXd norms = x.rowwise().norm();
  for (Eigen::Index i = 0; i < norms.size(); ++i) {
    if (!(norms(i) >= 1e-12)) {
      throw std::domain_error("l2_normalize_rows: zero-norm row " + std::to_string(i));
    }
  }
  Matrix y = (x.array().colwise() / norms.array()).matrix();
  return a.tape->record(y, {a}, [a, y, norms](Tape& t, const Matrix& g) {
    Eigen::VectorXd dots = (y.array() * g.array()).rowwise().sum();
    t.accumulate_with(a, [&](Matrix& ga) {
      ga += ((g - (y.array().colwise() * dots.array()).matrix()).array().colwise() /
             norms.array())
                .matrix();
    });
  });
}

Var contrastive_log_prob(Var scores) {
  const Matrix& s = scores.value();
  if (s.rows() != s.cols() || s.rows() < 2) {
    throw std::invalid_argument("contrastive_log_prob needs a square matrix with n >= 2");
  }
  Eigen::VectorXd lse;
  Matrix p = row_softmax_excluding_diag(s, lse);
  Matrix out = s.colwise() - lse;
  return scores.tape->record(std::move(out), {scores}, [scores, p](Tape& t, const Matrix& g) {
    Eigen::VectorXd gs = g.rowwise().sum();
    t.accumulate_with(scores, [&](Matrix& ga) {
      ga += g - (p.array().colwise() * gs.array()).matrix();
    });
  });
}

}  // namespace space3::ad
