// Copyright (c) 2026 The mrtts Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mrtts/autodiff.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mrtts/kernels/kernels.h"

namespace mrtts::ad {

using kernels::active;

// ---- ParameterStore -------------------------------------------------------

Parameter& ParameterStore::create(const std::string& name, int rows, int cols,
                                  Init init, std::mt19937_64& rng) {
  if (params_.contains(name)) {
    throw std::logic_error("duplicate parameter: " + name);
  }
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Matrix(rows, cols);
  p->grad = Matrix(rows, cols);
  double limit = 0.0;
  switch (init) {
    case Init::kZeros:
      break;
    case Init::kGlorotUniform:
      limit = std::sqrt(6.0 / (rows + cols));
      break;
    case Init::kUniformSmall:
      limit = 0.05;
      break;
  }
  if (limit > 0.0) {
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& v : p->value.values()) v = dist(rng);
  }
  Parameter& ref = *p;
  params_.emplace(name, std::move(p));
  return ref;
}

Parameter& ParameterStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no parameter: " + name);
  return *it->second;
}

const Parameter& ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("no parameter: " + name);
  return *it->second;
}

bool ParameterStore::contains(const std::string& name) const {
  return params_.contains(name);
}

std::vector<Parameter*> ParameterStore::all() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (auto& [_, p] : params_) out.push_back(p.get());
  return out;
}

std::vector<const Parameter*> ParameterStore::all() const {
  std::vector<const Parameter*> out;
  out.reserve(params_.size());
  for (const auto& [_, p] : params_) out.push_back(p.get());
  return out;
}

std::vector<Parameter*> ParameterStore::with_prefix(const std::string& prefix) {
  std::vector<Parameter*> out;
  for (auto& [name, p] : params_) {
    if (name.starts_with(prefix)) out.push_back(p.get());
  }
  return out;
}

void ParameterStore::zero_grad() {
  for (auto& [_, p] : params_) p->grad.fill(0.0);
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += p->value.size();
  return n;
}

// ---- Tape -----------------------------------------------------------------

Var Tape::constant(Matrix value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::leaf(Matrix value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.requires_grad = grad_enabled_;
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::parameter(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) {
    return Var(this, it->second);
  }
  Node& n = nodes_.emplace_back();
  n.param = &p;
  n.requires_grad = grad_enabled_;
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_.emplace(&p, id);
  return Var(this, id);
}

Var Tape::record(Matrix value, std::span<const Var> inputs,
                 Backward backward) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  if (grad_enabled_) {
    for (const Var& in : inputs) {
      if (nodes_[in.id()].requires_grad) {
        n.requires_grad = true;
        break;
      }
    }
  }
  if (n.requires_grad) n.backward = std::move(backward);
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

const Matrix& Tape::value(int id) const {
  const Node& n = nodes_[id];
  return n.param != nullptr ? n.param->value : n.value;
}

Matrix& Tape::grad(int id) {
  Node& n = nodes_[id];
  if (n.param != nullptr) {
    if (!n.param->grad.same_shape(n.param->value)) {
      n.param->grad = Matrix(n.param->value.rows(), n.param->value.cols());
    }
    return n.param->grad;
  }
  if (n.grad.empty() && !n.value.empty()) {
    n.grad = Matrix(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

const Matrix& Tape::grad_of(Var v) const {
  const Node& n = nodes_[v.id()];
  return n.param != nullptr ? n.param->grad : n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw std::logic_error("loss from another tape");
  if (loss.value().size() != 1) {
    throw std::logic_error("backward() needs a scalar loss");
  }
  if (!nodes_[loss.id()].requires_grad) return;
  grad(loss.id())[0] += 1.0;
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
    n.backward(*this, n.grad, n.value);
    n.grad = Matrix();
  }
}

// ---- helpers --------------------------------------------------------------

namespace {

void check(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

template <typename Fn>
Var unary(Var a, Fn&& fn, Tape::Backward bw) {
  const Matrix& x = a.value();
  Matrix y(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fn(x[i]);
  return a.tape()->record(std::move(y), {a}, std::move(bw));
}

}  // namespace

// ---- linear algebra -------------------------------------------------------

Var matmul(Var a, Var b) {
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  check(A.cols() == B.rows(), "matmul: inner dimensions differ");
  const int m = A.rows(), k = A.cols(), n = B.cols();
  Matrix C(m, n);
  active().gemm_nn(m, n, k, A.data(), B.data(), C.data(), false);
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(
      std::move(C), {a, b}, [ia, ib, m, n, k](Tape& t, const Matrix& g,
                                              const Matrix&) {
        if (t.requires_grad(ia)) {
          active().gemm_nt(m, k, n, g.data(), t.value(ib).data(),
                           t.grad(ia).data(), true);
        }
        if (t.requires_grad(ib)) {
          active().gemm_tn(k, n, m, t.value(ia).data(), g.data(),
                           t.grad(ib).data(), true);
        }
      });
}

Var add_row(Var a, Var row) {
  const Matrix& A = a.value();
  const Matrix& r = row.value();
  check(r.rows() == 1 && r.cols() == A.cols(), "add_row: shape mismatch");
  Matrix C = A;
  for (int i = 0; i < C.rows(); ++i) {
    active().axpy(1.0, r.data(), C.row(i).data(), C.cols());
  }
  const int ia = a.id(), ir = row.id();
  return a.tape()->record(
      std::move(C), {a, row}, [ia, ir](Tape& t, const Matrix& g,
                                       const Matrix&) {
        if (t.requires_grad(ia)) {
          active().axpy(1.0, g.data(), t.grad(ia).data(), g.size());
        }
        if (t.requires_grad(ir)) {
          Matrix& gr = t.grad(ir);
          for (int i = 0; i < g.rows(); ++i) {
            active().axpy(1.0, g.row(i).data(), gr.data(), g.cols());
          }
        }
      });
}

Var linear(Var x, Var w, Var b) { return add_row(matmul(x, w), b); }

// ---- elementwise ----------------------------------------------------------

Var add(Var a, Var b) {
  check(a.value().same_shape(b.value()), "add: shape mismatch");
  Matrix C = a.value();
  active().axpy(1.0, b.value().data(), C.data(), C.size());
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(std::move(C), {a, b},
                          [ia, ib](Tape& t, const Matrix& g, const Matrix&) {
                            for (int id : {ia, ib}) {
                              if (t.requires_grad(id)) {
                                active().axpy(1.0, g.data(),
                                              t.grad(id).data(), g.size());
                              }
                            }
                          });
}

Var sub(Var a, Var b) {
  check(a.value().same_shape(b.value()), "sub: shape mismatch");
  Matrix C = a.value();
  active().axpy(-1.0, b.value().data(), C.data(), C.size());
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(
      std::move(C), {a, b}, [ia, ib](Tape& t, const Matrix& g, const Matrix&) {
        if (t.requires_grad(ia)) {
          active().axpy(1.0, g.data(), t.grad(ia).data(), g.size());
        }
        if (t.requires_grad(ib)) {
          active().axpy(-1.0, g.data(), t.grad(ib).data(), g.size());
        }
      });
}

Var mul(Var a, Var b) {
  check(a.value().same_shape(b.value()), "mul: shape mismatch");
  const Matrix& A = a.value();
  Matrix C(A.rows(), A.cols());
  active().mul(A.data(), b.value().data(), C.data(), C.size());
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(
      std::move(C), {a, b}, [ia, ib](Tape& t, const Matrix& g, const Matrix&) {
        if (t.requires_grad(ia)) {
          active().mul_add(g.data(), t.value(ib).data(), t.grad(ia).data(),
                           g.size());
        }
        if (t.requires_grad(ib)) {
          active().mul_add(g.data(), t.value(ia).data(), t.grad(ib).data(),
                           g.size());
        }
      });
}

Var mul_const(Var a, const Matrix& m) {
  check(a.value().same_shape(m), "mul_const: shape mismatch");
  Matrix C(m.rows(), m.cols());
  active().mul(a.value().data(), m.data(), C.data(), C.size());
  const int ia = a.id();
  return a.tape()->record(std::move(C), {a},
                          [ia, m](Tape& t, const Matrix& g, const Matrix&) {
                            active().mul_add(g.data(), m.data(),
                                             t.grad(ia).data(), g.size());
                          });
}

Var scale(Var a, double s) {
  Matrix C = a.value();
  for (double& v : C.values()) v *= s;
  const int ia = a.id();
  return a.tape()->record(std::move(C), {a},
                          [ia, s](Tape& t, const Matrix& g, const Matrix&) {
                            active().axpy(s, g.data(), t.grad(ia).data(),
                                          g.size());
                          });
}

Var add_scalar(Var a, double s) {
  Matrix C = a.value();
  for (double& v : C.values()) v += s;
  const int ia = a.id();
  return a.tape()->record(std::move(C), {a},
                          [ia](Tape& t, const Matrix& g, const Matrix&) {
                            active().axpy(1.0, g.data(), t.grad(ia).data(),
                                          g.size());
                          });
}

Var one_minus(Var a) { return add_scalar(scale(a, -1.0), 1.0); }

Var tanh(Var a) {
  const int ia = a.id();
  return unary(
      a, [](double x) { return std::tanh(x); },
      [ia](Tape& t, const Matrix& g, const Matrix& y) {
        Matrix& ga = t.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i] * (1.0 - y[i] * y[i]);
        }
      });
}

Var sigmoid(Var a) {
  const int ia = a.id();
  return unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [ia](Tape& t, const Matrix& g, const Matrix& y) {
        Matrix& ga = t.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i] * y[i] * (1.0 - y[i]);
        }
      });
}

Var relu(Var a) {
  const int ia = a.id();
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [ia](Tape& t, const Matrix& g, const Matrix& y) {
        Matrix& ga = t.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (y[i] > 0.0) ga[i] += g[i];
        }
      });
}

Var log_clamped(Var a, double floor) {
  const int ia = a.id();
  return unary(
      a, [floor](double x) { return std::log(std::max(x, floor)); },
      [ia, floor](Tape& t, const Matrix& g, const Matrix&) {
        const Matrix& x = t.value(ia);
        Matrix& ga = t.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (x[i] > floor) ga[i] += g[i] / x[i];
        }
      });
}

Var sqrt(Var a, double eps) {
  const int ia = a.id();
  return unary(
      a, [eps](double x) { return std::sqrt(std::max(x, 0.0) + eps); },
      [ia](Tape& t, const Matrix& g, const Matrix& y) {
        Matrix& ga = t.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += 0.5 * g[i] / y[i];
      });
}

Var softplus(Var a) {
  const int ia = a.id();
  return unary(
      a,
      [](double x) {
        return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
      },
      [ia](Tape& t, const Matrix& g, const Matrix&) {
        const Matrix& x = t.value(ia);
        Matrix& ga = t.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) {
          ga[i] += g[i] / (1.0 + std::exp(-x[i]));
        }
      });
}

Var abs(Var a) {
  const int ia = a.id();
  return unary(
      a, [](double x) { return std::fabs(x); },
      [ia](Tape& t, const Matrix& g, const Matrix&) {
        const Matrix& x = t.value(ia);
        Matrix& ga = t.grad(ia);
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (x[i] > 0.0) {
            ga[i] += g[i];
          } else if (x[i] < 0.0) {
            ga[i] -= g[i];
          }
        }
      });
}

Var gradient_reversal(Var a, double lambda) {
  if (!(lambda >= 0.0)) {
    throw std::invalid_argument("gradient_reversal: lambda must be >= 0");
  }
  const int ia = a.id();
  return a.tape()->record(a.value(), {a},
                          [ia, lambda](Tape& t, const Matrix& g,
                                       const Matrix&) {
                            active().axpy(-lambda, g.data(),
                                          t.grad(ia).data(), g.size());
                          });
}

Var detach(Var a) { return a.tape()->constant(a.value()); }

// ---- shape ----------------------------------------------------------------

Var concat_cols(std::span<const Var> parts) {
  check(!parts.empty(), "concat_cols: no inputs");
  const int rows = parts[0].rows();
  int cols = 0;
  for (const Var& p : parts) {
    check(p.rows() == rows, "concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix C(rows, cols);
  std::vector<std::pair<int, int>> layout;  // (node id, column offset)
  int offset = 0;
  for (const Var& p : parts) {
    const Matrix& v = p.value();
    for (int r = 0; r < rows; ++r) {
      std::copy(v.row(r).begin(), v.row(r).end(), C.row(r).begin() + offset);
    }
    layout.emplace_back(p.id(), offset);
    offset += v.cols();
  }
  return parts[0].tape()->record(
      std::move(C), parts,
      [layout](Tape& t, const Matrix& g, const Matrix&) {
        for (const auto& [id, off] : layout) {
          if (!t.requires_grad(id)) continue;
          Matrix& gp = t.grad(id);
          for (int r = 0; r < g.rows(); ++r) {
            active().axpy(1.0, g.row(r).data() + off, gp.row(r).data(),
                          gp.cols());
          }
        }
      });
}

Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

Var slice_cols(Var a, int begin, int end) {
  const Matrix& A = a.value();
  check(0 <= begin && begin <= end && end <= A.cols(), "slice_cols: range");
  Matrix C(A.rows(), end - begin);
  for (int r = 0; r < A.rows(); ++r) {
    std::copy(A.row(r).begin() + begin, A.row(r).begin() + end,
              C.row(r).begin());
  }
  const int ia = a.id();
  return a.tape()->record(
      std::move(C), {a}, [ia, begin](Tape& t, const Matrix& g, const Matrix&) {
        Matrix& ga = t.grad(ia);
        for (int r = 0; r < g.rows(); ++r) {
          active().axpy(1.0, g.row(r).data(), ga.row(r).data() + begin,
                        g.cols());
        }
      });
}

Var concat_rows(std::span<const Var> parts) {
  check(!parts.empty(), "concat_rows: no inputs");
  const int cols = parts[0].cols();
  int rows = 0;
  for (const Var& p : parts) {
    check(p.cols() == cols, "concat_rows: column counts differ");
    rows += p.rows();
  }
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(rows) * cols);
  std::vector<std::pair<int, std::size_t>> layout;
  for (const Var& p : parts) {
    layout.emplace_back(p.id(), data.size());
    data.insert(data.end(), p.value().storage().begin(),
                p.value().storage().end());
  }
  return parts[0].tape()->record(
      Matrix(rows, cols, std::move(data)), parts,
      [layout](Tape& t, const Matrix& g, const Matrix&) {
        for (const auto& [id, off] : layout) {
          if (!t.requires_grad(id)) continue;
          Matrix& gp = t.grad(id);
          active().axpy(1.0, g.data() + off, gp.data(), gp.size());
        }
      });
}

Var slice_rows(Var a, int begin, int end) {
  const Matrix& A = a.value();
  check(0 <= begin && begin <= end && end <= A.rows(), "slice_rows: range");
  const std::size_t off = static_cast<std::size_t>(begin) * A.cols();
  std::vector<double> data(A.data() + off,
                           A.data() + static_cast<std::size_t>(end) * A.cols());
  const int ia = a.id();
  return a.tape()->record(
      Matrix(end - begin, A.cols(), std::move(data)), {a},
      [ia, off](Tape& t, const Matrix& g, const Matrix&) {
        active().axpy(1.0, g.data(), t.grad(ia).data() + off, g.size());
      });
}

Var gather_rows(Var a, std::span<const int> rows) {
  const Matrix& A = a.value();
  Matrix C(static_cast<int>(rows.size()), A.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    check(rows[i] >= 0 && rows[i] < A.rows(), "gather_rows: index");
    std::copy(A.row(rows[i]).begin(), A.row(rows[i]).end(),
              C.row(static_cast<int>(i)).begin());
  }
  const int ia = a.id();
  std::vector<int> idx(rows.begin(), rows.end());
  return a.tape()->record(
      std::move(C), {a},
      [ia, idx = std::move(idx)](Tape& t, const Matrix& g, const Matrix&) {
        Matrix& ga = t.grad(ia);
        for (std::size_t i = 0; i < idx.size(); ++i) {
          active().axpy(1.0, g.row(static_cast<int>(i)).data(),
                        ga.row(idx[i]).data(), g.cols());
        }
      });
}

Var reshape(Var a, int rows, int cols) {
  Matrix C = a.value();
  check(static_cast<std::size_t>(rows) * cols == C.size(), "reshape: size");
  C.reshape(rows, cols);
  const int ia = a.id();
  return a.tape()->record(std::move(C), {a},
                          [ia](Tape& t, const Matrix& g, const Matrix&) {
                            active().axpy(1.0, g.data(), t.grad(ia).data(),
                                          g.size());
                          });
}

Var transpose(Var a) {
  const Matrix& A = a.value();
  Matrix C(A.cols(), A.rows());
  for (int r = 0; r < A.rows(); ++r) {
    for (int c = 0; c < A.cols(); ++c) C(c, r) = A(r, c);
  }
  const int ia = a.id();
  return a.tape()->record(std::move(C), {a},
                          [ia](Tape& t, const Matrix& g, const Matrix&) {
                            Matrix& ga = t.grad(ia);
                            for (int r = 0; r < g.rows(); ++r) {
                              for (int c = 0; c < g.cols(); ++c) {
                                ga(c, r) += g(r, c);
                              }
                            }
                          });
}

Var repeat_rows(Var a, int times) {
  const Matrix& A = a.value();
  Matrix C(A.rows() * times, A.cols());
  for (int r = 0; r < A.rows(); ++r) {
    for (int k = 0; k < times; ++k) {
      std::copy(A.row(r).begin(), A.row(r).end(), C.row(r * times + k).begin());
    }
  }
  const int ia = a.id();
  return a.tape()->record(
      std::move(C), {a}, [ia, times](Tape& t, const Matrix& g, const Matrix&) {
        Matrix& ga = t.grad(ia);
        for (int r = 0; r < ga.rows(); ++r) {
          for (int k = 0; k < times; ++k) {
            active().axpy(1.0, g.row(r * times + k).data(), ga.row(r).data(),
                          ga.cols());
          }
        }
      });
}

// ---- reductions -----------------------------------------------------------

Var sum_all(Var a) {
  const Matrix& A = a.value();
  Matrix C(1, 1, active().sum(A.data(), A.size()));
  const int ia = a.id();
  return a.tape()->record(std::move(C), {a},
                          [ia](Tape& t, const Matrix& g, const Matrix&) {
                            Matrix& ga = t.grad(ia);
                            for (double& v : ga.values()) v += g[0];
                          });
}

Var mean_all(Var a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum_all(a), n > 0 ? 1.0 / n : 0.0);
}

Var row_dot(Var a, Var b) {
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  check(A.same_shape(B), "row_dot: shape mismatch");
  Matrix C(A.rows(), 1);
  for (int r = 0; r < A.rows(); ++r) {
    C[r] = active().dot(A.row(r).data(), B.row(r).data(), A.cols());
  }
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(
      std::move(C), {a, b}, [ia, ib](Tape& t, const Matrix& g, const Matrix&) {
        if (t.requires_grad(ia)) {
          const Matrix& Bv = t.value(ib);
          Matrix& ga = t.grad(ia);
          for (int r = 0; r < g.rows(); ++r) {
            active().axpy(g[r], Bv.row(r).data(), ga.row(r).data(), Bv.cols());
          }
        }
        if (t.requires_grad(ib)) {
          const Matrix& Av = t.value(ia);
          Matrix& gb = t.grad(ib);
          for (int r = 0; r < g.rows(); ++r) {
            active().axpy(g[r], Av.row(r).data(), gb.row(r).data(), Av.cols());
          }
        }
      });
}

Var mean_rows_per_item(Var a, int items) {
  const Matrix& A = a.value();
  check(items > 0 && A.rows() % items == 0, "mean_rows_per_item: layout");
  const int steps = A.rows() / items;
  Matrix C(items, A.cols());
  const double inv = 1.0 / steps;
  for (int b = 0; b < items; ++b) {
    for (int s = 0; s < steps; ++s) {
      active().axpy(inv, A.row(b * steps + s).data(), C.row(b).data(),
                    A.cols());
    }
  }
  const int ia = a.id();
  return a.tape()->record(
      std::move(C), {a},
      [ia, steps, inv](Tape& t, const Matrix& g, const Matrix&) {
        Matrix& ga = t.grad(ia);
        for (int b = 0; b < g.rows(); ++b) {
          for (int s = 0; s < steps; ++s) {
            active().axpy(inv, g.row(b).data(), ga.row(b * steps + s).data(),
                          g.cols());
          }
        }
      });
}

// ---- sequence ops ---------------------------------------------------------

Var im2col(Var x, int items, int steps, int kernel, int stride, int pad_left) {
  const Matrix& X = x.value();
  check(items > 0 && steps > 0 && X.rows() == items * steps,
        "im2col: layout");
  check(kernel >= 1 && stride >= 1, "im2col: kernel/stride");
  const int ch = X.cols();
  const int out_steps = (steps + stride - 1) / stride;
  Matrix C(items * out_steps, kernel * ch);
  for (int b = 0; b < items; ++b) {
    for (int to = 0; to < out_steps; ++to) {
      double* dst = C.row(b * out_steps + to).data();
      for (int k = 0; k < kernel; ++k) {
        const int ti = to * stride + k - pad_left;
        if (ti < 0 || ti >= steps) continue;
        const double* src = X.row(b * steps + ti).data();
        std::copy(src, src + ch, dst + k * ch);
      }
    }
  }
  const int ix = x.id();
  return x.tape()->record(
      std::move(C), {x},
      [=](Tape& t, const Matrix& g, const Matrix&) {
        Matrix& gx = t.grad(ix);
        for (int b = 0; b < items; ++b) {
          for (int to = 0; to < out_steps; ++to) {
            const double* src = g.row(b * out_steps + to).data();
            for (int k = 0; k < kernel; ++k) {
              const int ti = to * stride + k - pad_left;
              if (ti < 0 || ti >= steps) continue;
              active().axpy(1.0, src + k * ch, gx.row(b * steps + ti).data(),
                            ch);
            }
          }
        }
      });
}

Var masked_softmax_rows(Var a, const Matrix& mask) {
  const Matrix& A = a.value();
  check(A.same_shape(mask), "masked_softmax_rows: mask shape");
  Matrix P(A.rows(), A.cols());
  for (int r = 0; r < A.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < A.cols(); ++c) {
      if (mask(r, c) != 0.0) mx = std::max(mx, A(r, c));
    }
    if (!std::isfinite(mx)) continue;  // fully masked row stays zero
    double z = 0.0;
    for (int c = 0; c < A.cols(); ++c) {
      if (mask(r, c) != 0.0) {
        P(r, c) = std::exp(A(r, c) - mx);
        z += P(r, c);
      }
    }
    for (int c = 0; c < A.cols(); ++c) P(r, c) /= z;
  }
  const int ia = a.id();
  return a.tape()->record(
      std::move(P), {a}, [ia](Tape& t, const Matrix& g, const Matrix& p) {
        Matrix& ga = t.grad(ia);
        for (int r = 0; r < g.rows(); ++r) {
          const double s =
              active().dot(g.row(r).data(), p.row(r).data(), g.cols());
          for (int c = 0; c < g.cols(); ++c) {
            ga(r, c) += p(r, c) * (g(r, c) - s);
          }
        }
      });
}

Var attend(Var weights, Var memory) {
  const Matrix& W = weights.value();
  const Matrix& M = memory.value();
  const int items = W.rows(), n = W.cols(), d = M.cols();
  check(M.rows() == items * n, "attend: memory layout");
  Matrix C(items, d);
  for (int b = 0; b < items; ++b) {
    // [1 x n] * [n x d] block product
    active().gemm_nn(1, d, n, W.row(b).data(), M.row(b * n).data(),
                     C.row(b).data(), false);
  }
  const int iw = weights.id(), im = memory.id();
  return weights.tape()->record(
      std::move(C), {weights, memory},
      [iw, im, items, n, d](Tape& t, const Matrix& g, const Matrix&) {
        if (t.requires_grad(iw)) {
          const Matrix& Mv = t.value(im);
          Matrix& gw = t.grad(iw);
          for (int b = 0; b < items; ++b) {
            active().gemm_nt(1, n, d, g.row(b).data(), Mv.row(b * n).data(),
                             gw.row(b).data(), true);
          }
        }
        if (t.requires_grad(im)) {
          const Matrix& Wv = t.value(iw);
          Matrix& gm = t.grad(im);
          for (int b = 0; b < items; ++b) {
            active().gemm_tn(n, d, 1, Wv.row(b).data(), g.row(b).data(),
                             gm.row(b * n).data(), true);
          }
        }
      });
}

}  // namespace mrtts::ad
