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

// Tape-based reverse-mode differentiation over Matrix values.
//
// A Tape records every operation of one forward pass. Each recorded node keeps
// its value and, when any input requires a gradient, a closure that pushes the
// node's gradient to its inputs. Tape::backward walks the nodes in reverse
// creation order, which is a valid topological order by construction.
//
// Parameters live outside the tape in a ParameterStore; a parameter node on a
// tape aliases the stored value and accumulates straight into the stored
// gradient, so a tape can be dropped after backward().

#ifndef MRTTS_AUTODIFF_H_
#define MRTTS_AUTODIFF_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mrtts/matrix.h"

namespace mrtts::ad {

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
};

enum class Init { kZeros, kGlorotUniform, kUniformSmall };

// Named parameter arrays, iterated in name order so serialization and
// optimizer state are stable.
class ParameterStore {
 public:
  Parameter& create(const std::string& name, int rows, int cols, Init init,
                    std::mt19937_64& rng);
  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  std::vector<Parameter*> with_prefix(const std::string& prefix);

  void zero_grad();
  std::size_t scalar_count() const;

 private:
  std::map<std::string, std::unique_ptr<Parameter>> params_;
};

class Tape;

// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  int rows() const { return value().rows(); }
  int cols() const { return value().cols(); }
  double scalar() const { return value()[0]; }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  // Receives the node's accumulated gradient and its forward value.
  using Backward =
      std::function<void(Tape&, const Matrix& grad, const Matrix& value)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // Differentiable leaf not backed by a stored parameter.
  Var leaf(Matrix value);
  Var parameter(Parameter& p);

  // Records an op result. `backward` is dropped when no input needs a
  // gradient.
  Var record(Matrix value, std::span<const Var> inputs, Backward backward);
  Var record(Matrix value, std::initializer_list<Var> inputs,
             Backward backward) {
    return record(std::move(value), std::span<const Var>(inputs.begin(),
                                                          inputs.size()),
                  std::move(backward));
  }

  const Matrix& value(int id) const;
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  // Gradient accumulator for node `id`, zero-initialised on first access.
  Matrix& grad(int id);
  // Gradient of a node after backward(); empty if nothing reached it.
  const Matrix& grad_of(Var v) const;

  void backward(Var loss);

  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Parameter* param = nullptr;
    Matrix grad;
    bool requires_grad = false;
    Backward backward;
  };

  bool grad_enabled_;
  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }
inline bool Var::requires_grad() const { return tape_->requires_grad(id_); }

// ---- linear algebra -------------------------------------------------------

Var matmul(Var a, Var b);                 // [m x k] * [k x n]
Var add_row(Var a, Var row);              // a + row broadcast over rows
Var linear(Var x, Var w, Var b);          // x * w + b

// ---- elementwise ----------------------------------------------------------

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var one_minus(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var relu(Var a);
Var abs(Var a);
// log(max(a, floor)); zero gradient where a <= floor.
Var log_clamped(Var a, double floor);
// log(1 + exp(a)), computed without overflow.
Var softplus(Var a);
// sqrt(max(a, 0) + eps).
Var sqrt(Var a, double eps);
Var mul_const(Var a, const Matrix& m);    // a * m with m held constant

// Identity forward; backward multiplies the upstream gradient by -lambda.
Var gradient_reversal(Var a, double lambda);

// Identity forward; gradient is not propagated.
Var detach(Var a);

// ---- shape ----------------------------------------------------------------

Var concat_cols(std::span<const Var> parts);
Var concat_cols(std::initializer_list<Var> parts);
Var slice_cols(Var a, int begin, int end);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(Var a, int begin, int end);
Var gather_rows(Var a, std::span<const int> rows);
Var reshape(Var a, int rows, int cols);
Var transpose(Var a);
Var repeat_rows(Var a, int times);        // each row repeated `times` times

// ---- reductions -----------------------------------------------------------

Var sum_all(Var a);
Var mean_all(Var a);
Var row_dot(Var a, Var b);                // [m x n], [m x n] -> [m x 1]
Var mean_rows_per_item(Var a, int items); // [items*T x n] -> [items x n]

// ---- sequence ops ---------------------------------------------------------

// Rows of `x` are `items` consecutive blocks of `steps` frames. Produces, for
// every output frame, the concatenation of `kernel` input frames starting at
// t * stride - pad_left (zeros outside the item). Output has
// ceil(steps / stride) frames per item.
Var im2col(Var x, int items, int steps, int kernel, int stride, int pad_left);

// Row softmax restricted to entries where mask != 0; masked entries are 0.
Var masked_softmax_rows(Var a, const Matrix& mask);

// weights [items x n], memory [items*n x d] -> [items x d] with
// out[b] = sum_j weights[b, j] * memory[b*n + j].
Var attend(Var weights, Var memory);

}  // namespace mrtts::ad

#endif  // MRTTS_AUTODIFF_H_
