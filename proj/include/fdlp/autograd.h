// Copyright 2026 The fdlp-dereverb Authors.
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


#ifndef FDLP_AUTOGRAD_H_
#define FDLP_AUTOGRAD_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace fdlp {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);

// Plain dense tensor used for parameters and optimizer state.
struct Tensor {
  Shape shape;
  std::vector<double> values;

  Tensor() = default;
  Tensor(Shape s, double fill = 0.0);
  Tensor(Shape s, std::vector<double> v);
  std::size_t size() const { return values.size(); }
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

namespace ag {

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape
// lives.
class Var {
 public:
  Var() = default;
  const std::vector<double>& value() const;
  const std::vector<double>& grad() const;
  const Shape& shape() const;
  std::size_t size() const { return value().size(); }
  bool requires_grad() const;
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Records operations in creation order; backward() replays them in reverse.
class Tape {
 public:
  struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;
    bool requires_grad = false;
    std::function<void()> backward;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(std::vector<double> value, Shape shape);
  Var constant(const Tensor& t) { return constant(t.values, t.shape); }
  Var parameter(std::vector<double> value, Shape shape);
  Var parameter(const Tensor& t) { return parameter(t.values, t.shape); }

  // Seeds d(loss)/d(loss) = 1 and propagates. loss must hold one element.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  Node& node(std::size_t id) { return *nodes_[id]; }
  const Node& node(std::size_t id) const { return *nodes_[id]; }

  // Used by op implementations. The closure reads this node's grad and adds
  // into its inputs' grads.
  Var record(std::vector<double> value, Shape shape, bool requires_grad,
             std::function<void()> backward);
  std::vector<double>& grad_of(Var v);

 private:
  std::vector<std::unique_ptr<Node>> nodes_;
};

// Elementwise.
Var add(Var a, Var b);
Var scale(Var a, double c);
Var tanh(Var a);
Var exp(Var a);
Var log_floor(Var a, double floor);
Var detach(Var a);
Var reshape(Var a, Shape shape);

// L * tanh(min(z, 0) / L): non-positive, saturating at -L, slope 1 at 0.
Var log_gain_clamp(Var z, double limit);

// x [Cin, Q, N], w [Cout, Cin, K] (K odd), b [Cout] -> [Cout, Q, N].
// Zero-padded "same" correlation along the last axis, shared across bands.
Var conv_time(Var x, Var w, Var b);

// x [C, Q, N], w [Q, Q], b [Q] -> y[c, q, n] = b[q] + sum_p w[q, p] x[c, p, n].
Var band_mix(Var x, Var w, Var b);

// env [Q, N] -> [T, Q], T = floor((N - K) / hop) + 1, weighted sums with a
// fixed kernel at stride hop.
Var strided_integrate(Var env, std::span<const double> kernel,
                      std::size_t hop);

// f [T, Q] -> [T, (left + right + 1) * Q], edge frames replicated.
Var splice(Var f, std::size_t left, std::size_t right);

// x [T, D] -> (x - shift[d]) * gain[d]; shift and gain are constants.
Var column_affine(Var x, std::span<const double> shift,
                  std::span<const double> gain);

// x [T, D], w [S, D], b [S] -> [T, S].
Var linear(Var x, Var w, Var b);

// Scalar losses.
Var mse(Var a, Var b);
Var spectral_correlation(Var x);  // x [Q, N], rows are band series
Var cross_entropy(Var logits, std::span<const int> labels);

}  // namespace ag

// Reference values of the scalar losses without a tape.
double spectral_correlation_value(std::span<const double> x, std::size_t rows,
                                  std::size_t cols);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}
  void step(std::vector<Tensor>& params,
            const std::vector<std::vector<double>>& grads);
  std::size_t steps() const { return t_; }

 private:
  AdamConfig config_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace fdlp

#endif  // FDLP_AUTOGRAD_H_
