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


#include "fdlp/autograd.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fdlp/error.h"
#include "fdlp/matrix.h"

namespace fdlp {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

Tensor::Tensor(Shape s, double fill)
    : shape(std::move(s)), values(shape_size(shape), fill) {}

Tensor::Tensor(Shape s, std::vector<double> v)
    : shape(std::move(s)), values(std::move(v)) {
  if (values.size() != shape_size(shape))
    throw InvalidInput("Tensor: value count does not match shape");
}

namespace ag {

const std::vector<double>& Var::value() const {
  return tape_->node(id_).value;
}
const std::vector<double>& Var::grad() const { return tape_->node(id_).grad; }
const Shape& Var::shape() const { return tape_->node(id_).shape; }
bool Var::requires_grad() const { return tape_->node(id_).requires_grad; }

Var Tape::record(std::vector<double> value, Shape shape, bool requires_grad,
                 std::function<void()> backward) {
  if (value.size() != shape_size(shape))
    throw InvalidInput("autograd: value count does not match shape");
  auto node = std::make_unique<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  if (requires_grad) node->backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(std::vector<double> value, Shape shape) {
  return record(std::move(value), std::move(shape), false, nullptr);
}

Var Tape::parameter(std::vector<double> value, Shape shape) {
  return record(std::move(value), std::move(shape), true, nullptr);
}

std::vector<double>& Tape::grad_of(Var v) {
  Node& n = node(v.id());
  if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

void Tape::backward(Var loss) {
  if (loss.tape() != this) throw InvalidInput("backward: foreign variable");
  if (loss.size() != 1) throw InvalidInput("backward: loss must be scalar");
  for (auto& n : nodes_)
    if (n->requires_grad) n->grad.assign(n->value.size(), 0.0);
  if (!node(loss.id()).requires_grad) return;
  node(loss.id()).grad[0] = 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = *nodes_[i];
    if (n.requires_grad && n.backward) n.backward();
  }
}

namespace {

Tape* tape_of(Var a) {
  if (a.tape() == nullptr) throw InvalidInput("autograd: empty variable");
  return a.tape();
}

Tape* tape_of(Var a, Var b) {
  Tape* t = tape_of(a);
  if (b.tape() != t) throw InvalidInput("autograd: variables on different tapes");
  return t;
}

void require_rank(Var a, std::size_t rank, const char* op) {
  if (a.shape().size() != rank)
    throw InvalidInput(std::string(op) + ": expected rank " +
                       std::to_string(rank) + " input");
}

Var unary(Var a, std::vector<double> out,
          std::function<void(const std::vector<double>& g,
                             std::vector<double>& ga)>
              accumulate) {
  Tape* t = tape_of(a);
  const std::size_t id = t->size();
  return t->record(std::move(out), a.shape(), a.requires_grad(),
                   [t, id, a, accumulate] {
                     accumulate(t->node(id).grad, t->grad_of(a));
                   });
}

}  // namespace

Var add(Var a, Var b) {
  Tape* t = tape_of(a, b);
  if (a.shape() != b.shape()) throw InvalidInput("add: shape mismatch");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = a.value()[i] + b.value()[i];
  const std::size_t id = t->size();
  return t->record(std::move(out), a.shape(),
                   a.requires_grad() || b.requires_grad(), [t, id, a, b] {
                     const auto& g = t->node(id).grad;
                     for (Var v : {a, b}) {
                       if (!v.requires_grad()) continue;
                       auto& gv = t->grad_of(v);
                       for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
                     }
                   });
}

Var scale(Var a, double c) {
  std::vector<double> out(a.value());
  for (double& v : out) v *= c;
  return unary(a, std::move(out), [c](const auto& g, auto& ga) {
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += c * g[i];
  });
}

Var tanh(Var a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(a.value()[i]);
  std::vector<double> y = out;
  return unary(a, std::move(out), [y = std::move(y)](const auto& g, auto& ga) {
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var exp(Var a) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(a.value()[i]);
  std::vector<double> y = out;
  return unary(a, std::move(out), [y = std::move(y)](const auto& g, auto& ga) {
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
  });
}

Var log_floor(Var a, double floor) {
  const std::vector<double>& x = a.value();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::log(std::max(x[i], floor));
  return unary(a, std::move(out), [x, floor](const auto& g, auto& ga) {
    for (std::size_t i = 0; i < g.size(); ++i)
      if (x[i] > floor) ga[i] += g[i] / x[i];
  });
}

Var detach(Var a) {
  return tape_of(a)->constant(a.value(), a.shape());
}

Var reshape(Var a, Shape shape) {
  Tape* t = tape_of(a);
  if (shape_size(shape) != a.size()) throw InvalidInput("reshape: size mismatch");
  const std::size_t id = t->size();
  return t->record(a.value(), std::move(shape), a.requires_grad(), [t, id, a] {
    const auto& g = t->node(id).grad;
    auto& ga = t->grad_of(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var log_gain_clamp(Var z, double limit) {
  if (!(limit > 0.0)) throw InvalidInput("log_gain_clamp: limit must be > 0");
  const std::vector<double>& x = z.value();
  std::vector<double> out(x.size());
  std::vector<double> slope(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0.0) {
      const double th = std::tanh(x[i] / limit);
      out[i] = limit * th;
      slope[i] = 1.0 - th * th;
    }
  }
  return unary(z, std::move(out),
               [slope = std::move(slope)](const auto& g, auto& ga) {
                 for (std::size_t i = 0; i < g.size(); ++i)
                   ga[i] += g[i] * slope[i];
               });
}

Var conv_time(Var x, Var w, Var b) {
  Tape* t = tape_of(x, w);
  tape_of(x, b);
  require_rank(x, 3, "conv_time");
  require_rank(w, 3, "conv_time");
  const std::size_t cin = x.shape()[0], nq = x.shape()[1], n = x.shape()[2];
  const std::size_t cout = w.shape()[0], k = w.shape()[2];
  if (w.shape()[1] != cin || k % 2 == 0 || b.size() != cout)
    throw InvalidInput("conv_time: incompatible weight shapes");
  const long half = static_cast<long>(k / 2);
  const long len = static_cast<long>(n);

  // Valid output range for tap j: n + j - half in [0, len).
  auto range = [half, len](std::size_t j, long& lo, long& hi) {
    const long off = static_cast<long>(j) - half;
    lo = std::max(0L, -off);
    hi = std::min(len, len - off);
  };

  const auto& xv = x.value();
  const auto& wv = w.value();
  std::vector<double> out(cout * nq * n);
  for (std::size_t co = 0; co < cout; ++co) {
    for (std::size_t q = 0; q < nq; ++q) {
      double* y = out.data() + (co * nq + q) * n;
      std::fill(y, y + n, b.value()[co]);
      for (std::size_t ci = 0; ci < cin; ++ci) {
        const double* xr = xv.data() + (ci * nq + q) * n;
        const double* wr = wv.data() + (co * cin + ci) * k;
        for (std::size_t j = 0; j < k; ++j) {
          long lo, hi;
          range(j, lo, hi);
          const double wj = wr[j];
          const double* xs = xr + (static_cast<long>(j) - half);
          for (long i = lo; i < hi; ++i) y[i] += wj * xs[i];
        }
      }
    }
  }
  const std::size_t id = t->size();
  const bool rg = x.requires_grad() || w.requires_grad() || b.requires_grad();
  return t->record(
      std::move(out), {cout, nq, n}, rg,
      [=] {
        const auto& g = t->node(id).grad;
        const auto& xv = x.value();
        const auto& wv = w.value();
        if (b.requires_grad()) {
          auto& gb = t->grad_of(b);
          for (std::size_t co = 0; co < cout; ++co)
            for (std::size_t i = 0; i < nq * n; ++i)
              gb[co] += g[co * nq * n + i];
        }
        double* gw = w.requires_grad() ? t->grad_of(w).data() : nullptr;
        double* gx = x.requires_grad() ? t->grad_of(x).data() : nullptr;
        for (std::size_t co = 0; co < cout; ++co) {
          for (std::size_t q = 0; q < nq; ++q) {
            const double* gy = g.data() + (co * nq + q) * n;
            for (std::size_t ci = 0; ci < cin; ++ci) {
              const double* xr = xv.data() + (ci * nq + q) * n;
              const double* wr = wv.data() + (co * cin + ci) * k;
              for (std::size_t j = 0; j < k; ++j) {
                long lo, hi;
                range(j, lo, hi);
                const long off = static_cast<long>(j) - half;
                if (gw) {
                  const double* xs = xr + off;
                  double acc = 0.0;
                  for (long i = lo; i < hi; ++i) acc += gy[i] * xs[i];
                  gw[(co * cin + ci) * k + j] += acc;
                }
                if (gx) {
                  double* gxs = gx + (ci * nq + q) * n + off;
                  const double wj = wr[j];
                  for (long i = lo; i < hi; ++i) gxs[i] += wj * gy[i];
                }
              }
            }
          }
        }
      });
}

Var band_mix(Var x, Var w, Var b) {
  Tape* t = tape_of(x, w);
  tape_of(x, b);
  require_rank(x, 3, "band_mix");
  const std::size_t c = x.shape()[0], nq = x.shape()[1], n = x.shape()[2];
  if (w.shape() != Shape{nq, nq} || b.size() != nq)
    throw InvalidInput("band_mix: incompatible weight shapes");
  const auto& xv = x.value();
  const auto& wv = w.value();
  std::vector<double> out(c * nq * n);
  for (std::size_t ch = 0; ch < c; ++ch)
    for (std::size_t q = 0; q < nq; ++q) {
      double* y = out.data() + (ch * nq + q) * n;
      std::fill(y, y + n, b.value()[q]);
      for (std::size_t p = 0; p < nq; ++p) {
        const double wqp = wv[q * nq + p];
        const double* xr = xv.data() + (ch * nq + p) * n;
        for (std::size_t i = 0; i < n; ++i) y[i] += wqp * xr[i];
      }
    }
  const std::size_t id = t->size();
  const bool rg = x.requires_grad() || w.requires_grad() || b.requires_grad();
  return t->record(std::move(out), {c, nq, n}, rg, [=] {
    const auto& g = t->node(id).grad;
    const auto& xv = x.value();
    const auto& wv = w.value();
    double* gw = w.requires_grad() ? t->grad_of(w).data() : nullptr;
    double* gb = b.requires_grad() ? t->grad_of(b).data() : nullptr;
    double* gx = x.requires_grad() ? t->grad_of(x).data() : nullptr;
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t q = 0; q < nq; ++q) {
        const double* gy = g.data() + (ch * nq + q) * n;
        if (gb)
          for (std::size_t i = 0; i < n; ++i) gb[q] += gy[i];
        for (std::size_t p = 0; p < nq; ++p) {
          const double* xr = xv.data() + (ch * nq + p) * n;
          if (gw) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) acc += gy[i] * xr[i];
            gw[q * nq + p] += acc;
          }
          if (gx) {
            double* gxr = gx + (ch * nq + p) * n;
            const double wqp = wv[q * nq + p];
            for (std::size_t i = 0; i < n; ++i) gxr[i] += wqp * gy[i];
          }
        }
      }
  });
}

Var strided_integrate(Var env, std::span<const double> kernel,
                      std::size_t hop) {
  Tape* t = tape_of(env);
  require_rank(env, 2, "strided_integrate");
  const std::size_t nq = env.shape()[0], n = env.shape()[1];
  const std::size_t k = kernel.size();
  if (k == 0 || hop == 0 || n < k)
    throw InvalidInput("strided_integrate: envelope shorter than kernel");
  const std::size_t frames = (n - k) / hop + 1;
  std::vector<double> w(kernel.begin(), kernel.end());
  const auto& x = env.value();
  std::vector<double> out(frames * nq);
  for (std::size_t m = 0; m < frames; ++m)
    for (std::size_t q = 0; q < nq; ++q) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) acc += w[j] * x[q * n + m * hop + j];
      out[m * nq + q] = acc;
    }
  const std::size_t id = t->size();
  return t->record(std::move(out), {frames, nq}, env.requires_grad(),
                   [=, w = std::move(w)] {
                     const auto& g = t->node(id).grad;
                     auto& gx = t->grad_of(env);
                     for (std::size_t m = 0; m < frames; ++m)
                       for (std::size_t q = 0; q < nq; ++q) {
                         const double gm = g[m * nq + q];
                         for (std::size_t j = 0; j < k; ++j)
                           gx[q * n + m * hop + j] += w[j] * gm;
                       }
                   });
}

Var splice(Var f, std::size_t left, std::size_t right) {
  Tape* t = tape_of(f);
  require_rank(f, 2, "splice");
  const std::size_t frames = f.shape()[0], nq = f.shape()[1];
  if (frames == 0) throw InvalidInput("splice: no frames");
  const std::size_t ctx = left + right + 1;
  auto source = [=](std::size_t m, std::size_t c) {
    const long s = static_cast<long>(m) + static_cast<long>(c) -
                   static_cast<long>(left);
    return static_cast<std::size_t>(
        std::clamp(s, 0L, static_cast<long>(frames) - 1));
  };
  const auto& x = f.value();
  std::vector<double> out(frames * ctx * nq);
  for (std::size_t m = 0; m < frames; ++m)
    for (std::size_t c = 0; c < ctx; ++c)
      std::copy_n(x.data() + source(m, c) * nq, nq,
                  out.data() + (m * ctx + c) * nq);
  const std::size_t id = t->size();
  return t->record(std::move(out), {frames, ctx * nq}, f.requires_grad(), [=] {
    const auto& g = t->node(id).grad;
    auto& gx = t->grad_of(f);
    for (std::size_t m = 0; m < frames; ++m)
      for (std::size_t c = 0; c < ctx; ++c) {
        const double* gs = g.data() + (m * ctx + c) * nq;
        double* gd = gx.data() + source(m, c) * nq;
        for (std::size_t q = 0; q < nq; ++q) gd[q] += gs[q];
      }
  });
}

Var column_affine(Var x, std::span<const double> shift,
                  std::span<const double> gain) {
  require_rank(x, 2, "column_affine");
  const std::size_t rows = x.shape()[0], d = x.shape()[1];
  if (shift.size() != d || gain.size() != d)
    throw InvalidInput("column_affine: statistics do not match width");
  std::vector<double> gv(gain.begin(), gain.end());
  std::vector<double> out(x.value());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < d; ++c)
      out[r * d + c] = (out[r * d + c] - shift[c]) * gv[c];
  return unary(x, std::move(out),
               [gv = std::move(gv), d](const auto& g, auto& ga) {
                 for (std::size_t i = 0; i < g.size(); ++i)
                   ga[i] += g[i] * gv[i % d];
               });
}

Var linear(Var x, Var w, Var b) {
  Tape* t = tape_of(x, w);
  tape_of(x, b);
  require_rank(x, 2, "linear");
  require_rank(w, 2, "linear");
  const std::size_t rows = x.shape()[0], d = x.shape()[1], s = w.shape()[0];
  if (w.shape()[1] != d || b.size() != s)
    throw InvalidInput("linear: incompatible weight shapes");
  const auto& xv = x.value();
  const auto& wv = w.value();
  std::vector<double> out(rows * s);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t o = 0; o < s; ++o) {
      double acc = b.value()[o];
      const double* xr = xv.data() + r * d;
      const double* wr = wv.data() + o * d;
      for (std::size_t i = 0; i < d; ++i) acc += wr[i] * xr[i];
      out[r * s + o] = acc;
    }
  const std::size_t id = t->size();
  const bool rg = x.requires_grad() || w.requires_grad() || b.requires_grad();
  return t->record(std::move(out), {rows, s}, rg, [=] {
    const auto& g = t->node(id).grad;
    const auto& xv = x.value();
    const auto& wv = w.value();
    double* gw = w.requires_grad() ? t->grad_of(w).data() : nullptr;
    double* gb = b.requires_grad() ? t->grad_of(b).data() : nullptr;
    double* gx = x.requires_grad() ? t->grad_of(x).data() : nullptr;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t o = 0; o < s; ++o) {
        const double go = g[r * s + o];
        if (gb) gb[o] += go;
        if (gw) {
          const double* xr = xv.data() + r * d;
          double* gwr = gw + o * d;
          for (std::size_t i = 0; i < d; ++i) gwr[i] += go * xr[i];
        }
        if (gx) {
          const double* wr = wv.data() + o * d;
          double* gxr = gx + r * d;
          for (std::size_t i = 0; i < d; ++i) gxr[i] += go * wr[i];
        }
      }
  });
}

Var mse(Var a, Var b) {
  Tape* t = tape_of(a, b);
  if (a.shape() != b.shape()) throw InvalidInput("mse: shape mismatch");
  if (a.size() == 0) throw InvalidInput("mse: empty input");
  const auto& av = a.value();
  const auto& bv = b.value();
  double acc = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    acc += d * d;
  }
  const double inv = 1.0 / static_cast<double>(av.size());
  const std::size_t id = t->size();
  return t->record({acc * inv}, {1}, a.requires_grad() || b.requires_grad(),
                   [=] {
                     const double g = t->node(id).grad[0];
                     const auto& av = a.value();
                     const auto& bv = b.value();
                     double* ga = a.requires_grad() ? t->grad_of(a).data() : nullptr;
                     double* gb = b.requires_grad() ? t->grad_of(b).data() : nullptr;
                     for (std::size_t i = 0; i < av.size(); ++i) {
                       const double d = 2.0 * inv * g * (av[i] - bv[i]);
                       if (ga) ga[i] += d;
                       if (gb) gb[i] -= d;
                     }
                   });
}

namespace {

// Rows centered and scaled to unit norm; zero-variance rows stay zero.
struct UnitRows {
  std::vector<double> u;
  std::vector<double> norm;
};

constexpr double kVarianceFloor = 1e-24;

UnitRows unit_rows(std::span<const double> x, std::size_t rows,
                   std::size_t cols) {
  UnitRows r{std::vector<double>(rows * cols), std::vector<double>(rows, 0.0)};
  for (std::size_t q = 0; q < rows; ++q) {
    const double* xr = x.data() + q * cols;
    double mean = 0.0;
    for (std::size_t n = 0; n < cols; ++n) mean += xr[n];
    mean /= static_cast<double>(cols);
    double ss = 0.0;
    for (std::size_t n = 0; n < cols; ++n) ss += (xr[n] - mean) * (xr[n] - mean);
    if (ss <= kVarianceFloor) continue;
    const double s = std::sqrt(ss);
    r.norm[q] = s;
    for (std::size_t n = 0; n < cols; ++n) r.u[q * cols + n] = (xr[n] - mean) / s;
  }
  return r;
}

Matrix correlations(const UnitRows& ur, std::size_t rows, std::size_t cols) {
  Matrix rho(rows, rows, 0.0);
  for (std::size_t p = 0; p < rows; ++p)
    for (std::size_t q = p + 1; q < rows; ++q) {
      double acc = 0.0;
      for (std::size_t n = 0; n < cols; ++n)
        acc += ur.u[p * cols + n] * ur.u[q * cols + n];
      rho(p, q) = rho(q, p) = acc;
    }
  return rho;
}

double off_diagonal_mean_square(const Matrix& rho) {
  const std::size_t q = rho.rows();
  if (q < 2) return 0.0;
  double acc = 0.0;
  for (std::size_t a = 0; a < q; ++a)
    for (std::size_t b = 0; b < q; ++b)
      if (a != b) acc += rho(a, b) * rho(a, b);
  return acc / static_cast<double>(q * (q - 1));
}

}  // namespace

Var spectral_correlation(Var x) {
  Tape* t = tape_of(x);
  require_rank(x, 2, "spectral_correlation");
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  if (cols < 2) throw InvalidInput("spectral_correlation: need >= 2 samples");
  UnitRows ur = unit_rows(x.value(), rows, cols);
  Matrix rho = correlations(ur, rows, cols);
  const double value = off_diagonal_mean_square(rho);
  const std::size_t id = t->size();
  return t->record({value}, {1}, x.requires_grad(),
                   [=, ur = std::move(ur), rho = std::move(rho)] {
    if (rows < 2) return;
    const double g = t->node(id).grad[0];
    const double c = 4.0 * g / static_cast<double>(rows * (rows - 1));
    auto& gx = t->grad_of(x);
    std::vector<double> gu(cols);
    for (std::size_t p = 0; p < rows; ++p) {
      if (ur.norm[p] == 0.0) continue;
      std::fill(gu.begin(), gu.end(), 0.0);
      for (std::size_t q = 0; q < rows; ++q) {
        if (q == p || ur.norm[q] == 0.0) continue;
        const double w = c * rho(p, q);
        for (std::size_t n = 0; n < cols; ++n) gu[n] += w * ur.u[q * cols + n];
      }
      const double* up = ur.u.data() + p * cols;
      double proj = 0.0;
      for (std::size_t n = 0; n < cols; ++n) proj += gu[n] * up[n];
      double mean = 0.0;
      for (std::size_t n = 0; n < cols; ++n) {
        gu[n] = (gu[n] - proj * up[n]) / ur.norm[p];
        mean += gu[n];
      }
      mean /= static_cast<double>(cols);
      for (std::size_t n = 0; n < cols; ++n) gx[p * cols + n] += gu[n] - mean;
    }
  });
}

Var cross_entropy(Var logits, std::span<const int> labels) {
  Tape* t = tape_of(logits);
  require_rank(logits, 2, "cross_entropy");
  const std::size_t rows = logits.shape()[0], s = logits.shape()[1];
  if (labels.size() != rows || rows == 0)
    throw InvalidInput("cross_entropy: label count does not match frames");
  for (std::size_t r = 0; r < rows; ++r)
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= s)
      throw InvalidInput("cross_entropy: label " + std::to_string(labels[r]) +
                         " out of range at frame " + std::to_string(r));
  const auto& z = logits.value();
  std::vector<double> prob(rows * s);
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    const double* zr = z.data() + r * s;
    const double mx = *std::max_element(zr, zr + s);
    double sum = 0.0;
    for (std::size_t k = 0; k < s; ++k) sum += std::exp(zr[k] - mx);
    const double lse = mx + std::log(sum);
    for (std::size_t k = 0; k < s; ++k) prob[r * s + k] = std::exp(zr[k] - lse);
    loss += lse - zr[labels[r]];
  }
  const double inv = 1.0 / static_cast<double>(rows);
  std::vector<int> lab(labels.begin(), labels.end());
  const std::size_t id = t->size();
  return t->record({loss * inv}, {1}, logits.requires_grad(),
                   [=, prob = std::move(prob), lab = std::move(lab)] {
                     const double g = t->node(id).grad[0] * inv;
                     auto& gz = t->grad_of(logits);
                     for (std::size_t r = 0; r < rows; ++r)
                       for (std::size_t k = 0; k < s; ++k)
                         gz[r * s + k] +=
                             g * (prob[r * s + k] -
                                  (static_cast<int>(k) == lab[r] ? 1.0 : 0.0));
                   });
}

}  // namespace ag

double spectral_correlation_value(std::span<const double> x, std::size_t rows,
                                  std::size_t cols) {
  if (x.size() != rows * cols || cols < 2)
    throw InvalidInput("spectral_correlation: bad shape");
  return ag::off_diagonal_mean_square(
      ag::correlations(ag::unit_rows(x, rows, cols), rows, cols));
}

void Adam::step(std::vector<Tensor>& params,
                const std::vector<std::vector<double>>& grads) {
  if (grads.size() != params.size())
    throw InvalidInput("Adam: gradient count does not match parameters");
  if (m_.empty()) {
    for (const Tensor& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i].values;
    const auto& g = grads[i];
    if (g.size() != p.size()) throw InvalidInput("Adam: gradient size mismatch");
    for (std::size_t j = 0; j < p.size(); ++j) {
      m_[i][j] = config_.beta1 * m_[i][j] + (1.0 - config_.beta1) * g[j];
      v_[i][j] = config_.beta2 * v_[i][j] + (1.0 - config_.beta2) * g[j] * g[j];
      const double mh = m_[i][j] / c1;
      const double vh = v_[i][j] / c2;
      p[j] -= config_.lr * mh / (std::sqrt(vh) + config_.eps);
    }
  }
}

}  // namespace fdlp
