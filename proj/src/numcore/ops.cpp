// Copyright 2026 The depwsc Authors
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

#include "depwsc/numcore/ops.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace depwsc::num {
namespace {

template <typename T>
void require_matrix(const Tensor<T>& t, const char* op) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got dims " + shape_str(t.dims()));
  }
}

template <typename T>
void require_same(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.dims() != b.dims()) {
    throw ShapeError(std::string(op) + ": dims " + shape_str(a.dims()) + " and " +
                     shape_str(b.dims()) + " differ");
  }
}

template <typename T>
Node<T>& parent(Node<T>& n, std::size_t i) {
  return *n.parents[i];
}

// Row softmax kernel shared by every softmax entry point. -inf entries are
// the masked sentinel.
template <typename T>
Tensor<T> softmax_kernel(const Tensor<T>& x) {
  require_matrix(x, "softmax_rows");
  const std::size_t r = x.rows();
  const std::size_t c = x.cols();
  Tensor<T> y(x.dims());
  for (std::size_t i = 0; i < r; ++i) {
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < c; ++j) mx = std::max(mx, x(i, j));
    if (mx == -std::numeric_limits<T>::infinity()) {
      throw ContractError("softmax_rows: fully masked row " + std::to_string(i));
    }
    T z = 0;
    for (std::size_t j = 0; j < c; ++j) {
      const T e = std::exp(x(i, j) - mx);
      y(i, j) = e;
      z += e;
    }
    for (std::size_t j = 0; j < c; ++j) y(i, j) /= z;
  }
  return y;
}

}  // namespace

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  const auto& A = a.value();
  const auto& B = b.value();
  require_matrix(A, "matmul");
  require_matrix(B, "matmul");
  if (A.cols() != B.rows()) {
    throw ShapeError("matmul: dimension mismatch " + shape_str(A.dims()) + " x " +
                     shape_str(B.dims()));
  }
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  Tensor<T> C({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = A(i, p);
      for (std::size_t j = 0; j < n; ++j) C(i, j) += aip * B(p, j);
    }
  }
  return make_op<T>(std::move(C), {a, b}, [m, k, n](Node<T>& out) {
    auto& pa = parent(out, 0);
    auto& pb = parent(out, 1);
    const auto& G = out.grad;
    if (pa.requires_grad) {
      auto& gA = grad_of(pa);
      const auto& B = pb.value;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          T acc = 0;
          for (std::size_t j = 0; j < n; ++j) acc += G(i, j) * B(p, j);
          gA(i, p) += acc;
        }
    }
    if (pb.requires_grad) {
      auto& gB = grad_of(pb);
      const auto& A = pa.value;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const T aip = A(i, p);
          for (std::size_t j = 0; j < n; ++j) gB(p, j) += aip * G(i, j);
        }
    }
  });
}

template <typename T>
Var<T> transpose(const Var<T>& a) {
  const auto& A = a.value();
  require_matrix(A, "transpose");
  const std::size_t r = A.rows(), c = A.cols();
  Tensor<T> out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out(j, i) = A(i, j);
  return make_op<T>(std::move(out), {a}, [r, c](Node<T>& o) {
    auto& g = grad_of(parent(o, 0));
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) g(i, j) += o.grad(j, i);
  });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same(a.value(), b.value(), "add");
  Tensor<T> out = a.value();
  const auto bd = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bd[i];
  return make_op<T>(std::move(out), {a, b}, [](Node<T>& o) {
    for (std::size_t p = 0; p < 2; ++p) {
      auto& par = parent(o, p);
      if (!par.requires_grad) continue;
      auto& g = grad_of(par);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  require_same(a.value(), b.value(), "sub");
  Tensor<T> out = a.value();
  const auto bd = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bd[i];
  return make_op<T>(std::move(out), {a, b}, [](Node<T>& o) {
    auto& pa = parent(o, 0);
    auto& pb = parent(o, 1);
    if (pa.requires_grad) {
      auto& g = grad_of(pa);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
    if (pb.requires_grad) {
      auto& g = grad_of(pb);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= o.grad[i];
    }
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  require_same(a.value(), b.value(), "mul");
  Tensor<T> out = a.value();
  const auto bd = b.value().data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bd[i];
  return make_op<T>(std::move(out), {a, b}, [](Node<T>& o) {
    auto& pa = parent(o, 0);
    auto& pb = parent(o, 1);
    if (pa.requires_grad) {
      auto& g = grad_of(pa);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      auto& g = grad_of(pb);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * pa.value[i];
    }
  });
}

template <typename T>
Var<T> scale(const Var<T>& a, T factor) {
  Tensor<T> out = a.value();
  for (auto& v : out.data()) v *= factor;
  return make_op<T>(std::move(out), {a}, [factor](Node<T>& o) {
    auto& g = grad_of(parent(o, 0));
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * factor;
  });
}

template <typename T>
Var<T> add_bias(const Var<T>& x, const Var<T>& b) {
  const auto& X = x.value();
  require_matrix(X, "add_bias");
  const std::size_t n = X.rows(), d = X.cols();
  if (b.value().size() != d) {
    throw ShapeError("add_bias: bias dims " + shape_str(b.dims()) + " do not match rows of " +
                     shape_str(X.dims()));
  }
  Tensor<T> out = X;
  const auto bd = b.value().data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) out(i, j) += bd[j];
  return make_op<T>(std::move(out), {x, b}, [n, d](Node<T>& o) {
    auto& px = parent(o, 0);
    auto& pb = parent(o, 1);
    if (px.requires_grad) {
      auto& g = grad_of(px);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i];
    }
    if (pb.requires_grad) {
      auto& g = grad_of(pb);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) g[j] += o.grad(i, j);
    }
  });
}

template <typename T>
Var<T> affine(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  return add_bias(matmul(x, w), b);
}

template <typename T>
Var<T> sum(const Var<T>& a) {
  T s = 0;
  for (T v : a.value().data()) s += v;
  return make_op<T>(Tensor<T>::scalar(s), {a}, [](Node<T>& o) {
    auto& g = grad_of(parent(o, 0));
    const T go = o.grad[0];
    for (auto& v : g.data()) v += go;
  });
}

template <typename T>
Var<T> mean(const Var<T>& a) {
  return scale(sum(a), T{1} / static_cast<T>(a.value().size()));
}

template <typename T>
Var<T> tanh(const Var<T>& a) {
  Tensor<T> out = a.value();
  for (auto& v : out.data()) v = std::tanh(v);
  return make_op<T>(std::move(out), {a}, [](Node<T>& o) {
    auto& g = grad_of(parent(o, 0));
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.grad[i] * (T{1} - o.value[i] * o.value[i]);
  });
}

template <typename T>
Var<T> gelu(const Var<T>& a) {
  const T inv_sqrt2 = static_cast<T>(1.0 / std::numbers::sqrt2);
  const T inv_sqrt_2pi = static_cast<T>(1.0 / std::sqrt(2.0 * std::numbers::pi));
  Tensor<T> out = a.value();
  for (auto& v : out.data()) v = T{0.5} * v * (T{1} + std::erf(v * inv_sqrt2));
  return make_op<T>(std::move(out), {a}, [inv_sqrt2, inv_sqrt_2pi](Node<T>& o) {
    auto& px = parent(o, 0);
    auto& g = grad_of(px);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const T x = px.value[i];
      const T cdf = T{0.5} * (T{1} + std::erf(x * inv_sqrt2));
      const T pdf = inv_sqrt_2pi * std::exp(T{-0.5} * x * x);
      g[i] += o.grad[i] * (cdf + x * pdf);
    }
  });
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& logits) {
  return softmax_kernel(logits);
}

template <typename T>
Var<T> softmax_rows(const Var<T>& logits) {
  Tensor<T> y = softmax_kernel(logits.value());
  return make_op<T>(std::move(y), {logits}, [](Node<T>& o) {
    auto& g = grad_of(parent(o, 0));
    const std::size_t r = o.value.rows(), c = o.value.cols();
    for (std::size_t i = 0; i < r; ++i) {
      T dot = 0;
      for (std::size_t j = 0; j < c; ++j) dot += o.grad(i, j) * o.value(i, j);
      for (std::size_t j = 0; j < c; ++j) g(i, j) += o.value(i, j) * (o.grad(i, j) - dot);
    }
  });
}

template <typename T>
Var<T> masked_softmax(const Var<T>& logits, const MaskMatrix& mask, MaskMode mode) {
  const auto& X = logits.value();
  require_matrix(X, "masked_softmax");
  if (X.rows() != mask.size() || X.cols() != mask.size()) {
    throw ShapeError("masked_softmax: mask of size " + std::to_string(mask.size()) +
                     " does not match logits " + shape_str(X.dims()));
  }
  Tensor<T> constant(X.dims());
  if (mode == MaskMode::additive) {
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (mask.row_empty(i)) {
        throw ContractError("masked_softmax: fully masked row " + std::to_string(i));
      }
      for (std::size_t j = 0; j < mask.size(); ++j) {
        constant(i, j) = mask.at(i, j) ? T{0} : static_cast<T>(kMaskedLogitOffset);
      }
    }
    return softmax_rows(add(logits, Var<T>::constant(std::move(constant))));
  }
  for (std::size_t i = 0; i < mask.size(); ++i)
    for (std::size_t j = 0; j < mask.size(); ++j) constant(i, j) = mask.at(i, j) ? T{1} : T{0};
  return softmax_rows(mul(logits, Var<T>::constant(std::move(constant))));
}

template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gain, const Var<T>& bias, T eps) {
  const auto& X = x.value();
  require_matrix(X, "layer_norm");
  if (!(eps > T{0})) throw ContractError("layer_norm: eps must be positive");
  const std::size_t n = X.rows(), d = X.cols();
  if (gain.value().size() != d || bias.value().size() != d) {
    throw ShapeError("layer_norm: gain/bias dims " + shape_str(gain.dims()) + "/" +
                     shape_str(bias.dims()) + " do not match width " + std::to_string(d));
  }
  Tensor<T> xhat(X.dims());
  std::vector<T> inv_std(n);
  Tensor<T> out(X.dims());
  const auto gd = gain.value().data();
  const auto bd = bias.value().data();
  for (std::size_t i = 0; i < n; ++i) {
    T mu = 0;
    for (std::size_t j = 0; j < d; ++j) mu += X(i, j);
    mu /= static_cast<T>(d);
    T var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (X(i, j) - mu) * (X(i, j) - mu);
    var /= static_cast<T>(d);
    inv_std[i] = T{1} / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      xhat(i, j) = (X(i, j) - mu) * inv_std[i];
      out(i, j) = gd[j] * xhat(i, j) + bd[j];
    }
  }
  return make_op<T>(std::move(out), {x, gain, bias},
                    [n, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& o) {
    auto& px = parent(o, 0);
    auto& pg = parent(o, 1);
    auto& pb = parent(o, 2);
    const auto& G = o.grad;
    if (pg.requires_grad) {
      auto& gg = grad_of(pg);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) gg[j] += G(i, j) * xhat(i, j);
    }
    if (pb.requires_grad) {
      auto& gb = grad_of(pb);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) gb[j] += G(i, j);
    }
    if (px.requires_grad) {
      auto& gx = grad_of(px);
      const auto& gain_v = pg.value;
      for (std::size_t i = 0; i < n; ++i) {
        T mean_g = 0, mean_gx = 0;
        for (std::size_t j = 0; j < d; ++j) {
          const T gh = G(i, j) * gain_v[j];
          mean_g += gh;
          mean_gx += gh * xhat(i, j);
        }
        mean_g /= static_cast<T>(d);
        mean_gx /= static_cast<T>(d);
        for (std::size_t j = 0; j < d; ++j) {
          const T gh = G(i, j) * gain_v[j];
          gx(i, j) += inv_std[i] * (gh - mean_g - xhat(i, j) * mean_gx);
        }
      }
    }
  });
}

template <typename T>
Var<T> dropout(const Var<T>& x, double rate, Rng& rng) {
  if (rate <= 0.0) return x;
  if (rate >= 1.0) throw ContractError("dropout: rate must be below 1");
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  Tensor<T> keep(x.dims());
  for (auto& k : keep.data()) k = rng.bernoulli(rate) ? T{0} : keep_scale;
  return mul(x, Var<T>::constant(std::move(keep)));
}

template <typename T>
Var<T> slice_cols(const Var<T>& x, std::size_t start, std::size_t count) {
  const auto& X = x.value();
  require_matrix(X, "slice_cols");
  if (count == 0 || start + count > X.cols()) {
    throw ShapeError("slice_cols: columns [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") out of range for " + shape_str(X.dims()));
  }
  const std::size_t n = X.rows();
  Tensor<T> out({n, count});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < count; ++j) out(i, j) = X(i, start + j);
  return make_op<T>(std::move(out), {x}, [n, start, count](Node<T>& o) {
    auto& g = grad_of(parent(o, 0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < count; ++j) g(i, start + j) += o.grad(i, j);
  });
}

template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw ContractError("concat_cols: nothing to concatenate");
  const std::size_t n = parts.front().value().rows();
  std::size_t total = 0;
  std::vector<std::size_t> widths;
  for (const auto& p : parts) {
    require_matrix(p.value(), "concat_cols");
    if (p.value().rows() != n) {
      throw ShapeError("concat_cols: row count " + std::to_string(p.value().rows()) +
                       " differs from " + std::to_string(n));
    }
    widths.push_back(p.value().cols());
    total += p.value().cols();
  }
  Tensor<T> out({n, total});
  std::size_t off = 0;
  for (const auto& p : parts) {
    const auto& P = p.value();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < P.cols(); ++j) out(i, off + j) = P(i, j);
    off += P.cols();
  }
  return make_op<T>(std::move(out), parts, [n, widths](Node<T>& o) {
    std::size_t off = 0;
    for (std::size_t p = 0; p < widths.size(); ++p) {
      auto& par = parent(o, p);
      if (par.requires_grad) {
        auto& g = grad_of(par);
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < widths[p]; ++j) g(i, j) += o.grad(i, off + j);
      }
      off += widths[p];
    }
  });
}

template <typename T>
Var<T> row(const Var<T>& x, std::size_t i) {
  const auto& X = x.value();
  require_matrix(X, "row");
  if (i >= X.rows()) {
    throw ShapeError("row: index " + std::to_string(i) + " out of range for " + shape_str(X.dims()));
  }
  const std::size_t d = X.cols();
  Tensor<T> out({1, d});
  for (std::size_t j = 0; j < d; ++j) out[j] = X(i, j);
  return make_op<T>(std::move(out), {x}, [i, d](Node<T>& o) {
    auto& g = grad_of(parent(o, 0));
    for (std::size_t j = 0; j < d; ++j) g(i, j) += o.grad[j];
  });
}

template <typename T>
Var<T> embedding(const Var<T>& table, const std::vector<std::size_t>& ids) {
  const auto& E = table.value();
  require_matrix(E, "embedding");
  if (ids.empty()) throw ContractError("embedding: empty id list");
  const std::size_t d = E.cols();
  Tensor<T> out({ids.size(), d});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= E.rows()) {
      throw ShapeError("embedding: id " + std::to_string(ids[i]) + " out of range for table " +
                       shape_str(E.dims()));
    }
    for (std::size_t j = 0; j < d; ++j) out(i, j) = E(ids[i], j);
  }
  return make_op<T>(std::move(out), {table}, [ids, d](Node<T>& o) {
    auto& g = grad_of(parent(o, 0));
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) g(ids[i], j) += o.grad(i, j);
  });
}

template <typename T>
Var<T> cross_entropy(const Var<T>& logits, std::size_t target) {
  const auto& L = logits.value();
  const std::size_t c = L.size();
  if (target >= c) {
    throw ContractError("cross_entropy: target " + std::to_string(target) + " out of range for " +
                        std::to_string(c) + " classes");
  }
  T mx = L[0];
  for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, L[j]);
  T z = 0;
  for (std::size_t j = 0; j < c; ++j) z += std::exp(L[j] - mx);
  const T log_z = mx + std::log(z);
  std::vector<T> probs(c);
  for (std::size_t j = 0; j < c; ++j) probs[j] = std::exp(L[j] - log_z);
  return make_op<T>(Tensor<T>::scalar(log_z - L[target]), {logits},
                    [probs = std::move(probs), target](Node<T>& o) {
    auto& g = grad_of(parent(o, 0));
    const T go = o.grad[0];
    for (std::size_t j = 0; j < probs.size(); ++j) {
      g[j] += go * (probs[j] - (j == target ? T{1} : T{0}));
    }
  });
}

#define DEPWSC_INSTANTIATE_OPS(T)                                                          \
  template Var<T> matmul(const Var<T>&, const Var<T>&);                                    \
  template Var<T> transpose(const Var<T>&);                                                \
  template Var<T> add(const Var<T>&, const Var<T>&);                                       \
  template Var<T> sub(const Var<T>&, const Var<T>&);                                       \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                       \
  template Var<T> scale(const Var<T>&, T);                                                 \
  template Var<T> add_bias(const Var<T>&, const Var<T>&);                                  \
  template Var<T> affine(const Var<T>&, const Var<T>&, const Var<T>&);                     \
  template Var<T> sum(const Var<T>&);                                                      \
  template Var<T> mean(const Var<T>&);                                                     \
  template Var<T> tanh(const Var<T>&);                                                     \
  template Var<T> gelu(const Var<T>&);                                                     \
  template Var<T> softmax_rows(const Var<T>&);                                             \
  template Tensor<T> softmax_rows(const Tensor<T>&);                                       \
  template Var<T> masked_softmax(const Var<T>&, const MaskMatrix&, MaskMode);              \
  template Var<T> layer_norm(const Var<T>&, const Var<T>&, const Var<T>&, T);              \
  template Var<T> dropout(const Var<T>&, double, Rng&);                                    \
  template Var<T> slice_cols(const Var<T>&, std::size_t, std::size_t);                     \
  template Var<T> concat_cols(const std::vector<Var<T>>&);                                 \
  template Var<T> row(const Var<T>&, std::size_t);                                         \
  template Var<T> embedding(const Var<T>&, const std::vector<std::size_t>&);               \
  template Var<T> cross_entropy(const Var<T>&, std::size_t);

DEPWSC_INSTANTIATE_OPS(float)
DEPWSC_INSTANTIATE_OPS(double)

#undef DEPWSC_INSTANTIATE_OPS

}  // namespace depwsc::num
