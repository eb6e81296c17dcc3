// Copyright 2026 The sslaudio Authors.
// SPDX-License-Identifier: Apache-2.0

#include "sslaudio/ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace sslaudio {

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << "x";
    out << shape[i];
  }
  out << "]";
  return out.str();
}

template class Tensor<float>;
template class Tensor<double>;

namespace ops {
namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMap = Eigen::Map<const RowMat<T>>;
template <typename T>
using MutMap = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstStrided = Eigen::Map<const RowMat<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using MutStrided = Eigen::Map<RowMat<T>, 0, Eigen::OuterStride<>>;

template <typename T>
ConstMap<T> as_matrix(const Tensor<T>& t) {
  return ConstMap<T>(t.data(), t.rows(), t.cols());
}

template <typename T>
MutMap<T> grad_matrix(const Tensor<T>& t) {
  auto g = t.mutable_grad();
  return MutMap<T>(g.data(), t.rows(), t.cols());
}

template <typename T>
ConstMap<T> grad_view(std::span<const T> g, std::size_t rows, std::size_t cols) {
  return ConstMap<T>(g.data(), rows, cols);
}

template <typename T>
T sigmoid_scalar(T x) {
  return x >= T{0} ? T{1} / (T{1} + std::exp(-x))
                   : std::exp(x) / (T{1} + std::exp(x));
}

void require(bool condition, const char* op, const std::string& detail) {
  if (!condition) throw DimensionError(std::string(op) + ": " + detail);
}

void require_2d(const Shape& shape, const char* op) {
  require(shape.size() == 2, op, "expected a 2-D tensor, got " + shape_string(shape));
}

template <typename T>
void check_finite(const std::vector<T>& values, const char* op) {
  for (T v : values) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string(op) + " produced a non-finite value");
    }
  }
}

// Builds the output tensor and, if needed, attaches it to the active graph.
template <typename T>
Tensor<T> finish(const char* kind, Shape shape, std::vector<T> values,
                 std::vector<Tensor<T>> inputs,
                 const std::function<void(Tensor<T>&, std::span<const T>)>& fn) {
  check_finite(values, kind);
  Tensor<T> out(std::move(shape), std::move(values));
  Graph<T>* graph = active_graph<T>();
  bool needs = false;
  for (const auto& in : inputs) needs = needs || (in.defined() && in.requires_grad());
  if (graph != nullptr && needs) {
    out.set_requires_grad(true);
    Tensor<T> self = out;
    graph->record(kind, inputs, out,
                  [fn, self](std::span<const T> g) mutable { fn(self, g); });
  }
  return out;
}

template <typename T>
bool wants(const Tensor<T>& t) {
  return t.defined() && t.requires_grad();
}

}  // namespace

// ---------------------------------------------------------------------------
// Linear algebra and shape plumbing.

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  require_2d(a.shape(), "matmul");
  require_2d(b.shape(), "matmul");
  require(a.cols() == b.rows(), "matmul",
          "inner dimensions disagree: " + shape_string(a.shape()) + " * " +
              shape_string(b.shape()));
  const std::size_t m = a.rows(), n = b.cols();
  std::vector<T> out(m * n);
  MutMap<T>(out.data(), m, n).noalias() = as_matrix(a) * as_matrix(b);
  return finish<T>("matmul", {m, n}, std::move(out), {a, b},
                   [a, b](Tensor<T>& self, std::span<const T> g) mutable {
                     auto G = grad_view(g, self.rows(), self.cols());
                     if (wants(a)) grad_matrix(a).noalias() += G * as_matrix(b).transpose();
                     if (wants(b)) grad_matrix(b).noalias() += as_matrix(a).transpose() * G;
                   });
}

template <typename T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  require_2d(a.shape(), "matmul_nt");
  require_2d(b.shape(), "matmul_nt");
  require(a.cols() == b.cols(), "matmul_nt",
          "inner dimensions disagree: " + shape_string(a.shape()) + " * " +
              shape_string(b.shape()) + "^T");
  const std::size_t m = a.rows(), n = b.rows();
  std::vector<T> out(m * n);
  MutMap<T>(out.data(), m, n).noalias() = as_matrix(a) * as_matrix(b).transpose();
  return finish<T>("matmul_nt", {m, n}, std::move(out), {a, b},
                   [a, b](Tensor<T>& self, std::span<const T> g) mutable {
                     auto G = grad_view(g, self.rows(), self.cols());
                     if (wants(a)) grad_matrix(a).noalias() += G * as_matrix(b);
                     if (wants(b)) grad_matrix(b).noalias() += G.transpose() * as_matrix(a);
                   });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& x) {
  require_2d(x.shape(), "transpose");
  const std::size_t r = x.rows(), c = x.cols();
  std::vector<T> out(r * c);
  MutMap<T>(out.data(), c, r) = as_matrix(x).transpose();
  return finish<T>("transpose", {c, r}, std::move(out), {x},
                   [x](Tensor<T>& self, std::span<const T> g) mutable {
                     grad_matrix(x) += grad_view(g, self.rows(), self.cols()).transpose();
                   });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& x, Shape shape) {
  require(shape_size(shape) == x.size(), "reshape",
          shape_string(x.shape()) + " -> " + shape_string(shape));
  std::vector<T> out(x.values().begin(), x.values().end());
  return finish<T>("reshape", std::move(shape), std::move(out), {x},
                   [x](Tensor<T>&, std::span<const T> g) mutable {
                     x.accumulate_grad(g);
                   });
}

template <typename T>
Tensor<T> concat(std::span<const Tensor<T>> parts, std::size_t axis) {
  require(!parts.empty(), "concat", "no inputs");
  require(axis <= 1, "concat", "axis must be 0 or 1");
  for (const auto& p : parts) require_2d(p.shape(), "concat");
  std::size_t rows = 0, cols = 0;
  if (axis == 0) {
    cols = parts[0].cols();
    for (const auto& p : parts) {
      require(p.cols() == cols, "concat", "column counts disagree");
      rows += p.rows();
    }
  } else {
    rows = parts[0].rows();
    for (const auto& p : parts) {
      require(p.rows() == rows, "concat", "row counts disagree");
      cols += p.cols();
    }
  }
  std::vector<T> out(rows * cols);
  if (axis == 0) {
    auto it = out.begin();
    for (const auto& p : parts) it = std::copy(p.values().begin(), p.values().end(), it);
  } else {
    std::size_t offset = 0;
    for (const auto& p : parts) {
      for (std::size_t r = 0; r < rows; ++r) {
        std::copy_n(p.data() + r * p.cols(), p.cols(), out.data() + r * cols + offset);
      }
      offset += p.cols();
    }
  }
  std::vector<Tensor<T>> inputs(parts.begin(), parts.end());
  return finish<T>(
      "concat", {rows, cols}, std::move(out), inputs,
      [inputs, axis, cols](Tensor<T>&, std::span<const T> g) mutable {
        std::size_t offset = 0;
        for (auto& p : inputs) {
          if (axis == 0) {
            if (wants(p)) p.accumulate_grad(g.subspan(offset, p.size()));
            offset += p.size();
          } else {
            if (wants(p)) {
              auto pg = p.mutable_grad();
              for (std::size_t r = 0; r < p.rows(); ++r) {
                for (std::size_t c = 0; c < p.cols(); ++c) {
                  pg[r * p.cols() + c] += g[r * cols + offset + c];
                }
              }
            }
            offset += p.cols();
          }
        }
      });
}

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& x, std::size_t begin, std::size_t end) {
  require(begin < end && end <= x.rows(), "slice_rows",
          "bad range [" + std::to_string(begin) + ", " + std::to_string(end) +
              ") of " + std::to_string(x.rows()) + " rows");
  const std::size_t c = x.cols();
  std::vector<T> out(x.data() + begin * c, x.data() + end * c);
  Shape shape = x.shape();
  shape[0] = end - begin;
  return finish<T>("slice_rows", std::move(shape), std::move(out), {x},
                   [x, begin, c](Tensor<T>&, std::span<const T> g) mutable {
                     auto xg = x.mutable_grad();
                     for (std::size_t i = 0; i < g.size(); ++i) xg[begin * c + i] += g[i];
                   });
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& x, std::span<const std::size_t> rows) {
  require_2d(x.shape(), "gather_rows");
  require(!rows.empty(), "gather_rows", "empty index list");
  const std::size_t c = x.cols();
  std::vector<T> out(rows.size() * c);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < x.rows(), "gather_rows", "row index out of range");
    std::copy_n(x.data() + rows[i] * c, c, out.data() + i * c);
  }
  std::vector<std::size_t> index(rows.begin(), rows.end());
  return finish<T>("gather_rows", {rows.size(), c}, std::move(out), {x},
                   [x, index, c](Tensor<T>&, std::span<const T> g) mutable {
                     auto xg = x.mutable_grad();
                     for (std::size_t i = 0; i < index.size(); ++i) {
                       for (std::size_t j = 0; j < c; ++j) xg[index[i] * c + j] += g[i * c + j];
                     }
                   });
}

template <typename T>
Tensor<T> take_along_rows(const Tensor<T>& x, std::span<const std::size_t> index,
                          std::size_t width) {
  require_2d(x.shape(), "take_along_rows");
  require(width > 0 && index.size() == x.rows() * width, "take_along_rows",
          "index must hold rows * width entries");
  const std::size_t r = x.rows(), c = x.cols();
  std::vector<T> out(r * width);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      const std::size_t col = index[i * width + j];
      require(col < c, "take_along_rows", "column index out of range");
      out[i * width + j] = x.data()[i * c + col];
    }
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return finish<T>("take_along_rows", {r, width}, std::move(out), {x},
                   [x, idx, width, c](Tensor<T>&, std::span<const T> g) mutable {
                     auto xg = x.mutable_grad();
                     for (std::size_t i = 0; i < idx.size(); ++i) {
                       xg[(i / width) * c + idx[i]] += g[i];
                     }
                   });
}

// ---------------------------------------------------------------------------
// Elementwise arithmetic.

namespace {
template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  require(a.shape() == b.shape(), op,
          shape_string(a.shape()) + " vs " + shape_string(b.shape()));
}
}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "add");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return finish<T>("add", a.shape(), std::move(out), {a, b},
                   [a, b](Tensor<T>&, std::span<const T> g) mutable {
                     if (wants(a)) a.accumulate_grad(g);
                     if (wants(b)) b.accumulate_grad(g);
                   });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "sub");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return finish<T>("sub", a.shape(), std::move(out), {a, b},
                   [a, b](Tensor<T>&, std::span<const T> g) mutable {
                     if (wants(a)) a.accumulate_grad(g);
                     if (wants(b)) {
                       auto bg = b.mutable_grad();
                       for (std::size_t i = 0; i < g.size(); ++i) bg[i] -= g[i];
                     }
                   });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "mul");
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return finish<T>("mul", a.shape(), std::move(out), {a, b},
                   [a, b](Tensor<T>&, std::span<const T> g) mutable {
                     if (wants(a)) {
                       auto ag = a.mutable_grad();
                       for (std::size_t i = 0; i < g.size(); ++i) ag[i] += g[i] * b.data()[i];
                     }
                     if (wants(b)) {
                       auto bg = b.mutable_grad();
                       for (std::size_t i = 0; i < g.size(); ++i) bg[i] += g[i] * a.data()[i];
                     }
                   });
}

template <typename T>
Tensor<T> add_bias(const Tensor<T>& x, const Tensor<T>& bias) {
  const std::size_t r = x.rows(), c = x.cols();
  require(bias.size() == c, "add_bias",
          "bias of " + std::to_string(bias.size()) + " entries for " +
              std::to_string(c) + " columns");
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = x.data()[i * c + j] + bias.data()[j];
  }
  return finish<T>("add_bias", x.shape(), std::move(out), {x, bias},
                   [x, bias, r, c](Tensor<T>&, std::span<const T> g) mutable {
                     if (wants(x)) x.accumulate_grad(g);
                     if (wants(bias)) {
                       auto bg = bias.mutable_grad();
                       for (std::size_t i = 0; i < r; ++i) {
                         for (std::size_t j = 0; j < c; ++j) bg[j] += g[i * c + j];
                       }
                     }
                   });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& x, double factor) {
  const T f = static_cast<T>(factor);
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.data()[i] * f;
  return finish<T>("scale", x.shape(), std::move(out), {x},
                   [x, f](Tensor<T>&, std::span<const T> g) mutable {
                     auto xg = x.mutable_grad();
                     for (std::size_t i = 0; i < g.size(); ++i) xg[i] += g[i] * f;
                   });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  Tensor<T> y = matmul(x, weight);
  return bias.defined() ? add_bias(y, bias) : y;
}

// ---------------------------------------------------------------------------
// Reductions.

template <typename T>
Tensor<T> sum(const Tensor<T>& x) {
  T total{0};
  for (T v : x.values()) total += v;
  return finish<T>("sum", {1}, {total}, {x},
                   [x](Tensor<T>&, std::span<const T> g) mutable {
                     auto xg = x.mutable_grad();
                     for (auto& v : xg) v += g[0];
                   });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& x) {
  T total{0};
  for (T v : x.values()) total += v;
  const T n = static_cast<T>(x.size());
  return finish<T>("mean", {1}, {total / n}, {x},
                   [x, n](Tensor<T>&, std::span<const T> g) mutable {
                     auto xg = x.mutable_grad();
                     for (auto& v : xg) v += g[0] / n;
                   });
}

template <typename T>
Tensor<T> segment_mean(const Tensor<T>& x, std::size_t seq_len) {
  require_2d(x.shape(), "segment_mean");
  require(seq_len > 0 && x.rows() % seq_len == 0, "segment_mean",
          "rows not divisible by seq_len");
  const std::size_t b = x.rows() / seq_len, c = x.cols();
  std::vector<T> out(b * c, T{0});
  for (std::size_t s = 0; s < b; ++s) {
    for (std::size_t t = 0; t < seq_len; ++t) {
      const T* row = x.data() + (s * seq_len + t) * c;
      for (std::size_t j = 0; j < c; ++j) out[s * c + j] += row[j];
    }
    for (std::size_t j = 0; j < c; ++j) out[s * c + j] /= static_cast<T>(seq_len);
  }
  return finish<T>("segment_mean", {b, c}, std::move(out), {x},
                   [x, seq_len, c](Tensor<T>&, std::span<const T> g) mutable {
                     auto xg = x.mutable_grad();
                     const T inv = T{1} / static_cast<T>(seq_len);
                     for (std::size_t r = 0; r < x.rows(); ++r) {
                       const std::size_t s = r / seq_len;
                       for (std::size_t j = 0; j < c; ++j) xg[r * c + j] += g[s * c + j] * inv;
                     }
                   });
}

// ---------------------------------------------------------------------------
// Normalization.

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, double eps) {
  require_2d(x.shape(), "layer_norm");
  const std::size_t r = x.rows(), c = x.cols();
  require(gamma.size() == c && beta.size() == c, "layer_norm",
          "affine parameters must have one entry per column");
  std::vector<T> out(x.size()), xhat(x.size()), inv_std(r);
  for (std::size_t i = 0; i < r; ++i) {
    const T* row = x.data() + i * c;
    T mu{0};
    for (std::size_t j = 0; j < c; ++j) mu += row[j];
    mu /= static_cast<T>(c);
    T var{0};
    for (std::size_t j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<T>(c);
    inv_std[i] = T{1} / std::sqrt(var + static_cast<T>(eps));
    for (std::size_t j = 0; j < c; ++j) {
      xhat[i * c + j] = (row[j] - mu) * inv_std[i];
      out[i * c + j] = xhat[i * c + j] * gamma.data()[j] + beta.data()[j];
    }
  }
  return finish<T>(
      "layer_norm", x.shape(), std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat, inv_std, r, c](Tensor<T>&, std::span<const T> g) mutable {
        if (wants(gamma) || wants(beta)) {
          auto gg = wants(gamma) ? gamma.mutable_grad() : std::span<T>();
          auto bg = wants(beta) ? beta.mutable_grad() : std::span<T>();
          for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
              if (!gg.empty()) gg[j] += g[i * c + j] * xhat[i * c + j];
              if (!bg.empty()) bg[j] += g[i * c + j];
            }
          }
        }
        if (wants(x)) {
          auto xg = x.mutable_grad();
          const T n = static_cast<T>(c);
          for (std::size_t i = 0; i < r; ++i) {
            T sum_d{0}, sum_dx{0};
            for (std::size_t j = 0; j < c; ++j) {
              const T d = g[i * c + j] * gamma.data()[j];
              sum_d += d;
              sum_dx += d * xhat[i * c + j];
            }
            for (std::size_t j = 0; j < c; ++j) {
              const T d = g[i * c + j] * gamma.data()[j];
              xg[i * c + j] += inv_std[i] / n * (n * d - sum_d - xhat[i * c + j] * sum_dx);
            }
          }
        }
      });
}

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, std::span<const T> running_mean,
                     std::span<const T> running_var, bool training, double eps,
                     BatchStats<T>* batch_stats) {
  require_2d(x.shape(), "batch_norm");
  const std::size_t r = x.rows(), c = x.cols();
  require(gamma.size() == c && beta.size() == c && running_mean.size() == c &&
              running_var.size() == c,
          "batch_norm", "per-channel arrays must have one entry per column");
  std::vector<T> mu(c, T{0}), var(c, T{0});
  if (training) {
    require(r >= 2, "batch_norm", "training statistics need at least 2 rows");
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) mu[j] += x.data()[i * c + j];
    }
    for (auto& m : mu) m /= static_cast<T>(r);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        const T d = x.data()[i * c + j] - mu[j];
        var[j] += d * d;
      }
    }
    for (auto& v : var) v /= static_cast<T>(r);
    if (batch_stats != nullptr) {
      batch_stats->mean = mu;
      batch_stats->unbiased_var.resize(c);
      for (std::size_t j = 0; j < c; ++j) {
        batch_stats->unbiased_var[j] = var[j] * static_cast<T>(r) / static_cast<T>(r - 1);
      }
    }
  } else {
    mu.assign(running_mean.begin(), running_mean.end());
    var.assign(running_var.begin(), running_var.end());
  }
  std::vector<T> inv_std(c), xhat(x.size()), out(x.size());
  for (std::size_t j = 0; j < c; ++j) inv_std[j] = T{1} / std::sqrt(var[j] + static_cast<T>(eps));
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      xhat[i * c + j] = (x.data()[i * c + j] - mu[j]) * inv_std[j];
      out[i * c + j] = xhat[i * c + j] * gamma.data()[j] + beta.data()[j];
    }
  }
  return finish<T>(
      "batch_norm", x.shape(), std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat, inv_std, training, r, c](Tensor<T>&,
                                                      std::span<const T> g) mutable {
        std::vector<T> sum_d(c, T{0}), sum_dx(c, T{0});
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t j = 0; j < c; ++j) {
            sum_d[j] += g[i * c + j];
            sum_dx[j] += g[i * c + j] * xhat[i * c + j];
          }
        }
        if (wants(gamma)) {
          auto gg = gamma.mutable_grad();
          for (std::size_t j = 0; j < c; ++j) gg[j] += sum_dx[j];
        }
        if (wants(beta)) {
          auto bg = beta.mutable_grad();
          for (std::size_t j = 0; j < c; ++j) bg[j] += sum_d[j];
        }
        if (wants(x)) {
          auto xg = x.mutable_grad();
          const T n = static_cast<T>(r);
          for (std::size_t i = 0; i < r; ++i) {
            for (std::size_t j = 0; j < c; ++j) {
              const T gam = gamma.data()[j];
              if (training) {
                xg[i * c + j] += gam * inv_std[j] / n *
                                 (n * g[i * c + j] - sum_d[j] - xhat[i * c + j] * sum_dx[j]);
              } else {
                xg[i * c + j] += gam * inv_std[j] * g[i * c + j];
              }
            }
          }
        }
      });
}

template <typename T>
Tensor<T> row_normalize(const Tensor<T>& x, double eps) {
  require_2d(x.shape(), "row_normalize");
  const std::size_t r = x.rows(), c = x.cols();
  std::vector<T> out(x.size()), norms(r);
  for (std::size_t i = 0; i < r; ++i) {
    T ss{0};
    for (std::size_t j = 0; j < c; ++j) ss += x.data()[i * c + j] * x.data()[i * c + j];
    norms[i] = std::sqrt(ss);
    const T denom = std::max(norms[i], static_cast<T>(eps));
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = x.data()[i * c + j] / denom;
  }
  const std::vector<T> y = out;
  return finish<T>("row_normalize", x.shape(), std::move(out), {x},
                   [x, y, norms, eps, r, c](Tensor<T>&, std::span<const T> g) mutable {
                     auto xg = x.mutable_grad();
                     for (std::size_t i = 0; i < r; ++i) {
                       if (norms[i] > static_cast<T>(eps)) {
                         T dot{0};
                         for (std::size_t j = 0; j < c; ++j) dot += y[i * c + j] * g[i * c + j];
                         for (std::size_t j = 0; j < c; ++j) {
                           xg[i * c + j] += (g[i * c + j] - y[i * c + j] * dot) / norms[i];
                         }
                       } else {
                         for (std::size_t j = 0; j < c; ++j) {
                           xg[i * c + j] += g[i * c + j] / static_cast<T>(eps);
                         }
                       }
                     }
                   });
}

// ---------------------------------------------------------------------------
// Activations.

namespace {
template <typename T>
void softmax_rows(const T* in, T* out, std::size_t r, std::size_t c) {
  for (std::size_t i = 0; i < r; ++i) {
    const T* row = in + i * c;
    T* o = out + i * c;
    const T mx = *std::max_element(row, row + c);
    T total{0};
    for (std::size_t j = 0; j < c; ++j) {
      o[j] = std::exp(row[j] - mx);
      total += o[j];
    }
    for (std::size_t j = 0; j < c; ++j) o[j] /= total;
  }
}
}  // namespace

template <typename T>
Tensor<T> softmax(const Tensor<T>& x) {
  const std::size_t r = x.rows(), c = x.cols();
  std::vector<T> out(x.size());
  softmax_rows(x.data(), out.data(), r, c);
  const std::vector<T> y = out;
  return finish<T>("softmax", x.shape(), std::move(out), {x},
                   [x, y, r, c](Tensor<T>&, std::span<const T> g) mutable {
                     auto xg = x.mutable_grad();
                     for (std::size_t i = 0; i < r; ++i) {
                       T dot{0};
                       for (std::size_t j = 0; j < c; ++j) dot += g[i * c + j] * y[i * c + j];
                       for (std::size_t j = 0; j < c; ++j) {
                         xg[i * c + j] += y[i * c + j] * (g[i * c + j] - dot);
                       }
                     }
                   });
}

template <typename T>
Tensor<T> log_softmax(const Tensor<T>& x) {
  const std::size_t r = x.rows(), c = x.cols();
  std::vector<T> out(x.size()), probs(x.size());
  for (std::size_t i = 0; i < r; ++i) {
    const T* row = x.data() + i * c;
    const T mx = *std::max_element(row, row + c);
    T total{0};
    for (std::size_t j = 0; j < c; ++j) total += std::exp(row[j] - mx);
    const T lse = mx + std::log(total);
    for (std::size_t j = 0; j < c; ++j) {
      out[i * c + j] = row[j] - lse;
      probs[i * c + j] = std::exp(out[i * c + j]);
    }
  }
  return finish<T>("log_softmax", x.shape(), std::move(out), {x},
                   [x, probs, r, c](Tensor<T>&, std::span<const T> g) mutable {
                     auto xg = x.mutable_grad();
                     for (std::size_t i = 0; i < r; ++i) {
                       T total{0};
                       for (std::size_t j = 0; j < c; ++j) total += g[i * c + j];
                       for (std::size_t j = 0; j < c; ++j) {
                         xg[i * c + j] += g[i * c + j] - probs[i * c + j] * total;
                       }
                     }
                   });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid_scalar(x.data()[i]);
  const std::vector<T> y = out;
  return finish<T>("sigmoid", x.shape(), std::move(out), {x},
                   [x, y](Tensor<T>&, std::span<const T> g) mutable {
                     auto xg = x.mutable_grad();
                     for (std::size_t i = 0; i < g.size(); ++i) {
                       xg[i] += g[i] * y[i] * (T{1} - y[i]);
                     }
                   });
}

template <typename T>
Tensor<T> swish(const Tensor<T>& x) {
  std::vector<T> out(x.size()), sig(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    sig[i] = sigmoid_scalar(x.data()[i]);
    out[i] = x.data()[i] * sig[i];
  }
  return finish<T>("swish", x.shape(), std::move(out), {x},
                   [x, sig](Tensor<T>&, std::span<const T> g) mutable {
                     auto xg = x.mutable_grad();
                     for (std::size_t i = 0; i < g.size(); ++i) {
                       const T s = sig[i];
                       xg[i] += g[i] * (s + x.data()[i] * s * (T{1} - s));
                     }
                   });
}

template <typename T>
Tensor<T> glu(const Tensor<T>& x) {
  require_2d(x.shape(), "glu");
  require(x.cols() % 2 == 0, "glu", "column count must be even");
  const std::size_t r = x.rows(), c2 = x.cols(), c = c2 / 2;
  std::vector<T> out(r * c), gate(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      gate[i * c + j] = sigmoid_scalar(x.data()[i * c2 + c + j]);
      out[i * c + j] = x.data()[i * c2 + j] * gate[i * c + j];
    }
  }
  return finish<T>("glu", {r, c}, std::move(out), {x},
                   [x, gate, r, c, c2](Tensor<T>&, std::span<const T> g) mutable {
                     auto xg = x.mutable_grad();
                     for (std::size_t i = 0; i < r; ++i) {
                       for (std::size_t j = 0; j < c; ++j) {
                         const T s = gate[i * c + j];
                         const T a = x.data()[i * c2 + j];
                         xg[i * c2 + j] += g[i * c + j] * s;
                         xg[i * c2 + c + j] += g[i * c + j] * a * s * (T{1} - s);
                       }
                     }
                   });
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double rate, Rng& rng, bool training) {
  if (rate < 0.0 || rate >= 1.0) throw ContractError("dropout rate must be in [0, 1)");
  if (!training || rate == 0.0) return x;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
  std::vector<T> mask(x.size()), out(x.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = uniform(rng) < rate ? T{0} : keep_scale;
    out[i] = x.data()[i] * mask[i];
  }
  return finish<T>("dropout", x.shape(), std::move(out), {x},
                   [x, mask](Tensor<T>&, std::span<const T> g) mutable {
                     auto xg = x.mutable_grad();
                     for (std::size_t i = 0; i < g.size(); ++i) xg[i] += g[i] * mask[i];
                   });
}

// ---------------------------------------------------------------------------
// Convolution.

template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias,
                 std::size_t groups, Padding padding, std::size_t seq_len) {
  require_2d(x.shape(), "conv1d");
  require(kernel.rank() == 3, "conv1d", "kernel must be [C_out, C_in/groups, k]");
  const std::size_t c_in = x.cols(), c_out = kernel.dim(0), cin_g = kernel.dim(1),
                    k = kernel.dim(2);
  require(groups >= 1 && c_in % groups == 0 && c_out % groups == 0, "conv1d",
          "channels not divisible by groups");
  require(cin_g == c_in / groups, "conv1d", "kernel input channels disagree with groups");
  require(seq_len > 0 && x.rows() % seq_len == 0, "conv1d", "rows not divisible by seq_len");
  require(!bias.defined() || bias.size() == c_out, "conv1d", "bias size disagrees");
  const std::size_t pad_left = padding == Padding::kSame ? (k - 1) / 2 : 0;
  const std::size_t pad_right = padding == Padding::kSame ? k / 2 : 0;
  const std::size_t padded = seq_len + pad_left + pad_right;
  if (k > padded) {
    throw DimensionError("conv1d: kernel of " + std::to_string(k) +
                         " taps is longer than padded input of " + std::to_string(padded));
  }
  const std::size_t out_len = padded - k + 1;
  const std::size_t nseq = x.rows() / seq_len;
  const std::size_t cout_g = c_out / groups;
  std::vector<T> out(nseq * out_len * c_out, T{0});

  const bool pointwise = (k == 1 && groups == 1);
  if (pointwise) {
    // [C_out, C_in, 1] viewed as C_out x C_in.
    ConstMap<T> w(kernel.data(), c_out, c_in);
    MutMap<T>(out.data(), x.rows(), c_out).noalias() = as_matrix(x) * w.transpose();
  } else {
    for (std::size_t s = 0; s < nseq; ++s) {
      for (std::size_t t = 0; t < out_len; ++t) {
        T* o = out.data() + (s * out_len + t) * c_out;
        for (std::size_t j = 0; j < k; ++j) {
          const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(t + j) -
                                    static_cast<std::ptrdiff_t>(pad_left);
          if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(seq_len)) continue;
          const T* xi = x.data() + (s * seq_len + static_cast<std::size_t>(ti)) * c_in;
          for (std::size_t co = 0; co < c_out; ++co) {
            const std::size_t g0 = (co / cout_g) * cin_g;
            const T* w = kernel.data() + co * cin_g * k + j;
            T acc{0};
            for (std::size_t ci = 0; ci < cin_g; ++ci) acc += w[ci * k] * xi[g0 + ci];
            o[co] += acc;
          }
        }
      }
    }
  }
  if (bias.defined()) {
    for (std::size_t r = 0; r < nseq * out_len; ++r) {
      for (std::size_t co = 0; co < c_out; ++co) out[r * c_out + co] += bias.data()[co];
    }
  }
  return finish<T>(
      "conv1d", {nseq * out_len, c_out}, std::move(out), {x, kernel, bias},
      [=](Tensor<T>&, std::span<const T> g) mutable {
        if (wants(bias)) {
          auto bg = bias.mutable_grad();
          for (std::size_t r = 0; r < nseq * out_len; ++r) {
            for (std::size_t co = 0; co < c_out; ++co) bg[co] += g[r * c_out + co];
          }
        }
        if (pointwise) {
          auto G = grad_view(g, nseq * out_len, c_out);
          if (wants(x)) {
            grad_matrix(x).noalias() += G * ConstMap<T>(kernel.data(), c_out, c_in);
          }
          if (wants(kernel)) {
            auto kg = kernel.mutable_grad();
            MutMap<T>(kg.data(), c_out, c_in).noalias() += G.transpose() * as_matrix(x);
          }
          return;
        }
        std::span<T> xg = wants(x) ? x.mutable_grad() : std::span<T>();
        std::span<T> kg = wants(kernel) ? kernel.mutable_grad() : std::span<T>();
        for (std::size_t s = 0; s < nseq; ++s) {
          for (std::size_t t = 0; t < out_len; ++t) {
            const T* go = g.data() + (s * out_len + t) * c_out;
            for (std::size_t j = 0; j < k; ++j) {
              const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(t + j) -
                                        static_cast<std::ptrdiff_t>(pad_left);
              if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(seq_len)) continue;
              const std::size_t row = s * seq_len + static_cast<std::size_t>(ti);
              const T* xi = x.data() + row * c_in;
              for (std::size_t co = 0; co < c_out; ++co) {
                const std::size_t g0 = (co / cout_g) * cin_g;
                const std::size_t wbase = co * cin_g * k + j;
                for (std::size_t ci = 0; ci < cin_g; ++ci) {
                  if (!kg.empty()) kg[wbase + ci * k] += go[co] * xi[g0 + ci];
                  if (!xg.empty()) xg[row * c_in + g0 + ci] += go[co] * kernel.data()[wbase + ci * k];
                }
              }
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Attention.

template <typename T>
Tensor<T> attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                    std::size_t num_heads, std::size_t seq_len) {
  require_2d(q.shape(), "attention");
  require(q.shape() == k.shape() && q.shape() == v.shape(), "attention",
          "query, key and value shapes must agree");
  const std::size_t rows = q.rows(), d = q.cols();
  if (num_heads == 0 || d % num_heads != 0) {
    throw ContractError("attention: width " + std::to_string(d) +
                        " is not divisible by " + std::to_string(num_heads) + " heads");
  }
  require(seq_len > 0 && rows % seq_len == 0, "attention", "rows not divisible by seq_len");
  const std::size_t dh = d / num_heads, nseq = rows / seq_len, L = seq_len;
  const T inv_sqrt = T{1} / std::sqrt(static_cast<T>(dh));
  // Attention weights per (sequence, head), kept for backward.
  std::vector<T> probs(nseq * num_heads * L * L);
  std::vector<T> out(rows * d);
  RowMat<T> scores(L, L);
  for (std::size_t s = 0; s < nseq; ++s) {
    for (std::size_t h = 0; h < num_heads; ++h) {
      const std::size_t off = s * L * d + h * dh;
      ConstStrided<T> Q(q.data() + off, L, dh, Eigen::OuterStride<>(d));
      ConstStrided<T> K(k.data() + off, L, dh, Eigen::OuterStride<>(d));
      ConstStrided<T> V(v.data() + off, L, dh, Eigen::OuterStride<>(d));
      scores.noalias() = (Q * K.transpose()) * inv_sqrt;
      T* P = probs.data() + (s * num_heads + h) * L * L;
      softmax_rows(scores.data(), P, L, L);
      MutStrided<T>(out.data() + off, L, dh, Eigen::OuterStride<>(d)).noalias() =
          ConstMap<T>(P, L, L) * V;
    }
  }
  return finish<T>(
      "attention", q.shape(), std::move(out), {q, k, v},
      [=](Tensor<T>&, std::span<const T> g) mutable {
        std::span<T> qg = wants(q) ? q.mutable_grad() : std::span<T>();
        std::span<T> kg = wants(k) ? k.mutable_grad() : std::span<T>();
        std::span<T> vg = wants(v) ? v.mutable_grad() : std::span<T>();
        RowMat<T> dP(L, L), dS(L, L);
        for (std::size_t s = 0; s < nseq; ++s) {
          for (std::size_t h = 0; h < num_heads; ++h) {
            const std::size_t off = s * L * d + h * dh;
            ConstStrided<T> Q(q.data() + off, L, dh, Eigen::OuterStride<>(d));
            ConstStrided<T> K(k.data() + off, L, dh, Eigen::OuterStride<>(d));
            ConstStrided<T> V(v.data() + off, L, dh, Eigen::OuterStride<>(d));
            ConstStrided<T> G(g.data() + off, L, dh, Eigen::OuterStride<>(d));
            ConstMap<T> P(probs.data() + (s * num_heads + h) * L * L, L, L);
            if (!vg.empty()) {
              MutStrided<T>(vg.data() + off, L, dh, Eigen::OuterStride<>(d)).noalias() +=
                  P.transpose() * G;
            }
            if (qg.empty() && kg.empty()) continue;
            dP.noalias() = G * V.transpose();
            for (std::size_t i = 0; i < L; ++i) {
              T dot{0};
              for (std::size_t j = 0; j < L; ++j) dot += dP(i, j) * P(i, j);
              for (std::size_t j = 0; j < L; ++j) dS(i, j) = P(i, j) * (dP(i, j) - dot) * inv_sqrt;
            }
            if (!qg.empty()) {
              MutStrided<T>(qg.data() + off, L, dh, Eigen::OuterStride<>(d)).noalias() += dS * K;
            }
            if (!kg.empty()) {
              MutStrided<T>(kg.data() + off, L, dh, Eigen::OuterStride<>(d)).noalias() +=
                  dS.transpose() * Q;
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Masking, pooling and losses.

template <typename T>
Tensor<T> mask_rows(const Tensor<T>& x, const std::vector<bool>& mask,
                    const Tensor<T>& replacement) {
  require_2d(x.shape(), "mask_rows");
  if (mask.size() != x.rows()) {
    throw ContractError("mask_rows: mask has " + std::to_string(mask.size()) +
                        " entries for " + std::to_string(x.rows()) + " rows");
  }
  const std::size_t c = x.cols();
  require(replacement.size() == c, "mask_rows", "replacement width disagrees");
  std::vector<T> out(x.values().begin(), x.values().end());
  for (std::size_t r = 0; r < mask.size(); ++r) {
    if (mask[r]) std::copy_n(replacement.data(), c, out.data() + r * c);
  }
  return finish<T>("mask_rows", x.shape(), std::move(out), {x, replacement},
                   [x, mask, replacement, c](Tensor<T>&, std::span<const T> g) mutable {
                     std::span<T> xg = wants(x) ? x.mutable_grad() : std::span<T>();
                     std::span<T> rg =
                         wants(replacement) ? replacement.mutable_grad() : std::span<T>();
                     for (std::size_t r = 0; r < mask.size(); ++r) {
                       for (std::size_t j = 0; j < c; ++j) {
                         if (mask[r]) {
                           if (!rg.empty()) rg[j] += g[r * c + j];
                         } else if (!xg.empty()) {
                           xg[r * c + j] += g[r * c + j];
                         }
                       }
                     }
                   });
}

template <typename T>
Tensor<T> linear_softmax_pool(const Tensor<T>& frame_probs, std::size_t seq_len) {
  const Tensor<T>& y = frame_probs;
  require_2d(y.shape(), "linear_softmax_pool");
  require(seq_len > 0 && y.rows() % seq_len == 0, "linear_softmax_pool",
          "rows not divisible by seq_len");
  for (T v : y.values()) {
    if (!(v >= T{0} && v <= T{1})) {
      throw ContractError("linear_softmax_pool: frame probabilities must lie in [0, 1]");
    }
  }
  const std::size_t nseq = y.rows() / seq_len, c = y.cols();
  std::vector<T> s1(nseq * c, T{0}), s2(nseq * c, T{0}), out(nseq * c, T{0});
  for (std::size_t r = 0; r < y.rows(); ++r) {
    const std::size_t s = r / seq_len;
    for (std::size_t j = 0; j < c; ++j) {
      const T v = y.data()[r * c + j];
      s1[s * c + j] += v;
      s2[s * c + j] += v * v;
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s1[i] > T{0} ? s2[i] / s1[i] : T{0};
  return finish<T>("linear_softmax_pool", {nseq, c}, std::move(out), {y},
                   [y, s1, s2, seq_len, c](Tensor<T>&, std::span<const T> g) mutable {
                     auto yg = y.mutable_grad();
                     for (std::size_t r = 0; r < y.rows(); ++r) {
                       const std::size_t s = r / seq_len;
                       for (std::size_t j = 0; j < c; ++j) {
                         const T a = s1[s * c + j];
                         if (a <= T{0}) continue;
                         const T v = y.data()[r * c + j];
                         yg[r * c + j] += g[s * c + j] * (T{2} * v * a - s2[s * c + j]) / (a * a);
                       }
                     }
                   });
}

template <typename T>
Tensor<T> binary_cross_entropy(const Tensor<T>& probs, const Tensor<T>& targets,
                               double clamp) {
  if (probs.shape() != targets.shape()) {
    throw ContractError("binary_cross_entropy: probabilities " +
                        shape_string(probs.shape()) + " vs targets " +
                        shape_string(targets.shape()));
  }
  const T lo = static_cast<T>(clamp), hi = static_cast<T>(1.0 - clamp);
  const std::size_t n = probs.size();
  T total{0};
  for (std::size_t i = 0; i < n; ++i) {
    const T p = std::clamp(probs.data()[i], lo, hi);
    const T t = targets.data()[i];
    total -= t * std::log(p) + (T{1} - t) * std::log(T{1} - p);
  }
  return finish<T>("binary_cross_entropy", {1}, {total / static_cast<T>(n)}, {probs},
                   [probs, targets, lo, hi, n](Tensor<T>&, std::span<const T> g) mutable {
                     auto pg = probs.mutable_grad();
                     for (std::size_t i = 0; i < n; ++i) {
                       const T raw = probs.data()[i];
                       if (raw < lo || raw > hi) continue;  // clamped: flat
                       const T t = targets.data()[i];
                       pg[i] += g[0] * (-t / raw + (T{1} - t) / (T{1} - raw)) / static_cast<T>(n);
                     }
                   });
}

template <typename T>
Tensor<T> symmetric_bernoulli_kl(const Tensor<T>& p, const Tensor<T>& q, double clamp) {
  if (p.shape() != q.shape()) {
    throw ContractError("symmetric_bernoulli_kl: " + shape_string(p.shape()) + " vs " +
                        shape_string(q.shape()));
  }
  const T lo = static_cast<T>(clamp), hi = static_cast<T>(1.0 - clamp);
  const std::size_t n = p.size();
  auto logit = [](T x) { return std::log(x) - std::log(T{1} - x); };
  T total{0};
  for (std::size_t i = 0; i < n; ++i) {
    const T a = std::clamp(p.data()[i], lo, hi);
    const T b = std::clamp(q.data()[i], lo, hi);
    // KL(a||b) + KL(b||a) = (a - b) * (logit(a) - logit(b))
    total += (a - b) * (logit(a) - logit(b));
  }
  return finish<T>(
      "symmetric_bernoulli_kl", {1}, {total / static_cast<T>(n)}, {p, q},
      [p, q, lo, hi, n, logit](Tensor<T>&, std::span<const T> g) mutable {
        std::span<T> pg = wants(p) ? p.mutable_grad() : std::span<T>();
        std::span<T> qg = wants(q) ? q.mutable_grad() : std::span<T>();
        const T scale_factor = g[0] / static_cast<T>(n);
        for (std::size_t i = 0; i < n; ++i) {
          const T ra = p.data()[i], rb = q.data()[i];
          const T a = std::clamp(ra, lo, hi), b = std::clamp(rb, lo, hi);
          const T dl = logit(a) - logit(b);
          if (!pg.empty() && ra >= lo && ra <= hi) {
            pg[i] += scale_factor * (dl + (a - b) / (a * (T{1} - a)));
          }
          if (!qg.empty() && rb >= lo && rb <= hi) {
            qg[i] += scale_factor * (-dl - (a - b) / (b * (T{1} - b)));
          }
        }
      });
}

// ---------------------------------------------------------------------------

#define SSLAUDIO_INSTANTIATE_OPS(T)                                                   \
  template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                      \
  template Tensor<T> matmul_nt(const Tensor<T>&, const Tensor<T>&);                   \
  template Tensor<T> transpose(const Tensor<T>&);                                     \
  template Tensor<T> reshape(const Tensor<T>&, Shape);                                \
  template Tensor<T> concat(std::span<const Tensor<T>>, std::size_t);                 \
  template Tensor<T> slice_rows(const Tensor<T>&, std::size_t, std::size_t);          \
  template Tensor<T> gather_rows(const Tensor<T>&, std::span<const std::size_t>);     \
  template Tensor<T> take_along_rows(const Tensor<T>&, std::span<const std::size_t>,  \
                                     std::size_t);                                    \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                         \
  template Tensor<T> add_bias(const Tensor<T>&, const Tensor<T>&);                    \
  template Tensor<T> scale(const Tensor<T>&, double);                                 \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);    \
  template Tensor<T> sum(const Tensor<T>&);                                           \
  template Tensor<T> mean(const Tensor<T>&);                                          \
  template Tensor<T> segment_mean(const Tensor<T>&, std::size_t);                     \
  template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                double);                                              \
  template Tensor<T> batch_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, \
                                std::span<const T>, std::span<const T>, bool, double, \
                                BatchStats<T>*);                                      \
  template Tensor<T> row_normalize(const Tensor<T>&, double);                         \
  template Tensor<T> softmax(const Tensor<T>&);                                       \
  template Tensor<T> log_softmax(const Tensor<T>&);                                   \
  template Tensor<T> sigmoid(const Tensor<T>&);                                       \
  template Tensor<T> swish(const Tensor<T>&);                                         \
  template Tensor<T> glu(const Tensor<T>&);                                           \
  template Tensor<T> dropout(const Tensor<T>&, double, Rng&, bool);                   \
  template Tensor<T> conv1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,     \
                            std::size_t, Padding, std::size_t);                       \
  template Tensor<T> attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,  \
                               std::size_t, std::size_t);                             \
  template Tensor<T> mask_rows(const Tensor<T>&, const std::vector<bool>&,            \
                               const Tensor<T>&);                                     \
  template Tensor<T> linear_softmax_pool(const Tensor<T>&, std::size_t);              \
  template Tensor<T> binary_cross_entropy(const Tensor<T>&, const Tensor<T>&, double);\
  template Tensor<T> symmetric_bernoulli_kl(const Tensor<T>&, const Tensor<T>&, double);

SSLAUDIO_INSTANTIATE_OPS(float)
SSLAUDIO_INSTANTIATE_OPS(double)

#undef SSLAUDIO_INSTANTIATE_OPS

}  // namespace ops
}  // namespace sslaudio
