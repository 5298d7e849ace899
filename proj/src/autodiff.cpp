// SPDX-License-Identifier: Apache-2.0
#include "acnet/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "acnet/errors.hpp"

namespace acnet::ad {

Var Var::leaf(Matrix value) {
  if (!value.all_finite()) throw NumericError("leaf: non-finite value");
  return Var(std::make_shared<Node>(std::move(value)));
}

const Matrix& Var::value() const {
  if (!node_) throw ContractError("value() on empty Var");
  return node_->value;
}

const Matrix& Var::grad() const {
  if (!node_) throw ContractError("grad() on empty Var");
  return node_->grad;
}

Matrix& Var::mutable_value() {
  if (!node_) throw ContractError("mutable_value() on empty Var");
  return node_->value;
}

Matrix& Var::mutable_grad() {
  if (!node_) throw ContractError("mutable_grad() on empty Var");
  return node_->grad;
}

void Var::zero_grad() {
  if (!node_) throw ContractError("zero_grad() on empty Var");
  node_->grad.fill(0.0);
}

Var make_op(Matrix value, std::vector<Var> parents,
            std::function<void(Node&)> backprop, const char* op_name) {
  if (!value.all_finite()) {
    throw NumericError(std::string(op_name) + ": non-finite result");
  }
  auto node = std::make_shared<Node>(std::move(value));
  node->op = op_name;
  node->parents.reserve(parents.size());
  for (auto& p : parents) {
    if (!p.defined()) throw ContractError(std::string(op_name) + ": empty operand");
    node->parents.push_back(p.node());
  }
  node->backprop = std::move(backprop);
  return Var(std::move(node));
}

// ---- arithmetic ------------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " times " +
                         std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  Matrix out = matmul_values(a.value(), b.value());
  return make_op(std::move(out), {a, b},
                 [](Node& self) {
                   const Matrix& av = self.parents[0]->value;
                   const Matrix& bv = self.parents[1]->value;
                   self.parents[0]->grad.add_scaled(matmul_nt(self.grad, bv), 1.0);
                   self.parents[1]->grad.add_scaled(matmul_tn(av, self.grad), 1.0);
                 },
                 "matmul");
}

Var transpose(const Var& x) {
  return make_op(transposed(x.value()), {x},
                 [](Node& self) {
                   self.parents[0]->grad.add_scaled(transposed(self.grad), 1.0);
                 },
                 "transpose");
}

Var add(const Var& a, const Var& b) {
  if (!a.value().same_shape(b.value())) throw DimensionError("add: shape mismatch");
  Matrix out = a.value();
  out.add_scaled(b.value(), 1.0);
  return make_op(std::move(out), {a, b},
                 [](Node& self) {
                   self.parents[0]->grad.add_scaled(self.grad, 1.0);
                   self.parents[1]->grad.add_scaled(self.grad, 1.0);
                 },
                 "add");
}

Var add_rowvec(const Var& x, const Var& b) {
  if (b.rows() != 1 || b.cols() != x.cols()) {
    throw DimensionError("add_rowvec: bias must be 1 x cols");
  }
  Matrix out = x.value();
  for (int i = 0; i < out.rows(); ++i) {
    double* r = out.row_ptr(i);
    const double* bv = b.value().row_ptr(0);
    for (int j = 0; j < out.cols(); ++j) r[j] += bv[j];
  }
  return make_op(std::move(out), {x, b},
                 [](Node& self) {
                   self.parents[0]->grad.add_scaled(self.grad, 1.0);
                   Matrix& bg = self.parents[1]->grad;
                   for (int i = 0; i < self.grad.rows(); ++i) {
                     const double* g = self.grad.row_ptr(i);
                     for (int j = 0; j < self.grad.cols(); ++j) bg(0, j) += g[j];
                   }
                 },
                 "add_rowvec");
}

Var sub(const Var& a, const Var& b) {
  if (!a.value().same_shape(b.value())) throw DimensionError("sub: shape mismatch");
  Matrix out = a.value();
  out.add_scaled(b.value(), -1.0);
  return make_op(std::move(out), {a, b},
                 [](Node& self) {
                   self.parents[0]->grad.add_scaled(self.grad, 1.0);
                   self.parents[1]->grad.add_scaled(self.grad, -1.0);
                 },
                 "sub");
}

Var mul(const Var& a, const Var& b) {
  if (!a.value().same_shape(b.value())) throw DimensionError("mul: shape mismatch");
  Matrix out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.value().data()[i];
  return make_op(std::move(out), {a, b},
                 [](Node& self) {
                   const Matrix& av = self.parents[0]->value;
                   const Matrix& bv = self.parents[1]->value;
                   Matrix& ag = self.parents[0]->grad;
                   Matrix& bg = self.parents[1]->grad;
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                     ag.data()[i] += self.grad.data()[i] * bv.data()[i];
                     bg.data()[i] += self.grad.data()[i] * av.data()[i];
                   }
                 },
                 "mul");
}

Var cmul(const Var& x, const Matrix& c) {
  if (!x.value().same_shape(c)) throw DimensionError("cmul: shape mismatch");
  Matrix out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= c.data()[i];
  return make_op(std::move(out), {x},
                 [c](Node& self) {
                   Matrix& g = self.parents[0]->grad;
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                     g.data()[i] += self.grad.data()[i] * c.data()[i];
                   }
                 },
                 "cmul");
}

Var mask_rows(const Var& x, const Matrix& col) {
  if (col.rows() != x.rows() || col.cols() != 1) {
    throw DimensionError("mask_rows: mask must be rows x 1");
  }
  Matrix out = x.value();
  for (int i = 0; i < out.rows(); ++i) {
    const double m = col(i, 0);
    double* r = out.row_ptr(i);
    for (int j = 0; j < out.cols(); ++j) r[j] *= m;
  }
  return make_op(std::move(out), {x},
                 [col](Node& self) {
                   Matrix& g = self.parents[0]->grad;
                   for (int i = 0; i < self.grad.rows(); ++i) {
                     const double m = col(i, 0);
                     const double* sg = self.grad.row_ptr(i);
                     double* pg = g.row_ptr(i);
                     for (int j = 0; j < self.grad.cols(); ++j) pg[j] += m * sg[j];
                   }
                 },
                 "mask_rows");
}

Var scale(const Var& x, double s) { return affine(x, s, 0.0); }

Var affine(const Var& x, double a, double b) {
  Matrix out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = a * out.data()[i] + b;
  return make_op(std::move(out), {x},
                 [a](Node& self) { self.parents[0]->grad.add_scaled(self.grad, a); },
                 "affine");
}

// ---- elementwise nonlinearities --------------------------------------------

Var relu(const Var& x) {
  Matrix out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::max(0.0, out.data()[i]);
  return make_op(std::move(out), {x},
                 [](Node& self) {
                   const Matrix& xv = self.parents[0]->value;
                   Matrix& g = self.parents[0]->grad;
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                     if (xv.data()[i] > 0.0) g.data()[i] += self.grad.data()[i];
                   }
                 },
                 "relu");
}

Var sigmoid(const Var& x) {
  Matrix out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = out.data()[i];
    // equivalent branches keep exp() argument non-positive
    out.data()[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                             : std::exp(v) / (1.0 + std::exp(v));
  }
  return make_op(std::move(out), {x},
                 [](Node& self) {
                   Matrix& g = self.parents[0]->grad;
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                     const double y = self.value.data()[i];
                     g.data()[i] += self.grad.data()[i] * y * (1.0 - y);
                   }
                 },
                 "sigmoid");
}

Var vexp(const Var& x) {
  Matrix out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] = std::exp(out.data()[i]);
  return make_op(std::move(out), {x},
                 [](Node& self) {
                   Matrix& g = self.parents[0]->grad;
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                     g.data()[i] += self.grad.data()[i] * self.value.data()[i];
                   }
                 },
                 "exp");
}

Var vlog(const Var& x) {
  Matrix out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.data()[i] <= 0.0) throw NumericError("log: operand must be positive");
    out.data()[i] = std::log(out.data()[i]);
  }
  return make_op(std::move(out), {x},
                 [](Node& self) {
                   const Matrix& xv = self.parents[0]->value;
                   Matrix& g = self.parents[0]->grad;
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                     g.data()[i] += self.grad.data()[i] / xv.data()[i];
                   }
                 },
                 "log");
}

Var vpow(const Var& x, double p) {
  Matrix out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.data()[i] < 0.0) throw NumericError("pow: operand must be non-negative");
    out.data()[i] = std::pow(out.data()[i], p);
  }
  return make_op(std::move(out), {x},
                 [p](Node& self) {
                   const Matrix& xv = self.parents[0]->value;
                   Matrix& g = self.parents[0]->grad;
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                     const double d = p * std::pow(xv.data()[i], p - 1.0);
                     if (std::isfinite(d)) g.data()[i] += self.grad.data()[i] * d;
                   }
                 },
                 "pow");
}

Var clamp(const Var& x, double lo, double hi) {
  Matrix out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out.data()[i] = std::min(hi, std::max(lo, out.data()[i]));
  }
  return make_op(std::move(out), {x},
                 [lo, hi](Node& self) {
                   const Matrix& xv = self.parents[0]->value;
                   Matrix& g = self.parents[0]->grad;
                   for (std::size_t i = 0; i < self.grad.size(); ++i) {
                     if (xv.data()[i] > lo && xv.data()[i] < hi) {
                       g.data()[i] += self.grad.data()[i];
                     }
                   }
                 },
                 "clamp");
}

// ---- reductions and row ops ------------------------------------------------

Var softmax_rows(const Var& x) {
  if (x.rows() == 0 || x.cols() == 0) throw ContractError("softmax_rows: empty input");
  Matrix out = x.value();
  for (int i = 0; i < out.rows(); ++i) {
    double* r = out.row_ptr(i);
    double mx = r[0];
    for (int j = 1; j < out.cols(); ++j) mx = std::max(mx, r[j]);
    double denom = 0.0;
    for (int j = 0; j < out.cols(); ++j) {
      r[j] = std::exp(r[j] - mx);
      denom += r[j];
    }
    for (int j = 0; j < out.cols(); ++j) r[j] /= denom;
  }
  return make_op(std::move(out), {x},
                 [](Node& self) {
                   Matrix& g = self.parents[0]->grad;
                   for (int i = 0; i < self.grad.rows(); ++i) {
                     const double* y = self.value.row_ptr(i);
                     const double* sg = self.grad.row_ptr(i);
                     double dot = 0.0;
                     for (int j = 0; j < self.grad.cols(); ++j) dot += y[j] * sg[j];
                     double* pg = g.row_ptr(i);
                     for (int j = 0; j < self.grad.cols(); ++j) {
                       pg[j] += y[j] * (sg[j] - dot);
                     }
                   }
                 },
                 "softmax_rows");
}

Var logsumexp_rows(const Var& x) {
  if (x.rows() == 0 || x.cols() == 0) throw ContractError("logsumexp_rows: empty input");
  Matrix out(x.rows(), 1);
  for (int i = 0; i < x.rows(); ++i) {
    const double* r = x.value().row_ptr(i);
    double mx = r[0];
    for (int j = 1; j < x.cols(); ++j) mx = std::max(mx, r[j]);
    double s = 0.0;
    for (int j = 0; j < x.cols(); ++j) s += std::exp(r[j] - mx);
    out(i, 0) = mx + std::log(s);
  }
  return make_op(std::move(out), {x},
                 [](Node& self) {
                   const Matrix& xv = self.parents[0]->value;
                   Matrix& g = self.parents[0]->grad;
                   for (int i = 0; i < xv.rows(); ++i) {
                     const double lse = self.value(i, 0);
                     const double gi = self.grad(i, 0);
                     const double* r = xv.row_ptr(i);
                     double* pg = g.row_ptr(i);
                     for (int j = 0; j < xv.cols(); ++j) {
                       pg[j] += gi * std::exp(r[j] - lse);
                     }
                   }
                 },
                 "logsumexp_rows");
}

namespace {

constexpr double kNormFloor = 1e-12;

Matrix normalize_rows_impl(const Matrix& x, const Matrix* row_mask,
                           std::vector<double>& norms) {
  Matrix out = x;
  norms.assign(x.rows(), 0.0);
  for (int i = 0; i < x.rows(); ++i) {
    double* r = out.row_ptr(i);
    if (row_mask != nullptr && (*row_mask)(i, 0) == 0.0) {
      for (int j = 0; j < x.cols(); ++j) r[j] = 0.0;
      continue;
    }
    double sq = 0.0;
    for (int j = 0; j < x.cols(); ++j) sq += r[j] * r[j];
    const double n = std::sqrt(sq);
    if (n < kNormFloor) {
      throw NumericError("l2_normalize_rows: zero-norm row " + std::to_string(i));
    }
    norms[i] = n;
    for (int j = 0; j < x.cols(); ++j) r[j] /= n;
  }
  return out;
}

std::function<void(Node&)> normalize_backprop(std::vector<double> norms) {
  return [norms = std::move(norms)](Node& self) {
    Matrix& g = self.parents[0]->grad;
    for (int i = 0; i < self.value.rows(); ++i) {
      if (norms[i] == 0.0) continue;  // masked-out row
      const double* y = self.value.row_ptr(i);
      const double* sg = self.grad.row_ptr(i);
      double dot = 0.0;
      for (int j = 0; j < self.value.cols(); ++j) dot += y[j] * sg[j];
      double* pg = g.row_ptr(i);
      for (int j = 0; j < self.value.cols(); ++j) {
        pg[j] += (sg[j] - y[j] * dot) / norms[i];
      }
    }
  };
}

}  // namespace

Var l2_normalize_rows(const Var& x) {
  std::vector<double> norms;
  Matrix out = normalize_rows_impl(x.value(), nullptr, norms);
  return make_op(std::move(out), {x}, normalize_backprop(std::move(norms)),
                 "l2_normalize_rows");
}

Var l2_normalize_rows_masked(const Var& x, const Matrix& row_mask) {
  if (row_mask.rows() != x.rows() || row_mask.cols() != 1) {
    throw DimensionError("l2_normalize_rows_masked: mask must be rows x 1");
  }
  std::vector<double> norms;
  Matrix out = normalize_rows_impl(x.value(), &row_mask, norms);
  return make_op(std::move(out), {x}, normalize_backprop(std::move(norms)),
                 "l2_normalize_rows_masked");
}

Var sum_all(const Var& x) {
  Matrix out(1, 1);
  double s = 0.0;
  for (std::size_t i = 0; i < x.value().size(); ++i) s += x.value().data()[i];
  out(0, 0) = s;
  return make_op(std::move(out), {x},
                 [](Node& self) {
                   const double g = self.grad(0, 0);
                   Matrix& pg = self.parents[0]->grad;
                   for (std::size_t i = 0; i < pg.size(); ++i) pg.data()[i] += g;
                 },
                 "sum_all");
}

Var mean_all(const Var& x) {
  const double n = static_cast<double>(x.value().size());
  if (n == 0.0) throw ContractError("mean_all: empty input");
  return scale(sum_all(x), 1.0 / n);
}

Var row(const Var& x, int i) { return gather_rows(x, {i}); }

Var gather_rows(const Var& x, std::vector<int> indices) {
  Matrix out(static_cast<int>(indices.size()), x.cols());
  for (int k = 0; k < out.rows(); ++k) {
    const int i = indices[k];
    if (i < 0 || i >= x.rows()) throw DimensionError("gather_rows: index out of range");
    std::copy(x.value().row_ptr(i), x.value().row_ptr(i) + x.cols(), out.row_ptr(k));
  }
  return make_op(std::move(out), {x},
                 [indices = std::move(indices)](Node& self) {
                   Matrix& g = self.parents[0]->grad;
                   for (int k = 0; k < self.grad.rows(); ++k) {
                     const double* sg = self.grad.row_ptr(k);
                     double* pg = g.row_ptr(indices[k]);
                     for (int j = 0; j < self.grad.cols(); ++j) pg[j] += sg[j];
                   }
                 },
                 "gather_rows");
}

Var diag_part(const Var& x) {
  if (x.cols() < x.rows()) throw DimensionError("diag_part: cols < rows");
  Matrix out(x.rows(), 1);
  for (int i = 0; i < x.rows(); ++i) out(i, 0) = x.value()(i, i);
  return make_op(std::move(out), {x},
                 [](Node& self) {
                   Matrix& g = self.parents[0]->grad;
                   for (int i = 0; i < self.grad.rows(); ++i) g(i, i) += self.grad(i, 0);
                 },
                 "diag_part");
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_rows: no parts");
  const int cols = parts[0].cols();
  int rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) throw DimensionError("concat_rows: column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<Var> parents;
  std::vector<int> sizes;
  int at = 0;
  for (const Var& p : parts) {
    for (int i = 0; i < p.rows(); ++i) {
      std::copy(p.value().row_ptr(i), p.value().row_ptr(i) + cols, out.row_ptr(at + i));
    }
    at += p.rows();
    parents.push_back(p);
    sizes.push_back(p.rows());
  }
  return make_op(std::move(out), std::move(parents),
                 [sizes = std::move(sizes)](Node& self) {
                   int at = 0;
                   for (std::size_t k = 0; k < sizes.size(); ++k) {
                     Matrix& pg = self.parents[k]->grad;
                     for (int i = 0; i < sizes[k]; ++i) {
                       const double* sg = self.grad.row_ptr(at + i);
                       double* dst = pg.row_ptr(i);
                       for (int j = 0; j < self.grad.cols(); ++j) dst[j] += sg[j];
                     }
                     at += sizes[k];
                   }
                 },
                 "concat_rows");
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no parts");
  const int rows = parts[0].rows();
  int cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw DimensionError("concat_cols: row mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<Var> parents;
  std::vector<int> widths;
  int at = 0;
  for (const Var& p : parts) {
    for (int i = 0; i < rows; ++i) {
      std::copy(p.value().row_ptr(i), p.value().row_ptr(i) + p.cols(),
                out.row_ptr(i) + at);
    }
    at += p.cols();
    parents.push_back(p);
    widths.push_back(p.cols());
  }
  return make_op(std::move(out), std::move(parents),
                 [widths = std::move(widths)](Node& self) {
                   int at = 0;
                   for (std::size_t k = 0; k < widths.size(); ++k) {
                     Matrix& pg = self.parents[k]->grad;
                     for (int i = 0; i < self.grad.rows(); ++i) {
                       const double* sg = self.grad.row_ptr(i) + at;
                       double* dst = pg.row_ptr(i);
                       for (int j = 0; j < widths[k]; ++j) dst[j] += sg[j];
                     }
                     at += widths[k];
                   }
                 },
                 "concat_cols");
}

// ---- 2D temporal map ops ----------------------------------------------------

Var span_max_pool(const Var& clips, int n_clips) {
  if (clips.rows() != n_clips) throw DimensionError("span_max_pool: clip count mismatch");
  const int d = clips.cols();
  Matrix out(n_clips * n_clips, d);
  std::vector<int> argmax(static_cast<std::size_t>(n_clips) * n_clips * d, -1);
  for (int i = 0; i < n_clips; ++i) {
    for (int j = i; j < n_clips; ++j) {
      const int cell = i * n_clips + j;
      double* r = out.row_ptr(cell);
      int* am = argmax.data() + static_cast<std::size_t>(cell) * d;
      for (int c = 0; c < d; ++c) {
        double best = clips.value()(i, c);
        int best_k = i;
        for (int k = i + 1; k <= j; ++k) {
          if (clips.value()(k, c) > best) {
            best = clips.value()(k, c);
            best_k = k;
          }
        }
        r[c] = best;
        am[c] = best_k;
      }
    }
  }
  return make_op(std::move(out), {clips},
                 [argmax = std::move(argmax), d](Node& self) {
                   Matrix& g = self.parents[0]->grad;
                   for (int cell = 0; cell < self.grad.rows(); ++cell) {
                     const int* am = argmax.data() + static_cast<std::size_t>(cell) * d;
                     if (am[0] < 0) continue;  // invalid cell
                     const double* sg = self.grad.row_ptr(cell);
                     for (int c = 0; c < d; ++c) g(am[c], c) += sg[c];
                   }
                 },
                 "span_max_pool");
}

Var gather_patches(const Var& x, int n_clips, int kernel) {
  if (x.rows() != n_clips * n_clips) throw DimensionError("gather_patches: grid mismatch");
  if (kernel < 1) throw ConfigError("gather_patches: kernel must be >= 1");
  const int c = x.cols();
  const int taps = kernel * kernel;
  // "same" padding; for even kernels the extra pad goes on the high side.
  const int lo = (kernel - 1) / 2;
  std::vector<int> src(static_cast<std::size_t>(n_clips) * n_clips * taps, -1);
  for (int i = 0; i < n_clips; ++i) {
    for (int j = 0; j < n_clips; ++j) {
      const int cell = i * n_clips + j;
      int t = 0;
      for (int di = 0; di < kernel; ++di) {
        for (int dj = 0; dj < kernel; ++dj, ++t) {
          const int si = i + di - lo;
          const int sj = j + dj - lo;
          if (si >= 0 && si < n_clips && sj >= 0 && sj < n_clips) {
            src[static_cast<std::size_t>(cell) * taps + t] = si * n_clips + sj;
          }
        }
      }
    }
  }
  Matrix out(n_clips * n_clips, taps * c);
  for (int cell = 0; cell < out.rows(); ++cell) {
    double* r = out.row_ptr(cell);
    for (int t = 0; t < taps; ++t) {
      const int s = src[static_cast<std::size_t>(cell) * taps + t];
      if (s >= 0) {
        std::copy(x.value().row_ptr(s), x.value().row_ptr(s) + c, r + t * c);
      }
    }
  }
  return make_op(std::move(out), {x},
                 [src = std::move(src), taps, c](Node& self) {
                   Matrix& g = self.parents[0]->grad;
                   for (int cell = 0; cell < self.grad.rows(); ++cell) {
                     const double* sg = self.grad.row_ptr(cell);
                     for (int t = 0; t < taps; ++t) {
                       const int s = src[static_cast<std::size_t>(cell) * taps + t];
                       if (s < 0) continue;
                       double* dst = g.row_ptr(s);
                       for (int k = 0; k < c; ++k) dst[k] += sg[t * c + k];
                     }
                   }
                 },
                 "gather_patches");
}

// ---- backward ----------------------------------------------------------------

void backward(const Var& loss) {
  if (!loss.defined()) throw ContractError("backward: empty Var");
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw ContractError("backward: seed must be 1x1, got " +
                        std::to_string(loss.rows()) + "x" + std::to_string(loss.cols()));
  }

  // Iterative post-order DFS; reverse order is a valid topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  struct Frame {
    Node* node;
    std::size_t next_child;
  };
  std::vector<Frame> stack;
  stack.push_back({loss.node().get(), 0});
  visited.insert(loss.node().get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_child < f.node->parents.size()) {
      Node* child = f.node->parents[f.next_child++].get();
      if (visited.insert(child).second) stack.push_back({child, 0});
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  // Interior grads are scratch for this sweep; only leaves (parameters,
  // inputs) accumulate across repeated backward calls.
  for (Node* node : order) {
    if (node->backprop) node->grad.fill(0.0);
  }
  loss.node()->grad(0, 0) += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backprop) (*it)->backprop(**it);
  }
}

// ---- finite differences --------------------------------------------------------

GradCheckReport finite_diff_check(const std::function<Var()>& build_loss,
                                  std::span<const std::pair<std::string, Var>> params,
                                  double eps) {
  if (eps <= 0.0) throw ContractError("finite_diff_check: eps must be positive");

  for (const auto& [name, p] : params) {
    Var handle = p;  // shares the node
    handle.zero_grad();
  }
  Var loss = build_loss();
  backward(loss);

  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (const auto& [name, p] : params) analytic.push_back(p.grad());

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Var handle = params[pi].second;
    Matrix& value = handle.mutable_value();
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double orig = value.data()[k];
      value.data()[k] = orig + eps;
      const double f_plus = build_loss().value()(0, 0);
      value.data()[k] = orig - eps;
      const double f_minus = build_loss().value()(0, 0);
      value.data()[k] = orig;

      const double numeric = (f_plus - f_minus) / (2.0 * eps);
      const double a = analytic[pi].data()[k];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = params[pi].first;
        report.worst_index = static_cast<int>(k);
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace acnet::ad
