#include "feats/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "feats/errors.hpp"
#include "feats/kernels.hpp"

namespace feats {
namespace {

const kernels::KernelTable& K() { return kernels::active(); }

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
}

Shape matrix_shape(std::size_t rows, std::size_t cols) { return Shape{rows, cols}; }

void softmax_row(const double* in, double* out, std::size_t n) {
  double hi = in[0];
  for (std::size_t i = 1; i < n; ++i) hi = std::max(hi, in[i]);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(in[i] - hi);
    total += out[i];
  }
  const double inv = 1.0 / total;
  for (std::size_t i = 0; i < n; ++i) out[i] *= inv;
}

double weight_total(const Tensor& weights, std::size_t n) {
  if (weights.empty()) return static_cast<double>(n);
  if (weights.size() != n)
    throw DimensionError("loss weights have " + std::to_string(weights.size()) + " entries for " + std::to_string(n) +
                         " predictions");
  double total = 0.0;
  for (double w : weights.data()) {
    if (!(w > 0.0) || !std::isfinite(w)) throw DataError("sample weights must be positive and finite");
    total += w;
  }
  return total;
}

inline double weight_at(const Tensor& weights, std::size_t i) { return weights.empty() ? 1.0 : weights[i]; }

void check_targets(const Tensor& targets) {
  for (std::size_t i = 0; i < targets.size(); ++i)
    if (std::isnan(targets[i])) throw DataError("NaN target at row " + std::to_string(i));
}

double clamp_probability(double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor softmax_stable(const Tensor& v) {
  if (v.empty()) throw ArgumentError("softmax of an empty vector");
  Tensor out(v.shape());
  softmax_row(v.raw(), out.raw(), v.size());
  return out;
}

Tensor relu(const Tensor& v) {
  Tensor out = v;
  for (auto& x : out.data()) x = x > 0.0 ? x : 0.0;
  return out;
}

Tensor sigmoid(const Tensor& v) {
  Tensor out = v;
  for (auto& x : out.data()) x = sigmoid(x);
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (b.rank() != 2 || a.cols() != b.rows())
    throw DimensionError("matmul: inner extents differ for " + to_string(a.shape()) + " x " + to_string(b.shape()));
  Tensor out(matrix_shape(a.rows(), b.cols()));
  K().gemm_nn(a.rows(), b.cols(), a.cols(), a.raw(), b.raw(), out.raw(), false);
  return out;
}

Var matmul(Var a, Var b) {
  Graph& g = a.graph();
  Tensor out = matmul(a.value(), b.value());
  const auto ia = a.id(), ib = b.id();
  return g.record("matmul", std::move(out), {ia, ib}, [ia, ib](Graph& g, std::size_t self) {
    const Tensor& A = g.value(ia);
    const Tensor& B = g.value(ib);
    const Tensor& G = g.grad(self);
    const std::size_t r = A.rows(), k = A.cols(), c = B.cols();
    if (g.requires_grad(ia)) K().gemm_nt(r, k, c, G.raw(), B.raw(), g.grad_buffer(ia).raw(), true);
    if (g.requires_grad(ib)) K().gemm_tn(r, c, k, A.raw(), G.raw(), g.grad_buffer(ib).raw(), true);
  });
}

Var add(Var a, Var b) {
  require_same_shape("add", a.value(), b.value());
  Tensor out = a.value();
  K().axpy(out.size(), 1.0, b.value().raw(), out.raw());
  const auto ia = a.id(), ib = b.id();
  return a.graph().record("add", std::move(out), {ia, ib}, [ia, ib](Graph& g, std::size_t self) {
    const Tensor& G = g.grad(self);
    if (g.requires_grad(ia)) K().axpy(G.size(), 1.0, G.raw(), g.grad_buffer(ia).raw());
    if (g.requires_grad(ib)) K().axpy(G.size(), 1.0, G.raw(), g.grad_buffer(ib).raw());
  });
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a.value(), b.value());
  Tensor out = a.value();
  K().axpy(out.size(), -1.0, b.value().raw(), out.raw());
  const auto ia = a.id(), ib = b.id();
  return a.graph().record("sub", std::move(out), {ia, ib}, [ia, ib](Graph& g, std::size_t self) {
    const Tensor& G = g.grad(self);
    if (g.requires_grad(ia)) K().axpy(G.size(), 1.0, G.raw(), g.grad_buffer(ia).raw());
    if (g.requires_grad(ib)) K().axpy(G.size(), -1.0, G.raw(), g.grad_buffer(ib).raw());
  });
}

Var mul(Var a, Var b) {
  require_same_shape("mul", a.value(), b.value());
  Tensor out(a.value().shape());
  K().hadamard(out.size(), a.value().raw(), b.value().raw(), out.raw());
  const auto ia = a.id(), ib = b.id();
  return a.graph().record("mul", std::move(out), {ia, ib}, [ia, ib](Graph& g, std::size_t self) {
    const Tensor& G = g.grad(self);
    const std::size_t n = G.size();
    if (g.requires_grad(ia)) {
      double* da = g.grad_buffer(ia).raw();
      const double* bv = g.value(ib).raw();
      for (std::size_t i = 0; i < n; ++i) da[i] += G[i] * bv[i];
    }
    if (g.requires_grad(ib)) {
      double* db = g.grad_buffer(ib).raw();
      const double* av = g.value(ia).raw();
      for (std::size_t i = 0; i < n; ++i) db[i] += G[i] * av[i];
    }
  });
}

Var scale(Var a, double factor) {
  Tensor out = a.value();
  for (auto& x : out.data()) x *= factor;
  const auto ia = a.id();
  return a.graph().record("scale", std::move(out), {ia}, [ia, factor](Graph& g, std::size_t self) {
    const Tensor& G = g.grad(self);
    K().axpy(G.size(), factor, G.raw(), g.grad_buffer(ia).raw());
  });
}

Var add_bias(Var a, Var bias) {
  const Tensor& A = a.value();
  const std::size_t r = A.rows(), c = A.cols();
  if (bias.value().size() != c)
    throw DimensionError("add_bias: bias " + to_string(bias.value().shape()) + " does not match " + to_string(A.shape()));
  Tensor out = A;
  for (std::size_t i = 0; i < r; ++i) K().axpy(c, 1.0, bias.value().raw(), out.raw() + i * c);
  const auto ia = a.id(), ib = bias.id();
  return a.graph().record("add_bias", std::move(out), {ia, ib}, [ia, ib, r, c](Graph& g, std::size_t self) {
    const Tensor& G = g.grad(self);
    if (g.requires_grad(ia)) K().axpy(G.size(), 1.0, G.raw(), g.grad_buffer(ia).raw());
    if (g.requires_grad(ib)) {
      double* db = g.grad_buffer(ib).raw();
      for (std::size_t i = 0; i < r; ++i) K().axpy(c, 1.0, G.raw() + i * c, db);
    }
  });
}

Var scale_columns(Var a, Var v) {
  const Tensor& A = a.value();
  const std::size_t r = A.rows(), c = A.cols();
  if (v.value().size() != c)
    throw DimensionError("scale_columns: " + to_string(v.value().shape()) + " does not match " + to_string(A.shape()));
  Tensor out(A.shape());
  for (std::size_t i = 0; i < r; ++i) K().hadamard(c, A.raw() + i * c, v.value().raw(), out.raw() + i * c);
  const auto ia = a.id(), iv = v.id();
  return a.graph().record("scale_columns", std::move(out), {ia, iv}, [ia, iv, r, c](Graph& g, std::size_t self) {
    const Tensor& G = g.grad(self);
    if (g.requires_grad(ia)) {
      double* da = g.grad_buffer(ia).raw();
      const double* vv = g.value(iv).raw();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) da[i * c + j] += G[i * c + j] * vv[j];
    }
    if (g.requires_grad(iv)) {
      double* dv = g.grad_buffer(iv).raw();
      const double* av = g.value(ia).raw();
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) dv[j] += G[i * c + j] * av[i * c + j];
    }
  });
}

Var relu(Var a) {
  Tensor out = relu(a.value());
  const auto ia = a.id();
  return a.graph().record("relu", std::move(out), {ia}, [ia](Graph& g, std::size_t self) {
    const Tensor& G = g.grad(self);
    const Tensor& X = g.value(ia);
    double* da = g.grad_buffer(ia).raw();
    // relu'(0) is taken as 0.
    for (std::size_t i = 0; i < G.size(); ++i)
      if (X[i] > 0.0) da[i] += G[i];
  });
}

Var sigmoid(Var a) {
  Tensor out = sigmoid(a.value());
  const auto ia = a.id();
  return a.graph().record("sigmoid", std::move(out), {ia}, [ia](Graph& g, std::size_t self) {
    const Tensor& G = g.grad(self);
    const Tensor& Y = g.value(self);
    double* da = g.grad_buffer(ia).raw();
    for (std::size_t i = 0; i < G.size(); ++i) da[i] += G[i] * Y[i] * (1.0 - Y[i]);
  });
}

Var softmax_rows(Var a) {
  const Tensor& A = a.value();
  if (A.empty()) throw ArgumentError("softmax of an empty tensor");
  const std::size_t r = A.rows(), c = A.cols();
  Tensor out(A.shape());
  for (std::size_t i = 0; i < r; ++i) softmax_row(A.raw() + i * c, out.raw() + i * c, c);
  const auto ia = a.id();
  return a.graph().record("softmax_rows", std::move(out), {ia}, [ia, r, c](Graph& g, std::size_t self) {
    const Tensor& G = g.grad(self);
    const Tensor& Y = g.value(self);
    double* da = g.grad_buffer(ia).raw();
    for (std::size_t i = 0; i < r; ++i) {
      const double* y = Y.raw() + i * c;
      const double* gy = G.raw() + i * c;
      const double inner = K().dot(c, gy, y);
      double* d = da + i * c;
      for (std::size_t j = 0; j < c; ++j) d[j] += y[j] * (gy[j] - inner);
    }
  });
}

Var row_dot(Var a, Var b) {
  require_same_shape("row_dot", a.value(), b.value());
  const std::size_t r = a.value().rows(), c = a.value().cols();
  Tensor out(matrix_shape(r, 1));
  K().row_dot(r, c, a.value().raw(), b.value().raw(), out.raw());
  const auto ia = a.id(), ib = b.id();
  return a.graph().record("row_dot", std::move(out), {ia, ib}, [ia, ib, r, c](Graph& g, std::size_t self) {
    const Tensor& G = g.grad(self);
    if (g.requires_grad(ia)) {
      double* da = g.grad_buffer(ia).raw();
      for (std::size_t i = 0; i < r; ++i) K().axpy(c, G[i], g.value(ib).raw() + i * c, da + i * c);
    }
    if (g.requires_grad(ib)) {
      double* db = g.grad_buffer(ib).raw();
      for (std::size_t i = 0; i < r; ++i) K().axpy(c, G[i], g.value(ia).raw() + i * c, db + i * c);
    }
  });
}

Var row_sum(Var a) {
  const std::size_t r = a.value().rows(), c = a.value().cols();
  Tensor out(matrix_shape(r, 1));
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += a.value()[i * c + j];
    out[i] = s;
  }
  const auto ia = a.id();
  return a.graph().record("row_sum", std::move(out), {ia}, [ia, r, c](Graph& g, std::size_t self) {
    const Tensor& G = g.grad(self);
    double* da = g.grad_buffer(ia).raw();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) da[i * c + j] += G[i];
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double x : a.value().data()) s += x;
  const auto ia = a.id();
  return a.graph().record("sum", Tensor::scalar(s), {ia}, [ia](Graph& g, std::size_t self) {
    const double gs = g.grad(self)[0];
    for (auto& d : g.grad_buffer(ia).data()) d += gs;
  });
}

Var abs_sum(Var a) {
  double s = 0.0;
  for (double x : a.value().data()) s += std::abs(x);
  const auto ia = a.id();
  return a.graph().record("abs_sum", Tensor::scalar(s), {ia}, [ia](Graph& g, std::size_t self) {
    const double gs = g.grad(self)[0];
    const Tensor& X = g.value(ia);
    double* da = g.grad_buffer(ia).raw();
    // Subgradient 0 at 0.
    for (std::size_t i = 0; i < X.size(); ++i) da[i] += gs * static_cast<double>((X[i] > 0.0) - (X[i] < 0.0));
  });
}

Var square_sum(Var a) {
  const double s = K().dot(a.value().size(), a.value().raw(), a.value().raw());
  const auto ia = a.id();
  return a.graph().record("square_sum", Tensor::scalar(s), {ia}, [ia](Graph& g, std::size_t self) {
    const double gs = g.grad(self)[0];
    const Tensor& X = g.value(ia);
    K().axpy(X.size(), 2.0 * gs, X.raw(), g.grad_buffer(ia).raw());
  });
}

Var reshape(Var a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  const auto ia = a.id();
  return a.graph().record("reshape", std::move(out), {ia}, [ia](Graph& g, std::size_t self) {
    const Tensor& G = g.grad(self);
    K().axpy(G.size(), 1.0, G.raw(), g.grad_buffer(ia).raw());
  });
}

Var unfold_windows(Var x, std::size_t series, std::size_t length, std::size_t tau) {
  const Tensor& X = x.value();
  const std::size_t batch = X.rows();
  if (X.cols() != series * length)
    throw DimensionError("unfold_windows: " + to_string(X.shape()) + " is not batch x (" + std::to_string(series) +
                         "*" + std::to_string(length) + ")");
  if (tau + 1 > length)
    throw ConfigError("unfold_windows: tau " + std::to_string(tau) + " exceeds series length " + std::to_string(length));
  const std::size_t width = 2 * tau + 1;
  const std::size_t cols = series * width;
  Tensor out(matrix_shape(batch * length, cols), 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    const double* src = X.raw() + b * series * length;
    for (std::size_t k = 0; k < length; ++k) {
      double* row = out.raw() + (b * length + k) * cols;
      const std::size_t lo = k >= tau ? 0 : tau - k;
      const std::size_t hi = std::min(width, length + tau - k);
      for (std::size_t j = 0; j < series; ++j)
        for (std::size_t w = lo; w < hi; ++w) row[j * width + w] = src[j * length + k + w - tau];
    }
  }
  const auto ix = x.id();
  return x.graph().record(
      "unfold_windows", std::move(out), {ix}, [ix, batch, series, length, tau, width, cols](Graph& g, std::size_t self) {
        const Tensor& G = g.grad(self);
        double* dx = g.grad_buffer(ix).raw();
        for (std::size_t b = 0; b < batch; ++b) {
          double* dst = dx + b * series * length;
          for (std::size_t k = 0; k < length; ++k) {
            const double* row = G.raw() + (b * length + k) * cols;
            const std::size_t lo = k >= tau ? 0 : tau - k;
            const std::size_t hi = std::min(width, length + tau - k);
            for (std::size_t j = 0; j < series; ++j)
              for (std::size_t w = lo; w < hi; ++w) dst[j * length + k + w - tau] += row[j * width + w];
          }
        }
      });
}

Var select_columns(Var x, std::vector<std::ptrdiff_t> columns) {
  const Tensor& X = x.value();
  const std::size_t r = X.rows(), c = X.cols(), n = columns.size();
  if (n == 0) throw DimensionError("select_columns: no columns requested");
  for (auto col : columns)
    if (col < -1 || col >= static_cast<std::ptrdiff_t>(c))
      throw DimensionError("select_columns: column " + std::to_string(col) + " outside " + to_string(X.shape()));
  Tensor out(matrix_shape(r, n), 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (columns[j] >= 0) out[i * n + j] = X[i * c + static_cast<std::size_t>(columns[j])];
  const auto ix = x.id();
  return x.graph().record("select_columns", std::move(out), {ix},
                          [ix, r, c, n, cols = std::move(columns)](Graph& g, std::size_t self) {
                            const Tensor& G = g.grad(self);
                            double* dx = g.grad_buffer(ix).raw();
                            for (std::size_t i = 0; i < r; ++i)
                              for (std::size_t j = 0; j < n; ++j)
                                if (cols[j] >= 0) dx[i * c + static_cast<std::size_t>(cols[j])] += G[i * n + j];
                          });
}

Var concat_columns(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_columns: nothing to concatenate");
  const std::size_t r = parts[0].value().rows();
  std::size_t total = 0;
  std::vector<std::size_t> ids, widths;
  for (const Var& p : parts) {
    if (p.value().rows() != r)
      throw DimensionError("concat_columns: row mismatch " + to_string(parts[0].shape()) + " vs " + to_string(p.shape()));
    ids.push_back(p.id());
    widths.push_back(p.value().cols());
    total += p.value().cols();
  }
  Tensor out(matrix_shape(r, total));
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const std::size_t w = p.value().cols();
    for (std::size_t i = 0; i < r; ++i) std::copy_n(p.value().raw() + i * w, w, out.raw() + i * total + offset);
    offset += w;
  }
  Graph& graph = parts[0].graph();
  std::vector<std::size_t> inputs = ids;
  return graph.record("concat_columns", std::move(out), std::move(inputs),
                      [ids, widths, r, total](Graph& g, std::size_t self) {
                        const Tensor& G = g.grad(self);
                        std::size_t offset = 0;
                        for (std::size_t p = 0; p < ids.size(); ++p) {
                          const std::size_t w = widths[p];
                          if (g.requires_grad(ids[p])) {
                            double* d = g.grad_buffer(ids[p]).raw();
                            for (std::size_t i = 0; i < r; ++i) K().axpy(w, 1.0, G.raw() + i * total + offset, d + i * w);
                          }
                          offset += w;
                        }
                      });
}

Var mse_loss(Var predictions, const Tensor& targets, const Tensor& weights) {
  const Tensor& P = predictions.value();
  const std::size_t n = P.size();
  if (targets.size() != n)
    throw DimensionError("mse_loss: " + std::to_string(n) + " predictions vs " + std::to_string(targets.size()) +
                         " targets");
  check_targets(targets);
  const double wsum = weight_total(weights, n);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = P[i] - targets[i];
    loss += weight_at(weights, i) * d * d;
  }
  const auto ip = predictions.id();
  return predictions.graph().record("mse_loss", Tensor::scalar(loss / wsum), {ip},
                                    [ip, targets, weights, wsum](Graph& g, std::size_t self) {
                                      const double gs = g.grad(self)[0];
                                      const Tensor& P = g.value(ip);
                                      double* dp = g.grad_buffer(ip).raw();
                                      for (std::size_t i = 0; i < P.size(); ++i)
                                        dp[i] += gs * 2.0 * weight_at(weights, i) * (P[i] - targets[i]) / wsum;
                                    });
}

Var bce_with_logits_loss(Var logits, const Tensor& targets, const Tensor& weights) {
  const Tensor& Z = logits.value();
  const std::size_t n = Z.size();
  if (targets.size() != n)
    throw DimensionError("bce_with_logits_loss: " + std::to_string(n) + " logits vs " +
                         std::to_string(targets.size()) + " targets");
  check_targets(targets);
  const double wsum = weight_total(weights, n);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = clamp_probability(sigmoid(Z[i]));
    loss -= weight_at(weights, i) * (targets[i] * std::log(p) + (1.0 - targets[i]) * std::log(1.0 - p));
  }
  const auto iz = logits.id();
  return logits.graph().record("bce_with_logits_loss", Tensor::scalar(loss / wsum), {iz},
                               [iz, targets, weights, wsum](Graph& g, std::size_t self) {
                                 const double gs = g.grad(self)[0];
                                 const Tensor& Z = g.value(iz);
                                 double* dz = g.grad_buffer(iz).raw();
                                 for (std::size_t i = 0; i < Z.size(); ++i) {
                                   const double p = sigmoid(Z[i]);
                                   if (p != clamp_probability(p)) continue;  // flat inside the clamp
                                   dz[i] += gs * weight_at(weights, i) * (p - targets[i]) / wsum;
                                 }
                               });
}

Var softmax_cross_entropy_loss(Var logits, std::span<const std::int64_t> labels, const Tensor& weights) {
  const Tensor& Z = logits.value();
  const std::size_t r = Z.rows(), c = Z.cols();
  if (labels.size() != r)
    throw DimensionError("softmax_cross_entropy_loss: " + std::to_string(r) + " rows vs " +
                         std::to_string(labels.size()) + " labels");
  for (auto y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= c)
      throw DataError("class label " + std::to_string(y) + " outside [0, " + std::to_string(c) + ")");
  const double wsum = weight_total(weights, r);
  Tensor probs(Z.shape());
  double loss = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    softmax_row(Z.raw() + i * c, probs.raw() + i * c, c);
    loss -= weight_at(weights, i) * std::log(clamp_probability(probs[i * c + static_cast<std::size_t>(labels[i])]));
  }
  const auto iz = logits.id();
  std::vector<std::int64_t> y(labels.begin(), labels.end());
  return logits.graph().record(
      "softmax_cross_entropy_loss", Tensor::scalar(loss / wsum), {iz},
      [iz, y = std::move(y), probs = std::move(probs), weights, wsum, r, c](Graph& g, std::size_t self) {
        const double gs = g.grad(self)[0];
        double* dz = g.grad_buffer(iz).raw();
        for (std::size_t i = 0; i < r; ++i) {
          const std::size_t label = static_cast<std::size_t>(y[i]);
          const double py = probs[i * c + label];
          if (py != clamp_probability(py)) continue;
          const double scale = gs * weight_at(weights, i) / wsum;
          for (std::size_t j = 0; j < c; ++j) dz[i * c + j] += scale * (probs[i * c + j] - (j == label ? 1.0 : 0.0));
        }
      });
}

}  // namespace feats
