#include "hillfight/autodiff/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <string>

namespace hf::ad {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

ConstMapMat as_mat(const Tensor& t) {
  return ConstMapMat(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}
MapMat as_mat(Tensor& t) {
  return MapMat(t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
}

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

void require_same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw std::invalid_argument("operands live on different tapes");
}

bool rg(Var a) { return a.tape->requires_grad(a); }

Shape mat_shape(std::size_t r, std::size_t c) { return Shape{r, c}; }

template <typename Fwd, typename Deriv>
Var unary(Var a, Fwd fwd, Deriv deriv) {
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = fwd(x[i]);
  const auto ia = a.id;
  return a.tape->push(std::move(out), rg(a), [ia, deriv](Tape& t, std::uint32_t self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(self);
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ia);
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] += g[i] * deriv(x[i], y[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& x = a.value();
  const Tensor& w = b.value();
  require(x.cols() == w.rows(), "matmul shape mismatch: " + shape_string(x.shape()) + " x " + shape_string(w.shape()));
  Tensor out(mat_shape(x.rows(), w.cols()));
  as_mat(out).noalias() = as_mat(x) * as_mat(w);
  const auto ia = a.id, ib = b.id;
  return a.tape->push(std::move(out), rg(a) || rg(b), [ia, ib](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad(ia);
      auto ga_m = as_mat(ga);
      ga_m.noalias() += as_mat(g) * as_mat(t.value(ib)).transpose();
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad(ib);
      auto gb_m = as_mat(gb);
      gb_m.noalias() += as_mat(t.value(ia)).transpose() * as_mat(g);
    }
  });
}

Var add_bias(Var a, Var bias) {
  require_same_tape(a, bias);
  const Tensor& x = a.value();
  const Tensor& b = bias.value();
  require(b.size() == x.cols(), "bias length " + std::to_string(b.size()) + " does not match " + shape_string(x.shape()));
  Tensor out = x;
  const std::size_t m = x.rows(), n = x.cols();
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] += b[c];
  }
  const auto ia = a.id, ib = bias.id;
  return a.tape->push(std::move(out), rg(a) || rg(bias), [ia, ib, m, n](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad(ib);
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < n; ++c) gb[c] += g[r * n + c];
      }
    }
  });
}

Var dense_forward(Var x, Var w, Var b) {
  require(x.value().rank() == 2, "dense input must be rank 2, got " + shape_string(x.shape()));
  return add_bias(matmul(x, w), b);
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  require(a.shape() == b.shape(), "add shape mismatch: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  Tensor out = a.value();
  const Tensor& y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += y[i];
  const auto ia = a.id, ib = b.id;
  return a.tape->push(std::move(out), rg(a) || rg(b), [ia, ib](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    for (auto id : {ia, ib}) {
      if (!t.requires_grad(id)) continue;
      Tensor& gx = t.grad(id);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b);
  require(a.shape() == b.shape(), "sub shape mismatch: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  Tensor out = a.value();
  const Tensor& y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= y[i];
  const auto ia = a.id, ib = b.id;
  return a.tape->push(std::move(out), rg(a) || rg(b), [ia, ib](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b);
  require(a.shape() == b.shape(), "mul shape mismatch: " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  Tensor out = a.value();
  const Tensor& y = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= y[i];
  const auto ia = a.id, ib = b.id;
  return a.tape->push(std::move(out), rg(a) || rg(b), [ia, ib](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad(ia);
      const Tensor& y = t.value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad(ib);
      const Tensor& x = t.value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * x[i];
    }
  });
}

Var scale(Var a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Var add_scalar(Var a, double s) {
  return unary(a, [s](double x) { return x + s; }, [](double, double) { return 1.0; });
}

Var add_col(Var a, Var col) {
  require_same_tape(a, col);
  const Tensor& x = a.value();
  const Tensor& c = col.value();
  require(c.size() == x.rows(), "add_col: column of " + std::to_string(c.size()) + " for " + shape_string(x.shape()));
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out = x;
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t k = 0; k < n; ++k) out[r * n + k] += c[r];
  }
  const auto ia = a.id, ic = col.id;
  return a.tape->push(std::move(out), rg(a) || rg(col), [ia, ic, m, n](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(ic)) {
      Tensor& gc = t.grad(ic);
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t k = 0; k < n; ++k) gc[r] += g[r * n + k];
      }
    }
  });
}

Var mul_col(Var a, Var col) {
  require_same_tape(a, col);
  const Tensor& x = a.value();
  const Tensor& c = col.value();
  require(c.size() == x.rows(), "mul_col: column of " + std::to_string(c.size()) + " for " + shape_string(x.shape()));
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out = x;
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t k = 0; k < n; ++k) out[r * n + k] *= c[r];
  }
  const auto ia = a.id, ic = col.id;
  return a.tape->push(std::move(out), rg(a) || rg(col), [ia, ic, m, n](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    const Tensor& c = t.value(ic);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad(ia);
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t k = 0; k < n; ++k) ga[r * n + k] += g[r * n + k] * c[r];
      }
    }
    if (t.requires_grad(ic)) {
      Tensor& gc = t.grad(ic);
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t k = 0; k < n; ++k) gc[r] += g[r * n + k] * x[r * n + k];
      }
    }
  });
}

Var sigmoid(Var a) {
  return unary(
      a, [](double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Var elu(Var a) {
  return unary(
      a, [](double x) { return x > 0 ? x : std::expm1(x); }, [](double x, double y) { return x > 0 ? 1.0 : y + 1.0; });
}

Var abs(Var a) {
  return unary(
      a, [](double x) { return std::fabs(x); }, [](double x, double) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); });
}

Var exp(Var a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  for (double v : a.value().values()) {
    if (!(v > 0.0)) throw NumericError("log of non-positive value");
  }
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var min_zero(Var a) {
  return unary(a, [](double x) { return x < 0 ? x : 0.0; }, [](double x, double) { return x < 0 ? 1.0 : 0.0; });
}

Var masked_softmax(Var a, std::span<const double> mask) {
  const Tensor& x = a.value();
  const std::size_t m = x.rows(), n = x.cols();
  require(mask.empty() || mask.size() == x.size(), "softmax mask size mismatch");
  Tensor out(x.shape(), 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    double mx = -1e300;
    bool any = false;
    for (std::size_t c = 0; c < n; ++c) {
      if (!mask.empty() && mask[r * n + c] == 0.0) continue;
      mx = std::max(mx, x[r * n + c]);
      any = true;
    }
    if (!any) throw DimensionError("softmax row " + std::to_string(r) + " has no allowed entry");
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      if (!mask.empty() && mask[r * n + c] == 0.0) continue;
      out[r * n + c] = std::exp(x[r * n + c] - mx);
      z += out[r * n + c];
    }
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] /= z;
  }
  const auto ia = a.id;
  return a.tape->push(std::move(out), rg(a), [ia, m, n](Tape& t, std::uint32_t self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& y = t.value(self);
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ia);
    for (std::size_t r = 0; r < m; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < n; ++c) dot += g[r * n + c] * y[r * n + c];
      for (std::size_t c = 0; c < n; ++c) gx[r * n + c] += y[r * n + c] * (g[r * n + c] - dot);
    }
  });
}

Var softmax(Var a) { return masked_softmax(a, {}); }

Var masked_log_softmax(Var a, std::span<const double> mask) {
  const Tensor& x = a.value();
  const std::size_t m = x.rows(), n = x.cols();
  require(mask.empty() || mask.size() == x.size(), "log_softmax mask size mismatch");
  std::vector<double> allowed(x.size(), 1.0);
  if (!mask.empty()) std::copy(mask.begin(), mask.end(), allowed.begin());
  Tensor out(x.shape(), 0.0);
  Tensor probs(x.shape(), 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    double mx = -1e300;
    bool any = false;
    for (std::size_t c = 0; c < n; ++c) {
      if (allowed[r * n + c] == 0.0) continue;
      mx = std::max(mx, x[r * n + c]);
      any = true;
    }
    if (!any) throw DimensionError("log_softmax row " + std::to_string(r) + " has no allowed entry");
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      if (allowed[r * n + c] != 0.0) z += std::exp(x[r * n + c] - mx);
    }
    const double lse = mx + std::log(z);
    for (std::size_t c = 0; c < n; ++c) {
      if (allowed[r * n + c] == 0.0) continue;
      out[r * n + c] = x[r * n + c] - lse;
      probs[r * n + c] = std::exp(out[r * n + c]);
    }
  }
  const auto ia = a.id;
  return a.tape->push(std::move(out), rg(a),
                      [ia, m, n, probs = std::move(probs), allowed = std::move(allowed)](Tape& t, std::uint32_t self) {
                        if (!t.requires_grad(ia)) return;
                        const Tensor& g = t.grad(self);
                        Tensor& gx = t.grad(ia);
                        for (std::size_t r = 0; r < m; ++r) {
                          double total = 0.0;
                          for (std::size_t c = 0; c < n; ++c) {
                            if (allowed[r * n + c] != 0.0) total += g[r * n + c];
                          }
                          for (std::size_t c = 0; c < n; ++c) {
                            if (allowed[r * n + c] == 0.0) continue;
                            gx[r * n + c] += g[r * n + c] - probs[r * n + c] * total;
                          }
                        }
                      });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const auto ia = a.id;
  return a.tape->push(Tensor::scalar(s), rg(a), [ia](Tape& t, std::uint32_t self) {
    if (!t.requires_grad(ia)) return;
    const double g = t.grad(self)[0];
    for (auto& v : t.grad(ia).values()) v += g;
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var sum_cols(Var a) {
  const Tensor& x = a.value();
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out(mat_shape(m, 1), 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) out[r] += x[r * n + c];
  }
  const auto ia = a.id;
  return a.tape->push(std::move(out), rg(a), [ia, m, n](Tape& t, std::uint32_t self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ia);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < n; ++c) gx[r * n + c] += g[r];
    }
  });
}

Var sum_rows(Var a) {
  const Tensor& x = a.value();
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out(mat_shape(1, n), 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) out[c] += x[r * n + c];
  }
  const auto ia = a.id;
  return a.tape->push(std::move(out), rg(a), [ia, m, n](Tape& t, std::uint32_t self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ia);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < n; ++c) gx[r * n + c] += g[c];
    }
  });
}

Var gather_cols(Var a, std::span<const std::size_t> index) {
  const Tensor& x = a.value();
  const std::size_t m = x.rows(), n = x.cols();
  require(index.size() == m, "gather_cols: " + std::to_string(index.size()) + " indices for " + std::to_string(m) + " rows");
  Tensor out(mat_shape(m, 1));
  std::vector<std::size_t> idx(index.begin(), index.end());
  for (std::size_t r = 0; r < m; ++r) {
    require(idx[r] < n, "gather_cols: index out of range");
    out[r] = x[r * n + idx[r]];
  }
  const auto ia = a.id;
  return a.tape->push(std::move(out), rg(a), [ia, n, idx = std::move(idx)](Tape& t, std::uint32_t self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ia);
    for (std::size_t r = 0; r < idx.size(); ++r) gx[r * n + idx[r]] += g[r];
  });
}

Var reshape(Var a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  const auto ia = a.id;
  return a.tape->push(std::move(out), rg(a), [ia](Tape& t, std::uint32_t self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

Var concat_cols(std::span<const Var> parts) {
  require(!parts.empty(), "concat_cols of nothing");
  const std::size_t m = parts[0].value().rows();
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  bool any_rg = false;
  for (const Var& p : parts) {
    require_same_tape(parts[0], p);
    require(p.value().rows() == m, "concat_cols row mismatch");
    ids.push_back(p.id);
    widths.push_back(p.value().cols());
    total += p.value().cols();
    any_rg = any_rg || rg(p);
  }
  Tensor out(mat_shape(m, total));
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& x = parts[k].value();
    for (std::size_t r = 0; r < m; ++r) {
      std::copy_n(x.data() + r * widths[k], widths[k], out.data() + r * total + offset);
    }
    offset += widths[k];
  }
  return parts[0].tape->push(std::move(out), any_rg,
                             [ids = std::move(ids), widths = std::move(widths), m, total](Tape& t, std::uint32_t self) {
                               const Tensor& g = t.grad(self);
                               std::size_t offset = 0;
                               for (std::size_t k = 0; k < ids.size(); ++k) {
                                 if (t.requires_grad(ids[k])) {
                                   Tensor& gx = t.grad(ids[k]);
                                   for (std::size_t r = 0; r < m; ++r) {
                                     for (std::size_t c = 0; c < widths[k]; ++c) {
                                       gx[r * widths[k] + c] += g[r * total + offset + c];
                                     }
                                   }
                                 }
                                 offset += widths[k];
                               }
                             });
}

Var concat_rows(std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows of nothing");
  const std::size_t n = parts[0].value().cols();
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> sizes;
  std::size_t rows = 0;
  bool any_rg = false;
  for (const Var& p : parts) {
    require_same_tape(parts[0], p);
    require(p.value().cols() == n, "concat_rows column mismatch");
    ids.push_back(p.id);
    sizes.push_back(p.value().size());
    rows += p.value().rows();
    any_rg = any_rg || rg(p);
  }
  Tensor out(mat_shape(rows, n));
  std::size_t offset = 0;
  for (const Var& p : parts) {
    std::copy_n(p.value().data(), p.value().size(), out.data() + offset);
    offset += p.value().size();
  }
  return parts[0].tape->push(std::move(out), any_rg, [ids = std::move(ids), sizes = std::move(sizes)](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (t.requires_grad(ids[k])) {
        Tensor& gx = t.grad(ids[k]);
        for (std::size_t i = 0; i < sizes[k]; ++i) gx[i] += g[offset + i];
      }
      offset += sizes[k];
    }
  });
}

Var gather_rows(Var a, std::span<const std::size_t> index) {
  const Tensor& x = a.value();
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out(mat_shape(index.size(), n));
  std::vector<std::size_t> idx(index.begin(), index.end());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    require(idx[r] < m, "gather_rows: index out of range");
    std::copy_n(x.data() + idx[r] * n, n, out.data() + r * n);
  }
  const auto ia = a.id;
  return a.tape->push(std::move(out), rg(a), [ia, n, idx = std::move(idx)](Tape& t, std::uint32_t self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ia);
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t c = 0; c < n; ++c) gx[idx[r] * n + c] += g[r * n + c];
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t end) {
  const Tensor& x = a.value();
  const std::size_t m = x.rows(), n = x.cols();
  require(begin < end && end <= n, "slice_cols range out of bounds");
  const std::size_t w = end - begin;
  Tensor out(mat_shape(m, w));
  for (std::size_t r = 0; r < m; ++r) std::copy_n(x.data() + r * n + begin, w, out.data() + r * w);
  const auto ia = a.id;
  return a.tape->push(std::move(out), rg(a), [ia, m, n, w, begin](Tape& t, std::uint32_t self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ia);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t c = 0; c < w; ++c) gx[r * n + begin + c] += g[r * w + c];
    }
  });
}

Var repeat_rows(Var a, std::size_t k) {
  require(k > 0, "repeat_rows needs k > 0");
  const Tensor& x = a.value();
  const std::size_t m = x.rows(), n = x.cols();
  Tensor out(mat_shape(m * k, n));
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t j = 0; j < k; ++j) std::copy_n(x.data() + r * n, n, out.data() + (r * k + j) * n);
  }
  const auto ia = a.id;
  return a.tape->push(std::move(out), rg(a), [ia, m, n, k](Tape& t, std::uint32_t self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ia);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t c = 0; c < n; ++c) gx[r * n + c] += g[(r * k + j) * n + c];
      }
    }
  });
}

Var mean_row_groups(Var a, std::size_t k) {
  const Tensor& x = a.value();
  require(k > 0 && x.rows() % k == 0, "mean_row_groups: rows not divisible by group size");
  const std::size_t m = x.rows() / k, n = x.cols();
  Tensor out(mat_shape(m, n), 0.0);
  const double inv = 1.0 / static_cast<double>(k);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t c = 0; c < n; ++c) out[r * n + c] += x[(r * k + j) * n + c] * inv;
    }
  }
  const auto ia = a.id;
  return a.tape->push(std::move(out), rg(a), [ia, m, n, k, inv](Tape& t, std::uint32_t self) {
    if (!t.requires_grad(ia)) return;
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ia);
    for (std::size_t r = 0; r < m; ++r) {
      for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t c = 0; c < n; ++c) gx[(r * k + j) * n + c] += g[r * n + c] * inv;
      }
    }
  });
}

Var batched_vecmat(Var q, Var w, std::size_t e) {
  require_same_tape(q, w);
  const Tensor& qv = q.value();
  const Tensor& wv = w.value();
  const std::size_t b = qv.rows(), n = qv.cols();
  require(wv.rows() == b && wv.cols() == n * e,
          "batched_vecmat: weights " + shape_string(wv.shape()) + " incompatible with " + shape_string(qv.shape()));
  Tensor out(mat_shape(b, e), 0.0);
  for (std::size_t r = 0; r < b; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      const double qi = qv[r * n + i];
      const double* wrow = wv.data() + r * n * e + i * e;
      for (std::size_t j = 0; j < e; ++j) out[r * e + j] += qi * wrow[j];
    }
  }
  const auto iq = q.id, iw = w.id;
  return q.tape->push(std::move(out), rg(q) || rg(w), [iq, iw, b, n, e](Tape& t, std::uint32_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& qv = t.value(iq);
    const Tensor& wv = t.value(iw);
    if (t.requires_grad(iq)) {
      Tensor& gq = t.grad(iq);
      for (std::size_t r = 0; r < b; ++r) {
        for (std::size_t i = 0; i < n; ++i) {
          double acc = 0.0;
          const double* wrow = wv.data() + r * n * e + i * e;
          for (std::size_t j = 0; j < e; ++j) acc += g[r * e + j] * wrow[j];
          gq[r * n + i] += acc;
        }
      }
    }
    if (t.requires_grad(iw)) {
      Tensor& gw = t.grad(iw);
      for (std::size_t r = 0; r < b; ++r) {
        for (std::size_t i = 0; i < n; ++i) {
          const double qi = qv[r * n + i];
          for (std::size_t j = 0; j < e; ++j) gw[r * n * e + i * e + j] += qi * g[r * e + j];
        }
      }
    }
  });
}

Var detach(Var a) { return a.tape->constant(a.value()); }

Var quantile_huber_loss(Var pred, const Tensor& tau, const Tensor& target, std::span<const double> mask) {
  const Tensor& p = pred.value();
  const std::size_t b = p.rows(), k = p.cols();
  require(tau.rows() == b && tau.cols() == k, "quantile loss: tau shape " + shape_string(tau.shape()) +
                                                  " does not match predictions " + shape_string(p.shape()));
  require(target.rows() == b, "quantile loss: target rows mismatch");
  require(mask.size() == b, "quantile loss: mask length mismatch");
  const std::size_t kt = target.cols();
  double mask_total = 0.0;
  for (double m : mask) mask_total += m;
  const double denom = (mask_total > 0 ? mask_total : 1.0) * static_cast<double>(k * kt);

  double loss = 0.0;
  Tensor dpred(p.shape(), 0.0);
  for (std::size_t r = 0; r < b; ++r) {
    if (mask[r] == 0.0) continue;
    for (std::size_t i = 0; i < k; ++i) {
      const double ti = tau[r * k + i];
      for (std::size_t j = 0; j < kt; ++j) {
        const double u = target[r * kt + j] - p[r * k + i];
        const double au = std::fabs(u);
        const double huber = au <= 1.0 ? 0.5 * u * u : au - 0.5;
        const double weight = std::fabs(ti - (u < 0 ? 1.0 : 0.0));
        loss += mask[r] * weight * huber;
        // d huber / du is clip(u, -1, 1); du / dpred = -1
        const double dh = std::clamp(u, -1.0, 1.0);
        dpred[r * k + i] -= mask[r] * weight * dh;
      }
    }
  }
  loss /= denom;
  for (auto& v : dpred.values()) v /= denom;
  const auto ip = pred.id;
  return pred.tape->push(Tensor::scalar(loss), rg(pred), [ip, dpred = std::move(dpred)](Tape& t, std::uint32_t self) {
    if (!t.requires_grad(ip)) return;
    const double g = t.grad(self)[0];
    Tensor& gp = t.grad(ip);
    for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g * dpred[i];
  });
}

}  // namespace hf::ad
