#include "rger/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace rger::ops {

namespace {

std::string shape_str(const Tensor& t) {
  return "[" + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) + "]";
}

void require_defined(const char* op, const Tensor& t) {
  if (!t.defined()) throw ShapeError(std::string(op) + ": undefined tensor");
}

bool any_requires_grad(const std::vector<Tensor>& parents) {
  if (!grad_enabled()) return false;
  for (const auto& p : parents)
    if (p.requires_grad()) return true;
  return false;
}

// Attach the op node when recording is needed.
Tensor finish(const char* op, int rows, int cols, std::vector<double> vals,
              std::vector<Tensor> parents,
              std::function<void(const TensorImpl&)> bw) {
  Tensor out = Tensor::from(rows, cols, std::move(vals));
  if (any_requires_grad(parents)) {
    out.set_requires_grad(true);
    auto node = std::make_shared<OpNode>();
    node->op = op;
    node->parents = std::move(parents);
    node->backward = std::move(bw);
    out.impl()->node = std::move(node);
  }
  return out;
}

enum class Broadcast { Same, RowVector, Scalar };

Broadcast broadcast_kind(const char* op, const Tensor& a, const Tensor& b) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::Same;
  if (b.rows() == 1 && b.cols() == 1) return Broadcast::Scalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::RowVector;
  throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

// Accumulate an output-shaped gradient into b's buffer under broadcasting.
void reduce_into(Broadcast kind, const TensorImpl& out, Tensor& b,
                 const std::vector<double>& gout, double sign) {
  auto& gb = b.grad();
  switch (kind) {
    case Broadcast::Same:
      for (std::size_t i = 0; i < gout.size(); ++i) gb[i] += sign * gout[i];
      break;
    case Broadcast::Scalar: {
      double s = 0.0;
      for (double g : gout) s += g;
      gb[0] += sign * s;
      break;
    }
    case Broadcast::RowVector: {
      const int cols = out.cols;
      for (int r = 0; r < out.rows; ++r)
        for (int c = 0; c < cols; ++c) gb[c] += sign * gout[static_cast<std::size_t>(r) * cols + c];
      break;
    }
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_defined("matmul", a);
  require_defined("matmul", b);
  if (a.cols() != b.rows())
    throw ShapeError("matmul: inner dimensions differ " + shape_str(a) + " vs " + shape_str(b));
  const int m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
  const auto& ad = a.data();
  const auto& bd = b.data();
  for (int i = 0; i < m; ++i) {
    const double* arow = ad.data() + static_cast<std::size_t>(i) * k;
    double* orow = out.data() + static_cast<std::size_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      const double av = arow[p];
      if (av == 0.0) continue;
      const double* brow = bd.data() + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return finish("matmul", m, n, std::move(out), {a, b}, [a, b, m, k, n](const TensorImpl& o) {
    Tensor pa = a, pb = b;
    const auto& go = o.grad;
    if (pa.requires_grad()) {
      auto& ga = pa.grad();
      const auto& bd = pb.data();
      // dA += dY . B^T
      for (int i = 0; i < m; ++i) {
        const double* grow = go.data() + static_cast<std::size_t>(i) * n;
        double* garow = ga.data() + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
          const double* brow = bd.data() + static_cast<std::size_t>(p) * n;
          double s = 0.0;
          for (int j = 0; j < n; ++j) s += grow[j] * brow[j];
          garow[p] += s;
        }
      }
    }
    if (pb.requires_grad()) {
      auto& gb = pb.grad();
      const auto& ad2 = pa.data();
      // dB += A^T . dY
      for (int p = 0; p < k; ++p) {
        double* gbrow = gb.data() + static_cast<std::size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
          const double av = ad2[static_cast<std::size_t>(i) * k + p];
          if (av == 0.0) continue;
          const double* grow = go.data() + static_cast<std::size_t>(i) * n;
          for (int j = 0; j < n; ++j) gbrow[j] += av * grow[j];
        }
      }
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_defined("transpose", a);
  const int m = a.rows(), n = a.cols();
  std::vector<double> out(static_cast<std::size_t>(m) * n);
  const auto& ad = a.data();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[static_cast<std::size_t>(j) * m + i] = ad[static_cast<std::size_t>(i) * n + j];
  return finish("transpose", n, m, std::move(out), {a}, [a, m, n](const TensorImpl& o) {
    Tensor pa = a;
    if (!pa.requires_grad()) return;
    auto& ga = pa.grad();
    const auto& go = o.grad;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < m; ++i)
        ga[static_cast<std::size_t>(i) * n + j] += go[static_cast<std::size_t>(j) * m + i];
  });
}

static Tensor add_like(const char* opname, const Tensor& a, const Tensor& b, double sign) {
  require_defined(opname, a);
  require_defined(opname, b);
  const Broadcast kind = broadcast_kind(opname, a, b);
  const int m = a.rows(), n = a.cols();
  std::vector<double> out(a.data());
  const auto& bd = b.data();
  switch (kind) {
    case Broadcast::Same:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += sign * bd[i];
      break;
    case Broadcast::Scalar:
      for (auto& v : out) v += sign * bd[0];
      break;
    case Broadcast::RowVector:
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < n; ++c) out[static_cast<std::size_t>(r) * n + c] += sign * bd[c];
      break;
  }
  return finish(opname, m, n, std::move(out), {a, b}, [a, b, kind, sign](const TensorImpl& o) {
    Tensor pa = a, pb = b;
    if (pa.requires_grad()) {
      auto& ga = pa.grad();
      for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i];
    }
    if (pb.requires_grad()) reduce_into(kind, o, pb, o.grad, sign);
  });
}

Tensor add(const Tensor& a, const Tensor& b) { return add_like("add", a, b, 1.0); }
Tensor sub(const Tensor& a, const Tensor& b) { return add_like("sub", a, b, -1.0); }

Tensor mul(const Tensor& a, const Tensor& b) {
  require_defined("mul", a);
  require_defined("mul", b);
  const Broadcast kind = broadcast_kind("mul", a, b);
  const int m = a.rows(), n = a.cols();
  std::vector<double> out(a.data());
  const auto& bd = b.data();
  switch (kind) {
    case Broadcast::Same:
      for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bd[i];
      break;
    case Broadcast::Scalar:
      for (auto& v : out) v *= bd[0];
      break;
    case Broadcast::RowVector:
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < n; ++c) out[static_cast<std::size_t>(r) * n + c] *= bd[c];
      break;
  }
  return finish("mul", m, n, std::move(out), {a, b}, [a, b, kind](const TensorImpl& o) {
    Tensor pa = a, pb = b;
    const auto& go = o.grad;
    const int n2 = o.cols;
    if (pa.requires_grad()) {
      auto& ga = pa.grad();
      const auto& bd2 = pb.data();
      switch (kind) {
        case Broadcast::Same:
          for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bd2[i];
          break;
        case Broadcast::Scalar:
          for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bd2[0];
          break;
        case Broadcast::RowVector:
          for (int r = 0; r < o.rows; ++r)
            for (int c = 0; c < n2; ++c) {
              std::size_t i = static_cast<std::size_t>(r) * n2 + c;
              ga[i] += go[i] * bd2[c];
            }
          break;
      }
    }
    if (pb.requires_grad()) {
      std::vector<double> scaled(go.size());
      const auto& ad = pa.data();
      for (std::size_t i = 0; i < go.size(); ++i) scaled[i] = go[i] * ad[i];
      reduce_into(kind, o, pb, scaled, 1.0);
    }
  });
}

Tensor scale(const Tensor& a, double c) {
  require_defined("scale", a);
  std::vector<double> out(a.data());
  for (auto& v : out) v *= c;
  return finish("scale", a.rows(), a.cols(), std::move(out), {a}, [a, c](const TensorImpl& o) {
    Tensor pa = a;
    if (!pa.requires_grad()) return;
    auto& ga = pa.grad();
    for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += c * o.grad[i];
  });
}

Tensor scale(const Tensor& a, const Tensor& c) {
  require_defined("scale", a);
  require_defined("scale", c);
  if (c.size() != 1) throw ShapeError("scale: scalar factor must be 1x1, got " + shape_str(c));
  return mul(a, c);
}

Tensor softmax_rows(const Tensor& a) {
  require_defined("softmax", a);
  const int m = a.rows(), n = a.cols();
  if (n == 0) throw ShapeError("softmax: empty rows " + shape_str(a));
  std::vector<double> out(static_cast<std::size_t>(m) * n);
  const auto& ad = a.data();
  for (int r = 0; r < m; ++r) {
    const double* x = ad.data() + static_cast<std::size_t>(r) * n;
    double* y = out.data() + static_cast<std::size_t>(r) * n;
    double mx = x[0];
    for (int c = 1; c < n; ++c) mx = std::max(mx, x[c]);
    double s = 0.0;
    for (int c = 0; c < n; ++c) {
      y[c] = std::exp(x[c] - mx);
      s += y[c];
    }
    for (int c = 0; c < n; ++c) y[c] /= s;
  }
  return finish("softmax", m, n, std::move(out), {a}, [a, m, n](const TensorImpl& o) {
    Tensor pa = a;
    if (!pa.requires_grad()) return;
    auto& ga = pa.grad();
    for (int r = 0; r < m; ++r) {
      const double* y = o.data.data() + static_cast<std::size_t>(r) * n;
      const double* gy = o.grad.data() + static_cast<std::size_t>(r) * n;
      double dot = 0.0;
      for (int c = 0; c < n; ++c) dot += gy[c] * y[c];
      double* gx = ga.data() + static_cast<std::size_t>(r) * n;
      for (int c = 0; c < n; ++c) gx[c] += y[c] * (gy[c] - dot);
    }
  });
}

Tensor log_softmax_rows(const Tensor& a) {
  require_defined("log_softmax", a);
  const int m = a.rows(), n = a.cols();
  if (n == 0) throw ShapeError("log_softmax: empty rows " + shape_str(a));
  std::vector<double> out(static_cast<std::size_t>(m) * n);
  const auto& ad = a.data();
  for (int r = 0; r < m; ++r) {
    const double* x = ad.data() + static_cast<std::size_t>(r) * n;
    double* y = out.data() + static_cast<std::size_t>(r) * n;
    double mx = x[0];
    for (int c = 1; c < n; ++c) mx = std::max(mx, x[c]);
    double s = 0.0;
    for (int c = 0; c < n; ++c) s += std::exp(x[c] - mx);
    const double lse = mx + std::log(s);
    for (int c = 0; c < n; ++c) y[c] = x[c] - lse;
  }
  return finish("log_softmax", m, n, std::move(out), {a, }, [a, m, n](const TensorImpl& o) {
    Tensor pa = a;
    if (!pa.requires_grad()) return;
    auto& ga = pa.grad();
    for (int r = 0; r < m; ++r) {
      const double* y = o.data.data() + static_cast<std::size_t>(r) * n;
      const double* gy = o.grad.data() + static_cast<std::size_t>(r) * n;
      double gsum = 0.0;
      for (int c = 0; c < n; ++c) gsum += gy[c];
      double* gx = ga.data() + static_cast<std::size_t>(r) * n;
      for (int c = 0; c < n; ++c) gx[c] += gy[c] - std::exp(y[c]) * gsum;
    }
  });
}

Tensor causal_softmax(const Tensor& a) {
  require_defined("causal_softmax", a);
  const int m = a.rows(), n = a.cols();
  if (m != n) throw ShapeError("causal_softmax: matrix must be square, got " + shape_str(a));
  std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
  const auto& ad = a.data();
  for (int r = 0; r < m; ++r) {
    const double* x = ad.data() + static_cast<std::size_t>(r) * n;
    double* y = out.data() + static_cast<std::size_t>(r) * n;
    double mx = x[0];
    for (int c = 1; c <= r; ++c) mx = std::max(mx, x[c]);
    double s = 0.0;
    for (int c = 0; c <= r; ++c) {
      y[c] = std::exp(x[c] - mx);
      s += y[c];
    }
    for (int c = 0; c <= r; ++c) y[c] /= s;
  }
  return finish("causal_softmax", m, n, std::move(out), {a}, [a, m, n](const TensorImpl& o) {
    Tensor pa = a;
    if (!pa.requires_grad()) return;
    auto& ga = pa.grad();
    for (int r = 0; r < m; ++r) {
      const double* y = o.data.data() + static_cast<std::size_t>(r) * n;
      const double* gy = o.grad.data() + static_cast<std::size_t>(r) * n;
      double dot = 0.0;
      for (int c = 0; c <= r; ++c) dot += gy[c] * y[c];
      double* gx = ga.data() + static_cast<std::size_t>(r) * n;
      for (int c = 0; c <= r; ++c) gx[c] += y[c] * (gy[c] - dot);
    }
  });
}

Tensor layer_norm_rows(const Tensor& a) {
  require_defined("layer_norm", a);
  const int m = a.rows(), n = a.cols();
  if (n == 0) throw ShapeError("layer_norm: empty rows " + shape_str(a));
  std::vector<double> out(static_cast<std::size_t>(m) * n);
  std::vector<double> inv_sigma(m);
  const auto& ad = a.data();
  for (int r = 0; r < m; ++r) {
    const double* x = ad.data() + static_cast<std::size_t>(r) * n;
    double* y = out.data() + static_cast<std::size_t>(r) * n;
    double mu = 0.0;
    for (int c = 0; c < n; ++c) mu += x[c];
    mu /= n;
    double var = 0.0;
    for (int c = 0; c < n; ++c) var += (x[c] - mu) * (x[c] - mu);
    var /= n;
    const double is = 1.0 / std::sqrt(var + kLayerNormEps);
    inv_sigma[r] = is;
    for (int c = 0; c < n; ++c) y[c] = (x[c] - mu) * is;
  }
  return finish("layer_norm", m, n, std::move(out), {a},
                [a, m, n, inv_sigma = std::move(inv_sigma)](const TensorImpl& o) {
    Tensor pa = a;
    if (!pa.requires_grad()) return;
    auto& ga = pa.grad();
    for (int r = 0; r < m; ++r) {
      const double* xhat = o.data.data() + static_cast<std::size_t>(r) * n;
      const double* gy = o.grad.data() + static_cast<std::size_t>(r) * n;
      double gmean = 0.0, gdot = 0.0;
      for (int c = 0; c < n; ++c) {
        gmean += gy[c];
        gdot += gy[c] * xhat[c];
      }
      gmean /= n;
      gdot /= n;
      double* gx = ga.data() + static_cast<std::size_t>(r) * n;
      const double is = inv_sigma[r];
      for (int c = 0; c < n; ++c) gx[c] += is * (gy[c] - gmean - xhat[c] * gdot);
    }
  });
}

Tensor relu(const Tensor& a) {
  require_defined("relu", a);
  std::vector<double> out(a.data());
  for (auto& v : out) v = v > 0.0 ? v : 0.0;
  return finish("relu", a.rows(), a.cols(), std::move(out), {a}, [a](const TensorImpl& o) {
    Tensor pa = a;
    if (!pa.requires_grad()) return;
    auto& ga = pa.grad();
    const auto& ad = pa.data();
    for (std::size_t i = 0; i < o.grad.size(); ++i)
      if (ad[i] > 0.0) ga[i] += o.grad[i];
  });
}

Tensor sigmoid(const Tensor& a) {
  require_defined("sigmoid", a);
  std::vector<double> out(a.data());
  for (auto& v : out) v = 1.0 / (1.0 + std::exp(-v));
  return finish("sigmoid", a.rows(), a.cols(), std::move(out), {a}, [a](const TensorImpl& o) {
    Tensor pa = a;
    if (!pa.requires_grad()) return;
    auto& ga = pa.grad();
    for (std::size_t i = 0; i < o.grad.size(); ++i) {
      const double y = o.data[i];
      ga[i] += o.grad[i] * y * (1.0 - y);
    }
  });
}

Tensor exp(const Tensor& a) {
  require_defined("exp", a);
  std::vector<double> out(a.data());
  for (auto& v : out) v = std::exp(v);
  return finish("exp", a.rows(), a.cols(), std::move(out), {a}, [a](const TensorImpl& o) {
    Tensor pa = a;
    if (!pa.requires_grad()) return;
    auto& ga = pa.grad();
    for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i] * o.data[i];
  });
}

Tensor log(const Tensor& a) {
  require_defined("log", a);
  std::vector<double> out(a.data());
  for (auto& v : out) {
    if (v <= 0.0) throw ContractError("log: non-positive input");
    v = std::log(v);
  }
  return finish("log", a.rows(), a.cols(), std::move(out), {a}, [a](const TensorImpl& o) {
    Tensor pa = a;
    if (!pa.requires_grad()) return;
    auto& ga = pa.grad();
    const auto& ad = pa.data();
    for (std::size_t i = 0; i < o.grad.size(); ++i) ga[i] += o.grad[i] / ad[i];
  });
}

Tensor sum_all(const Tensor& a) {
  require_defined("sum", a);
  double s = 0.0;
  for (double v : a.data()) s += v;
  return finish("sum", 1, 1, {s}, {a}, [a](const TensorImpl& o) {
    Tensor pa = a;
    if (!pa.requires_grad()) return;
    auto& ga = pa.grad();
    const double g = o.grad[0];
    for (auto& v : ga) v += g;
  });
}

Tensor mean_all(const Tensor& a) {
  require_defined("mean", a);
  if (a.size() == 0) throw ShapeError("mean: empty tensor");
  double s = 0.0;
  for (double v : a.data()) s += v;
  const double inv = 1.0 / static_cast<double>(a.size());
  return finish("mean", 1, 1, {s * inv}, {a}, [a, inv](const TensorImpl& o) {
    Tensor pa = a;
    if (!pa.requires_grad()) return;
    auto& ga = pa.grad();
    const double g = o.grad[0] * inv;
    for (auto& v : ga) v += g;
  });
}

Tensor mean_rows(const Tensor& a) {
  require_defined("mean_rows", a);
  const int m = a.rows(), n = a.cols();
  if (m == 0) throw ShapeError("mean_rows: no rows " + shape_str(a));
  std::vector<double> out(n, 0.0);
  const auto& ad = a.data();
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < n; ++c) out[c] += ad[static_cast<std::size_t>(r) * n + c];
  const double inv = 1.0 / m;
  for (auto& v : out) v *= inv;
  return finish("mean_rows", 1, n, std::move(out), {a}, [a, m, n, inv](const TensorImpl& o) {
    Tensor pa = a;
    if (!pa.requires_grad()) return;
    auto& ga = pa.grad();
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n; ++c) ga[static_cast<std::size_t>(r) * n + c] += o.grad[c] * inv;
  });
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  int n = parts[0].cols();
  int m = 0;
  for (const auto& p : parts) {
    require_defined("concat", p);
    if (p.cols() != n)
      throw ShapeError("concat: column mismatch " + shape_str(parts[0]) + " vs " + shape_str(p));
    m += p.rows();
  }
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(m) * n);
  for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
  return finish("concat", m, n, std::move(out), parts, [parts, n](const TensorImpl& o) {
    std::size_t off = 0;
    for (auto p : parts) {
      const std::size_t cnt = static_cast<std::size_t>(p.rows()) * n;
      if (p.requires_grad()) {
        auto& gp = p.grad();
        for (std::size_t i = 0; i < cnt; ++i) gp[i] += o.grad[off + i];
      }
      off += cnt;
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  int m = parts[0].rows();
  int n = 0;
  for (const auto& p : parts) {
    require_defined("concat", p);
    if (p.rows() != m)
      throw ShapeError("concat: row mismatch " + shape_str(parts[0]) + " vs " + shape_str(p));
    n += p.cols();
  }
  std::vector<double> out(static_cast<std::size_t>(m) * n);
  int coff = 0;
  for (const auto& p : parts) {
    const int pc = p.cols();
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < pc; ++c)
        out[static_cast<std::size_t>(r) * n + coff + c] = p.at(r, c);
    coff += pc;
  }
  return finish("concat", m, n, std::move(out), parts, [parts, m, n](const TensorImpl& o) {
    int coff2 = 0;
    for (auto p : parts) {
      const int pc = p.cols();
      if (p.requires_grad()) {
        auto& gp = p.grad();
        for (int r = 0; r < m; ++r)
          for (int c = 0; c < pc; ++c)
            gp[static_cast<std::size_t>(r) * pc + c] += o.grad[static_cast<std::size_t>(r) * n + coff2 + c];
      }
      coff2 += pc;
    }
  });
}

Tensor slice_rows(const Tensor& a, int r0, int r1) {
  require_defined("slice_rows", a);
  if (r0 < 0 || r1 > a.rows() || r0 > r1)
    throw ShapeError("slice_rows: range [" + std::to_string(r0) + "," + std::to_string(r1) +
                     ") out of bounds for " + shape_str(a));
  const int n = a.cols(), m = r1 - r0;
  std::vector<double> out(a.data().begin() + static_cast<std::size_t>(r0) * n,
                          a.data().begin() + static_cast<std::size_t>(r1) * n);
  return finish("slice_rows", m, n, std::move(out), {a}, [a, r0, m, n](const TensorImpl& o) {
    Tensor pa = a;
    if (!pa.requires_grad()) return;
    auto& ga = pa.grad();
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n; ++c)
        ga[static_cast<std::size_t>(r0 + r) * n + c] += o.grad[static_cast<std::size_t>(r) * n + c];
  });
}

Tensor slice_cols(const Tensor& a, int c0, int c1) {
  require_defined("slice_cols", a);
  if (c0 < 0 || c1 > a.cols() || c0 > c1)
    throw ShapeError("slice_cols: range [" + std::to_string(c0) + "," + std::to_string(c1) +
                     ") out of bounds for " + shape_str(a));
  const int m = a.rows(), n = c1 - c0, an = a.cols();
  std::vector<double> out(static_cast<std::size_t>(m) * n);
  const auto& ad = a.data();
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < n; ++c)
      out[static_cast<std::size_t>(r) * n + c] = ad[static_cast<std::size_t>(r) * an + c0 + c];
  return finish("slice_cols", m, n, std::move(out), {a}, [a, c0, m, n, an](const TensorImpl& o) {
    Tensor pa = a;
    if (!pa.requires_grad()) return;
    auto& ga = pa.grad();
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < n; ++c)
        ga[static_cast<std::size_t>(r) * an + c0 + c] += o.grad[static_cast<std::size_t>(r) * n + c];
  });
}

Tensor embed_lookup(const Tensor& table, const std::vector<int>& ids) {
  require_defined("embed_lookup", table);
  const int v = table.rows(), d = table.cols();
  for (int id : ids)
    if (id < 0 || id >= v)
      throw ShapeError("embed_lookup: id " + std::to_string(id) + " out of range for " + shape_str(table));
  const int m = static_cast<int>(ids.size());
  std::vector<double> out(static_cast<std::size_t>(m) * d);
  const auto& td = table.data();
  for (int r = 0; r < m; ++r)
    std::copy_n(td.begin() + static_cast<std::size_t>(ids[r]) * d, d,
                out.begin() + static_cast<std::size_t>(r) * d);
  return finish("embed_lookup", m, d, std::move(out), {table}, [table, ids, d](const TensorImpl& o) {
    Tensor pt = table;
    if (!pt.requires_grad()) return;
    auto& gt = pt.grad();
    for (std::size_t r = 0; r < ids.size(); ++r)
      for (int c = 0; c < d; ++c)
        gt[static_cast<std::size_t>(ids[r]) * d + c] += o.grad[r * d + c];
  });
}

Tensor pick_per_row(const Tensor& a, const std::vector<int>& ids) {
  require_defined("pick_per_row", a);
  if (static_cast<int>(ids.size()) != a.rows())
    throw ShapeError("pick_per_row: need one index per row of " + shape_str(a));
  const int n = a.cols();
  for (int id : ids)
    if (id < 0 || id >= n)
      throw ShapeError("pick_per_row: column " + std::to_string(id) + " out of range for " + shape_str(a));
  const int m = a.rows();
  std::vector<double> out(m);
  for (int r = 0; r < m; ++r) out[r] = a.at(r, ids[r]);
  return finish("pick_per_row", m, 1, std::move(out), {a}, [a, ids, n](const TensorImpl& o) {
    Tensor pa = a;
    if (!pa.requires_grad()) return;
    auto& ga = pa.grad();
    for (std::size_t r = 0; r < ids.size(); ++r) ga[r * n + ids[r]] += o.grad[r];
  });
}

}  // namespace rger::ops
