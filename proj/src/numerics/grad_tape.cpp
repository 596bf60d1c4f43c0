#include "mobmod/numerics/grad_tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mobmod/numerics/ops.hpp"

namespace mobmod::numerics {

namespace {

void add_into(Tensor& dst, const Tensor& src) {
  double* d = dst.data();
  const double* s = src.data();
  for (std::size_t i = 0; i < dst.size(); ++i) d[i] += s[i];
}

}  // namespace

const GradTape::Node& GradTape::node(Var v) const {
  if (v.id >= nodes_.size()) throw std::out_of_range("grad tape: unknown variable");
  return nodes_[v.id];
}

GradTape::Node& GradTape::node(Var v) {
  if (v.id >= nodes_.size()) throw std::out_of_range("grad tape: unknown variable");
  return nodes_[v.id];
}

Var GradTape::push(Tensor value, bool requires_grad) {
  Node n;
  n.owned = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

bool GradTape::any_requires_grad(std::initializer_list<Var> vars) const {
  return std::any_of(vars.begin(), vars.end(),
                     [this](Var v) { return node(v).requires_grad; });
}

Tensor& GradTape::grad_buffer(Var v) {
  Node& n = node(v);
  if (n.grad_sink) return *n.grad_sink;
  if (n.grad.empty()) n.grad = n.value().zeros_like();
  return n.grad;
}

Var GradTape::constant(Tensor value) { return push(std::move(value), false); }

Var GradTape::parameter(const Tensor& value, Tensor& grad) {
  require_same_shape(value, grad, "parameter gradient");
  Node n;
  n.external = &value;
  n.grad_sink = &grad;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var GradTape::frozen(const Tensor& value) {
  Node n;
  n.external = &value;
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tensor& GradTape::value(Var v) const { return node(v).value(); }

const Tensor& GradTape::grad(Var v) const {
  const Node& n = node(v);
  return n.grad_sink ? *n.grad_sink : n.grad;
}

const Tensor& GradTape::auxiliary(Var v) const { return node(v).aux; }

Var GradTape::matmul(Var a, Var b) {
  Var out = push(numerics::matmul(value(a), value(b)), any_requires_grad({a, b}));
  if (node(out).requires_grad) {
    node(out).backward = [this, a, b, out] {
      const Tensor& g = grad(out);
      if (node(a).requires_grad) matmul_nt_accumulate(g, value(b), grad_buffer(a));
      if (node(b).requires_grad) matmul_tn_accumulate(value(a), g, grad_buffer(b));
    };
  }
  return out;
}

Var GradTape::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  Tensor y = value(a);
  add_into(y, value(b));
  Var out = push(std::move(y), any_requires_grad({a, b}));
  if (node(out).requires_grad) {
    node(out).backward = [this, a, b, out] {
      if (node(a).requires_grad) add_into(grad_buffer(a), grad(out));
      if (node(b).requires_grad) add_into(grad_buffer(b), grad(out));
    };
  }
  return out;
}

Var GradTape::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  Tensor y = value(a);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] *= value(b)[i];
  Var out = push(std::move(y), any_requires_grad({a, b}));
  if (node(out).requires_grad) {
    node(out).backward = [this, a, b, out] {
      const Tensor& g = grad(out);
      if (node(a).requires_grad) {
        Tensor& ga = grad_buffer(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * value(b)[i];
      }
      if (node(b).requires_grad) {
        Tensor& gb = grad_buffer(b);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * value(a)[i];
      }
    };
  }
  return out;
}

Var GradTape::add_row(Var x, Var bias) {
  const Tensor& xv = value(x);
  const Tensor& bv = value(bias);
  if (bv.size() != xv.cols()) {
    throw ShapeMismatch("add_row: " + shape_string(xv.shape()) + " + " +
                        shape_string(bv.shape()));
  }
  Tensor y = xv;
  for (std::size_t r = 0; r < y.rows(); ++r) {
    auto row = y.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bv[c];
  }
  Var out = push(std::move(y), any_requires_grad({x, bias}));
  if (node(out).requires_grad) {
    node(out).backward = [this, x, bias, out] {
      const Tensor& g = grad(out);
      if (node(x).requires_grad) add_into(grad_buffer(x), g);
      if (node(bias).requires_grad) {
        Tensor& gb = grad_buffer(bias);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          const auto row = g.row(r);
          for (std::size_t c = 0; c < row.size(); ++c) gb[c] += row[c];
        }
      }
    };
  }
  return out;
}

Var GradTape::scale(Var x, double factor) {
  Tensor y = value(x);
  for (double& v : y.values()) v *= factor;
  Var out = push(std::move(y), node(x).requires_grad);
  if (node(out).requires_grad) {
    node(out).backward = [this, x, out, factor] {
      Tensor& gx = grad_buffer(x);
      const Tensor& g = grad(out);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += factor * g[i];
    };
  }
  return out;
}

Var GradTape::sum(Var x) {
  double total = 0.0;
  for (double v : value(x).values()) total += v;
  Var out = push(Tensor({1}, total), node(x).requires_grad);
  if (node(out).requires_grad) {
    node(out).backward = [this, x, out] {
      const double g = grad(out)[0];
      for (double& v : grad_buffer(x).values()) v += g;
    };
  }
  return out;
}

Var GradTape::gather_rows(Var table, std::span<const int> ids) {
  const Tensor& t = value(table);
  const std::size_t width = t.cols();
  Tensor y({ids.size(), width});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= t.rows()) {
      throw std::out_of_range("gather_rows: id " + std::to_string(ids[i]) +
                              " outside table of " + std::to_string(t.rows()));
    }
    const auto src = t.row(static_cast<std::size_t>(ids[i]));
    std::copy(src.begin(), src.end(), y.row(i).begin());
  }
  Var out = push(std::move(y), node(table).requires_grad);
  if (node(out).requires_grad) {
    std::vector<int> saved(ids.begin(), ids.end());
    node(out).backward = [this, table, out, saved = std::move(saved)] {
      Tensor& gt = grad_buffer(table);
      const Tensor& g = grad(out);
      for (std::size_t i = 0; i < saved.size(); ++i) {
        auto dst = gt.row(static_cast<std::size_t>(saved[i]));
        const auto src = g.row(i);
        for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
      }
    };
  }
  return out;
}

Var GradTape::softmax_rows(Var x) {
  Var out = push(numerics::softmax_rows(value(x)), node(x).requires_grad);
  if (node(out).requires_grad) {
    node(out).backward = [this, x, out] {
      add_into(grad_buffer(x), softmax_rows_backward(value(out), grad(out)));
    };
  }
  return out;
}

Var GradTape::layer_norm(Var x, Var gain, Var bias, double eps) {
  const Tensor& xv = value(x);
  const Tensor& gv = value(gain);
  const Tensor& bv = value(bias);
  const std::size_t d = xv.cols();
  if (d == 0) throw ShapeMismatch("layer_norm: zero width");
  if (gv.size() != d || bv.size() != d) {
    throw ShapeMismatch("layer_norm: affine parameters do not match width " +
                        std::to_string(d));
  }
  Tensor normalized = xv.zeros_like();
  std::vector<double> rstd(xv.rows());
  Tensor y = xv.zeros_like();
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    const auto in = xv.row(r);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    rstd[r] = 1.0 / std::sqrt(var + eps);
    auto xhat = normalized.row(r);
    auto out = y.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      xhat[c] = (in[c] - mean) * rstd[r];
      out[c] = xhat[c] * gv[c] + bv[c];
    }
  }
  Var out = push(std::move(y), any_requires_grad({x, gain, bias}));
  node(out).aux = std::move(normalized);
  if (node(out).requires_grad) {
    node(out).backward = [this, x, gain, bias, out, rstd = std::move(rstd)] {
      const Tensor& g = grad(out);
      const Tensor& xhat_all = node(out).aux;
      const Tensor& gv = value(gain);
      const std::size_t width = g.cols();
      const double inv_d = 1.0 / static_cast<double>(width);
      if (node(gain).requires_grad || node(bias).requires_grad) {
        for (std::size_t r = 0; r < g.rows(); ++r) {
          const auto gr = g.row(r);
          const auto xhat = xhat_all.row(r);
          if (node(gain).requires_grad) {
            Tensor& gg = grad_buffer(gain);
            for (std::size_t c = 0; c < width; ++c) gg[c] += gr[c] * xhat[c];
          }
          if (node(bias).requires_grad) {
            Tensor& gb = grad_buffer(bias);
            for (std::size_t c = 0; c < width; ++c) gb[c] += gr[c];
          }
        }
      }
      if (!node(x).requires_grad) return;
      Tensor& gx = grad_buffer(x);
      std::vector<double> dxhat(width);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        const auto gr = g.row(r);
        const auto xhat = xhat_all.row(r);
        double mean_d = 0.0;
        double mean_dx = 0.0;
        for (std::size_t c = 0; c < width; ++c) {
          dxhat[c] = gr[c] * gv[c];
          mean_d += dxhat[c];
          mean_dx += dxhat[c] * xhat[c];
        }
        mean_d *= inv_d;
        mean_dx *= inv_d;
        auto dst = gx.row(r);
        for (std::size_t c = 0; c < width; ++c) {
          dst[c] += rstd[r] * (dxhat[c] - mean_d - xhat[c] * mean_dx);
        }
      }
    };
  }
  return out;
}

Var GradTape::gelu(Var x) {
  Tensor y = value(x);
  for (double& v : y.values()) v = numerics::gelu(v);
  Var out = push(std::move(y), node(x).requires_grad);
  if (node(out).requires_grad) {
    node(out).backward = [this, x, out] {
      Tensor& gx = grad_buffer(x);
      const Tensor& g = grad(out);
      const Tensor& xv = value(x);
      for (std::size_t i = 0; i < g.size(); ++i) {
        gx[i] += g[i] * gelu_derivative(xv[i]);
      }
    };
  }
  return out;
}

Var GradTape::attention(Var q, Var k, Var v, std::size_t seq_len,
                        std::size_t heads, bool causal) {
  const Tensor& qv = value(q);
  const Tensor& kv = value(k);
  const Tensor& vv = value(v);
  require_same_shape(qv, kv, "attention");
  require_same_shape(qv, vv, "attention");
  const std::size_t width = qv.cols();
  if (seq_len == 0 || heads == 0 || qv.rows() % seq_len != 0 || width % heads != 0) {
    throw ShapeMismatch("attention: " + shape_string(qv.shape()) + " with seq_len " +
                        std::to_string(seq_len) + " and " + std::to_string(heads) +
                        " heads");
  }
  const std::size_t sequences = qv.rows() / seq_len;
  const std::size_t head_dim = width / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));

  Tensor probs({sequences, heads, seq_len, seq_len});
  Tensor y = qv.zeros_like();
  std::vector<double> scores(seq_len);
  for (std::size_t s = 0; s < sequences; ++s) {
    const std::size_t base = s * seq_len;
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t off = h * head_dim;
      for (std::size_t i = 0; i < seq_len; ++i) {
        const std::size_t visible = causal ? i + 1 : seq_len;
        const double* qi = qv.data() + (base + i) * width + off;
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < visible; ++j) {
          const double* kj = kv.data() + (base + j) * width + off;
          double dot = 0.0;
          for (std::size_t c = 0; c < head_dim; ++c) dot += qi[c] * kj[c];
          scores[j] = dot * inv_sqrt;
          top = std::max(top, scores[j]);
        }
        double total = 0.0;
        for (std::size_t j = 0; j < visible; ++j) {
          scores[j] = std::exp(scores[j] - top);
          total += scores[j];
        }
        double* p = probs.data() + ((s * heads + h) * seq_len + i) * seq_len;
        double* yi = y.data() + (base + i) * width + off;
        for (std::size_t j = 0; j < visible; ++j) {
          p[j] = scores[j] / total;
          const double* vj = vv.data() + (base + j) * width + off;
          for (std::size_t c = 0; c < head_dim; ++c) yi[c] += p[j] * vj[c];
        }
      }
    }
  }

  Var out = push(std::move(y), any_requires_grad({q, k, v}));
  node(out).aux = std::move(probs);
  if (node(out).requires_grad) {
    node(out).backward = [this, q, k, v, out, seq_len, heads, causal, sequences,
                          head_dim, inv_sqrt] {
      const Tensor& g = grad(out);
      const Tensor& p_all = node(out).aux;
      const Tensor& qv = value(q);
      const Tensor& kv = value(k);
      const Tensor& vv = value(v);
      const std::size_t width = qv.cols();
      Tensor dq = qv.zeros_like();
      Tensor dk = qv.zeros_like();
      Tensor dv = qv.zeros_like();
      std::vector<double> dp(seq_len);
      for (std::size_t s = 0; s < sequences; ++s) {
        const std::size_t base = s * seq_len;
        for (std::size_t h = 0; h < heads; ++h) {
          const std::size_t off = h * head_dim;
          for (std::size_t i = 0; i < seq_len; ++i) {
            const std::size_t visible = causal ? i + 1 : seq_len;
            const double* p = p_all.data() + ((s * heads + h) * seq_len + i) * seq_len;
            const double* gi = g.data() + (base + i) * width + off;
            double weighted = 0.0;
            for (std::size_t j = 0; j < visible; ++j) {
              const double* vj = vv.data() + (base + j) * width + off;
              double dot = 0.0;
              for (std::size_t c = 0; c < head_dim; ++c) dot += gi[c] * vj[c];
              dp[j] = dot;
              weighted += p[j] * dot;
              double* dvj = dv.data() + (base + j) * width + off;
              for (std::size_t c = 0; c < head_dim; ++c) dvj[c] += p[j] * gi[c];
            }
            const double* qi = qv.data() + (base + i) * width + off;
            double* dqi = dq.data() + (base + i) * width + off;
            for (std::size_t j = 0; j < visible; ++j) {
              const double ds = p[j] * (dp[j] - weighted) * inv_sqrt;
              const double* kj = kv.data() + (base + j) * width + off;
              double* dkj = dk.data() + (base + j) * width + off;
              for (std::size_t c = 0; c < head_dim; ++c) {
                dqi[c] += ds * kj[c];
                dkj[c] += ds * qi[c];
              }
            }
          }
        }
      }
      if (node(q).requires_grad) add_into(grad_buffer(q), dq);
      if (node(k).requires_grad) add_into(grad_buffer(k), dk);
      if (node(v).requires_grad) add_into(grad_buffer(v), dv);
    };
  }
  return out;
}

Var GradTape::cross_entropy_mean(Var logits, std::span<const int> targets) {
  const Tensor& z = value(logits);
  const double loss = numerics::cross_entropy_mean(z, targets);
  Var out = push(Tensor({1}, loss), node(logits).requires_grad);
  if (node(out).requires_grad) {
    std::vector<int> saved(targets.begin(), targets.end());
    node(out).backward = [this, logits, out, saved = std::move(saved)] {
      const double g = grad(out)[0];
      Tensor local = cross_entropy_grad(value(logits), saved);
      Tensor& gl = grad_buffer(logits);
      for (std::size_t i = 0; i < local.size(); ++i) gl[i] += g * local[i];
    };
  }
  return out;
}

void GradTape::backward(Var output, double seed) {
  if (backward_done_) {
    throw std::logic_error("grad tape: backward already ran for this forward pass");
  }
  backward_done_ = true;
  Node& root = node(output);
  if (root.value().size() != 1) {
    throw ShapeMismatch("backward: output must be a single element, got " +
                        shape_string(root.value().shape()));
  }
  if (!root.requires_grad) return;
  grad_buffer(output)[0] += seed;
  for (std::size_t i = output.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward) continue;
    if (n.grad.empty() && !n.grad_sink) continue;
    n.backward();
  }
}

}  // namespace mobmod::numerics
