#include "mobmod/numerics/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <string>

namespace mobmod::numerics {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstView = Eigen::Map<const RowMajor>;
using View = Eigen::Map<RowMajor>;

ConstView view(const Tensor& t) {
  return ConstView(t.data(), static_cast<Eigen::Index>(t.rows()),
                   static_cast<Eigen::Index>(t.cols()));
}

View view(Tensor& t) {
  return View(t.data(), static_cast<Eigen::Index>(t.rows()),
              static_cast<Eigen::Index>(t.cols()));
}

[[noreturn]] void mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeMismatch(std::string(op) + ": " + shape_string(a.shape()) + " vs " +
                      shape_string(b.shape()));
}

void check_output(const char* op, const Tensor& out, std::size_t rows,
                  std::size_t cols) {
  if (out.rows() != rows || out.cols() != cols) {
    throw ShapeMismatch(std::string(op) + ": output " + shape_string(out.shape()));
  }
}

constexpr double kGeluScale = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluCubic = 0.044715;

int checked_target(int target, std::size_t vocab) {
  if (target == kIgnoreTarget) return target;
  if (target < 0 || static_cast<std::size_t>(target) >= vocab) {
    throw TargetOutOfRange("cross entropy: target " + std::to_string(target) +
                           " outside [0, " + std::to_string(vocab) + ")");
  }
  return target;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) mismatch("matmul", a, b);
  Tensor out({a.rows(), b.cols()});
  view(out).noalias() = view(a) * view(b);
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.cols()) mismatch("matmul_nt", a, b);
  Tensor out({a.rows(), b.rows()});
  view(out).noalias() = view(a) * view(b).transpose();
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows()) mismatch("matmul_tn", a, b);
  Tensor out({a.cols(), b.cols()});
  view(out).noalias() = view(a).transpose() * view(b);
  return out;
}

void matmul_accumulate(const Tensor& a, const Tensor& b, Tensor& out) {
  if (a.cols() != b.rows()) mismatch("matmul", a, b);
  check_output("matmul", out, a.rows(), b.cols());
  view(out).noalias() += view(a) * view(b);
}

void matmul_nt_accumulate(const Tensor& a, const Tensor& b, Tensor& out) {
  if (a.cols() != b.cols()) mismatch("matmul_nt", a, b);
  check_output("matmul_nt", out, a.rows(), b.rows());
  view(out).noalias() += view(a) * view(b).transpose();
}

void matmul_tn_accumulate(const Tensor& a, const Tensor& b, Tensor& out) {
  if (a.rows() != b.rows()) mismatch("matmul_tn", a, b);
  check_output("matmul_tn", out, a.cols(), b.cols());
  view(out).noalias() += view(a).transpose() * view(b);
}

Tensor softmax_rows(const Tensor& x) {
  Tensor y = x.zeros_like();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto in = x.row(r);
    auto out = y.row(r);
    const double top = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      out[c] = std::exp(in[c] - top);
      total += out[c];
    }
    for (double& v : out) v /= total;
  }
  return y;
}

Tensor softmax_rows_backward(const Tensor& y, const Tensor& grad_y) {
  require_same_shape(y, grad_y, "softmax_rows_backward");
  Tensor gx = y.zeros_like();
  for (std::size_t r = 0; r < y.rows(); ++r) {
    const auto p = y.row(r);
    const auto g = grad_y.row(r);
    double dot = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) dot += p[c] * g[c];
    auto out = gx.row(r);
    for (std::size_t c = 0; c < p.size(); ++c) out[c] = p[c] * (g[c] - dot);
  }
  return gx;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps) {
  const std::size_t d = x.cols();
  if (d == 0) throw ShapeMismatch("layer_norm: zero width");
  if (gain.size() != d || bias.size() != d) mismatch("layer_norm", x, gain);
  Tensor y = x.zeros_like();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto in = x.row(r);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= static_cast<double>(d);
    const double rstd = 1.0 / std::sqrt(var + eps);
    auto out = y.row(r);
    for (std::size_t c = 0; c < d; ++c) {
      out[c] = (in[c] - mean) * rstd * gain[c] + bias[c];
    }
  }
  return y;
}

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluScale * (x + kGeluCubic * x * x * x)));
}

double gelu_derivative(double x) {
  const double inner = kGeluScale * (x + kGeluCubic * x * x * x);
  const double t = std::tanh(inner);
  const double d_inner = kGeluScale * (1.0 + 3.0 * kGeluCubic * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * d_inner;
}

double cross_entropy_mean(const Tensor& logits, std::span<const int> targets) {
  if (targets.size() != logits.rows()) {
    throw ShapeMismatch("cross entropy: " + std::to_string(targets.size()) +
                        " targets for " + shape_string(logits.shape()));
  }
  double total = 0.0;
  std::size_t scored = 0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const int t = checked_target(targets[r], logits.cols());
    if (t == kIgnoreTarget) continue;
    const auto z = logits.row(r);
    const double top = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - top);
    total += top + std::log(sum) - z[static_cast<std::size_t>(t)];
    ++scored;
  }
  return scored == 0 ? 0.0 : total / static_cast<double>(scored);
}

Tensor cross_entropy_grad(const Tensor& logits, std::span<const int> targets) {
  if (targets.size() != logits.rows()) {
    throw ShapeMismatch("cross entropy: target count does not match logits");
  }
  std::size_t scored = 0;
  for (int t : targets) {
    if (checked_target(t, logits.cols()) != kIgnoreTarget) ++scored;
  }
  Tensor grad = logits.zeros_like();
  if (scored == 0) return grad;
  const double inv = 1.0 / static_cast<double>(scored);
  const Tensor probs = softmax_rows(logits);
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    if (targets[r] == kIgnoreTarget) continue;
    const auto p = probs.row(r);
    auto g = grad.row(r);
    for (std::size_t c = 0; c < p.size(); ++c) g[c] = p[c] * inv;
    g[static_cast<std::size_t>(targets[r])] -= inv;
  }
  return grad;
}

}  // namespace mobmod::numerics
