#pragma once

#include <span>
#include <stdexcept>

#include "mobmod/numerics/tensor.hpp"

namespace mobmod::numerics {

class TargetOutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Target value that excludes a row from cross-entropy terms.
inline constexpr int kIgnoreTarget = -1;

// Matrix products. Operands are viewed as [rows x cols].
Tensor matmul(const Tensor& a, const Tensor& b);     // a * b
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a * b^T
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // a^T * b

/// out += a * b (and the transposed variants); shapes must already agree.
void matmul_accumulate(const Tensor& a, const Tensor& b, Tensor& out);
void matmul_nt_accumulate(const Tensor& a, const Tensor& b, Tensor& out);
void matmul_tn_accumulate(const Tensor& a, const Tensor& b, Tensor& out);

/// Row-wise softmax with max subtraction.
Tensor softmax_rows(const Tensor& x);
/// Given y = softmax_rows(x) and dL/dy, returns dL/dx.
Tensor softmax_rows_backward(const Tensor& y, const Tensor& grad_y);

/// Per-row normalization (population variance) followed by gain and bias.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps);

/// GELU, tanh approximation.
double gelu(double x);
double gelu_derivative(double x);

/// Mean over scored rows of -log softmax(logits)[target]. Rows whose target is
/// kIgnoreTarget are skipped; any other value outside [0, V) throws.
double cross_entropy_mean(const Tensor& logits, std::span<const int> targets);
/// (softmax - onehot) / scored_rows, zero on ignored rows.
Tensor cross_entropy_grad(const Tensor& logits, std::span<const int> targets);

}  // namespace mobmod::numerics
