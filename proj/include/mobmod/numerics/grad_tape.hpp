#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mobmod/numerics/tensor.hpp"

namespace mobmod::numerics {

/// Handle to a value recorded on a GradTape.
struct Var {
  std::uint32_t id = 0;
};

/// Records forward operations over tensors and replays them in reverse to
/// accumulate gradients. Parameters are bound by reference: the tape reads
/// their values without copying and accumulates into caller-owned gradient
/// buffers. A tape supports exactly one backward pass.
class GradTape {
 public:
  GradTape() = default;
  GradTape(const GradTape&) = delete;
  GradTape& operator=(const GradTape&) = delete;

  Var constant(Tensor value);
  /// `value` and `grad` must outlive the tape; `grad` has value's shape.
  Var parameter(const Tensor& value, Tensor& grad);
  /// Parameter read without gradient tracking.
  Var frozen(const Tensor& value);

  const Tensor& value(Var v) const;
  /// Gradient of a non-parameter node after backward(); empty if none flowed.
  const Tensor& grad(Var v) const;
  /// Op-specific saved data (attention probabilities for attention nodes).
  const Tensor& auxiliary(Var v) const;
  bool requires_grad(Var v) const { return node(v).requires_grad; }
  std::size_t node_count() const noexcept { return nodes_.size(); }

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  /// x[r, c] + bias[c].
  Var add_row(Var x, Var bias);
  Var scale(Var x, double factor);
  Var sum(Var x);
  /// Rows of `table` selected by ids.
  Var gather_rows(Var table, std::span<const int> ids);
  Var softmax_rows(Var x);
  Var layer_norm(Var x, Var gain, Var bias, double eps);
  Var gelu(Var x);
  /// Multi-head scaled dot-product attention over `x`-shaped q, k, v of
  /// [sequences * seq_len, width]; heads split the width evenly. With
  /// `causal`, position i attends to positions 0..i of its own sequence.
  Var attention(Var q, Var k, Var v, std::size_t seq_len, std::size_t heads,
                bool causal);
  /// Scalar mean cross entropy over rows whose target is not kIgnoreTarget.
  Var cross_entropy_mean(Var logits, std::span<const int> targets);

  /// Seeds d(output)/d(output) = seed (output must be a single element).
  void backward(Var output, double seed = 1.0);

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    Tensor grad;
    Tensor* grad_sink = nullptr;
    Tensor aux;
    bool requires_grad = false;
    std::function<void()> backward;

    const Tensor& value() const { return external ? *external : owned; }
  };

  const Node& node(Var v) const;
  Node& node(Var v);
  Var push(Tensor value, bool requires_grad);
  bool any_requires_grad(std::initializer_list<Var> vars) const;
  /// Gradient buffer of `v`, allocated as zeros on first use.
  Tensor& grad_buffer(Var v);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace mobmod::numerics
