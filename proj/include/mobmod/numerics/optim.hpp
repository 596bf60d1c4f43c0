#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mobmod/numerics/tensor.hpp"

namespace mobmod::numerics {

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First and second moment estimates plus the step counter t.
struct AdamState {
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
  std::int64_t step = 0;

  static AdamState zeros_like(std::span<Tensor* const> params);
};

/// One bias-corrected Adam update. `params` are updated in place; the moments
/// are taken by value and the advanced state is returned.
AdamState adam_step(std::span<Tensor* const> params,
                    std::span<const Tensor* const> grads, AdamState state,
                    const AdamConfig& config);

/// Global L2 norm over a set of gradients.
double global_norm(std::span<const Tensor* const> grads);

struct GradCheckReport {
  double max_relative_error = 0.0;
  /// Worst relative error per parameter tensor, same order as the input.
  std::vector<double> per_tensor;
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares analytic gradients against central differences of `loss`,
/// perturbing each parameter component by +/- eps in place (values are
/// restored). Relative error is |a - n| / max(|a|, |n|, 1e-12).
GradCheckReport finite_diff_check(const std::function<double()>& loss,
                                  std::span<Tensor* const> params,
                                  std::span<const Tensor* const> analytic,
                                  double eps = 1e-5);

}  // namespace mobmod::numerics
