#include "mobmod/numerics/optim.hpp"

#include <algorithm>
#include <cmath>

namespace mobmod::numerics {

AdamState AdamState::zeros_like(std::span<Tensor* const> params) {
  AdamState state;
  for (const Tensor* p : params) {
    state.first_moment.push_back(p->zeros_like());
    state.second_moment.push_back(p->zeros_like());
  }
  return state;
}

AdamState adam_step(std::span<Tensor* const> params,
                    std::span<const Tensor* const> grads, AdamState state,
                    const AdamConfig& config) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size() ||
      params.size() != state.second_moment.size()) {
    throw ShapeMismatch("adam: parameter, gradient and moment counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(*params[i], *grads[i], "adam");
    require_same_shape(*params[i], state.first_moment[i], "adam");
    require_same_shape(*params[i], state.second_moment[i], "adam");
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(config.beta1, t);
  const double correct2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const Tensor& g = *grads[i];
    Tensor& m = state.first_moment[i];
    Tensor& v = state.second_moment[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g[j];
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correct1;
      const double v_hat = v[j] / correct2;
      p[j] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
  return state;
}

double global_norm(std::span<const Tensor* const> grads) {
  double total = 0.0;
  for (const Tensor* g : grads) {
    for (double v : g->values()) total += v * v;
  }
  return std::sqrt(total);
}

GradCheckReport finite_diff_check(const std::function<double()>& loss,
                                  std::span<Tensor* const> params,
                                  std::span<const Tensor* const> analytic,
                                  double eps) {
  if (params.size() != analytic.size()) {
    throw ShapeMismatch("finite_diff_check: parameter and gradient counts differ");
  }
  GradCheckReport report;
  report.per_tensor.assign(params.size(), 0.0);
  for (std::size_t t = 0; t < params.size(); ++t) {
    Tensor& p = *params[t];
    require_same_shape(p, *analytic[t], "finite_diff_check");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double saved = p[i];
      p[i] = saved + eps;
      const double up = loss();
      p[i] = saved - eps;
      const double down = loss();
      p[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double exact = (*analytic[t])[i];
      const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-12});
      const double rel = std::abs(exact - numeric) / denom;
      report.per_tensor[t] = std::max(report.per_tensor[t], rel);
      if (rel > report.max_relative_error) {
        report.max_relative_error = rel;
        report.worst_tensor = t;
        report.worst_index = i;
        report.worst_analytic = exact;
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace mobmod::numerics
