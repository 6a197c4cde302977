#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>

#include "jointnlu/ops.hpp"

namespace jointnlu::testing {

namespace {

double project(const Tensor& out, const std::vector<double>& weights) {
  const auto v = out.values();
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += weights[i] * v[i];
  return s;
}

}  // namespace

Tensor random_tensor(Shape shape, std::uint64_t seed, double scale, bool requires_grad) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<double> values(shape_numel(shape));
  for (auto& v : values) v = dist(rng);
  return Tensor::from_values(std::move(shape), std::move(values), requires_grad);
}

GradcheckResult gradcheck(const TensorFn& f, const std::vector<Tensor>& inputs,
                          std::uint64_t seed, double step) {
  std::vector<double> weights;
  {
    NoGradGuard guard;
    const auto probe = f(inputs);
    std::mt19937_64 rng(seed ^ 0xabcdefULL);
    std::normal_distribution<double> dist;
    weights.resize(probe.numel());
    for (auto& w : weights) w = probe.numel() == 1 ? 1.0 : dist(rng);
  }
  for (auto t : inputs) t.zero_grad();
  const auto out = f(inputs);
  const auto w = Tensor::from_values(out.shape(), weights);
  sum(mul(out, w)).backward();

  GradcheckResult result;
  result.input_errors.assign(inputs.size(), 0.0);
  double total_diff = 0.0, total_analytic = 0.0, total_numeric = 0.0, worst = -1.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Tensor x = inputs[k];
    if (!x.requires_grad()) continue;
    std::vector<double> analytic(x.numel(), 0.0);
    if (x.has_grad()) std::copy(x.grad().begin(), x.grad().end(), analytic.begin());
    std::vector<double> numeric(x.numel());
    NoGradGuard guard;
    for (std::size_t i = 0; i < x.numel(); ++i) {
      auto values = x.mutable_values();
      const double original = values[i];
      values[i] = original + step;
      const double plus = project(f(inputs), weights);
      values[i] = original - step;
      const double minus = project(f(inputs), weights);
      values[i] = original;
      numeric[i] = (plus - minus) / (2.0 * step);
    }
    double diff = 0.0, na = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
      na += analytic[i] * analytic[i];
      nn += numeric[i] * numeric[i];
    }
    total_diff += diff;
    total_analytic += na;
    total_numeric += nn;
    const double rel = std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-300});
    result.input_errors[k] = rel;
    if (rel > worst) {
      worst = rel;
      result.worst_input = k;
    }
    if (std::getenv("JOINTNLU_GRADCHECK_VERBOSE")) {
      std::fprintf(stderr, "input %zu: |analytic| %.3g |numeric| %.3g |diff| %.3g\n", k,
                   std::sqrt(na), std::sqrt(nn), std::sqrt(diff));
    }
  }
  result.max_relative_error =
      std::sqrt(total_diff) /
      std::max({std::sqrt(total_analytic), std::sqrt(total_numeric), 1e-300});
  return result;
}

}  // namespace jointnlu::testing
