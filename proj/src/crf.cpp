#include "jointnlu/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "jointnlu/error.hpp"

namespace jointnlu {

namespace {

struct Dims {
  std::size_t steps;
  std::size_t labels;
};

Dims check(const Tensor& emissions, const CrfParams& crf) {
  if (emissions.ndim() != 2 || emissions.rows() == 0) {
    throw ShapeError("crf: emissions must be a non-empty N x L matrix, got " +
                     shape_str(emissions.shape()));
  }
  const auto labels = emissions.cols();
  if (crf.start_scores.shape() != Shape{labels} || crf.end_scores.shape() != Shape{labels} ||
      crf.transitions.shape() != Shape{labels, labels}) {
    throw ShapeError("crf: parameters " + shape_str(crf.transitions.shape()) +
                     " do not match emissions " + shape_str(emissions.shape()));
  }
  return {emissions.rows(), labels};
}

void check_labels(std::span<const int> labels, const Dims& d) {
  if (labels.size() != d.steps) {
    throw ShapeError("crf: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(d.steps) + " positions");
  }
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= d.labels) {
      throw DataError("crf: label " + std::to_string(y) + " out of range for " +
                      std::to_string(d.labels) + " labels");
    }
  }
}

double log_sum_exp(std::span<const double> xs) {
  const double peak = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(peak)) return peak;
  double total = 0.0;
  for (double x : xs) total += std::exp(x - peak);
  return peak + std::log(total);
}

// alpha[n * L + j]: log-sum of scores of all prefixes ending in label j at n,
// including start and emissions 0..n.
std::vector<double> forward_scores(std::span<const double> emit, std::span<const double> trans,
                                   std::span<const double> start, const Dims& d) {
  const auto L = d.labels;
  std::vector<double> alpha(d.steps * L);
  for (std::size_t j = 0; j < L; ++j) alpha[j] = start[j] + emit[j];
  std::vector<double> terms(L);
  for (std::size_t n = 1; n < d.steps; ++n) {
    for (std::size_t j = 0; j < L; ++j) {
      for (std::size_t i = 0; i < L; ++i) terms[i] = alpha[(n - 1) * L + i] + trans[i * L + j];
      alpha[n * L + j] = log_sum_exp(terms) + emit[n * L + j];
    }
  }
  return alpha;
}

// beta[n * L + j]: log-sum of scores of all suffixes after label j at n,
// including transitions, emissions n+1..N-1 and the end score.
std::vector<double> backward_scores(std::span<const double> emit, std::span<const double> trans,
                                    std::span<const double> end, const Dims& d) {
  const auto L = d.labels;
  std::vector<double> beta(d.steps * L);
  const auto last = d.steps - 1;
  for (std::size_t j = 0; j < L; ++j) beta[last * L + j] = end[j];
  std::vector<double> terms(L);
  for (std::size_t n = last; n-- > 0;) {
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < L; ++j) {
        terms[j] = trans[i * L + j] + emit[(n + 1) * L + j] + beta[(n + 1) * L + j];
      }
      beta[n * L + i] = log_sum_exp(terms);
    }
  }
  return beta;
}

double final_log_sum(std::span<const double> alpha, std::span<const double> end, const Dims& d) {
  const auto L = d.labels;
  std::vector<double> terms(L);
  for (std::size_t j = 0; j < L; ++j) terms[j] = alpha[(d.steps - 1) * L + j] + end[j];
  return log_sum_exp(terms);
}

double gold_score(std::span<const double> emit, std::span<const double> trans,
                  std::span<const double> start, std::span<const double> end,
                  std::span<const int> labels, const Dims& d) {
  const auto L = d.labels;
  auto at = [](int y) { return static_cast<std::size_t>(y); };
  double s = start[at(labels[0])] + end[at(labels.back())];
  for (std::size_t n = 0; n < d.steps; ++n) s += emit[n * L + at(labels[n])];
  for (std::size_t n = 0; n + 1 < d.steps; ++n) s += trans[at(labels[n]) * L + at(labels[n + 1])];
  return s;
}

}  // namespace

CrfParams CrfParams::zeros(std::size_t num_labels, bool requires_grad) {
  return {Tensor::zeros({num_labels, num_labels}, requires_grad),
          Tensor::zeros({num_labels}, requires_grad), Tensor::zeros({num_labels}, requires_grad)};
}

double sequence_score(const Tensor& emissions, std::span<const int> labels, const CrfParams& crf) {
  const auto d = check(emissions, crf);
  check_labels(labels, d);
  return gold_score(emissions.values(), crf.transitions.values(), crf.start_scores.values(),
                    crf.end_scores.values(), labels, d);
}

double log_partition(const Tensor& emissions, const CrfParams& crf) {
  const auto d = check(emissions, crf);
  const auto alpha = forward_scores(emissions.values(), crf.transitions.values(),
                                    crf.start_scores.values(), d);
  return final_log_sum(alpha, crf.end_scores.values(), d);
}

Tensor crf_nll(const Tensor& emissions, std::span<const int> labels, const CrfParams& crf) {
  const auto d = check(emissions, crf);
  check_labels(labels, d);
  auto emit = emissions.values();
  auto trans = crf.transitions.values();
  auto start = crf.start_scores.values();
  auto end = crf.end_scores.values();
  auto alpha = forward_scores(emit, trans, start, d);
  const double log_z = final_log_sum(alpha, end, d);
  const double nll = log_z - gold_score(emit, trans, start, end, labels, d);

  std::vector<int> gold(labels.begin(), labels.end());
  return detail::make_result(
      {}, {nll}, {emissions, crf.transitions, crf.start_scores, crf.end_scores},
      [d, log_z, alpha = std::move(alpha), gold = std::move(gold)](detail::Node& self) {
        auto& en = *self.inputs[0];
        auto& tn = *self.inputs[1];
        auto& sn = *self.inputs[2];
        auto& fn = *self.inputs[3];
        const auto L = d.labels;
        const auto last = d.steps - 1;
        const double up = self.grad[0];
        const auto beta = backward_scores(en.value, tn.value, fn.value, d);
        auto at = [](int y) { return static_cast<std::size_t>(y); };

        // Unary marginals feed the emission, start, and end gradients.
        std::vector<double> marginal(d.steps * L);
        for (std::size_t i = 0; i < marginal.size(); ++i) {
          marginal[i] = std::exp(alpha[i] + beta[i] - log_z);
        }
        if (en.requires_grad) {
          en.ensure_grad();
          for (std::size_t i = 0; i < marginal.size(); ++i) en.grad[i] += up * marginal[i];
          for (std::size_t n = 0; n < d.steps; ++n) en.grad[n * L + at(gold[n])] -= up;
        }
        if (sn.requires_grad) {
          sn.ensure_grad();
          for (std::size_t j = 0; j < L; ++j) sn.grad[j] += up * marginal[j];
          sn.grad[at(gold.front())] -= up;
        }
        if (fn.requires_grad) {
          fn.ensure_grad();
          for (std::size_t j = 0; j < L; ++j) fn.grad[j] += up * marginal[last * L + j];
          fn.grad[at(gold.back())] -= up;
        }
        if (tn.requires_grad) {
          tn.ensure_grad();
          for (std::size_t n = 0; n < last; ++n) {
            for (std::size_t i = 0; i < L; ++i) {
              for (std::size_t j = 0; j < L; ++j) {
                const double pair = std::exp(alpha[n * L + i] + tn.value[i * L + j] +
                                             en.value[(n + 1) * L + j] + beta[(n + 1) * L + j] -
                                             log_z);
                tn.grad[i * L + j] += up * pair;
              }
            }
            tn.grad[at(gold[n]) * L + at(gold[n + 1])] -= up;
          }
        }
      });
}

ViterbiResult viterbi_decode(const Tensor& emissions, const CrfParams& crf) {
  const auto d = check(emissions, crf);
  const auto L = d.labels;
  auto emit = emissions.values();
  auto trans = crf.transitions.values();
  auto start = crf.start_scores.values();
  auto end = crf.end_scores.values();

  std::vector<double> score(L), next(L);
  std::vector<int> backpointer(d.steps * L, 0);
  for (std::size_t j = 0; j < L; ++j) score[j] = start[j] + emit[j];
  for (std::size_t n = 1; n < d.steps; ++n) {
    for (std::size_t j = 0; j < L; ++j) {
      double best = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (std::size_t i = 0; i < L; ++i) {
        const double s = score[i] + trans[i * L + j];
        if (s > best) {
          best = s;
          arg = static_cast<int>(i);
        }
      }
      next[j] = best + emit[n * L + j];
      backpointer[n * L + j] = arg;
    }
    std::swap(score, next);
  }
  ViterbiResult result;
  result.labels.resize(d.steps);
  double best = -std::numeric_limits<double>::infinity();
  int arg = 0;
  for (std::size_t j = 0; j < L; ++j) {
    const double s = score[j] + end[j];
    if (s > best) {
      best = s;
      arg = static_cast<int>(j);
    }
  }
  result.score = best;
  result.labels[d.steps - 1] = arg;
  for (std::size_t n = d.steps - 1; n > 0; --n) {
    result.labels[n - 1] = backpointer[n * L + static_cast<std::size_t>(result.labels[n])];
  }
  return result;
}

}  // namespace jointnlu
