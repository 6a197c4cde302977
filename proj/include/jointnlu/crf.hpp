#pragma once

#include <span>
#include <vector>

#include "jointnlu/tensor.hpp"

namespace jointnlu {

// Linear-chain CRF over slot labels. transitions[i][j] scores label j
// following label i.
struct CrfParams {
  Tensor transitions;  // L x L
  Tensor start_scores; // L
  Tensor end_scores;   // L

  // All-zero parameters: decoding starts out identical to per-word argmax.
  static CrfParams zeros(std::size_t num_labels, bool requires_grad = true);
  std::size_t num_labels() const { return start_scores.dim(0); }
};

struct ViterbiResult {
  std::vector<int> labels;
  double score = 0.0;
};

// start[y1] + sum_n emissions[n][yn] + sum_n transitions[yn][yn+1] + end[yN].
double sequence_score(const Tensor& emissions, std::span<const int> labels, const CrfParams& crf);

// log of the sum of exp(sequence_score) over every labeling (forward algorithm).
double log_partition(const Tensor& emissions, const CrfParams& crf);

// log_partition - sequence_score, differentiable into the emissions and all
// three CRF parameter tensors. Gradients come from forward-backward marginals.
Tensor crf_nll(const Tensor& emissions, std::span<const int> labels, const CrfParams& crf);

// Highest-scoring labeling. Ties resolve to the lowest label id.
ViterbiResult viterbi_decode(const Tensor& emissions, const CrfParams& crf);

}  // namespace jointnlu
