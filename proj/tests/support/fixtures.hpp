#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "jointnlu/crf.hpp"
#include "jointnlu/data.hpp"
#include "jointnlu/encoder.hpp"
#include "jointnlu/eval.hpp"

namespace jointnlu::testing {

std::filesystem::path data_root();
std::filesystem::path small_data_dir();  // 32 / 16 / 16 utterances
std::filesystem::path proxy_data_dir();  // 1400 / 140 / 140 utterances

// Fresh, empty directory under the system temp dir.
std::filesystem::path fresh_temp_dir(const std::string& name);

// 2 layers, hidden 16, 2 heads, intermediate 32, no dropout.
EncoderConfig tiny_config(std::size_t vocab_size, std::size_t max_len = 16);

CrfParams random_crf(std::size_t labels, std::uint64_t seed, bool requires_grad = false);

// Exhaustive enumeration over all L^N labelings.
struct BruteForceCrf {
  double log_partition = 0.0;
  std::vector<int> best;  // first maximum in lexicographic order
  double best_score = 0.0;
};
BruteForceCrf brute_force_crf(const Tensor& emissions, const CrfParams& crf);

// Majority training intent for every utterance; each word gets the tag it
// carries most often in training ("O" for unseen words). Scored against the
// same gold the model is scored against.
Metrics majority_baseline(const Split& train, const Split& test, const LabelMaps& labels);

}  // namespace jointnlu::testing
