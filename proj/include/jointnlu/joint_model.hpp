#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jointnlu/crf.hpp"
#include "jointnlu/encoder.hpp"
#include "jointnlu/label_map.hpp"
#include "jointnlu/tokenizer.hpp"

namespace jointnlu {

enum class Variant { kSoftmax, kCrf };

std::string to_string(Variant v);
// "softmax" or "crf"; throws ConfigError otherwise.
Variant parse_variant(std::string_view name);

// Which factors of the joint likelihood a loss includes. The single-task
// objectives train the two halves of the independent ("no joint") baseline.
enum class Objective { kJoint, kIntentOnly, kSlotOnly };

// Encoder plus intent head (W_i, b_i on the [CLS] state), slot head
// (W_s, b_s on each word's first sub-token), and an optional CRF.
//
// Copies share parameter storage; use clone() for an independent model.
struct JointModel {
  Encoder encoder;
  Tensor intent_weight;  // intent_count x hidden
  Tensor intent_bias;    // intent_count
  Tensor slot_weight;    // slot_count x hidden
  Tensor slot_bias;      // slot_count
  std::optional<CrfParams> crf;

  static JointModel initialize(const EncoderConfig& config, std::size_t intent_count,
                               std::size_t slot_count, Variant variant, std::uint64_t seed);

  const EncoderConfig& config() const { return encoder.config; }
  Variant variant() const { return crf ? Variant::kCrf : Variant::kSoftmax; }
  std::size_t intent_count() const { return intent_bias.dim(0); }
  std::size_t slot_count() const { return slot_bias.dim(0); }

  // Stable names; "crf.transitions" is present exactly for CRF models.
  NamedTensors named_parameters() const;
  JointModel clone() const;
  // Copies parameter values from a structurally identical model.
  void copy_values_from(const JointModel& other);
};

// W_i h1 + b_i. h1 is a hidden vector (or a batch x hidden matrix of them).
Tensor intent_logits(const Tensor& h1, const JointModel& model);

// W_s h_n + b_s for exactly the rows flagged in word_start_mask.
Tensor slot_logits(const Tensor& hidden_states, std::span<const unsigned char> word_start_mask,
                   const JointModel& model);

// Mean over the batch of -log p(intent, slots | x): intent cross-entropy plus
// the per-word slot cross-entropies (or the CRF negative log-likelihood).
Tensor batch_loss(std::span<const TokenizedExample* const> batch, const JointModel& model,
                  const ForwardContext& ctx, Objective objective = Objective::kJoint);

Tensor joint_loss(const TokenizedExample& example, const JointModel& model,
                  const ForwardContext& ctx, Objective objective = Objective::kJoint);

// Decoded ids for one encoded example; slot_ids covers the kept words only.
struct DecodedExample {
  int intent = 0;
  double intent_probability = 0.0;
  std::vector<double> intent_distribution;
  std::vector<int> slot_ids;
};

// Inference with dropout off and no graph recording.
std::vector<DecodedExample> decode_batch(std::span<const TokenizedExample> examples,
                                         const JointModel& model, std::size_t batch_size = 64);

struct Prediction {
  std::string intent;
  double intent_probability = 0.0;
  std::vector<std::string> slots;  // one per input word
  std::vector<double> intent_distribution;
};

// Words truncated away by max_len are tagged "O".
Prediction to_prediction(const DecodedExample& decoded, std::size_t input_words,
                         const LabelMaps& labels);

Prediction predict(std::span<const std::string> words, const JointModel& model,
                   const Vocabulary& vocab, const LabelMaps& labels);

}  // namespace jointnlu
