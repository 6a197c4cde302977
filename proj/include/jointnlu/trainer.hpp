#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "jointnlu/data.hpp"
#include "jointnlu/eval.hpp"
#include "jointnlu/joint_model.hpp"

namespace jointnlu {

inline const std::vector<std::size_t> kEpochGrid{1, 5, 10, 20, 30, 40};

struct TrainConfig {
  double learning_rate = 5e-5;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 30;
  std::vector<std::size_t> epoch_grid = kEpochGrid;
  double dropout_p = 0.1;
  std::size_t max_len = 50;
  std::uint64_t seed = 42;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  // Global gradient-norm clip; <= 0 disables clipping.
  double clip_norm = 1.0;
  // Worker threads for evaluation; 0 picks the hardware concurrency.
  std::size_t eval_threads = 0;
  Objective objective = Objective::kJoint;

  // Throws ConfigError.
  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);

struct AdamState {
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;
  std::size_t step = 0;
};

struct AdamConfig {
  double learning_rate = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Bias-corrected Adam update from the gradients held by `params`. A missing
// gradient counts as zero. Throws NumericError naming the first parameter
// with a non-finite gradient, before any parameter is modified.
void adam_step(const NamedTensors& params, AdamState& state, const AdamConfig& config);

// Scales all gradients so their global L2 norm is at most max_norm. Returns
// the norm before clipping.
double clip_gradients(const NamedTensors& params, double max_norm);

void zero_gradients(const NamedTensors& params);

// Encoded examples plus gold labels for scoring. Gold intents keep their
// original strings so unseen intents always score as errors; gold tags use
// the known-label mapping (unseen tags become "O").
struct EvalSet {
  std::vector<TokenizedExample> examples;
  std::vector<std::string> gold_intents;
  std::vector<TagSequence> gold_tags;
};

EvalSet make_eval_set(const Split& split, const Vocabulary& vocab, const LabelMaps& labels,
                      std::size_t max_len);

std::vector<TokenizedExample> encode_split(const Split& mapped_split, const Vocabulary& vocab,
                                           const LabelMaps& labels, std::size_t max_len);

// Read-only decoding fanned out across worker threads.
std::vector<DecodedExample> decode_parallel(const JointModel& model,
                                            std::span<const TokenizedExample> examples,
                                            std::size_t threads);

// Intents from one decode and slots from another (the same one for a joint
// model; two separate models for the independent baseline).
Metrics score_decoded(std::span<const DecodedExample> intent_source,
                      std::span<const DecodedExample> slot_source, const EvalSet& set,
                      const LabelMaps& labels);

Metrics evaluate(const JointModel& model, const EvalSet& set, const LabelMaps& labels,
                 std::size_t threads = 0);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  std::optional<Metrics> dev;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochRecord&, const JointModel&)>;

// Mini-batch Adam training for config.max_epochs epochs, shuffling with a
// seeded generator. With a dev set, the model is left holding the parameters
// of the epoch with the best dev frame accuracy (earliest on ties); without
// one, the final parameters. Throws NumericError on a non-finite loss.
TrainResult train(std::span<const TokenizedExample> train_set, JointModel& model,
                  const TrainConfig& config, const EvalSet* dev = nullptr,
                  const LabelMaps* labels = nullptr, const EpochCallback& on_epoch = {});

// Comma-separated history: epoch,train_loss,dev_intent_acc,dev_slot_f1,dev_frame_acc
std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace jointnlu
