#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "jointnlu/checkpoint.hpp"
#include "jointnlu/data.hpp"
#include "jointnlu/encoder.hpp"
#include "jointnlu/eval.hpp"
#include "jointnlu/trainer.hpp"

namespace jointnlu {

// Everything a training or ablation run needs. Precedence when assembled by
// the CLI: flags > config file > these defaults.
struct RunConfig {
  std::filesystem::path data_dir;
  std::filesystem::path vocab_path;  // empty: build one from the training split
  std::filesystem::path out_dir = "run";
  std::size_t vocab_size = 8000;
  Variant variant = Variant::kSoftmax;
  EncoderConfig encoder;  // vocab_size, max_len and dropout_p are filled from data/train
  TrainConfig train;
  // Epochs for each half of the independent baseline in the ablation.
  std::size_t no_joint_epochs = 30;

  void validate() const;
};

// Layers a JSON object with optional "encoder" and "train" objects plus
// top-level run keys over `base`. Throws ConfigError.
RunConfig apply_config_json(const nlohmann::json& j, RunConfig base);
RunConfig apply_config_file(const std::filesystem::path& path, RunConfig base);
nlohmann::json to_json(const RunConfig& config);

struct VocabStats {
  std::size_t size = 0;
  std::size_t words = 0;
  std::size_t unk_words = 0;
};

VocabStats vocab_stats(const Vocabulary& vocab, const Split& split);

Vocabulary run_build_vocab(const std::filesystem::path& data_dir, std::size_t size,
                           const std::filesystem::path& out, std::ostream& log);

struct TrainOutcome {
  TrainResult result;
  std::filesystem::path checkpoint;
};

// Validates the data before writing anything to out_dir; writes model.ckpt,
// history.csv, vocab.txt, intent_labels.txt, slot_labels.txt, config.json.
TrainOutcome run_train(const RunConfig& config, std::ostream& log);

Metrics run_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& data_dir,
                 const std::string& split, std::size_t threads = 0);

Prediction run_predict(const Checkpoint& checkpoint, const std::string& query);

struct AblationRow {
  std::string model;  // "joint" or "no joint"
  std::size_t epochs = 0;
  Metrics dev;
  std::optional<Metrics> test;
};

// Joint model evaluated after each epoch-grid value, plus the independent
// baseline: an intent-only and a slot-only model with separate encoders.
std::vector<AblationRow> run_ablate(const RunConfig& config, std::ostream& log);

std::string ablation_csv(const std::vector<AblationRow>& rows);
std::string ablation_table(const std::vector<AblationRow>& rows);

}  // namespace jointnlu
