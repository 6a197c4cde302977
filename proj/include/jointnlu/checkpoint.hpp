#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "jointnlu/joint_model.hpp"
#include "jointnlu/label_map.hpp"
#include "jointnlu/tokenizer.hpp"

namespace jointnlu {

inline constexpr const char* kCheckpointFormat = "jointnlu-checkpoint/1";

// Everything needed to run a trained model: parameters, encoder config,
// label maps, and the vocabulary (embedded, plus the path it came from).
struct Checkpoint {
  JointModel model;
  LabelMaps labels;
  Vocabulary vocab;
  std::string vocab_path;
  nlohmann::json train_config;
};

// Writes through a temporary file and renames, so a failed save never leaves
// a partial checkpoint at `path`.
void save_checkpoint(const std::filesystem::path& path, const JointModel& model,
                     const LabelMaps& labels, const Vocabulary& vocab,
                     const std::string& vocab_path = {},
                     const nlohmann::json& train_config = nlohmann::json::object());

// Throws FormatError on version mismatch, missing entries, or shape mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace jointnlu
