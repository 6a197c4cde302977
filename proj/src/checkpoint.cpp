#include "jointnlu/checkpoint.hpp"

#include <set>
#include <sstream>

#include "jointnlu/error.hpp"
#include "jointnlu/serialize.hpp"

namespace jointnlu {

namespace {

std::string join_lines(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += s + '\n';
  return out;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

const std::string& required(const ParameterContainer& c, const std::string& key,
                            const std::filesystem::path& path) {
  auto it = c.metadata.find(key);
  if (it == c.metadata.end()) {
    throw FormatError(path.string() + ": checkpoint is missing '" + key + "'");
  }
  return it->second;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const JointModel& model,
                     const LabelMaps& labels, const Vocabulary& vocab,
                     const std::string& vocab_path, const nlohmann::json& train_config) {
  ParameterContainer c;
  c.metadata["format"] = kCheckpointFormat;
  c.metadata["encoder_config"] = nlohmann::json(model.config()).dump();
  c.metadata["variant"] = to_string(model.variant());
  c.metadata["intent_labels"] = join_lines(labels.intents.labels());
  c.metadata["slot_labels"] = join_lines(labels.slots.labels());
  c.metadata["vocab"] = join_lines(vocab.tokens());
  c.metadata["vocab_path"] = vocab_path;
  c.metadata["train_config"] = train_config.dump();
  for (const auto& [name, t] : model.named_parameters()) {
    c.arrays.push_back({name, t.shape(), {t.values().begin(), t.values().end()}});
  }
  auto tmp = path;
  tmp += ".tmp";
  try {
    c.write(tmp);
    std::filesystem::rename(tmp, path);
  } catch (...) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw;
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const auto c = ParameterContainer::read(path);
  if (required(c, "format", path) != kCheckpointFormat) {
    throw FormatError(path.string() + ": unsupported checkpoint format '" +
                      c.metadata.at("format") + "' (expected " + kCheckpointFormat + ")");
  }
  EncoderConfig config;
  nlohmann::json train_config;
  try {
    config = nlohmann::json::parse(required(c, "encoder_config", path)).get<EncoderConfig>();
    train_config = nlohmann::json::parse(required(c, "train_config", path));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": corrupt embedded config: " + e.what());
  }
  LabelMaps labels{LabelMap(split_lines(required(c, "intent_labels", path))),
                   LabelMap(split_lines(required(c, "slot_labels", path)))};
  Vocabulary vocab(split_lines(required(c, "vocab", path)));
  const auto variant = parse_variant(required(c, "variant", path));

  auto model = JointModel::initialize(config, labels.intents.size(), labels.slots.size(), variant,
                                      0);
  const auto params = model.named_parameters();
  std::set<std::string> expected;
  for (auto [name, t] : params) {
    expected.insert(name);
    const auto* stored = c.find(name);
    if (!stored) throw FormatError(path.string() + ": missing parameter '" + name + "'");
    if (stored->shape != t.shape()) {
      throw FormatError(path.string() + ": parameter '" + name + "' has shape " +
                        shape_str(stored->shape) + ", expected " + shape_str(t.shape()));
    }
    std::copy(stored->values.begin(), stored->values.end(), t.mutable_values().begin());
  }
  for (const auto& a : c.arrays) {
    if (!expected.count(a.name)) {
      throw FormatError(path.string() + ": unexpected parameter '" + a.name + "'");
    }
  }
  return Checkpoint{std::move(model), std::move(labels), std::move(vocab),
                    required(c, "vocab_path", path), std::move(train_config)};
}

}  // namespace jointnlu
