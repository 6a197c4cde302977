#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace jointnlu {

// Dense label <-> id mapping. On disk: one label per line, line index = id.
class LabelMap {
 public:
  LabelMap() = default;
  explicit LabelMap(std::vector<std::string> labels);

  static LabelMap load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return labels_.size(); }
  std::optional<int> find(const std::string& label) const;
  // Throws DataError for unknown labels.
  int id(const std::string& label) const;
  const std::string& label(int id) const;
  const std::vector<std::string>& labels() const { return labels_; }

  bool operator==(const LabelMap& other) const { return labels_ == other.labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> index_;
};

struct LabelMaps {
  LabelMap intents;
  LabelMap slots;
};

}  // namespace jointnlu
