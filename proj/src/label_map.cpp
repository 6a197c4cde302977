#include "jointnlu/label_map.hpp"

#include <fstream>

#include "jointnlu/error.hpp"

namespace jointnlu {

LabelMap::LabelMap(std::vector<std::string> labels) : labels_(std::move(labels)) {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i].empty()) throw DataError("empty label at id " + std::to_string(i));
    if (!index_.emplace(labels_[i], static_cast<int>(i)).second) {
      throw DataError("duplicate label '" + labels_[i] + "'");
    }
  }
}

LabelMap LabelMap::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label file '" + path.string() + "'");
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    labels.push_back(line);
  }
  return LabelMap(std::move(labels));
}

void LabelMap::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  for (const auto& l : labels_) out << l << '\n';
}

std::optional<int> LabelMap::find(const std::string& label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int LabelMap::id(const std::string& label) const {
  auto found = find(label);
  if (!found) throw DataError("unknown label '" + label + "'");
  return *found;
}

const std::string& LabelMap::label(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= labels_.size()) {
    throw DataError("label id " + std::to_string(id) + " out of range (" +
                    std::to_string(labels_.size()) + " labels)");
  }
  return labels_[static_cast<std::size_t>(id)];
}

}  // namespace jointnlu
