#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "jointnlu/tensor.hpp"

namespace jointnlu {

enum class ElementType : std::uint32_t { kFloat64 = 1, kFloat32 = 2 };

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

// Flat binary container of named arrays plus string metadata.
//
// Layout (all integers little-endian):
//   magic "JNLUPARM" | u32 version | u32 element type
//   u64 metadata count, then per entry: u32 key length, key, u64 value length, value
//   u64 array count, then per array: u32 name length, name, u32 rank,
//   u64 dims[rank], numel raw IEEE-754 values of the element type
struct ParameterContainer {
  static constexpr std::uint32_t kVersion = 1;

  std::map<std::string, std::string> metadata;
  std::vector<NamedArray> arrays;

  const NamedArray* find(const std::string& name) const;

  void write(const std::filesystem::path& path, ElementType type = ElementType::kFloat64) const;
  static ParameterContainer read(const std::filesystem::path& path);
};

}  // namespace jointnlu
