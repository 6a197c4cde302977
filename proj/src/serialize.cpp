#include "jointnlu/serialize.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <string_view>

#include "jointnlu/error.hpp"

namespace jointnlu {

namespace {

constexpr char kMagic[8] = {'J', 'N', 'L', 'U', 'P', 'A', 'R', 'M'};

template <typename UInt>
void put_le(std::string& out, UInt v) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
}

void put_string32(std::string& out, const std::string& s) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

class Reader {
 public:
  Reader(std::string bytes, std::string origin) : bytes_(std::move(bytes)), origin_(std::move(origin)) {}

  template <typename UInt>
  UInt get() {
    need(sizeof(UInt));
    UInt v = 0;
    for (std::size_t i = 0; i < sizeof(UInt); ++i) {
      v |= static_cast<UInt>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(UInt);
    return v;
  }

  std::string get_bytes(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError(origin_ + ": " + what + " (at byte " + std::to_string(pos_) + ")");
  }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail("unexpected end of file");
  }

  std::string bytes_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace

const NamedArray* ParameterContainer::find(const std::string& name) const {
  auto it = std::find_if(arrays.begin(), arrays.end(),
                         [&](const NamedArray& a) { return a.name == name; });
  return it == arrays.end() ? nullptr : &*it;
}

void ParameterContainer::write(const std::filesystem::path& path, ElementType type) const {
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(type));
  put_le<std::uint64_t>(out, metadata.size());
  for (const auto& [key, value] : metadata) {
    put_string32(out, key);
    put_le<std::uint64_t>(out, value.size());
    out += value;
  }
  put_le<std::uint64_t>(out, arrays.size());
  std::set<std::string_view> names;
  for (const auto& a : arrays) {
    if (!names.insert(a.name).second) throw Error("duplicate array name '" + a.name + "'");
    if (a.values.size() != shape_numel(a.shape)) {
      throw ShapeError("array '" + a.name + "' has " + std::to_string(a.values.size()) +
                       " values for shape " + shape_str(a.shape));
    }
    put_string32(out, a.name);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.shape.size()));
    for (auto d : a.shape) put_le<std::uint64_t>(out, d);
    for (double v : a.values) {
      if (type == ElementType::kFloat64) {
        put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
      } else {
        put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
      }
    }
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error("cannot open '" + path.string() + "' for writing");
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw Error("failed writing '" + path.string() + "'");
}

ParameterContainer ParameterContainer::read(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw FormatError("cannot open parameter file '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  Reader in(std::move(bytes), path.string());

  if (in.get_bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    in.fail("not a parameter container (bad magic)");
  }
  const auto version = in.get<std::uint32_t>();
  if (version != kVersion) {
    in.fail("unsupported format version " + std::to_string(version) + " (expected " +
            std::to_string(kVersion) + ")");
  }
  const auto type = static_cast<ElementType>(in.get<std::uint32_t>());
  if (type != ElementType::kFloat64 && type != ElementType::kFloat32) {
    in.fail("unknown element type " + std::to_string(static_cast<std::uint32_t>(type)));
  }

  ParameterContainer result;
  const auto meta_count = in.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < meta_count; ++i) {
    auto key = in.get_bytes(in.get<std::uint32_t>());
    auto value = in.get_bytes(in.get<std::uint64_t>());
    result.metadata.emplace(std::move(key), std::move(value));
  }
  const auto array_count = in.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < array_count; ++i) {
    NamedArray a;
    a.name = in.get_bytes(in.get<std::uint32_t>());
    const auto rank = in.get<std::uint32_t>();
    if (rank > 8) in.fail("implausible rank " + std::to_string(rank) + " for '" + a.name + "'");
    const std::size_t width = type == ElementType::kFloat64 ? 8 : 4;
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      a.shape.push_back(in.get<std::uint64_t>());
      if (a.shape.back() != 0 && n > in.remaining() / a.shape.back()) {
        in.fail("array '" + a.name + "' larger than the file");
      }
      n *= a.shape.back();
    }
    if (n > in.remaining() / width) in.fail("array '" + a.name + "' larger than the file");
    a.values.resize(n);
    for (auto& v : a.values) {
      if (type == ElementType::kFloat64) {
        v = std::bit_cast<double>(in.get<std::uint64_t>());
      } else {
        v = std::bit_cast<float>(in.get<std::uint32_t>());
      }
    }
    if (result.find(a.name)) in.fail("duplicate array name '" + a.name + "'");
    result.arrays.push_back(std::move(a));
  }
  if (!in.at_end()) in.fail("trailing bytes after last array");
  return result;
}

}  // namespace jointnlu
