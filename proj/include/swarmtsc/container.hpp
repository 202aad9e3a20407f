#pragma once

// Binary container shared by trajectory batches, datasets and model
// checkpoints:
//
//   "SWRM"            4 bytes magic
//   version           u16 little-endian
//   header length     u32 little-endian
//   header            UTF-8 JSON, `kind` names the payload layout
//   payload           raw little-endian arrays in the order the kind defines

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "json.hpp"

namespace swarmtsc {

/// Malformed or incompatible input file.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace io {

inline constexpr char kMagic[4] = {'S', 'W', 'R', 'M'};
inline constexpr std::uint16_t kVersion = 1;

namespace detail {
template <typename T>
T byteswap_value(T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
  std::memcpy(&v, b, sizeof(T));
  return v;
}
}  // namespace detail

class ContainerWriter {
 public:
  ContainerWriter(const std::string& path, const nlohmann::json& header) : out_(path, std::ios::binary) {
    if (!out_) throw DataError("cannot open '" + path + "' for writing");
    out_.write(kMagic, 4);
    write_scalar(kVersion);
    const std::string text = header.dump();
    write_scalar(static_cast<std::uint32_t>(text.size()));
    out_.write(text.data(), static_cast<std::streamsize>(text.size()));
  }

  template <typename T>
  void write_scalar(T v) {
    if constexpr (std::endian::native == std::endian::big) v = detail::byteswap_value(v);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }

  template <typename T>
  void write_array(std::span<const T> values) {
    static_assert(std::is_arithmetic_v<T>);
    if constexpr (std::endian::native == std::endian::little || sizeof(T) == 1) {
      out_.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
    } else {
      for (T v : values) write_scalar(v);
    }
  }

  void close() {
    out_.close();
    if (!out_) throw DataError("write failed");
  }

 private:
  std::ofstream out_;
};

class ContainerReader {
 public:
  explicit ContainerReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw DataError("cannot open '" + path + "'");
    char magic[4] = {};
    in_.read(magic, 4);
    if (!in_ || std::memcmp(magic, kMagic, 4) != 0) throw DataError("'" + path + "' is not a SWRM container");
    version_ = read_scalar<std::uint16_t>();
    if (version_ != kVersion) {
      throw DataError("'" + path + "' has container version " + std::to_string(version_) + ", expected " +
                      std::to_string(kVersion));
    }
    const auto len = read_scalar<std::uint32_t>();
    std::string text(len, '\0');
    in_.read(text.data(), len);
    if (!in_) throw DataError("'" + path + "': truncated header");
    try {
      header_ = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("'" + path + "': bad header JSON: " + e.what());
    }
  }

  [[nodiscard]] const nlohmann::json& header() const noexcept { return header_; }
  [[nodiscard]] std::uint16_t version() const noexcept { return version_; }

  void expect_kind(const std::string& kind) const {
    if (header_.value("kind", std::string{}) != kind) {
      throw DataError("'" + path_ + "' holds '" + header_.value("kind", std::string{"?"}) + "', expected '" + kind +
                      "'");
    }
  }

  template <typename T>
  T read_scalar() {
    T v{};
    in_.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in_) throw DataError("'" + path_ + "': unexpected end of file");
    if constexpr (std::endian::native == std::endian::big) v = detail::byteswap_value(v);
    return v;
  }

  template <typename T>
  std::vector<T> read_array(std::size_t n) {
    static_assert(std::is_arithmetic_v<T>);
    std::vector<T> values(n);
    in_.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(n * sizeof(T)));
    if (!in_) throw DataError("'" + path_ + "': unexpected end of file");
    if constexpr (std::endian::native == std::endian::big && sizeof(T) > 1) {
      for (auto& v : values) v = detail::byteswap_value(v);
    }
    return values;
  }

  /// Throws unless the whole payload has been consumed.
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) throw DataError("'" + path_ + "': trailing bytes");
  }

 private:
  std::string path_;
  std::ifstream in_;
  std::uint16_t version_ = 0;
  nlohmann::json header_;
};

}  // namespace io
}  // namespace swarmtsc
