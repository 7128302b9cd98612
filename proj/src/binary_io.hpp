#pragma once

// Little-endian encoding helpers shared by the binary file formats.

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "sea/errors.hpp"

namespace sea::detail {

class ByteWriter {
 public:
  explicit ByteWriter(std::size_t reserve) { bytes_.reserve(reserve); }

  void magic(const std::array<char, 4>& m) {
    for (char c : m) bytes_.push_back(static_cast<std::byte>(c));
  }
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) bytes_.push_back(static_cast<std::byte>((v >> (8 * k)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) bytes_.push_back(static_cast<std::byte>((v >> (8 * k)) & 0xFF));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  std::span<const std::byte> bytes() const noexcept { return bytes_; }

 private:
  std::vector<std::byte> bytes_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::byte> bytes, const std::filesystem::path& path)
      : bytes_(bytes), path_(path) {}

  bool has(std::size_t n) const noexcept { return bytes_.size() - pos_ >= n; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  bool magic(const std::array<char, 4>& m) {
    require(4, "magic");
    bool ok = true;
    for (char c : m) ok &= static_cast<char>(bytes_[pos_++]) == c;
    return ok;
  }
  std::uint32_t u32() {
    require(4, "u32 field");
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t(std::to_integer<std::uint8_t>(bytes_[pos_++])) << (8 * k);
    return v;
  }
  std::uint64_t u64() {
    require(8, "u64 field");
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= std::uint64_t(std::to_integer<std::uint8_t>(bytes_[pos_++])) << (8 * k);
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

 private:
  void require(std::size_t n, const char* what) const {
    if (!has(n)) {
      throw FormatError(path_.string() + ": file too short to hold " + what);
    }
  }

  std::span<const std::byte> bytes_;
  std::size_t pos_ = 0;
  const std::filesystem::path& path_;
};

inline std::vector<std::byte> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(path.string() + ": cannot open for reading");
  }
  in.seekg(0, std::ios::end);
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  std::vector<std::byte> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) {
    throw IoError(path.string() + ": read failed");
  }
  return bytes;
}

}  // namespace sea::detail
