#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace fdw {

// CRC-64/XZ (reflected, poly 0x42F0E1EBA9EA3693).
class Crc64 {
 public:
  Crc64() = default;

  void update(const void* data, std::size_t len);
  [[nodiscard]] std::uint64_t value() const { return state_ ^ ~0ULL; }

  static std::uint64_t of(const void* data, std::size_t len) {
    Crc64 c;
    c.update(data, len);
    return c.value();
  }
  static std::uint64_t of_file(const std::string& path);

  static std::string to_hex(std::uint64_t v);
  static std::uint64_t from_hex(const std::string& hex);

 private:
  std::uint64_t state_ = ~0ULL;
};

}  // namespace fdw
