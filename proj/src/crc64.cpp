#include "fdw/common/crc64.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace fdw {
namespace {

constexpr std::uint64_t kPoly = 0xC96C5795D7870F42ULL;  // 0x42F0E1EBA9EA3693 reflected

std::array<std::uint64_t, 256> make_table() {
  std::array<std::uint64_t, 256> t{};
  for (std::uint64_t i = 0; i < 256; ++i) {
    std::uint64_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1) ? (c >> 1) ^ kPoly : c >> 1;
    t[i] = c;
  }
  return t;
}

const std::array<std::uint64_t, 256>& table() {
  static const auto t = make_table();
  return t;
}

}  // namespace

void Crc64::update(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  const auto& t = table();
  std::uint64_t c = state_;
  for (std::size_t i = 0; i < len; ++i) c = t[(c ^ p[i]) & 0xFF] ^ (c >> 8);
  state_ = c;
}

std::uint64_t Crc64::of_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file for checksum: " + path);
  Crc64 c;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    c.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return c.value();
}

std::string Crc64::to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t Crc64::from_hex(const std::string& hex) {
  if (hex.size() != 16) throw std::runtime_error("bad crc64 hex string: " + hex);
  return std::stoull(hex, nullptr, 16);
}

}  // namespace fdw
