#pragma once

// Internal little-endian serialization helpers shared by the model and
// dataset-cache file formats. Include from src/ only.

#include <array>
#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ttn/errors.hpp"

namespace ttn::detail {

// CRC32 (IEEE 802.3, reflected, poly 0xEDB88320).
constexpr std::array<std::uint32_t, 256> make_crc_table() {
  std::array<std::uint32_t, 256> table{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int bit = 0; bit < 8; ++bit) c = (c & 1u) ? (0xEDB88320u ^ (c >> 1)) : (c >> 1);
    table[i] = c;
  }
  return table;
}

inline std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  static constexpr auto table = make_crc_table();
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::uint8_t b : bytes) crc = table[(crc ^ b) & 0xFFu] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

inline void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

inline void append_f64(std::vector<std::uint8_t>& out, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xFF));
}

struct Cursor {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  void need(std::size_t n, const char* what) const {
    if (pos + n > bytes.size()) {
      throw FormatError("truncated file: need " + std::to_string(n) + " bytes for " + what +
                        " at byte " + std::to_string(pos) + ", file has " +
                        std::to_string(bytes.size()));
    }
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes[pos + static_cast<std::size_t>(i)];
    pos += 4;
    return v;
  }

  double f64(const char* what) {
    need(8, what);
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | bytes[pos + static_cast<std::size_t>(i)];
    pos += 8;
    return std::bit_cast<double>(bits);
  }
};

// Verifies the trailing CRC32 over bytes[0, pos) and that nothing follows it.
inline void finish_crc(Cursor& cur, const std::string& path) {
  const std::size_t crc_at = cur.pos;
  const std::uint32_t stored = cur.u32("checksum");
  const std::uint32_t computed = crc32(cur.bytes.first(crc_at));
  if (stored != computed) {
    throw FormatError("checksum mismatch at byte " + std::to_string(crc_at) + " of " + path);
  }
  if (cur.pos != cur.bytes.size()) {
    throw FormatError("trailing bytes after checksum at byte " + std::to_string(cur.pos) + " of " +
                      path);
  }
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace ttn::detail
