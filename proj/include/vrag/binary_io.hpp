// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vrag {

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

// Append-only little-endian byte buffer.
class ByteWriter {
 public:
  void put_bytes(std::string_view bytes);
  void put_u8(std::uint8_t v) { buffer_.push_back(v); }
  void put_u32(std::uint32_t v);
  void put_u64(std::uint64_t v);
  void put_f32(float v);
  void put_f64(double v);

  // Appends CRC32 of everything written so far.
  void put_crc();

  const std::vector<std::uint8_t>& bytes() const { return buffer_; }

 private:
  std::vector<std::uint8_t> buffer_;
};

// Bounds-checked little-endian reader. Reading past the end throws kTruncated.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::string get_bytes(std::size_t n);
  std::uint8_t get_u8();
  std::uint32_t get_u32();
  std::uint64_t get_u64();
  float get_f32();
  double get_f64();

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }
  void require(std::size_t n) const;

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

// Splits off the trailing 4-byte CRC32 and verifies it against the rest.
// Throws kTruncated if the buffer is shorter than `min_body` + 4 bytes and
// kChecksumMismatch if the stored and computed values differ.
std::span<const std::uint8_t> verify_crc_trailer(std::span<const std::uint8_t> bytes,
                                                 std::size_t min_body);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

// Writes through a temporary sibling file and renames it into place, so a
// reader never observes a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace vrag
