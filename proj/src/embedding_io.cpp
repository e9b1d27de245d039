// SPDX-License-Identifier: Apache-2.0
#include <limits>

#include "vrag/binary_io.hpp"
#include "vrag/error.hpp"
#include "vrag/retrieval.hpp"

namespace vrag {
namespace {

constexpr std::string_view kMagic{"EMB1", 4};
constexpr std::size_t kHeaderBytes = 4 + 1 + 4 + 4;

}  // namespace

std::vector<std::uint8_t> encode_index(const EmbeddingIndex& index) {
  if (index.size() > std::numeric_limits<std::uint32_t>::max() ||
      index.dims() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kDimensionOverflow, "index too large for EMB1");
  }
  ByteWriter w;
  w.put_bytes(kMagic);
  w.put_u8(static_cast<std::uint8_t>(index.mode()));
  w.put_u32(static_cast<std::uint32_t>(index.size()));
  w.put_u32(static_cast<std::uint32_t>(index.dims()));
  for (const auto& e : index.entries()) {
    w.put_u32(static_cast<std::uint32_t>(e.video_id.size()));
    w.put_bytes(e.video_id);
    if (index.mode() == IndexMode::kShot) w.put_u32(e.shot_idx);
    for (float v : e.embedding) w.put_f32(v);
  }
  w.put_crc();
  return w.bytes();
}

EmbeddingIndex decode_index(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= kMagic.size() &&
      std::string_view(reinterpret_cast<const char*>(bytes.data()), kMagic.size()) != kMagic) {
    throw Error(ErrorCode::kBadMagic, "not an EMB1 file");
  }
  auto body = verify_crc_trailer(bytes, kHeaderBytes);
  ByteReader r(body);
  r.get_bytes(kMagic.size());
  const std::uint8_t mode = r.get_u8();
  if (mode > 1) throw Error(ErrorCode::kInvalidArgument, "unknown EMB1 mode byte");
  const std::uint32_t count = r.get_u32();
  const std::uint32_t dims = r.get_u32();
  EmbeddingIndex index(static_cast<IndexMode>(mode), dims);
  for (std::uint32_t i = 0; i < count; ++i) {
    IndexEntry e;
    e.video_id = r.get_bytes(r.get_u32());
    if (mode == 1) e.shot_idx = r.get_u32();
    r.require(std::size_t{4} * dims);
    e.embedding.resize(dims);
    for (auto& v : e.embedding) v = r.get_f32();
    index.add(std::move(e));
  }
  if (r.remaining() != 0) throw Error(ErrorCode::kShapeMismatch, "trailing bytes after EMB1 records");
  return index;
}

void write_index(const EmbeddingIndex& index, const std::filesystem::path& path) {
  write_file_atomic(path, encode_index(index));
}

EmbeddingIndex read_index(const std::filesystem::path& path) { return decode_index(read_file(path)); }

}  // namespace vrag
