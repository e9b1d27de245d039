// SPDX-License-Identifier: Apache-2.0
//
// Parameter file layout (little-endian):
//   "VRAGPRM\0"                       magic
//   u32 version                       kVersion
//   u32 C, C', K, D, temporal window
//   u8 tied, region aggregation, pooling, concat mode
//   u8 has optimizer state
//   f64 values of every tensor, for_each_tensor order, Eigen storage order
//   [u64 adam step, f64 first moments, f64 second moments]
//   u32 CRC32 of everything above
#include <string>

#include "vrag/binary_io.hpp"
#include "vrag/error.hpp"
#include "vrag/model.hpp"
#include "vrag/optimizer.hpp"

namespace vrag {
namespace {

constexpr std::string_view kMagic{"VRAGPRM\0", 8};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 8 + 4 + 5 * 4 + 4 + 1;

void put_tensors(ByteWriter& w, const ModelParams& p) {
  for_each_tensor(p, [&](std::string_view, std::span<const double> t) {
    for (double v : t) w.put_f64(v);
  });
}

void get_tensors(ByteReader& r, ModelParams& p) {
  for_each_tensor(p, [&](std::string_view, std::span<double> t) {
    for (double& v : t) v = r.get_f64();
  });
}

}  // namespace

std::vector<std::uint8_t> encode_params(const ModelParams& params, const AdamState* optimizer) {
  validate(params);
  const auto& c = params.config;
  ByteWriter w;
  w.put_bytes(kMagic);
  w.put_u32(kVersion);
  for (std::size_t v : {c.input_dims, c.hidden_dims, c.layers, c.embedding_dims, c.temporal_window}) {
    w.put_u32(static_cast<std::uint32_t>(v));
  }
  w.put_u8(c.tied_attention ? 1 : 0);
  w.put_u8(static_cast<std::uint8_t>(c.region_aggregation));
  w.put_u8(static_cast<std::uint8_t>(c.pooling));
  w.put_u8(static_cast<std::uint8_t>(c.concat));
  w.put_u8(optimizer ? 1 : 0);
  put_tensors(w, params);
  if (optimizer) {
    if (!(optimizer->first_moment.config == c) || !(optimizer->second_moment.config == c)) {
      throw Error(ErrorCode::kShapeMismatch, "optimizer state shaped for a different model");
    }
    w.put_u64(optimizer->step);
    put_tensors(w, optimizer->first_moment);
    put_tensors(w, optimizer->second_moment);
  }
  w.put_crc();
  return w.bytes();
}

ModelParams decode_params(std::span<const std::uint8_t> bytes, AdamState* optimizer) {
  if (bytes.size() >= kMagic.size() &&
      std::string_view(reinterpret_cast<const char*>(bytes.data()), kMagic.size()) != kMagic) {
    throw Error(ErrorCode::kBadMagic, "not a parameter file");
  }
  auto body = verify_crc_trailer(bytes, kHeaderBytes);
  ByteReader r(body);
  r.get_bytes(kMagic.size());
  const std::uint32_t version = r.get_u32();
  if (version != kVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "parameter file version " + std::to_string(version) + ", expected " +
                    std::to_string(kVersion));
  }
  ModelConfig c;
  c.input_dims = r.get_u32();
  c.hidden_dims = r.get_u32();
  c.layers = r.get_u32();
  c.embedding_dims = r.get_u32();
  c.temporal_window = r.get_u32();
  c.tied_attention = r.get_u8() != 0;
  c.region_aggregation = static_cast<RegionAggregation>(r.get_u8());
  c.pooling = static_cast<Pooling>(r.get_u8());
  c.concat = static_cast<ConcatMode>(r.get_u8());
  const bool has_optimizer = r.get_u8() != 0;
  validate(c);

  ModelParams params = zeros_like(c);
  const std::size_t count = parameter_count(params);
  const std::size_t expected = 8 * count * (has_optimizer ? 3 : 1) + (has_optimizer ? 8 : 0);
  if (r.remaining() != expected) {
    throw Error(ErrorCode::kShapeMismatch,
                "payload has " + std::to_string(r.remaining()) + " bytes, header implies " +
                    std::to_string(expected));
  }
  get_tensors(r, params);
  validate(params);
  if (has_optimizer) {
    AdamState state = make_adam_state(c);
    state.step = r.get_u64();
    get_tensors(r, state.first_moment);
    get_tensors(r, state.second_moment);
    if (optimizer) *optimizer = std::move(state);
  } else if (optimizer) {
    *optimizer = make_adam_state(c);
  }
  return params;
}

void save_params(const ModelParams& params, const std::filesystem::path& path,
                 const AdamState* optimizer) {
  write_file_atomic(path, encode_params(params, optimizer));
}

ModelParams load_params(const std::filesystem::path& path, AdamState* optimizer) {
  return decode_params(read_file(path), optimizer);
}

}  // namespace vrag
