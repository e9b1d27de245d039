// SPDX-License-Identifier: Apache-2.0
#include "vrag/features.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "vrag/binary_io.hpp"
#include "vrag/error.hpp"

namespace vrag {
namespace {

constexpr std::string_view kMagic{"RMF1\0\0\0\0", 8};
constexpr std::size_t kHeaderBytes = 8 + 3 * 4;
// Largest payload accepted on read, in elements (16 GiB of f32).
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

void check_finite(std::span<const float> data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw Error(ErrorCode::kNonFinite, "feature value at index " + std::to_string(i));
    }
  }
}

}  // namespace

RegionFeatureTensor::RegionFeatureTensor(std::string video_id, std::size_t frames,
                                         std::size_t regions, std::size_t channels,
                                         std::vector<float> data)
    : video_id_(std::move(video_id)),
      frames_(frames),
      regions_(regions),
      channels_(channels),
      data_(std::move(data)) {
  validate(*this);
}

std::span<const float> RegionFeatureTensor::frame(std::size_t t) const {
  if (t < 1 || t > frames_) {
    throw Error(ErrorCode::kInvalidArgument,
                "frame " + std::to_string(t) + " outside [1, " + std::to_string(frames_) + "]");
  }
  return std::span<const float>(data_).subspan((t - 1) * frame_size(), frame_size());
}

void validate(const RegionFeatureTensor& tensor) {
  if (tensor.frames() == 0 || tensor.regions() == 0 || tensor.channels() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "tensor dimensions must be >= 1");
  }
  if (tensor.data().size() != tensor.frames() * tensor.regions() * tensor.channels()) {
    throw Error(ErrorCode::kInvalidArgument, "data length does not equal T*R*C");
  }
  check_finite(tensor.data());
}

std::vector<std::uint8_t> encode_features(const RegionFeatureTensor& tensor) {
  validate(tensor);
  constexpr auto kMaxDim = std::numeric_limits<std::uint32_t>::max();
  if (tensor.frames() > kMaxDim || tensor.regions() > kMaxDim || tensor.channels() > kMaxDim) {
    throw Error(ErrorCode::kDimensionOverflow, "dimension does not fit in 32 bits");
  }
  ByteWriter w;
  w.put_bytes(kMagic);
  w.put_u32(static_cast<std::uint32_t>(tensor.frames()));
  w.put_u32(static_cast<std::uint32_t>(tensor.regions()));
  w.put_u32(static_cast<std::uint32_t>(tensor.channels()));
  for (float v : tensor.data()) w.put_f32(v);
  w.put_crc();
  return w.bytes();
}

RegionFeatureTensor decode_features(std::span<const std::uint8_t> bytes, std::string video_id) {
  if (bytes.size() >= kMagic.size() &&
      std::string_view(reinterpret_cast<const char*>(bytes.data()), kMagic.size()) != kMagic) {
    throw Error(ErrorCode::kBadMagic, "not an RMF1 file");
  }
  ByteReader header(bytes);
  header.get_bytes(kMagic.size());
  std::uint64_t t = header.get_u32();
  std::uint64_t r = header.get_u32();
  std::uint64_t c = header.get_u32();
  if (t == 0 || r == 0 || c == 0) {
    throw Error(ErrorCode::kInvalidArgument, "RMF1 header has a zero dimension");
  }
  if (t * r > kMaxElements || t * r * c > kMaxElements) {
    throw Error(ErrorCode::kDimensionOverflow, "RMF1 header declares more than 2^32 values");
  }
  const std::uint64_t count = t * r * c;
  const std::uint64_t expected = kHeaderBytes + 4 * count + 4;
  if (bytes.size() < expected) {
    throw Error(ErrorCode::kTruncated, "RMF1 file has " + std::to_string(bytes.size()) +
                                           " bytes, header implies " + std::to_string(expected));
  }
  if (bytes.size() > expected) {
    throw Error(ErrorCode::kShapeMismatch, "RMF1 file has trailing bytes beyond the declared payload");
  }
  auto body = verify_crc_trailer(bytes, kHeaderBytes);
  ByteReader payload(body.subspan(kHeaderBytes));
  std::vector<float> data(count);
  for (auto& v : data) v = payload.get_f32();
  return RegionFeatureTensor(std::move(video_id), t, r, c, std::move(data));
}

void write_features(const RegionFeatureTensor& tensor, const std::filesystem::path& path) {
  auto bytes = encode_features(tensor);
  write_file_atomic(path, bytes);
}

RegionFeatureTensor read_features(const std::filesystem::path& path) {
  return decode_features(read_file(path), path.stem().string());
}

std::vector<double> flatten_frame(const RegionFeatureTensor& tensor, std::size_t t) {
  auto f = tensor.frame(t);
  return std::vector<double>(f.begin(), f.end());
}

RegionFeatureTensor slice_frames(const RegionFeatureTensor& tensor, std::size_t first,
                                 std::size_t last) {
  if (first < 1 || last < first || last > tensor.frames()) {
    throw Error(ErrorCode::kInvalidArgument, "frame range [" + std::to_string(first) + ", " +
                                                 std::to_string(last) + "] outside [1, " +
                                                 std::to_string(tensor.frames()) + "]");
  }
  auto all = tensor.data();
  auto begin = all.begin() + static_cast<std::ptrdiff_t>((first - 1) * tensor.frame_size());
  auto end = all.begin() + static_cast<std::ptrdiff_t>(last * tensor.frame_size());
  return RegionFeatureTensor(tensor.video_id(), last - first + 1, tensor.regions(),
                             tensor.channels(), std::vector<float>(begin, end));
}

RegionFeatureTensor concat_frames(std::span<const RegionFeatureTensor> parts) {
  if (parts.empty()) throw Error(ErrorCode::kEmptyInput, "nothing to concatenate");
  std::size_t frames = 0;
  std::vector<float> data;
  for (const auto& p : parts) {
    if (p.regions() != parts[0].regions() || p.channels() != parts[0].channels()) {
      throw Error(ErrorCode::kShapeMismatch, "concatenated tensors differ in R or C");
    }
    frames += p.frames();
    data.insert(data.end(), p.data().begin(), p.data().end());
  }
  return RegionFeatureTensor(parts[0].video_id(), frames, parts[0].regions(), parts[0].channels(),
                             std::move(data));
}

RegionFeatureTensor reverse_frames(const RegionFeatureTensor& tensor) {
  std::vector<float> data;
  data.reserve(tensor.data().size());
  for (std::size_t t = tensor.frames(); t >= 1; --t) {
    auto f = tensor.frame(t);
    data.insert(data.end(), f.begin(), f.end());
  }
  return RegionFeatureTensor(tensor.video_id(), tensor.frames(), tensor.regions(),
                             tensor.channels(), std::move(data));
}

CorpusManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open manifest " + path.string());
  CorpusManifest manifest;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    CorpusEntry entry;
    std::string file;
    if (!std::getline(fields, entry.video_id, '\t') || !std::getline(fields, file, '\t') ||
        !std::getline(fields, entry.group_id, '\t') || entry.video_id.empty() ||
        entry.group_id.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  path.string() + ":" + std::to_string(line_no) + ": expected id<TAB>path<TAB>group");
    }
    if (!seen.insert(entry.video_id).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate video id " + entry.video_id);
    }
    entry.path = file;
    if (entry.path.is_relative()) entry.path = path.parent_path() / entry.path;
    if (!std::filesystem::exists(entry.path)) {
      throw Error(ErrorCode::kIo, "manifest entry " + entry.video_id + " points to missing file " +
                                      entry.path.string());
    }
    manifest.entries.push_back(std::move(entry));
  }
  return manifest;
}

void write_manifest(const CorpusManifest& manifest, const std::filesystem::path& path) {
  std::ostringstream out;
  for (const auto& e : manifest.entries) {
    auto file = e.path;
    if (file.is_absolute() || file.parent_path() == path.parent_path()) {
      auto rel = file.lexically_relative(path.parent_path());
      if (!rel.empty() && *rel.begin() != "..") file = rel;
    }
    out << e.video_id << '\t' << file.generic_string() << '\t' << e.group_id << '\n';
  }
  auto text = out.str();
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<LabeledVideo> load_corpus(const CorpusManifest& manifest) {
  std::vector<LabeledVideo> videos;
  videos.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) {
    auto features = read_features(e.path);
    features.set_video_id(e.video_id);
    videos.push_back({std::move(features), e.group_id});
  }
  return videos;
}

std::filesystem::path manifest_path(const std::filesystem::path& corpus_dir) {
  return corpus_dir / "manifest.tsv";
}

}  // namespace vrag
