// SPDX-License-Identifier: Apache-2.0
//
// Region-feature tensors: the engine's only raw input. A video is T frames,
// each frame R region descriptors of C channels, stored (t, r, c) row-major.
// Frame numbers in this API are 1-based, matching shot ranges and the
// manifest/shot file formats.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace vrag {

class RegionFeatureTensor {
 public:
  RegionFeatureTensor() = default;
  // Throws kInvalidArgument on zero dims or wrong data length, kNonFinite on
  // NaN/Inf payload.
  RegionFeatureTensor(std::string video_id, std::size_t frames, std::size_t regions,
                      std::size_t channels, std::vector<float> data);

  const std::string& video_id() const { return video_id_; }
  void set_video_id(std::string id) { video_id_ = std::move(id); }

  std::size_t frames() const { return frames_; }
  std::size_t regions() const { return regions_; }
  std::size_t channels() const { return channels_; }
  std::size_t nodes() const { return frames_ * regions_; }
  std::size_t frame_size() const { return regions_ * channels_; }

  std::span<const float> data() const { return data_; }

  // 1-based frame number; returns the R*C values of that frame.
  std::span<const float> frame(std::size_t t) const;

  float at(std::size_t frame0, std::size_t region, std::size_t channel) const {
    return data_[(frame0 * regions_ + region) * channels_ + channel];
  }

  friend bool operator==(const RegionFeatureTensor&, const RegionFeatureTensor&) = default;

 private:
  std::string video_id_;
  std::size_t frames_ = 0;
  std::size_t regions_ = 0;
  std::size_t channels_ = 0;
  std::vector<float> data_;
};

// Re-checks shape and finiteness of an existing tensor.
void validate(const RegionFeatureTensor& tensor);

// RMF1 binary format: "RMF1\0\0\0\0", u32 T, u32 R, u32 C, T*R*C f32 values,
// CRC32 of all preceding bytes. Little-endian throughout.
std::vector<std::uint8_t> encode_features(const RegionFeatureTensor& tensor);
RegionFeatureTensor decode_features(std::span<const std::uint8_t> bytes, std::string video_id = {});

void write_features(const RegionFeatureTensor& tensor, const std::filesystem::path& path);
// The video id of the returned tensor is the file stem.
RegionFeatureTensor read_features(const std::filesystem::path& path);

// Region-major, channel-minor concatenation of frame t (1-based).
std::vector<double> flatten_frame(const RegionFeatureTensor& tensor, std::size_t t);

// Inclusive 1-based frame range [first, last].
RegionFeatureTensor slice_frames(const RegionFeatureTensor& tensor, std::size_t first,
                                 std::size_t last);

// Concatenates along the frame axis; all parts must share R and C. The result
// takes the id of the first part.
RegionFeatureTensor concat_frames(std::span<const RegionFeatureTensor> parts);

RegionFeatureTensor reverse_frames(const RegionFeatureTensor& tensor);

struct CorpusEntry {
  std::string video_id;
  std::filesystem::path path;
  std::string group_id;
};

// Text manifest, one `video_id<TAB>path<TAB>group_id` line per video. Relative
// paths are resolved against the manifest's directory.
struct CorpusManifest {
  std::vector<CorpusEntry> entries;
};

CorpusManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);

struct LabeledVideo {
  RegionFeatureTensor features;
  std::string group_id;
};

std::vector<LabeledVideo> load_corpus(const CorpusManifest& manifest);

// Directory layout used by `vrag synth`: <dir>/manifest.tsv plus one file per video.
std::filesystem::path manifest_path(const std::filesystem::path& corpus_dir);

}  // namespace vrag
