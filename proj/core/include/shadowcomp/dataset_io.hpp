#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "shadowcomp/synthdata.hpp"

namespace shadowcomp::io {

inline constexpr int kDatasetSchemaVersion = 1;

/// 8-bit quantization applied on write: round(v * 255) / 255.
float quantize(float v) noexcept;
Image quantize(const Image& img);
Mask quantize(const Mask& m);
synth::ShadowTuple quantize(const synth::ShadowTuple& t);

void save_png(const Image& img, const std::filesystem::path& path);
/// Masks are written single-channel.
void save_png(const Mask& m, const std::filesystem::path& path);
Image load_image_png(const std::filesystem::path& path);
Mask load_mask_png(const std::filesystem::path& path);

nlohmann::json to_json(const synth::TupleMeta& meta);
synth::TupleMeta meta_from_json(const nlohmann::json& j);
nlohmann::json to_json(const geometry::BBox& b);
geometry::BBox bbox_from_json(const nlohmann::json& j);

/// Writes `<dir>/<id>/{comp,gt,m_fo,m_fs,m_bo,m_bs}.png` + meta.json per tuple
/// and a top-level manifest.json. Masks are stored as 0/255.
void write_dataset(const std::vector<synth::ShadowTuple>& tuples, const std::filesystem::path& dir,
                   synth::Domain domain);

struct Manifest {
  int schema_version = kDatasetSchemaVersion;
  std::string generator_version;
  synth::Domain domain = synth::Domain::kCustom;
  int resolution = 0;
  std::vector<std::string> ids;  // sorted
};

Manifest read_manifest(const std::filesystem::path& dir);

synth::ShadowTuple read_tuple(const std::filesystem::path& dir, const std::string& id);

/// All tuples in lexicographic id order. Throws kCorruptDataset for a
/// missing manifest, missing files, or mismatched raster sizes, and
/// kSchemaMismatch for a different schema version.
std::vector<synth::ShadowTuple> read_dataset(const std::filesystem::path& dir);

}  // namespace shadowcomp::io
