#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ria/aggregation.hpp"
#include "ria/retrieval.hpp"

namespace ria {

// Feature file (RIAF), little-endian:
//   0   char[4]  "RIAF"
//   4   u16      version = 1
//   6   u32      n_patches
//   10  u32      dim_in
//   14  f32[n_patches * dim_in]  row-major
inline constexpr std::uint16_t kFeatureFileVersion = 1;
inline constexpr std::size_t kFeatureHeaderBytes = 14;

std::vector<std::uint8_t> encode_feature_file(const Matrix& features);
/// Throws ErrorKind::format on bad magic, unknown version, size mismatch or
/// non-finite values.
FeatureMatrix decode_feature_file(std::span<const std::uint8_t> bytes);

FeatureMatrix read_feature_file(const std::filesystem::path& path);
void write_feature_file(const std::filesystem::path& path, const Matrix& features);

// Descriptor archive (RIAD), little-endian:
//   0   char[4]  "RIAD"
//   4   u16      version = 1
//   6   u32      count
//   10  u32      dim
//   14  f32[count * dim]  one descriptor per row, in archive order
//   ..  u32      metadata byte length L
//   ..  u8[L]    UTF-8 JSON object; "ids" holds the item ids in archive order
inline constexpr std::uint16_t kArchiveVersion = 1;

struct DescriptorArchive {
  std::vector<IndexedDescriptor> items;
  nlohmann::json metadata = nlohmann::json::object();
};

std::vector<std::uint8_t> encode_archive(const DescriptorArchive& archive);
DescriptorArchive decode_archive(std::span<const std::uint8_t> bytes);

DescriptorArchive read_archive(const std::filesystem::path& path);
void write_archive(const std::filesystem::path& path, const DescriptorArchive& archive);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

/// Writes to "<path>.tmp" and renames over `path`, so readers never see a
/// partial file.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace ria
