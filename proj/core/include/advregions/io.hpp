#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "advregions/attack.hpp"
#include "advregions/data.hpp"
#include "advregions/grid.hpp"
#include "advregions/isolation.hpp"
#include "advregions/neutralization.hpp"
#include "advregions/segregation.hpp"

namespace advregions::io {

// Binary container shared by checkpoints, image sets, adversarial sets and
// mask stacks:
//
//   "ADVRCONT" | u32 version | u64 header bytes | header JSON |
//   u64 payload count | payload (little-endian float64)
//
// The header always carries a "kind" string.
inline constexpr std::uint32_t kContainerVersion = 1;

struct Container {
  nlohmann::json header;
  std::vector<double> payload;
};

void write_container(const std::filesystem::path& path, const nlohmann::json& header,
                     std::span<const double> payload);
// Throws IngestionError on malformed files or when the kind differs.
Container read_container(const std::filesystem::path& path, std::string_view expected_kind);

void save_set(const LabeledImageSet& set, const std::filesystem::path& path);
LabeledImageSet load_set(const std::filesystem::path& path);

// Clean/adversarial pairs plus the attack configuration they were made with.
void save_adversarial_set(const std::vector<AdversarialPair>& pairs,
                          const std::array<std::string, 2>& class_names, const AttackConfig& cfg,
                          const std::filesystem::path& path);
struct AdversarialSet {
  std::vector<AdversarialPair> pairs;
  std::array<std::string, 2> class_names;
  AttackConfig attack;
};
AdversarialSet load_adversarial_set(const std::filesystem::path& path);

void save_masks(const std::vector<BinaryMask>& masks, const std::filesystem::path& path);
std::vector<BinaryMask> load_masks(const std::filesystem::path& path);

// 8-bit grayscale PNG of value*255 (values clamped to [0,1]).
void write_png(const Grid<double>& values, const std::filesystem::path& path);
void write_png(const BinaryMask& mask, const std::filesystem::path& path);
void write_png(const Image& image, const std::filesystem::path& path);
// Reads an 8-bit grayscale PNG; pixels >= 128 are set.
BinaryMask read_mask_png(const std::filesystem::path& path, MaskKind kind);

// One colour per region: UV red, U-notV green, notU-V blue, notU-notV black.
void write_partition_png(const RegionPartition& partition, const std::filesystem::path& path);

void write_json(const nlohmann::json& doc, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

// Full-precision representative map sidecar (values + metadata).
void save_representative(const RepresentativeMap& map, const nlohmann::json& meta,
                         const std::filesystem::path& json_path);
RepresentativeMap load_representative(const std::filesystem::path& json_path);

// Blob mask plus parameters and provenance as one JSON document.
void save_blob(const Blob& blob, const std::filesystem::path& json_path);
Blob load_blob(const std::filesystem::path& json_path);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace advregions::io
