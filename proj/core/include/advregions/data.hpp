#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "advregions/image.hpp"

namespace advregions {

// Class order is fixed: the source class is index 0, the target class index 1.
enum class Label : std::uint8_t { source = 0, target = 1 };

constexpr int index_of(Label l) noexcept { return static_cast<int>(l); }
constexpr Label label_from_index(int i) noexcept { return i == 0 ? Label::source : Label::target; }
constexpr Label other(Label l) noexcept {
  return l == Label::source ? Label::target : Label::source;
}

enum class Split : std::uint8_t { train, test };

const char* to_string(Split s) noexcept;
Split split_from_string(const std::string& s);

struct PairSpec {
  std::string dataset_id;
  std::string source_class;
  std::string target_class;

  // Throws ConfigError when source == target or a field is empty.
  void validate() const;
  // "0 to 1" as used in report tables.
  std::string direction() const { return source_class + " to " + target_class; }

  bool operator==(const PairSpec&) const = default;
};

struct LabeledImageSet {
  std::vector<Image> images;
  std::vector<Label> labels;
  std::array<std::string, 2> class_names;
  Split split = Split::train;

  std::size_t size() const noexcept { return images.size(); }
  bool empty() const noexcept { return images.empty(); }
  std::size_t count(Label l) const;
  // Shape and label-count consistency. Train sets must hold both classes.
  void validate() const;
  // Subset holding only images of one class, order preserved.
  LabeledImageSet only(Label l) const;
  // Subset at the given indices, in the given order.
  LabeledImageSet select(const std::vector<std::size_t>& indices) const;

  bool operator==(const LabeledImageSet&) const = default;
};

// Raw integer image in interleaved H x W x C order, values expected in [0,255].
struct RawImage {
  int height = 0;
  int width = 0;
  int channels = 1;
  std::vector<int> values;
};

// pixel = raw / 255, converted to planar layout. Throws ValidationError on
// out-of-range values or a buffer that does not match the dimensions.
Image normalize(const RawImage& raw);

// Stratified, seeded split. Within each output the original order is kept.
// Throws ConfigError when the fraction is outside (0,1) or leaves a class
// empty on either side.
std::pair<LabeledImageSet, LabeledImageSet> holdout_split(const LabeledImageSet& set,
                                                          double test_fraction,
                                                          std::uint64_t seed);

struct DatasetOptions {
  std::filesystem::path root = "data";
  // Side length generic folder images are resized to.
  int image_size = 64;
  // Per-class caps; 0 keeps every available sample.
  int train_per_class = 0;
  int test_per_class = 0;
  // Used when a folder dataset has no train/ and test/ subdirectories.
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

// Loads the two classes of a pair as (train, test).
//
// "mnist" and "fashion-mnist" read the standard IDX files from
// <root>/<dataset_id>/ (or <root> itself when it already holds them). Any
// other id is a folder tree <root>/<dataset_id>/<class>/*.png|jpg, optionally
// split into train/ and test/ subtrees.
std::pair<LabeledImageSet, LabeledImageSet> load_pair(const PairSpec& spec,
                                                      const DatasetOptions& options);

// Canonical class names of the built-in datasets. Empty for folder datasets.
std::vector<std::string> builtin_class_names(const std::string& dataset_id);

// IDX (big-endian) readers. Throw IngestionError naming the file.
struct IdxImages {
  int count = 0;
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> bytes;
};
IdxImages read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);

}  // namespace advregions
