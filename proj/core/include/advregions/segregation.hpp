#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advregions/attack.hpp"
#include "advregions/classifier.hpp"
#include "advregions/grid.hpp"
#include "advregions/image.hpp"

namespace advregions {

enum class MapKind : std::uint8_t { roi, roa };
enum class MaskKind : std::uint8_t { roi, roa, blob, region };

const char* to_string(MapKind k) noexcept;
const char* to_string(MaskKind k) noexcept;
MaskKind mask_kind_from_string(const std::string& s);

// Per-pixel leverage in [0,1]. `degenerate` is set when the underlying signal
// was identically zero (the map is then all zeros).
struct SaliencyMap {
  Grid<double> values;
  MapKind kind = MapKind::roi;
  bool degenerate = false;
};

struct BinaryMask {
  Grid<std::uint8_t> bits;
  MaskKind kind = MaskKind::roi;

  std::size_t count() const noexcept;
  bool operator==(const BinaryMask&) const = default;
};

// Pixel-wise mean of contributor masks (or maps).
struct RepresentativeMap {
  Grid<double> values;
  int contributors = 0;
};

// Either an absolute cut in [0,1] or a quantile q in (0,1) resolved over the
// strictly positive values of a map.
struct Threshold {
  enum class Mode : std::uint8_t { absolute, quantile };
  Mode mode = Mode::quantile;
  double value = 0.85;

  static Threshold absolute(double v);
  static Threshold quantile(double q);
  // "q0.85" -> quantile, "0.3" -> absolute.
  static Threshold parse(const std::string& text);
  std::string to_string() const;
  bool operator==(const Threshold&) const = default;
};

// Gradient-weighted class activation map for the predicted class:
// weights = spatial mean of d score / d activations, map = ReLU(sum_k w_k A_k),
// bilinearly resized to the image size, then min-max normalised.
SaliencyMap roi_map(const Model& model, const Image& image);

// Channel-wise L2 magnitude of (adversarial - clean) per pixel, min-max
// normalised. Magnitudes are snapped to a 1e-12 grid first so that pixels moved
// by the same FGSM step compare equal.
SaliencyMap roa_map(const AdversarialPair& pair);

// Threshold value a mask would use, or nullopt when a quantile is requested
// over a map without positive values.
std::optional<double> resolve_threshold(const SaliencyMap& map, const Threshold& delta);

// bit = value >= resolved threshold. A quantile over an all-zero map yields an
// empty mask and a logged warning.
BinaryMask threshold_mask(const SaliencyMap& map, const Threshold& delta);

// value(p) = (# masks set at p) / n. Throws ValidationError on empty input or
// mismatched dimensions.
RepresentativeMap representative_map(std::span<const BinaryMask> masks);
// Mean of the continuous maps instead of their masks.
RepresentativeMap representative_from_maps(std::span<const SaliencyMap> maps);

// Bilinear resize with half-pixel centres and edge clamping.
Grid<double> bilinear_resize(const Grid<double>& src, int height, int width);

// (v - min) / (max - min); constant maps become all zeros. Returns false when
// the input had no positive value.
bool min_max_normalize(Grid<double>& values);

}  // namespace advregions
