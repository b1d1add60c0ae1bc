#include "advregions/segregation.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "advregions/error.hpp"

namespace advregions {

const char* to_string(MapKind k) noexcept { return k == MapKind::roi ? "roi" : "roa"; }

const char* to_string(MaskKind k) noexcept {
  switch (k) {
    case MaskKind::roi: return "roi";
    case MaskKind::roa: return "roa";
    case MaskKind::blob: return "blob";
    case MaskKind::region: return "region";
  }
  return "?";
}

MaskKind mask_kind_from_string(const std::string& s) {
  if (s == "roi") return MaskKind::roi;
  if (s == "roa") return MaskKind::roa;
  if (s == "blob") return MaskKind::blob;
  if (s == "region") return MaskKind::region;
  throw ValidationError("unknown mask kind '" + s + "'");
}

std::size_t BinaryMask::count() const noexcept {
  return static_cast<std::size_t>(std::count_if(bits.values().begin(), bits.values().end(),
                                                [](std::uint8_t b) { return b != 0; }));
}

Threshold Threshold::absolute(double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("absolute threshold must lie in [0,1]");
  return {Mode::absolute, v};
}

Threshold Threshold::quantile(double q) {
  if (!(q > 0.0 && q < 1.0)) throw ConfigError("quantile threshold must lie in (0,1)");
  return {Mode::quantile, q};
}

Threshold Threshold::parse(const std::string& text) {
  try {
    std::size_t used = 0;
    if (!text.empty() && (text[0] == 'q' || text[0] == 'Q')) {
      const std::string rest = text.substr(1);
      const double q = std::stod(rest, &used);
      if (used != rest.size()) throw ConfigError("trailing characters");
      return quantile(q);
    }
    const double v = std::stod(text, &used);
    if (used != text.size()) throw ConfigError("trailing characters");
    return absolute(v);
  } catch (const std::logic_error&) {
    throw ConfigError("cannot parse threshold '" + text + "'");
  } catch (const ConfigError& e) {
    throw ConfigError("threshold '" + text + "': " + e.what());
  }
}

std::string Threshold::to_string() const {
  char buf[64];
  std::snprintf(buf, sizeof buf, mode == Mode::quantile ? "q%.17g" : "%.17g", value);
  return buf;
}

bool min_max_normalize(Grid<double>& values) {
  if (values.empty()) return false;
  const auto [lo_it, hi_it] = std::minmax_element(values.values().begin(), values.values().end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > 0.0)) {
    std::fill(values.values().begin(), values.values().end(), 0.0);
    return false;
  }
  if (!(hi > lo)) {
    std::fill(values.values().begin(), values.values().end(), 0.0);
    return true;
  }
  for (double& v : values.values()) v = (v - lo) / (hi - lo);
  return true;
}

Grid<double> bilinear_resize(const Grid<double>& src, int height, int width) {
  if (src.empty()) throw ValidationError("bilinear_resize: empty source");
  if (height <= 0 || width <= 0) throw ValidationError("bilinear_resize: bad target size");
  if (src.height() == height && src.width() == width) return src;
  Grid<double> out(height, width);
  const double sy = static_cast<double>(src.height()) / height;
  const double sx = static_cast<double>(src.width()) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height() - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width() - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double wx = fx - x0;
      out(y, x) = (1 - wy) * ((1 - wx) * src(y0, x0) + wx * src(y0, x1)) +
                  wy * ((1 - wx) * src(y1, x0) + wx * src(y1, x1));
    }
  }
  return out;
}

SaliencyMap roi_map(const Model& model, const Image& image) {
  const Prediction pred = model.predict(image);
  const Tensor3 acts = model.final_conv_activations(image);
  const Tensor3 grads = model.class_gradient_wrt_activations(image, index_of(pred.label));

  const std::size_t plane = static_cast<std::size_t>(acts.height) * acts.width;
  Grid<double> cam(acts.height, acts.width);
  for (int k = 0; k < acts.channels; ++k) {
    double weight = 0.0;
    for (std::size_t p = 0; p < plane; ++p) weight += grads.values[k * plane + p];
    weight /= static_cast<double>(plane);
    for (std::size_t p = 0; p < plane; ++p) cam[p] += weight * acts.values[k * plane + p];
  }
  for (double& v : cam.values()) v = std::max(v, 0.0);

  SaliencyMap map{bilinear_resize(cam, image.height(), image.width()), MapKind::roi, false};
  if (!min_max_normalize(map.values)) {
    map.degenerate = true;
    spdlog::debug("roi_map: class activation map is identically zero");
  }
  return map;
}

SaliencyMap roa_map(const AdversarialPair& pair) {
  if (!pair.clean.same_shape(pair.adversarial)) {
    throw ValidationError("roa_map: clean and adversarial images differ in shape");
  }
  const Image& a = pair.clean;
  Grid<double> mag(a.height(), a.width());
  for (int c = 0; c < a.channels(); ++c) {
    for (int y = 0; y < a.height(); ++y) {
      for (int x = 0; x < a.width(); ++x) {
        const double d = pair.adversarial.at(c, y, x) - a.at(c, y, x);
        mag(y, x) += d * d;
      }
    }
  }
  for (double& v : mag.values()) v = std::round(std::sqrt(v) * 1e12) / 1e12;
  SaliencyMap map{std::move(mag), MapKind::roa, false};
  map.degenerate = !min_max_normalize(map.values);
  return map;
}

std::optional<double> resolve_threshold(const SaliencyMap& map, const Threshold& delta) {
  if (delta.mode == Threshold::Mode::absolute) return delta.value;
  std::vector<double> positive;
  for (double v : map.values.values()) {
    if (v > 0.0) positive.push_back(v);
  }
  if (positive.empty()) return std::nullopt;
  std::sort(positive.begin(), positive.end());
  // Lower nearest rank: a q-quantile over n distinct values keeps n - floor(q n).
  const auto rank = static_cast<std::size_t>(std::floor(delta.value * positive.size() + 1e-9));
  return positive[std::min(rank, positive.size() - 1)];
}

BinaryMask threshold_mask(const SaliencyMap& map, const Threshold& delta) {
  BinaryMask mask{Grid<std::uint8_t>(map.values.height(), map.values.width(), 0),
                  map.kind == MapKind::roi ? MaskKind::roi : MaskKind::roa};
  const auto cut = resolve_threshold(map, delta);
  if (!cut) {
    spdlog::debug("threshold_mask: quantile requested over an all-zero {} map", to_string(map.kind));
    return mask;
  }
  for (std::size_t i = 0; i < map.values.size(); ++i) mask.bits[i] = map.values[i] >= *cut ? 1 : 0;
  return mask;
}

RepresentativeMap representative_map(std::span<const BinaryMask> masks) {
  if (masks.empty()) throw ValidationError("representative_map: no masks");
  RepresentativeMap rep{Grid<double>(masks[0].bits.height(), masks[0].bits.width()),
                        static_cast<int>(masks.size())};
  std::vector<int> counts(rep.values.size(), 0);
  for (const auto& m : masks) {
    require_same_shape(m.bits, masks[0].bits, "representative_map");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += m.bits[i] != 0 ? 1 : 0;
  }
  for (std::size_t i = 0; i < counts.size(); ++i) {
    rep.values[i] = static_cast<double>(counts[i]) / static_cast<double>(masks.size());
  }
  return rep;
}

RepresentativeMap representative_from_maps(std::span<const SaliencyMap> maps) {
  if (maps.empty()) throw ValidationError("representative_from_maps: no maps");
  RepresentativeMap rep{Grid<double>(maps[0].values.height(), maps[0].values.width()),
                        static_cast<int>(maps.size())};
  for (const auto& m : maps) {
    require_same_shape(m.values, maps[0].values, "representative_from_maps");
    for (std::size_t i = 0; i < rep.values.size(); ++i) rep.values[i] += m.values[i];
  }
  for (double& v : rep.values.values()) v /= static_cast<double>(maps.size());
  return rep;
}

}  // namespace advregions
