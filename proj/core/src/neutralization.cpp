#include "advregions/neutralization.hpp"

#include <cmath>

#include <opencv2/imgproc.hpp>
#include <spdlog/spdlog.h>

#include "advregions/error.hpp"

namespace advregions {

void BlobOptions::validate() const {
  if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("blob: theta must lie in (0,1)");
  if (theta_roi && !(*theta_roi > 0.0 && *theta_roi < 1.0)) {
    throw ConfigError("blob: theta_roi must lie in (0,1)");
  }
  if (fill_value != 0.0 && fill_value != 1.0) throw ConfigError("blob: fill value must be 0 or 1");
}

BinaryMask roa_side_mask(const RepresentativeMap& rep_roa, double theta) {
  BinaryMask m{Grid<std::uint8_t>(rep_roa.values.height(), rep_roa.values.width()), MaskKind::blob};
  for (std::size_t i = 0; i < m.bits.size(); ++i) m.bits[i] = rep_roa.values[i] >= theta ? 1 : 0;
  return m;
}

namespace {

void keep_largest_component(BinaryMask& mask) {
  cv::Mat bits(mask.bits.height(), mask.bits.width(), CV_8U, mask.bits.values().data());
  cv::Mat labels, stats, centroids;
  const int n = cv::connectedComponentsWithStats(bits, labels, stats, centroids, 4, CV_32S);
  if (n <= 2) return;  // background plus at most one component
  int best = 1;
  for (int k = 2; k < n; ++k) {
    if (stats.at<int>(k, cv::CC_STAT_AREA) > stats.at<int>(best, cv::CC_STAT_AREA)) best = k;
  }
  for (int y = 0; y < mask.bits.height(); ++y) {
    for (int x = 0; x < mask.bits.width(); ++x) {
      mask.bits(y, x) = labels.at<int>(y, x) == best ? 1 : 0;
    }
  }
}

}  // namespace

Blob extract_blob(const RepresentativeMap& rep_roi, const RepresentativeMap& rep_roa,
                  const BlobOptions& options, BlobProvenance provenance) {
  options.validate();
  require_same_shape(rep_roi.values, rep_roa.values, "extract_blob");
  Blob blob;
  blob.theta = options.theta;
  blob.theta_roi = options.roi_cut();
  blob.fill_value = options.fill_value;
  blob.keep_largest_component = options.keep_largest_component;
  blob.provenance = std::move(provenance);
  blob.mask = roa_side_mask(rep_roa, options.theta);
  for (std::size_t i = 0; i < blob.mask.bits.size(); ++i) {
    if (rep_roi.values[i] >= blob.theta_roi) blob.mask.bits[i] = 0;
  }
  if (options.keep_largest_component) keep_largest_component(blob.mask);
  if (blob.mask.count() == 0) {
    blob.empty_warning = true;
    spdlog::warn("extract_blob: empty blob at theta {}; neutralization is the identity", options.theta);
  }
  return blob;
}

Image neutralize(const Image& image, const Blob& blob) {
  if (image.height() != blob.mask.bits.height() || image.width() != blob.mask.bits.width()) {
    throw ValidationError("neutralize: blob is " + std::to_string(blob.mask.bits.height()) + "x" +
                          std::to_string(blob.mask.bits.width()) + ", image is " +
                          std::to_string(image.height()) + "x" + std::to_string(image.width()));
  }
  Image out = image;
  for (int c = 0; c < out.channels(); ++c) {
    for (int y = 0; y < out.height(); ++y) {
      for (int x = 0; x < out.width(); ++x) {
        if (blob.mask.bits(y, x) != 0) out.at(c, y, x) = blob.fill_value;
      }
    }
  }
  return out;
}

LabeledImageSet neutralize_set(const LabeledImageSet& set, const Blob& blob) {
  LabeledImageSet out{{}, set.labels, set.class_names, set.split};
  out.images.reserve(set.size());
  for (const auto& img : set.images) out.images.push_back(neutralize(img, blob));
  return out;
}

ScoreQuad defense_eval(const Model& model, const LabeledImageSet& test, const AttackConfig& cfg,
                       const Blob& blob) {
  if (test.empty()) throw ValidationError("defense_eval: empty test set");
  const auto adv = attack_set(model, test, cfg);
  const LabeledImageSet modified = neutralize_set(test, blob);
  const auto mod_adv = attack_set(model, modified, cfg);
  ScoreQuad s;
  s.clean = accuracy(model, test);
  s.adv = accuracy(model, adversarial_images(adv, test.class_names, test.split));
  s.mod = accuracy(model, modified);
  s.mod_adv = accuracy(model, adversarial_images(mod_adv, test.class_names, test.split));
  return s;
}

}  // namespace advregions
