#pragma once

#include <vector>

#include "advregions/classifier.hpp"
#include "advregions/data.hpp"
#include "advregions/image.hpp"

namespace advregions {

struct AttackConfig {
  double epsilon = 0.1;  // L-infinity budget in [0,1] pixel units
  // false: ascend the loss of the true label. true: descend the loss of the
  // other label.
  bool targeted = false;

  // Throws ConfigError for negative or non-finite epsilon. Returns true (and
  // logs a warning) when epsilon exceeds 1.
  bool validate() const;
  bool operator==(const AttackConfig&) const = default;
};

struct AdversarialPair {
  Image clean;
  Image adversarial;
  Label clean_label = Label::source;
  Prediction adv_prediction;
};

// Fast gradient sign step: clip(x + eps * sign(grad_x loss), 0, 1), with
// sign(0) = 0.
AdversarialPair fgsm(const Model& model, const Image& image, Label label, const AttackConfig& cfg);

// Element-wise fgsm over a set, order preserved. Failures are rethrown with
// the offending item index.
std::vector<AdversarialPair> attack_set(const Model& model, const LabeledImageSet& set,
                                        const AttackConfig& cfg);

// The adversarial images of `pairs` as a set carrying the clean labels.
LabeledImageSet adversarial_images(const std::vector<AdversarialPair>& pairs,
                                   const std::array<std::string, 2>& class_names, Split split);

}  // namespace advregions
