#include "advregions/attack.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "advregions/error.hpp"

namespace advregions {

bool AttackConfig::validate() const {
  if (!std::isfinite(epsilon) || epsilon < 0.0) {
    throw ConfigError("attack: epsilon must be finite and >= 0, got " + std::to_string(epsilon));
  }
  if (epsilon > 1.0) {
    spdlog::warn("attack: epsilon {} exceeds the [0,1] pixel range", epsilon);
    return true;
  }
  return false;
}

AdversarialPair fgsm(const Model& model, const Image& image, Label label, const AttackConfig& cfg) {
  cfg.validate();
  AdversarialPair pair{image, image, label, {}};
  if (cfg.epsilon > 0.0) {
    const Label loss_label = cfg.targeted ? other(label) : label;
    const double direction = cfg.targeted ? -1.0 : 1.0;
    const Tensor3 grad = model.loss_gradient_wrt_input(image, loss_label);
    auto out = pair.adversarial.pixels();
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double g = grad.values[i];
      const double sign = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
      out[i] = std::clamp(out[i] + direction * cfg.epsilon * sign, 0.0, 1.0);
    }
  }
  pair.adv_prediction = model.predict(pair.adversarial);
  return pair;
}

std::vector<AdversarialPair> attack_set(const Model& model, const LabeledImageSet& set,
                                        const AttackConfig& cfg) {
  std::vector<AdversarialPair> pairs;
  pairs.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    try {
      pairs.push_back(fgsm(model, set.images[i], set.labels.at(i), cfg));
    } catch (const NumericalError& e) {
      throw NumericalError("item " + std::to_string(i) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("item " + std::to_string(i) + ": " + e.what());
    }
  }
  return pairs;
}

LabeledImageSet adversarial_images(const std::vector<AdversarialPair>& pairs,
                                   const std::array<std::string, 2>& class_names, Split split) {
  LabeledImageSet out{{}, {}, class_names, split};
  out.images.reserve(pairs.size());
  for (const auto& p : pairs) {
    out.images.push_back(p.adversarial);
    out.labels.push_back(p.clean_label);
  }
  return out;
}

}  // namespace advregions
