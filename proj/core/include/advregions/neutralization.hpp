#pragma once

#include <vector>

#include "advregions/attack.hpp"
#include "advregions/classifier.hpp"
#include "advregions/data.hpp"
#include "advregions/segregation.hpp"

namespace advregions {

struct BlobOptions {
  // Pixel joins the blob when rep_roa >= theta and rep_roi < theta_roi, where
  // theta_roi defaults to theta.
  double theta = 0.9;
  std::optional<double> theta_roi;
  bool keep_largest_component = false;  // 4-connected
  double fill_value = 0.0;              // 0 or 1

  void validate() const;
  double roi_cut() const { return theta_roi.value_or(theta); }
};

struct BlobProvenance {
  PairSpec pair;
  Threshold delta_roi;
  Threshold delta_roa;
  int contributors = 0;
};

// Class-level notU-V region applied to every image of the class.
struct Blob {
  BinaryMask mask;
  double theta = 0.9;
  double theta_roi = 0.9;
  double fill_value = 0.0;
  bool keep_largest_component = false;
  BlobProvenance provenance;
  // Set when no pixel qualified; neutralization is then the identity.
  bool empty_warning = false;
};

// Only the RoA clause: rep_roa >= theta.
BinaryMask roa_side_mask(const RepresentativeMap& rep_roa, double theta);

Blob extract_blob(const RepresentativeMap& rep_roi, const RepresentativeMap& rep_roa,
                  const BlobOptions& options, BlobProvenance provenance = {});

// Overwrites blob pixels (every channel) with the fill value.
Image neutralize(const Image& image, const Blob& blob);
LabeledImageSet neutralize_set(const LabeledImageSet& set, const Blob& blob);

struct ScoreQuad {
  double clean = 0.0;
  double adv = 0.0;
  double mod = 0.0;
  double mod_adv = 0.0;

  bool operator==(const ScoreQuad&) const = default;
};

// Accuracy on S_clean, on S_adv = attack(S_clean), on S_mod = neutralize(S_clean)
// and on S_mod-adv = attack(S_mod) with the same attack configuration.
ScoreQuad defense_eval(const Model& model, const LabeledImageSet& test, const AttackConfig& cfg,
                       const Blob& blob);

}  // namespace advregions
