#pragma once

#include <span>

#include "advregions/data.hpp"
#include "advregions/grid.hpp"
#include "advregions/segregation.hpp"

namespace advregions {

struct SsimOptions {
  int window = 7;                // square, uniform weights
  double dynamic_range = 1.0;    // L
  double k1 = 0.01;
  double k2 = 0.03;
};

// Mean SSIM over every valid window position. Window statistics use
// population (1/N) moments. Throws ValidationError on a dimension mismatch or
// when either side is smaller than the window.
double ssim(const Grid<double>& a, const Grid<double>& b, const SsimOptions& options = {});

// {0.0, 1.0} float map of a mask.
Grid<double> to_float_map(const BinaryMask& mask);

struct SsimReport {
  PairSpec pair;
  double mean_individual_ssim = 0.0;
  double representative_ssim = 0.0;
  std::size_t n = 0;
  int window = 7;
};

// Mean of ssim(roi_i, roa_i), plus ssim of the two representative maps.
SsimReport roi_roa_similarity(std::span<const BinaryMask> roi_masks,
                              std::span<const BinaryMask> roa_masks, const PairSpec& pair,
                              const SsimOptions& options = {});

}  // namespace advregions
