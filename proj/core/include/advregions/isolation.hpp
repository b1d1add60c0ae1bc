#pragma once

#include <array>
#include <cstddef>

#include "advregions/segregation.hpp"

namespace advregions {

// The four disjoint utility/vulnerability regions of a pixel grid:
//   uv        in RoI and in RoA
//   u_vbar    in RoI, not in RoA
//   ubar_v    not in RoI, in RoA (the neutralization target)
//   ubar_vbar in neither
struct RegionPartition {
  BinaryMask uv;
  BinaryMask u_vbar;
  BinaryMask ubar_v;
  BinaryMask ubar_vbar;
};

RegionPartition partition(const BinaryMask& roi, const BinaryMask& roa);

// Counts and fractions in the order uv, u_vbar, ubar_v, ubar_vbar.
struct RegionStats {
  std::array<std::size_t, 4> counts{};
  std::array<double, 4> fractions{};
  std::size_t total = 0;
};

RegionStats region_stats(const RegionPartition& p);

inline constexpr std::array<const char*, 4> kRegionNames{"UV", "UVbar", "UbarV", "UbarVbar"};

}  // namespace advregions
