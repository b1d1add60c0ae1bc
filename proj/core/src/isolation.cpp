#include "advregions/isolation.hpp"

namespace advregions {

RegionPartition partition(const BinaryMask& roi, const BinaryMask& roa) {
  require_same_shape(roi.bits, roa.bits, "partition");
  const int h = roi.bits.height();
  const int w = roi.bits.width();
  RegionPartition p{{Grid<std::uint8_t>(h, w), MaskKind::region},
                    {Grid<std::uint8_t>(h, w), MaskKind::region},
                    {Grid<std::uint8_t>(h, w), MaskKind::region},
                    {Grid<std::uint8_t>(h, w), MaskKind::region}};
  for (std::size_t i = 0; i < roi.bits.size(); ++i) {
    const bool u = roi.bits[i] != 0;
    const bool v = roa.bits[i] != 0;
    p.uv.bits[i] = u && v;
    p.u_vbar.bits[i] = u && !v;
    p.ubar_v.bits[i] = !u && v;
    p.ubar_vbar.bits[i] = !u && !v;
  }
  return p;
}

RegionStats region_stats(const RegionPartition& p) {
  RegionStats s;
  s.counts = {p.uv.count(), p.u_vbar.count(), p.ubar_v.count(), p.ubar_vbar.count()};
  s.total = p.uv.bits.size();
  if (s.total > 0) {
    for (std::size_t k = 0; k < 4; ++k) {
      s.fractions[k] = static_cast<double>(s.counts[k]) / static_cast<double>(s.total);
    }
  }
  return s;
}

}  // namespace advregions
