#include "advregions/metrics.hpp"

#include <vector>

#include "advregions/error.hpp"

namespace advregions {

namespace {

// (h+1) x (w+1) summed-area table of f(a, b).
template <typename F>
std::vector<double> integral(const Grid<double>& a, const Grid<double>& b, F f) {
  const int h = a.height();
  const int w = a.width();
  std::vector<double> table(static_cast<std::size_t>(h + 1) * (w + 1), 0.0);
  for (int y = 0; y < h; ++y) {
    double row = 0.0;
    for (int x = 0; x < w; ++x) {
      row += f(a(y, x), b(y, x));
      table[static_cast<std::size_t>(y + 1) * (w + 1) + x + 1] =
          table[static_cast<std::size_t>(y) * (w + 1) + x + 1] + row;
    }
  }
  return table;
}

double window_sum(const std::vector<double>& t, int w, int y, int x, int n) {
  const auto at = [&](int yy, int xx) { return t[static_cast<std::size_t>(yy) * (w + 1) + xx]; };
  return at(y + n, x + n) - at(y, x + n) - at(y + n, x) + at(y, x);
}

}  // namespace

double ssim(const Grid<double>& a, const Grid<double>& b, const SsimOptions& options) {
  require_same_shape(a, b, "ssim");
  const int n = options.window;
  if (n <= 0) throw ValidationError("ssim: window must be positive");
  if (a.height() < n || a.width() < n) {
    throw ValidationError("ssim: maps of " + std::to_string(a.height()) + "x" +
                          std::to_string(a.width()) + " are smaller than the " +
                          std::to_string(n) + "x" + std::to_string(n) + " window");
  }
  const double c1 = (options.k1 * options.dynamic_range) * (options.k1 * options.dynamic_range);
  const double c2 = (options.k2 * options.dynamic_range) * (options.k2 * options.dynamic_range);
  const int w = a.width();
  const auto sa = integral(a, b, [](double x, double) { return x; });
  const auto sb = integral(a, b, [](double, double y) { return y; });
  const auto saa = integral(a, b, [](double x, double) { return x * x; });
  const auto sbb = integral(a, b, [](double, double y) { return y * y; });
  const auto sab = integral(a, b, [](double x, double y) { return x * y; });
  const double count = static_cast<double>(n) * n;

  double total = 0.0;
  long windows = 0;
  for (int y = 0; y + n <= a.height(); ++y) {
    for (int x = 0; x + n <= w; ++x) {
      const double mu_a = window_sum(sa, w, y, x, n) / count;
      const double mu_b = window_sum(sb, w, y, x, n) / count;
      // Clamp tiny negative variances from cancellation.
      const double var_a = std::max(0.0, window_sum(saa, w, y, x, n) / count - mu_a * mu_a);
      const double var_b = std::max(0.0, window_sum(sbb, w, y, x, n) / count - mu_b * mu_b);
      const double cov = window_sum(sab, w, y, x, n) / count - mu_a * mu_b;
      total += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
               ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      ++windows;
    }
  }
  return total / static_cast<double>(windows);
}

Grid<double> to_float_map(const BinaryMask& mask) {
  Grid<double> out(mask.bits.height(), mask.bits.width());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mask.bits[i] != 0 ? 1.0 : 0.0;
  return out;
}

SsimReport roi_roa_similarity(std::span<const BinaryMask> roi_masks,
                              std::span<const BinaryMask> roa_masks, const PairSpec& pair,
                              const SsimOptions& options) {
  if (roi_masks.size() != roa_masks.size()) {
    throw ValidationError("roi_roa_similarity: " + std::to_string(roi_masks.size()) + " RoI masks vs " +
                          std::to_string(roa_masks.size()) + " RoA masks");
  }
  if (roi_masks.empty()) throw ValidationError("roi_roa_similarity: no masks");
  SsimReport report;
  report.pair = pair;
  report.n = roi_masks.size();
  report.window = options.window;
  double sum = 0.0;
  for (std::size_t i = 0; i < roi_masks.size(); ++i) {
    sum += ssim(to_float_map(roi_masks[i]), to_float_map(roa_masks[i]), options);
  }
  report.mean_individual_ssim = sum / static_cast<double>(roi_masks.size());
  report.representative_ssim =
      ssim(representative_map(roi_masks).values, representative_map(roa_masks).values, options);
  return report;
}

}  // namespace advregions
