#include "advregions/image.hpp"

#include <cmath>
#include <string>

#include "advregions/error.hpp"

namespace advregions {
namespace {

void check_shape(int channels, int height, int width) {
  if (channels != 1 && channels != 3) {
    throw ValidationError("image channels must be 1 or 3, got " + std::to_string(channels));
  }
  if (height < Image::kMinSide || width < Image::kMinSide) {
    throw ValidationError("image sides must be >= " + std::to_string(Image::kMinSide) + ", got " +
                          std::to_string(height) + "x" + std::to_string(width));
  }
}

}  // namespace

Image::Image(int channels, int height, int width)
    : channels_(channels), height_(height), width_(width) {
  check_shape(channels, height, width);
  pixels_.assign(static_cast<std::size_t>(channels) * plane_size(), 0.0);
}

Image::Image(int channels, int height, int width, std::vector<double> planar)
    : channels_(channels), height_(height), width_(width), pixels_(std::move(planar)) {
  validate();
}

void Image::validate() const {
  check_shape(channels_, height_, width_);
  if (pixels_.size() != static_cast<std::size_t>(channels_) * plane_size()) {
    throw ValidationError("image buffer has " + std::to_string(pixels_.size()) +
                          " values, expected " +
                          std::to_string(static_cast<std::size_t>(channels_) * plane_size()));
  }
  for (double v : pixels_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ValidationError("pixel value " + std::to_string(v) + " outside [0,1]");
    }
  }
}

}  // namespace advregions
