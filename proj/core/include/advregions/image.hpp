#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace advregions {

// Planar (channel-major) C x H x W array with no range constraint. Used for
// gradients and convolutional feature maps.
struct Tensor3 {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;

  Tensor3() = default;
  Tensor3(int c, int h, int w, double fill = 0.0)
      : channels(c), height(h), width(w),
        values(static_cast<std::size_t>(c) * static_cast<std::size_t>(h) *
                   static_cast<std::size_t>(w),
               fill) {}

  double& at(int c, int y, int x) {
    return values[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return values[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  bool same_shape(const Tensor3& o) const noexcept {
    return channels == o.channels && height == o.height && width == o.width;
  }
  bool operator==(const Tensor3&) const = default;
};

// An image with pixel values in [0, 1], stored planar (channel-major).
// Channels is 1 (grayscale) or 3 (RGB); height and width are at least 8.
class Image {
 public:
  static constexpr int kMinSide = 8;

  Image() = default;
  // Zero-filled image.
  Image(int channels, int height, int width);
  // Takes planar values; throws ValidationError on bad shape or range.
  Image(int channels, int height, int width, std::vector<double> planar);

  int channels() const noexcept { return channels_; }
  int height() const noexcept { return height_; }
  int width() const noexcept { return width_; }
  std::size_t size() const noexcept { return pixels_.size(); }
  std::size_t plane_size() const noexcept {
    return static_cast<std::size_t>(height_) * static_cast<std::size_t>(width_);
  }

  double& at(int c, int y, int x) {
    return pixels_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }
  double at(int c, int y, int x) const {
    return pixels_[(static_cast<std::size_t>(c) * height_ + y) * width_ + x];
  }

  std::span<double> pixels() noexcept { return pixels_; }
  std::span<const double> pixels() const noexcept { return pixels_; }

  bool same_shape(const Image& o) const noexcept {
    return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_;
  }
  bool same_shape(const Tensor3& t) const noexcept {
    return channels_ == t.channels && height_ == t.height && width_ == t.width;
  }

  // Re-checks shape and [0,1] range after in-place edits.
  void validate() const;

  bool operator==(const Image&) const = default;

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> pixels_;
};

}  // namespace advregions
