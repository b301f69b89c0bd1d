#include "equiproj/raster.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "equiproj/errors.hpp"

namespace equiproj {
namespace {

void check_dimensions(int width, int height, int channels) {
  if (width <= 0 || height <= 0) {
    throw DomainError("raster dimensions must be positive, got " +
                      std::to_string(width) + "x" + std::to_string(height));
  }
  const auto cells = static_cast<unsigned long long>(width) *
                     static_cast<unsigned long long>(height) *
                     static_cast<unsigned long long>(channels);
  if (cells > static_cast<unsigned long long>(
                  std::numeric_limits<std::int32_t>::max())) {
    throw DomainError("raster dimensions overflow: " + std::to_string(width) +
                      "x" + std::to_string(height));
  }
}

}  // namespace

RasterImage::RasterImage(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
  if (channels < 1 || channels > 4) {
    throw DomainError("image channel count must be 1-4, got " +
                      std::to_string(channels));
  }
  check_dimensions(width, height, channels);
  samples_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

LabelMap::LabelMap(int width, int height, std::uint8_t fill,
                   std::uint8_t ignore_id)
    : width_(width), height_(height), ignore_id_(ignore_id) {
  check_dimensions(width, height, 1);
  ids_.assign(static_cast<std::size_t>(width) * height, fill);
}

ValidMask::ValidMask(int width, int height, bool fill)
    : width_(width), height_(height) {
  check_dimensions(width, height, 1);
  bits_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

std::size_t ValidMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

}  // namespace equiproj
