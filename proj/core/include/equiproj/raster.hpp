#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace equiproj {

inline constexpr std::uint8_t kIgnoreId = 255;

/// Interleaved image with 1-4 channels of intensities in [0, 1].
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, int channels, float fill = 0.0f);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return samples_.empty(); }

  float& at(int x, int y, int c) {
    return samples_[index(x, y) + static_cast<std::size_t>(c)];
  }
  float at(int x, int y, int c) const {
    return samples_[index(x, y) + static_cast<std::size_t>(c)];
  }

  std::span<float> pixel(int x, int y) {
    return {samples_.data() + index(x, y), static_cast<std::size_t>(channels_)};
  }
  std::span<const float> pixel(int x, int y) const {
    return {samples_.data() + index(x, y), static_cast<std::size_t>(channels_)};
  }

  std::span<float> samples() { return samples_; }
  std::span<const float> samples() const { return samples_; }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  std::size_t index(int x, int y) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
           static_cast<std::size_t>(channels_);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<float> samples_;
};

/// Per-pixel class identifiers. `ignore_id` marks unlabeled / outside pixels.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(int width, int height, std::uint8_t fill = kIgnoreId,
           std::uint8_t ignore_id = kIgnoreId);

  int width() const { return width_; }
  int height() const { return height_; }
  std::uint8_t ignore_id() const { return ignore_id_; }

  std::uint8_t& at(int x, int y) { return ids_[index(x, y)]; }
  std::uint8_t at(int x, int y) const { return ids_[index(x, y)]; }

  std::span<std::uint8_t> ids() { return ids_; }
  std::span<const std::uint8_t> ids() const { return ids_; }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::uint8_t ignore_id_ = kIgnoreId;
  std::vector<std::uint8_t> ids_;
};

/// Coverage mask: true where the projected tangent plane lands.
class ValidMask {
 public:
  ValidMask() = default;
  ValidMask(int width, int height, bool fill = false);

  int width() const { return width_; }
  int height() const { return height_; }

  bool at(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool value) { bits_[index(x, y)] = value ? 1 : 0; }

  std::size_t count() const;
  bool any() const { return count() > 0; }

  std::span<const std::uint8_t> bits() const { return bits_; }

  friend bool operator==(const ValidMask&, const ValidMask&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

}  // namespace equiproj
