#pragma once

// 8-bit PNG ingest and egress. Encoding is deterministic: identical rasters
// always produce identical bytes.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "equiproj/raster.hpp"

namespace equiproj {

/// Decodes gray, gray+alpha, RGB, RGBA or palette PNGs. 16-bit inputs are
/// reduced to 8 bits and palettes expanded; samples are scaled to [0, 1].
RasterImage decode_image_png(std::span<const std::uint8_t> bytes);

/// Decodes a single-channel label PNG: 8-bit gray values or palette indices
/// are taken verbatim as class ids.
LabelMap decode_labels_png(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_png(const RasterImage& image);
std::vector<std::uint8_t> encode_png(const LabelMap& labels);
/// Mask as 8-bit gray: 255 where set, 0 elsewhere.
std::vector<std::uint8_t> encode_png(const ValidMask& mask);

RasterImage read_image(const std::filesystem::path& path);
LabelMap read_labels(const std::filesystem::path& path);
/// Any nonzero gray value is treated as set.
ValidMask read_mask(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes);

/// Quantizes a [0, 1] sample to a byte (round to nearest, clamped).
std::uint8_t to_byte(float sample);

}  // namespace equiproj
