#include "equiproj/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

#include "equiproj/errors.hpp"

namespace equiproj {
namespace {

struct MemoryReader {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t length) {
  auto* reader = static_cast<MemoryReader*>(png_get_io_ptr(png));
  if (reader->offset + length > reader->bytes.size()) {
    png_error(png, "truncated PNG stream");
  }
  std::memcpy(out, reader->bytes.data() + reader->offset, length);
  reader->offset += length;
}

void write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_noop(png_structp) {}

void error_to_string(png_structp png, png_const_charp message) {
  auto* buffer = static_cast<char*>(png_get_error_ptr(png));
  std::snprintf(buffer, 256, "%s", message);
  png_longjmp(png, 1);
}

void ignore_warning(png_structp, png_const_charp) {}

// Decoded 8-bit rows plus the channel count after transforms.
struct DecodedPng {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
};

// keep_indices: palette images keep their raw indices (label maps).
DecodedPng decode(std::span<const std::uint8_t> bytes, bool keep_indices) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw IoError("not a PNG stream");
  }
  char error_message[256] = "unknown libpng error";
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, error_message,
                                           error_to_string, ignore_warning);
  if (png == nullptr) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png_create_info_struct failed");
  }

  MemoryReader reader{bytes, 0};
  DecodedPng out;
  std::vector<png_bytep> rows;
  volatile bool failed = false;
  bool bad_label_format = false;

  if (setjmp(png_jmpbuf(png))) {
    failed = true;
  } else {
    png_set_read_fn(png, &reader, read_from_memory);
    png_read_info(png, info);

    const png_byte color_type = png_get_color_type(png, info);
    const png_byte bit_depth = png_get_bit_depth(png, info);

    if (bit_depth == 16) png_set_strip_16(png);
    if (keep_indices) {
      if (color_type == PNG_COLOR_TYPE_PALETTE) {
        png_set_packing(png);
      } else if (color_type == PNG_COLOR_TYPE_GRAY) {
        if (bit_depth < 8) png_set_packing(png);
      } else {
        bad_label_format = true;
      }
    } else {
      if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
      if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
      }
      if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    }

    if (!bad_label_format) {
      png_read_update_info(png, info);
      out.width = static_cast<int>(png_get_image_width(png, info));
      out.height = static_cast<int>(png_get_image_height(png, info));
      out.channels = png_get_channels(png, info);
      const std::size_t stride = png_get_rowbytes(png, info);
      out.pixels.resize(stride * static_cast<std::size_t>(out.height));
      rows.resize(static_cast<std::size_t>(out.height));
      for (int y = 0; y < out.height; ++y) {
        rows[static_cast<std::size_t>(y)] = out.pixels.data() + stride * y;
      }
      png_read_image(png, rows.data());
      png_read_end(png, nullptr);
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);

  if (failed) throw IoError(std::string("PNG decode failed: ") + error_message);
  if (bad_label_format) {
    throw IoError("label PNG must be single-channel gray or palette");
  }
  return out;
}

std::vector<std::uint8_t> encode(int width, int height, int channels,
                                 std::span<const std::uint8_t> pixels) {
  static constexpr int kColorTypes[] = {PNG_COLOR_TYPE_GRAY,
                                        PNG_COLOR_TYPE_GRAY_ALPHA,
                                        PNG_COLOR_TYPE_RGB, PNG_COLOR_TYPE_RGBA};
  char error_message[256] = "unknown libpng error";
  png_structp png = png_create_write_struct(
      PNG_LIBPNG_VER_STRING, error_message, error_to_string, ignore_warning);
  if (png == nullptr) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png_create_info_struct failed");
  }

  std::vector<std::uint8_t> out;
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  const std::size_t stride = static_cast<std::size_t>(width) * channels;
  for (int y = 0; y < height; ++y) {
    rows[static_cast<std::size_t>(y)] =
        const_cast<png_bytep>(pixels.data() + stride * y);
  }
  volatile bool failed = false;

  if (setjmp(png_jmpbuf(png))) {
    failed = true;
  } else {
    png_set_write_fn(png, &out, write_to_vector, flush_noop);
    png_set_IHDR(png, info, static_cast<png_uint_32>(width),
                 static_cast<png_uint_32>(height), 8, kColorTypes[channels - 1],
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
  }
  png_destroy_write_struct(&png, &info);

  if (failed) throw IoError(std::string("PNG encode failed: ") + error_message);
  return out;
}

}  // namespace

std::uint8_t to_byte(float sample) {
  const float scaled = std::clamp(sample, 0.0f, 1.0f) * 255.0f;
  return static_cast<std::uint8_t>(std::lround(scaled));
}

RasterImage decode_image_png(std::span<const std::uint8_t> bytes) {
  const DecodedPng png = decode(bytes, false);
  RasterImage image(png.width, png.height, png.channels);
  auto samples = image.samples();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i] = static_cast<float>(png.pixels[i]) / 255.0f;
  }
  return image;
}

LabelMap decode_labels_png(std::span<const std::uint8_t> bytes) {
  const DecodedPng png = decode(bytes, true);
  LabelMap labels(png.width, png.height);
  std::copy(png.pixels.begin(), png.pixels.end(), labels.ids().begin());
  return labels;
}

std::vector<std::uint8_t> encode_png(const RasterImage& image) {
  std::vector<std::uint8_t> bytes(image.samples().size());
  std::transform(image.samples().begin(), image.samples().end(), bytes.begin(),
                 to_byte);
  return encode(image.width(), image.height(), image.channels(), bytes);
}

std::vector<std::uint8_t> encode_png(const LabelMap& labels) {
  return encode(labels.width(), labels.height(), 1, labels.ids());
}

std::vector<std::uint8_t> encode_png(const ValidMask& mask) {
  std::vector<std::uint8_t> bytes(mask.bits().size());
  std::transform(mask.bits().begin(), mask.bits().end(), bytes.begin(),
                 [](std::uint8_t b) -> std::uint8_t { return b ? 255 : 0; });
  return encode(mask.width(), mask.height(), 1, bytes);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error writing " + path.string());
}

RasterImage read_image(const std::filesystem::path& path) {
  try {
    return decode_image_png(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

LabelMap read_labels(const std::filesystem::path& path) {
  try {
    return decode_labels_png(read_file(path));
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

ValidMask read_mask(const std::filesystem::path& path) {
  const LabelMap raw = read_labels(path);
  ValidMask mask(raw.width(), raw.height());
  for (int y = 0; y < raw.height(); ++y) {
    for (int x = 0; x < raw.width(); ++x) mask.set(x, y, raw.at(x, y) != 0);
  }
  return mask;
}

}  // namespace equiproj
