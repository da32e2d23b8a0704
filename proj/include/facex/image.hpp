#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace facex {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// 8-bit RGB raster, row-major, channels interleaved.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage() = default;
  RgbImage(int w, int h, Rgb fill = {});

  [[nodiscard]] Rgb at(int row, int col) const;
  void set(int row, int col, Rgb c);
  [[nodiscard]] RgbImage crop(int row, int col, int h, int w) const;
  void paste(const RgbImage& src, int row, int col);

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Decodes any PNG (gray, palette, alpha and 16-bit inputs are converted to
/// 8-bit RGB). Throws Errc::missing_image or Errc::image_decode.
[[nodiscard]] RgbImage read_png(const std::filesystem::path& path);
/// Reads only the header; returns {width, height}.
[[nodiscard]] std::pair<int, int> png_dimensions(const std::filesystem::path& path);
[[nodiscard]] std::vector<std::byte> encode_png(const RgbImage& image);
void write_png(const RgbImage& image, const std::filesystem::path& path);

}  // namespace facex
