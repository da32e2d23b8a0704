#include "facex/image.hpp"

#include <png.h>

#include <string>

#include "facex/error.hpp"
#include "facex/interchange.hpp"

namespace facex {

RgbImage::RgbImage(int w, int h, Rgb fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3) {
  for (std::size_t i = 0; i < pixels.size(); i += 3) {
    pixels[i] = fill.r;
    pixels[i + 1] = fill.g;
    pixels[i + 2] = fill.b;
  }
}

Rgb RgbImage::at(int row, int col) const {
  const auto i = 3 * (static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col));
  return {pixels[i], pixels[i + 1], pixels[i + 2]};
}

void RgbImage::set(int row, int col, Rgb c) {
  const auto i = 3 * (static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col));
  pixels[i] = c.r;
  pixels[i + 1] = c.g;
  pixels[i + 2] = c.b;
}

RgbImage RgbImage::crop(int row, int col, int h, int w) const {
  if (row < 0 || col < 0 || h < 0 || w < 0 || row + h > height || col + w > width) {
    throw Error(Errc::invalid_argument, "crop rectangle outside image");
  }
  RgbImage out(w, h);
  for (int y = 0; y < h; ++y) {
    const auto src = pixels.begin() + 3 * ((static_cast<std::ptrdiff_t>(row + y) * width) + col);
    std::copy(src, src + 3 * w, out.pixels.begin() + 3 * static_cast<std::ptrdiff_t>(y) * w);
  }
  return out;
}

void RgbImage::paste(const RgbImage& src, int row, int col) {
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) set(row + y, col + x, src.at(y, x));
  }
}

RgbImage read_png(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(Errc::missing_image, "image '" + path.string() + "' does not exist");
  }
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&png, path.c_str()) == 0) {
    throw Error(Errc::image_decode, "cannot decode '" + path.string() + "': " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  RgbImage image(static_cast<int>(png.width), static_cast<int>(png.height));
  if (png_image_finish_read(&png, nullptr, image.pixels.data(), 0, nullptr) == 0) {
    const std::string message = png.message;
    png_image_free(&png);
    throw Error(Errc::image_decode, "cannot decode '" + path.string() + "': " + message);
  }
  return image;
}

std::pair<int, int> png_dimensions(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(Errc::missing_image, "image '" + path.string() + "' does not exist");
  }
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&png, path.c_str()) == 0) {
    throw Error(Errc::image_decode, "cannot decode '" + path.string() + "': " + png.message);
  }
  const std::pair<int, int> dims{static_cast<int>(png.width), static_cast<int>(png.height)};
  png_image_free(&png);
  return dims;
}

std::vector<std::byte> encode_png(const RgbImage& image) {
  if (image.width <= 0 || image.height <= 0) throw Error(Errc::invalid_argument, "cannot encode an empty image");
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (png_image_write_to_memory(&png, nullptr, &size, 0, image.pixels.data(), 0, nullptr) == 0) {
    throw Error(Errc::io, std::string("png encode failed: ") + png.message);
  }
  std::vector<std::byte> out(size);
  if (png_image_write_to_memory(&png, out.data(), &size, 0, image.pixels.data(), 0, nullptr) == 0) {
    throw Error(Errc::io, std::string("png encode failed: ") + png.message);
  }
  out.resize(size);
  return out;
}

void write_png(const RgbImage& image, const std::filesystem::path& path) {
  write_file_bytes(path, encode_png(image));
}

}  // namespace facex
