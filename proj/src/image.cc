#include "splatview/image.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>

#include <fmt/format.h>
#include <png.h>

#include "splatview/error.h"

namespace splatview {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

uint8_t ToByte(float v) {
  const float clamped = std::clamp(v, 0.0f, 1.0f);
  return static_cast<uint8_t>(std::lround(clamped * 255.0f));
}

}  // namespace

ImageBuffer LoadPng(const std::filesystem::path& path) {
  const std::string label = path.string();
  FilePtr file(std::fopen(label.c_str(), "rb"));
  if (!file) {
    throw IoError(fmt::format("cannot open {}", label));
  }
  png_byte signature[8];
  if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
    throw FormatError(fmt::format("{} is not a PNG file", label));
  }

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng initialization failed");
  }
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_read_struct(png, info, nullptr); }
  } guard{&png, &info};

  // Row storage must be declared before setjmp so longjmp cannot skip its
  // destructor.
  std::vector<png_byte> raw;
  if (setjmp(png_jmpbuf(png))) {
    throw FormatError(fmt::format("{}: corrupt PNG data", label));
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  const int color_type = png_get_color_type(png, info);
  if (bit_depth != 8) {
    throw FormatError(fmt::format("{}: unsupported bit depth {} (expected 8)", label, bit_depth));
  }
  if (color_type != PNG_COLOR_TYPE_RGB && color_type != PNG_COLOR_TYPE_RGB_ALPHA) {
    throw FormatError(fmt::format("{}: unsupported color type {} (expected RGB or RGBA)", label,
                                  color_type));
  }
  const size_t channels = color_type == PNG_COLOR_TYPE_RGB_ALPHA ? 4 : 3;
  png_set_interlace_handling(png);
  png_read_update_info(png, info);

  raw.resize(static_cast<size_t>(width) * height * channels);
  std::vector<png_bytep> rows(height);
  for (png_uint_32 y = 0; y < height; ++y) {
    rows[y] = raw.data() + static_cast<size_t>(y) * width * channels;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);

  ImageBuffer image(width, height);
  auto& out = image.data();
  for (size_t i = 0, n = static_cast<size_t>(width) * height; i < n; ++i) {
    for (size_t c = 0; c < 3; ++c) {
      out[i * 3 + c] = static_cast<float>(raw[i * channels + c]) / 255.0f;
    }
  }
  return image;
}

void WritePng(const ImageBuffer& image, const std::filesystem::path& path) {
  if (image.width() == 0 || image.height() == 0) {
    throw ValidationError("cannot write an empty image");
  }
  std::vector<png_byte> bytes(image.data().size());
  std::transform(image.data().begin(), image.data().end(), bytes.begin(), ToByte);

  const std::string label = path.string();
  FilePtr file(std::fopen(label.c_str(), "wb"));
  if (!file) {
    throw IoError(fmt::format("cannot open {} for writing", label));
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng initialization failed");
  }
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_write_struct(png, info); }
  } guard{&png, &info};

  std::vector<png_bytep> rows(image.height());
  if (setjmp(png_jmpbuf(png))) {
    throw IoError(fmt::format("failed writing {}", label));
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()),
               static_cast<png_uint_32>(image.height()), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (size_t y = 0; y < image.height(); ++y) {
    rows[y] = bytes.data() + y * image.width() * 3;
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
}

}  // namespace splatview
