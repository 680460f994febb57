#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace splatview {

// Row-major H x W x 3 float image, nominally in [0, 1].
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(size_t width, size_t height, float fill = 0.0f)
      : width_(width), height_(height), pixels_(width * height * 3, fill) {}

  size_t width() const { return width_; }
  size_t height() const { return height_; }
  bool empty() const { return pixels_.empty(); }

  float& at(size_t x, size_t y, size_t c) { return pixels_[(y * width_ + x) * 3 + c]; }
  float at(size_t x, size_t y, size_t c) const { return pixels_[(y * width_ + x) * 3 + c]; }

  std::vector<float>& data() { return pixels_; }
  const std::vector<float>& data() const { return pixels_; }

 private:
  size_t width_ = 0;
  size_t height_ = 0;
  std::vector<float> pixels_;
};

// 8-bit RGB or RGBA PNG; alpha is dropped and byte b maps to b / 255.
// Other bit depths and color types throw FormatError.
ImageBuffer LoadPng(const std::filesystem::path& path);

// 8-bit RGB PNG, byte = round(clamp(v, 0, 1) * 255).
void WritePng(const ImageBuffer& image, const std::filesystem::path& path);

}  // namespace splatview
