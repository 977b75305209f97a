#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "uwct/tensor.hpp"

namespace uwct {

// Interleaved 8-bit RGB.
struct ImageU8 {
  int64_t width = 0;
  int64_t height = 0;
  std::vector<uint8_t> pixels;  // height * width * 3

  uint8_t& at(int64_t y, int64_t x, int c) { return pixels[(y * width + x) * 3 + c]; }
  uint8_t at(int64_t y, int64_t x, int c) const { return pixels[(y * width + x) * 3 + c]; }
};

// PNG or JPEG by magic bytes; grayscale is promoted to RGB, alpha dropped,
// 16-bit samples reduced to 8. Returns nullopt for unreadable or unsupported
// files (the skip signal used by directory scans).
std::optional<ImageU8> decode_image(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, const ImageU8& image);

// Full-frame bilinear resample (no aspect preservation), half-pixel centers.
ImageU8 resize_bilinear(const ImageU8& image, int64_t out_width, int64_t out_height);

// v -> v/255*2-1, CHW float tensor in [-1, 1].
Tensor<float> normalize_to_tensor(const ImageU8& image);
// Inverse of normalize_to_tensor with rounding and clamping; input is 13HW or 3HW.
ImageU8 denormalize_to_image(const Tensor<float>& tensor);

// decode + resize + normalize; nullopt on decode failure.
std::optional<Tensor<float>> decode_resize_normalize(const std::filesystem::path& path,
                                                     int64_t size);

}  // namespace uwct
