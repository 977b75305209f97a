#include "uwct/image.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <stdexcept>

namespace uwct {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

std::optional<ImageU8> decode_png(FILE* file) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return std::nullopt;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return std::nullopt;
  }
  std::vector<png_bytep> row_ptrs;
  ImageU8 image;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return std::nullopt;
  }
  png_init_io(png, file);
  png_read_info(png, info);

  png_set_strip_16(png);
  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  image.width = png_get_image_width(png, info);
  image.height = png_get_image_height(png, info);
  if (png_get_channels(png, info) != 3 || image.width < 1 || image.height < 1) {
    png_destroy_read_struct(&png, &info, nullptr);
    return std::nullopt;
  }
  image.pixels.resize(static_cast<size_t>(image.width) * image.height * 3);
  row_ptrs.resize(image.height);
  for (int64_t y = 0; y < image.height; ++y) {
    row_ptrs[y] = image.pixels.data() + y * image.width * 3;
  }
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

struct JpegErrorHandler {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* handler = reinterpret_cast<JpegErrorHandler*>(cinfo->err);
  std::longjmp(handler->jump, 1);
}

std::optional<ImageU8> decode_jpeg(FILE* file) {
  jpeg_decompress_struct cinfo;
  JpegErrorHandler err;
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    return std::nullopt;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file);
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);

  ImageU8 image;
  image.width = cinfo.output_width;
  image.height = cinfo.output_height;
  if (cinfo.output_components != 3 || image.width < 1 || image.height < 1) {
    jpeg_destroy_decompress(&cinfo);
    return std::nullopt;
  }
  image.pixels.resize(static_cast<size_t>(image.width) * image.height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = image.pixels.data() +
                   static_cast<size_t>(cinfo.output_scanline) * image.width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return image;
}

}  // namespace

std::optional<ImageU8> decode_image(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) return std::nullopt;
  unsigned char magic[8] = {0};
  const size_t got = std::fread(magic, 1, sizeof(magic), file.get());
  std::rewind(file.get());
  if (got >= 8 && png_sig_cmp(magic, 0, 8) == 0) {
    return decode_png(file.get());
  }
  if (got >= 2 && magic[0] == 0xFF && magic[1] == 0xD8) {
    return decode_jpeg(file.get());
  }
  return std::nullopt;
}

void write_png(const std::filesystem::path& path, const ImageU8& image) {
  if (image.width < 1 || image.height < 1 ||
      image.pixels.size() != static_cast<size_t>(image.width) * image.height * 3) {
    throw std::invalid_argument("write_png: malformed image buffer");
  }
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) {
    throw std::runtime_error("write_png: cannot open " + path.string());
  }
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, info ? &info : nullptr);
    throw std::runtime_error("write_png: libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("write_png: failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width),
               static_cast<png_uint_32>(image.height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int64_t y = 0; y < image.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(image.pixels.data() + y * image.width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

ImageU8 resize_bilinear(const ImageU8& image, int64_t out_width, int64_t out_height) {
  if (out_width < 1 || out_height < 1) {
    throw std::invalid_argument("resize_bilinear: output extents must be >= 1");
  }
  if (image.width == out_width && image.height == out_height) return image;
  ImageU8 out;
  out.width = out_width;
  out.height = out_height;
  out.pixels.resize(static_cast<size_t>(out_width) * out_height * 3);
  const double sx = static_cast<double>(image.width) / out_width;
  const double sy = static_cast<double>(image.height) / out_height;
  for (int64_t oy = 0; oy < out_height; ++oy) {
    double fy = (oy + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(image.height - 1));
    const int64_t y0 = static_cast<int64_t>(fy);
    const int64_t y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - y0;
    for (int64_t ox = 0; ox < out_width; ++ox) {
      double fx = (ox + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(image.width - 1));
      const int64_t x0 = static_cast<int64_t>(fx);
      const int64_t x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = (1.0 - wx) * image.at(y0, x0, c) + wx * image.at(y0, x1, c);
        const double bottom = (1.0 - wx) * image.at(y1, x0, c) + wx * image.at(y1, x1, c);
        const double v = (1.0 - wy) * top + wy * bottom;
        out.at(oy, ox, c) = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return out;
}

Tensor<float> normalize_to_tensor(const ImageU8& image) {
  const int64_t h = image.height, w = image.width;
  std::vector<float> values(static_cast<size_t>(3 * h * w));
  for (int c = 0; c < 3; ++c) {
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t x = 0; x < w; ++x) {
        values[(c * h + y) * w + x] =
            static_cast<float>(image.at(y, x, c)) / 255.0f * 2.0f - 1.0f;
      }
    }
  }
  return Tensor<float>::from_vector({1, 3, h, w}, std::move(values), false);
}

ImageU8 denormalize_to_image(const Tensor<float>& tensor) {
  Shape shape = tensor.shape();
  if (shape.size() == 4) {
    if (shape[0] != 1) {
      throw std::invalid_argument("denormalize_to_image: batch extent must be 1, got " +
                                  shape_str(shape));
    }
    shape.erase(shape.begin());
  }
  if (shape.size() != 3 || shape[0] != 3) {
    throw std::invalid_argument("denormalize_to_image: expected 3HW tensor, got " +
                                shape_str(tensor.shape()));
  }
  const int64_t h = shape[1], w = shape[2];
  ImageU8 image;
  image.width = w;
  image.height = h;
  image.pixels.resize(static_cast<size_t>(h) * w * 3);
  const auto values = tensor.values();
  for (int c = 0; c < 3; ++c) {
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t x = 0; x < w; ++x) {
        const float v = (values[(c * h + y) * w + x] + 1.0f) / 2.0f * 255.0f;
        image.at(y, x, c) =
            static_cast<uint8_t>(std::lround(std::clamp(v, 0.0f, 255.0f)));
      }
    }
  }
  return image;
}

std::optional<Tensor<float>> decode_resize_normalize(const std::filesystem::path& path,
                                                     int64_t size) {
  std::optional<ImageU8> image = decode_image(path);
  if (!image) return std::nullopt;
  return normalize_to_tensor(resize_bilinear(*image, size, size));
}

}  // namespace uwct
