#include "bokehkit/core/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

namespace bokehkit {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports errors through longjmp; route them into exceptions once
// we are back on the C++ side of the setjmp.
void throw_format(png_structp png, png_const_charp msg) {
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  if (err && err->empty()) *err = msg;
  longjmp(png_jmpbuf(png), 1);
}

void swallow_warning(png_structp, png_const_charp) {}

}  // namespace

Image load_image(const std::string& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open image file: " + path);

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw FormatError("not a PNG file: " + path);

  std::string errmsg;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &errmsg,
                                           throw_format, swallow_warning);
  if (!png) throw Error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("png_create_info_struct failed");
  }

  std::vector<png_byte> data;
  std::vector<png_bytep> rows;
  png_uint_32 h = 0, w = 0;
  int bit_depth = 0, color_type = 0;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("corrupt PNG stream: " + path +
                      (errmsg.empty() ? "" : " (" + errmsg + ")"));
  }

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  png_get_IHDR(png, info, &w, &h, &bit_depth, &color_type, nullptr, nullptr, nullptr);

  if (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("unsupported PNG channel layout (need grayscale or RGB, no alpha): " + path);
  }
  if (bit_depth != 8 && bit_depth != 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("unsupported PNG bit depth (need 8 or 16): " + path);
  }

  if (bit_depth == 16) png_set_swap(png);  // stream is big-endian
  if (png_set_interlace_handling(png) > 1) png_read_update_info(png, info);

  const int channels = (color_type == PNG_COLOR_TYPE_RGB) ? 3 : 1;
  const size_t bytes_per_value = static_cast<size_t>(bit_depth) / 8;
  const size_t row_bytes = static_cast<size_t>(w) * channels * bytes_per_value;
  data.resize(row_bytes * h);
  rows.resize(h);
  for (png_uint_32 i = 0; i < h; ++i) rows[i] = data.data() + i * row_bytes;

  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  Image img(static_cast<Index>(h), static_cast<Index>(w), channels);
  const double scale = (bit_depth == 8) ? 1.0 / 255.0 : 1.0 / 65535.0;
  for (png_uint_32 i = 0; i < h; ++i) {
    const png_byte* row = data.data() + i * row_bytes;
    for (png_uint_32 j = 0; j < w; ++j) {
      for (int c = 0; c < channels; ++c) {
        double v;
        if (bit_depth == 8) {
          v = row[j * channels + c] * scale;
        } else {
          std::uint16_t raw;
          std::memcpy(&raw, row + (static_cast<size_t>(j) * channels + c) * 2, 2);
          v = raw * scale;
        }
        img.at(c, static_cast<Index>(i), static_cast<Index>(j)) = v;
      }
    }
  }
  img.require_finite("load_image");
  return img;
}

void save_image(const Image& img, const std::string& path, int depth) {
  if (depth != 8 && depth != 16) throw ValueError("save_image depth must be 8 or 16");
  img.require_finite("save_image");

  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot open image file for writing: " + path);

  std::string errmsg;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &errmsg,
                                            throw_format, swallow_warning);
  if (!png) throw Error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("png_create_info_struct failed");
  }

  const Index h = img.height(), w = img.width();
  const int channels = img.channels();
  const double maxval = (depth == 8) ? 255.0 : 65535.0;
  const size_t bytes_per_value = static_cast<size_t>(depth) / 8;
  const size_t row_bytes = static_cast<size_t>(w) * channels * bytes_per_value;
  std::vector<png_byte> data(row_bytes * static_cast<size_t>(h));
  std::vector<png_bytep> rows(static_cast<size_t>(h));
  for (Index i = 0; i < h; ++i) {
    png_byte* row = data.data() + static_cast<size_t>(i) * row_bytes;
    rows[static_cast<size_t>(i)] = row;
    for (Index j = 0; j < w; ++j) {
      for (int c = 0; c < channels; ++c) {
        const double v = std::clamp(img.at(c, i, j), 0.0, 1.0);
        // Round half up.
        const auto q = static_cast<std::uint32_t>(std::floor(v * maxval + 0.5));
        if (depth == 8) {
          row[j * channels + c] = static_cast<png_byte>(q);
        } else {
          const auto q16 = static_cast<std::uint16_t>(q);
          std::memcpy(row + (static_cast<size_t>(j) * channels + c) * 2, &q16, 2);
        }
      }
    }
  }

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing PNG: " + path +
                  (errmsg.empty() ? "" : " (" + errmsg + ")"));
  }

  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), depth,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (depth == 16) png_set_swap(png);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace bokehkit
