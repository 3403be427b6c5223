#include "stagehand/png_io.hpp"

#include <cstdio>
#include <memory>

#include <png.h>

#include "stagehand/errors.hpp"

namespace stagehand {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error("png: cannot open " + path.string());
  return f;
}

// libpng reports errors through longjmp; everything touched after setjmp is plain data.
void write_png(const std::filesystem::path& path, int width, int height, int bit_depth,
               int color_type, const std::vector<std::vector<png_byte>>& rows) {
  FilePtr f = open(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png: cannot create write struct");
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("png: failed writing " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (const auto& row : rows) png_write_row(png, row.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Decodes to 8-bit RGB or 8-bit gray depending on `want_gray`.
std::vector<std::uint8_t> read_png(const std::filesystem::path& path, bool want_gray, int& width,
                                   int& height) {
  FilePtr f = open(path, "rb");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
    throw ParseError("signature", "png: " + path.string() + " is not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error("png: cannot create read struct");
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> out;
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError("body", "png: failed decoding " + path.string());
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (want_gray) {
    if (color_type & PNG_COLOR_MASK_COLOR || color_type == PNG_COLOR_TYPE_PALETTE)
      png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  } else if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  png_read_update_info(png, info);
  width = static_cast<int>(png_get_image_width(png, info));
  height = static_cast<int>(png_get_image_height(png, info));
  const std::size_t stride = png_get_rowbytes(png, info);
  out.resize(stride * height);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = out.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace

void write_png_rgb(const std::filesystem::path& path, const Rgb8Image& image) {
  std::vector<std::vector<png_byte>> rows(image.height);
  for (int y = 0; y < image.height; ++y)
    rows[y].assign(image.pixels.begin() + 3 * y * image.width,
                   image.pixels.begin() + 3 * (y + 1) * image.width);
  write_png(path, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, rows);
}

Rgb8Image read_png_rgb(const std::filesystem::path& path) {
  Rgb8Image img;
  img.pixels = read_png(path, false, img.width, img.height);
  return img;
}

void write_png_mask(const std::filesystem::path& path, int width, int height,
                    const std::vector<std::uint8_t>& mask) {
  std::vector<std::vector<png_byte>> rows(height, std::vector<png_byte>((width + 7) / 8, 0));
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (mask[static_cast<std::size_t>(y) * width + x]) rows[y][x / 8] |= 0x80 >> (x % 8);
  write_png(path, width, height, 1, PNG_COLOR_TYPE_GRAY, rows);
}

std::vector<std::uint8_t> read_png_mask(const std::filesystem::path& path, int& width, int& height) {
  std::vector<std::uint8_t> gray = read_png(path, true, width, height);
  for (auto& g : gray) g = g >= 128 ? 1 : 0;
  return gray;
}

}  // namespace stagehand
