#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace stagehand {

// 8-bit RGB raster, row-major, interleaved.
struct Rgb8Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

void write_png_rgb(const std::filesystem::path& path, const Rgb8Image& image);
Rgb8Image read_png_rgb(const std::filesystem::path& path);

// 1-bit grayscale PNG; nonzero entries are written as white.
void write_png_mask(const std::filesystem::path& path, int width, int height,
                    const std::vector<std::uint8_t>& mask);
std::vector<std::uint8_t> read_png_mask(const std::filesystem::path& path, int& width, int& height);

}  // namespace stagehand
