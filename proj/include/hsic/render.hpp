#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hsic/types.hpp"

namespace hsic {

/// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct RgbImage {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> pixels;

  std::array<std::uint8_t, 3> at(int row, int col) const;
};

inline constexpr int kPaletteSize = 17;

/// Fixed class colour table; label l maps to entry l mod 17. No entry is black.
std::array<std::uint8_t, 3> palette_color(int label);

/// Paints labels[i] at coords[i]; pixels not listed stay black. Throws
/// DataError on a length mismatch, a coordinate outside the image or a
/// negative label.
RgbImage render_partition(std::span<const int> labels,
                          std::span<const PixelCoord> coords, int rows, int cols);

/// Tiles equally sized maps into a grid_rows x grid_cols montage separated by
/// `gap` white pixels. Missing cells (empty images) are drawn grey.
RgbImage montage(std::span<const RgbImage> cells, int grid_rows, int grid_cols,
                 int gap = 2);

/// Byte-stable PNG (no timestamps, fixed compression settings).
void write_png(const RgbImage& image, const std::filesystem::path& path);

}  // namespace hsic
