#include "hsic/render.hpp"

#include <cstdio>
#include <memory>
#include <string>

#include <png.h>

#include "hsic/error.hpp"

namespace hsic {
namespace {

// Okabe-Ito followed by Tol's muted scheme.
constexpr std::array<std::array<std::uint8_t, 3>, kPaletteSize> kPalette{{
    {230, 159, 0},   {86, 180, 233},  {0, 158, 115},   {240, 228, 66},
    {0, 114, 178},   {213, 94, 0},    {204, 121, 167}, {153, 153, 153},
    {51, 34, 136},   {136, 204, 238}, {68, 170, 153},  {17, 119, 51},
    {153, 153, 51},  {221, 204, 119}, {204, 102, 119}, {136, 34, 85},
    {170, 68, 153},
}};

constexpr std::uint8_t kMissingCell = 64;
constexpr std::uint8_t kGap = 255;

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

}  // namespace

std::array<std::uint8_t, 3> RgbImage::at(int row, int col) const {
  const auto o = (static_cast<std::size_t>(row) * cols + col) * 3;
  return {pixels[o], pixels[o + 1], pixels[o + 2]};
}

std::array<std::uint8_t, 3> palette_color(int label) {
  if (label < 0) throw DataError("negative label " + std::to_string(label));
  return kPalette[static_cast<std::size_t>(label % kPaletteSize)];
}

RgbImage render_partition(std::span<const int> labels,
                          std::span<const PixelCoord> coords, int rows, int cols) {
  if (rows < 1 || cols < 1) throw ParameterError("image size must be positive");
  if (labels.size() != coords.size())
    throw DataError("partition has " + std::to_string(labels.size()) +
                    " labels but " + std::to_string(coords.size()) + " coordinates");
  RgbImage img{rows, cols,
               std::vector<std::uint8_t>(static_cast<std::size_t>(rows) * cols * 3, 0)};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const PixelCoord& p = coords[i];
    if (p.row < 0 || p.row >= rows || p.col < 0 || p.col >= cols)
      throw DataError("coordinate (" + std::to_string(p.row) + ", " +
                      std::to_string(p.col) + ") lies outside a " +
                      std::to_string(rows) + "x" + std::to_string(cols) + " image");
    const auto c = palette_color(labels[i]);
    const auto o = (static_cast<std::size_t>(p.row) * cols + p.col) * 3;
    img.pixels[o] = c[0];
    img.pixels[o + 1] = c[1];
    img.pixels[o + 2] = c[2];
  }
  return img;
}

RgbImage montage(std::span<const RgbImage> cells, int grid_rows, int grid_cols, int gap) {
  if (grid_rows < 1 || grid_cols < 1 || gap < 0)
    throw ParameterError("montage needs a positive grid and a non-negative gap");
  if (cells.size() > static_cast<std::size_t>(grid_rows) * grid_cols)
    throw ParameterError("more cells than grid slots");
  int h = 0;
  int w = 0;
  for (const RgbImage& c : cells) {
    if (c.pixels.empty()) continue;
    if (h == 0) {
      h = c.rows;
      w = c.cols;
    } else if (c.rows != h || c.cols != w) {
      throw DataError("montage cells differ in size");
    }
  }
  if (h == 0) h = w = 1;

  RgbImage out;
  out.rows = grid_rows * h + (grid_rows + 1) * gap;
  out.cols = grid_cols * w + (grid_cols + 1) * gap;
  out.pixels.assign(static_cast<std::size_t>(out.rows) * out.cols * 3, kGap);
  for (int gr = 0; gr < grid_rows; ++gr)
    for (int gc = 0; gc < grid_cols; ++gc) {
      const auto idx = static_cast<std::size_t>(gr) * grid_cols + gc;
      const RgbImage* cell = idx < cells.size() && !cells[idx].pixels.empty() ? &cells[idx] : nullptr;
      const int r0 = gap + gr * (h + gap);
      const int c0 = gap + gc * (w + gap);
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
          const auto o = (static_cast<std::size_t>(r0 + r) * out.cols + c0 + c) * 3;
          for (int ch = 0; ch < 3; ++ch)
            out.pixels[o + ch] =
                cell ? cell->pixels[(static_cast<std::size_t>(r) * w + c) * 3 + ch]
                     : kMissingCell;
        }
    }
  return out;
}

void write_png(const RgbImage& image, const std::filesystem::path& path) {
  if (image.rows < 1 || image.cols < 1 ||
      image.pixels.size() != static_cast<std::size_t>(image.rows) * image.cols * 3)
    throw DataError("malformed RGB image");
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "wb"));
  if (!file) throw DataError("cannot write " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, nullptr);
    throw DataError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("failed writing PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_set_compression_level(png, 9);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.cols),
               static_cast<png_uint_32>(image.rows), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int r = 0; r < image.rows; ++r) {
    auto* row = const_cast<png_bytep>(image.pixels.data() +
                                      static_cast<std::size_t>(r) * image.cols * 3);
    png_write_row(png, row);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace hsic
