#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hsic/types.hpp"

namespace hsic {

// Reflectance cube stored band-interleaved-by-pixel:
// value(r, c, b) = data[(r * cols + c) * bands + b].
class HsiCube {
public:
  HsiCube() = default;
  /// Throws DataError if data.size() != rows * cols * bands or any value is
  /// non-finite (the message names the first offending flat index).
  HsiCube(int rows, int cols, int bands, std::vector<double> data);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int bands() const { return bands_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_);
  }
  const std::vector<double>& data() const { return data_; }

  Eigen::Map<const Eigen::VectorXd> pixel(int row, int col) const {
    return {data_.data() + offset(row, col), bands_};
  }
  Eigen::Map<Eigen::VectorXd> pixel(int row, int col) {
    return {data_.data() + offset(row, col), bands_};
  }

private:
  std::size_t offset(int row, int col) const {
    return (static_cast<std::size_t>(row) * cols_ + col) * bands_;
  }

  int rows_ = 0;
  int cols_ = 0;
  int bands_ = 0;
  std::vector<double> data_;
};

/// Ground truth: 0 is the miscellaneous / unlabeled class, 1..C are classes.
struct LabelMap {
  int rows = 0;
  int cols = 0;
  std::vector<int> labels;  // row-major

  int at(int row, int col) const { return labels[static_cast<std::size_t>(row) * cols + col]; }
  int max_label() const;
};

/// Pixel spectra as columns (m x n) with their image positions.
struct PixelMatrix {
  Eigen::MatrixXd values;
  std::vector<PixelCoord> coords;

  int m() const { return static_cast<int>(values.rows()); }
  int n() const { return static_cast<int>(values.cols()); }
};

struct FlattenResult {
  PixelMatrix pixels;
  std::vector<int> truth;        // aligned with columns; empty without gt
  std::size_t dropped_zero = 0;  // all-zero spectra removed by normalization
};

/// Row-major scan of the cube. With `gt`, pixels labeled 0 are skipped.
/// With `normalize`, each kept column is scaled to unit L2 norm and all-zero
/// spectra are dropped (counted in `dropped_zero`).
FlattenResult flatten(const HsiCube& cube, const LabelMap* gt, bool normalize);

/// Copy of the cube with every nonzero pixel scaled to unit norm.
HsiCube normalize_pixels(const HsiCube& cube);

enum class CubeFormat { npy, hsraw };

/// Picks the format from the extension (.npy or .hsraw).
CubeFormat cube_format_from_path(const std::filesystem::path& path);

HsiCube load_cube(const std::filesystem::path& path, CubeFormat format);
void save_cube(const HsiCube& cube, const std::filesystem::path& path,
               CubeFormat format);

/// Label maps are 2-D integer (or integral float) npy arrays.
LabelMap load_labels(const std::filesystem::path& path);
void save_labels(const LabelMap& labels, const std::filesystem::path& path);

// SDICT container: dictionary, optional online-learning accumulators and a
// string metadata table.
struct Accumulators {
  Eigen::MatrixXd a;  // k x k
  Eigen::MatrixXd b;  // m x k
  std::uint64_t iterations = 0;
};

struct DictionaryFile {
  Dictionary dictionary;
  std::optional<Accumulators> accumulators;
  std::map<std::string, std::string> metadata;
};

void save_dictionary(const DictionaryFile& file,
                     const std::filesystem::path& path);
DictionaryFile load_dictionary(const std::filesystem::path& path);

void save_codes(const SparseCodeMatrix& codes,
                const std::filesystem::path& path);
SparseCodeMatrix load_codes(const std::filesystem::path& path);

/// Dense feature matrices (SDENS container, column-major float64).
void save_dense(const Eigen::MatrixXd& matrix,
                const std::filesystem::path& path);
Eigen::MatrixXd load_dense(const std::filesystem::path& path);

/// Partitions are 1-D uint32 npy arrays; coordinates are (n, 2) uint32.
void save_partition(std::span<const int> labels,
                    const std::filesystem::path& path);
std::vector<int> load_partition(const std::filesystem::path& path);
void save_coords(std::span<const PixelCoord> coords,
                 const std::filesystem::path& path);
std::vector<PixelCoord> load_coords(const std::filesystem::path& path);

// Byte-level helpers shared by the binary containers.
namespace bytes {

std::uint32_t crc32(std::span<const unsigned char> data);

}  // namespace bytes

}  // namespace hsic
