#pragma once

#include <compare>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace hsic {

struct PixelCoord {
  int row = 0;
  int col = 0;
  auto operator<=>(const PixelCoord&) const = default;
};

namespace detail {
struct DictionaryAccess;
}

// Dictionary D (m x k). Columns live in the closed unit ball: atoms produced
// by initialization are unit-norm, and the online update projects with
// max(||u||, 1), so trained atoms may sit slightly inside the sphere.
class Dictionary {
public:
  static constexpr double kNormTolerance = 1e-12;

  Dictionary() = default;
  /// Throws DataError naming the first column that is non-finite, zero, or
  /// longer than 1 + kNormTolerance; ParameterError if k <= m and
  /// `require_overcomplete` is set.
  explicit Dictionary(Eigen::MatrixXd atoms, bool require_overcomplete = true);

  int signal_dim() const { return static_cast<int>(atoms_.rows()); }
  int atom_count() const { return static_cast<int>(atoms_.cols()); }
  const Eigen::MatrixXd& atoms() const { return atoms_; }
  auto atom(int j) const { return atoms_.col(j); }

  /// True when every column has norm within kNormTolerance of 1.
  bool is_unit_norm() const;

private:
  friend struct detail::DictionaryAccess;
  Eigen::MatrixXd atoms_;
};

struct CodeEntry {
  int index = 0;
  double value = 0.0;
  bool operator==(const CodeEntry&) const = default;
};

/// One s-sparse coefficient vector over a k-atom dictionary.
struct SparseCode {
  int atom_count = 0;
  int target_sparsity = 0;
  std::vector<CodeEntry> entries;  // selection order, indices unique
  double residual_norm = 0.0;      // ||x - D a||_2 at termination

  Eigen::VectorXd dense() const;
};

struct SparseCodeMatrix {
  int atom_count = 0;
  std::vector<SparseCode> columns;

  std::size_t size() const { return columns.size(); }
  /// k x n dense expansion.
  Eigen::MatrixXd dense() const;
};

/// Joint code of one tile: a shared support and one coefficient column per
/// tile pixel. Columns are ordered row-major over the tile window.
struct TileCode {
  int atom_count = 0;
  int tile_rows = 1;
  int tile_cols = 1;
  PixelCoord center;
  std::vector<int> support;
  Eigen::MatrixXd coefficients;  // |support| x (tile_rows * tile_cols)
  double residual_norm = 0.0;    // Frobenius norm of the tile residual

  int center_column() const { return (tile_rows / 2) * tile_cols + tile_cols / 2; }
  Eigen::MatrixXd dense() const;
};

}  // namespace hsic
