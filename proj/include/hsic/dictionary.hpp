#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "hsic/data_io.hpp"
#include "hsic/pursuit.hpp"
#include "hsic/types.hpp"

namespace hsic {

/// Accumulator diagonal below which an atom is considered unused and is not
/// updated.
inline constexpr double kDiagEps = 1e-10;

struct TileSize {
  int rows = 1;
  int cols = 1;
  bool operator==(const TileSize&) const = default;
};

struct TrainConfig {
  int atoms = 0;  // k
  int sparsity = 5;
  int iterations = 5000;
  /// l1 weight of the dictionary objective. Coding uses OMP with a fixed
  /// nonzero count, so this is carried for bookkeeping only.
  double lambda = 0.0;
  std::uint64_t seed = 0;
  int batch_size = 1;
  std::optional<TileSize> tile;  // enables joint (tile) training
  bool allow_undercomplete = false;

  /// Throws ParameterError on out-of-range values.
  void validate() const;
};

struct OdlState {
  Dictionary dictionary;
  Eigen::MatrixXd acc_a;  // sum of a a^T, k x k
  Eigen::MatrixXd acc_b;  // sum of x a^T, m x k
  std::uint64_t iterations = 0;
  std::uint64_t seed = 0;
};

struct TrainResult {
  OdlState state;
  /// Per-iteration residual ||x_t - D a_t||_2 measured before the update
  /// (batch mean; per-column RMS for tiles).
  std::vector<double> trace;
};

/// Rule of thumb for the atom count: twice the signal dimension.
inline int suggest_atom_count(int signal_dim) { return 2 * signal_dim; }

/// Index of the `draw`-th training sample in a seeded uniform stream over
/// `n` items. Stateless, so a resumed run continues the same stream.
std::size_t training_sample(std::uint64_t seed, std::uint64_t draw,
                            std::size_t n);

/// k columns of `pixels` sampled uniformly (without replacement when
/// n >= k), each scaled to unit norm.
Dictionary init_dictionary(const PixelMatrix& pixels, int atoms,
                           std::uint64_t seed, bool allow_undercomplete = false);

/// Fresh state with zero accumulators.
OdlState make_state(Dictionary dictionary, std::uint64_t seed);

/// One online step on a single sample: code with OMP, add the rank-one
/// accumulator terms, then sweep the atoms once with the block-coordinate
/// update u_j = d_j + (b_j - D a_j) / A_jj, d_j = u_j / max(||u_j||, 1).
OdlState odl_step(OdlState state, const Eigen::Ref<const Eigen::VectorXd>& x,
                  int sparsity, double lambda = 0.0);

/// Mini-batch form of odl_step: all columns are coded against the same
/// dictionary and summed into the accumulators before one sweep. Returns the
/// mean residual of the batch.
double odl_batch_update(OdlState& state,
                        const Eigen::Ref<const Eigen::MatrixXd>& batch,
                        int sparsity);

/// init_dictionary followed by cfg.iterations online steps over uniformly
/// drawn columns. cfg.tile must be unset (use jsr_train).
TrainResult train(const PixelMatrix& pixels, const TrainConfig& cfg);

/// Dispatches to jsr_train when cfg.tile is set, otherwise trains on every
/// pixel of the cube (normalized when `normalize`).
TrainResult train(const HsiCube& cube, const TrainConfig& cfg, bool normalize);

/// Continues training on new data only, keeping the accumulators.
TrainResult resume(OdlState state, const PixelMatrix& pixels, int extra_iters,
                   int sparsity, int batch_size = 1);

/// Sliding tiles over the interior of a cube (borders are skipped, no
/// padding). Holds a reference: the cube must outlive the grid.
class TileGrid {
public:
  TileGrid(const HsiCube& cube, TileSize size);

  std::size_t size() const { return static_cast<std::size_t>(center_rows_) * center_cols_; }
  TileSize tile() const { return size_; }
  PixelCoord center(std::size_t i) const;
  /// m x (rows * cols) matrix, tile pixels in row-major order.
  Eigen::MatrixXd signals(std::size_t i) const;

private:
  const HsiCube* cube_;
  TileSize size_;
  int center_rows_ = 0;
  int center_cols_ = 0;
};

/// Throws ParameterError unless both tile sides are odd and fit the image.
TileGrid extract_tiles(const HsiCube& cube, TileSize size);

/// Joint-sparse training: each iteration draws random tiles, codes them with
/// SOMP and adds Q Q^T and T Q^T to the accumulators before the atom sweep.
TrainResult jsr_train(const HsiCube& cube, const TrainConfig& cfg);

/// SOMP code for every interior tile, in TileGrid order.
std::vector<TileCode> jsr_encode(const Dictionary& dict, const HsiCube& cube,
                                 TileSize size, int sparsity);

/// Packs the state and its training configuration into an SDICT payload.
DictionaryFile to_dictionary_file(const OdlState& state, const TrainConfig& cfg);
/// Restores a resumable state; throws DataError without accumulators.
OdlState state_from_file(const DictionaryFile& file);

}  // namespace hsic
