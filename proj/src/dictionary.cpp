#include "hsic/dictionary.hpp"

#include <cmath>
#include <exception>
#include <numeric>
#include <string>

#include "hsic/error.hpp"
#include "hsic/random.hpp"

namespace hsic {

namespace detail {
struct DictionaryAccess {
  static Eigen::MatrixXd& atoms(Dictionary& d) { return d.atoms_; }
};
}  // namespace detail

namespace {

constexpr std::uint64_t kInitStream = 0x5eed1d1c7ULL;

void accumulate_code(OdlState& state, const Eigen::Ref<const Eigen::VectorXd>& x,
                     const SparseCode& code) {
  for (const auto& ei : code.entries) {
    for (const auto& ej : code.entries) state.acc_a(ei.index, ej.index) += ei.value * ej.value;
    state.acc_b.col(ei.index) += x * ei.value;
  }
}

void accumulate_tile(OdlState& state, const Eigen::Ref<const Eigen::MatrixXd>& signals,
                     const TileCode& code) {
  const auto& q = code.coefficients;
  const Eigen::MatrixXd qqt = q * q.transpose();
  const Eigen::MatrixXd tqt = signals * q.transpose();
  for (std::size_t i = 0; i < code.support.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < code.support.size(); ++j)
      state.acc_a(code.support[i], code.support[j]) += qqt(ii, static_cast<Eigen::Index>(j));
    state.acc_b.col(code.support[i]) += tqt.col(ii);
  }
}

// One Gauss-Seidel sweep of the block-coordinate dictionary update.
void update_atoms(OdlState& state) {
  Eigen::MatrixXd& d = detail::DictionaryAccess::atoms(state.dictionary);
  Eigen::VectorXd u(d.rows());
  for (Eigen::Index j = 0; j < d.cols(); ++j) {
    const double ajj = state.acc_a(j, j);
    if (ajj <= kDiagEps) continue;
    u.noalias() = d * state.acc_a.col(j);
    u = d.col(j) + (state.acc_b.col(j) - u) / ajj;
    if (!u.allFinite())
      throw NumericError("non-finite update for atom " + std::to_string(j));
    d.col(j) = u / std::max(u.norm(), 1.0);
  }
}

void check_pixels(const PixelMatrix& pixels) {
  if (pixels.n() == 0) throw DataError("no training pixels");
}

}  // namespace

Dictionary::Dictionary(Eigen::MatrixXd atoms, bool require_overcomplete)
    : atoms_(std::move(atoms)) {
  if (atoms_.rows() == 0 || atoms_.cols() == 0)
    throw ParameterError("dictionary must be non-empty");
  if (require_overcomplete && atoms_.cols() <= atoms_.rows())
    throw ParameterError("dictionary with " + std::to_string(atoms_.cols()) +
                         " atoms is not overcomplete for dimension " +
                         std::to_string(atoms_.rows()));
  for (Eigen::Index j = 0; j < atoms_.cols(); ++j) {
    if (!atoms_.col(j).allFinite())
      throw DataError("dictionary column " + std::to_string(j) +
                      " has non-finite entries");
    const double norm = atoms_.col(j).norm();
    if (norm == 0.0 || norm > 1.0 + kNormTolerance)
      throw DataError("dictionary column " + std::to_string(j) +
                      " has norm " + std::to_string(norm) +
                      " (atoms must lie in the unit ball and be nonzero)");
  }
}

bool Dictionary::is_unit_norm() const {
  for (Eigen::Index j = 0; j < atoms_.cols(); ++j)
    if (std::abs(atoms_.col(j).norm() - 1.0) > kNormTolerance) return false;
  return true;
}

void TrainConfig::validate() const {
  if (atoms < 1) throw ParameterError("atom count must be positive");
  if (sparsity < 1) throw ParameterError("sparsity must be >= 1");
  if (iterations < 1) throw ParameterError("iterations must be >= 1");
  if (batch_size < 1) throw ParameterError("batch size must be >= 1");
  if (!(lambda >= 0.0)) throw ParameterError("lambda must be >= 0");
  if (tile && (tile->rows < 1 || tile->cols < 1 || tile->rows % 2 == 0 ||
               tile->cols % 2 == 0))
    throw ParameterError("tile sides must be positive odd integers");
}

std::size_t training_sample(std::uint64_t seed, std::uint64_t draw,
                            std::size_t n) {
  return static_cast<std::size_t>(stream_index(seed, draw, n));
}

Dictionary init_dictionary(const PixelMatrix& pixels, int atoms,
                           std::uint64_t seed, bool allow_undercomplete) {
  check_pixels(pixels);
  if (atoms < 1) throw ParameterError("atom count must be positive");
  if (!allow_undercomplete && atoms <= pixels.m())
    throw ParameterError("atom count " + std::to_string(atoms) +
                         " must exceed the signal dimension " +
                         std::to_string(pixels.m()));

  const auto n = static_cast<std::size_t>(pixels.n());
  const auto k = static_cast<std::size_t>(atoms);
  Rng rng(seed ^ kInitStream);
  std::vector<std::size_t> picks(k);
  if (n >= k) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(n - i));
      std::swap(order[i], order[j]);
      picks[i] = order[i];
    }
  } else {
    for (auto& p : picks) p = static_cast<std::size_t>(rng.below(n));
  }

  Eigen::MatrixXd d(pixels.m(), atoms);
  for (std::size_t i = 0; i < k; ++i) {
    const auto src = pixels.values.col(static_cast<Eigen::Index>(picks[i]));
    const double norm = src.norm();
    if (!(norm > 0.0) || !std::isfinite(norm))
      throw DataError("cannot initialize an atom from zero or non-finite pixel " +
                      std::to_string(picks[i]));
    d.col(static_cast<Eigen::Index>(i)) = src / norm;
  }
  return Dictionary(std::move(d), !allow_undercomplete);
}

OdlState make_state(Dictionary dictionary, std::uint64_t seed) {
  OdlState state;
  const int m = dictionary.signal_dim();
  const int k = dictionary.atom_count();
  state.dictionary = std::move(dictionary);
  state.acc_a = Eigen::MatrixXd::Zero(k, k);
  state.acc_b = Eigen::MatrixXd::Zero(m, k);
  state.seed = seed;
  return state;
}

double odl_batch_update(OdlState& state,
                        const Eigen::Ref<const Eigen::MatrixXd>& batch,
                        int sparsity) {
  if (batch.cols() == 0) throw ParameterError("empty batch");
  const SparseCodeMatrix codes = encode_all(state.dictionary, batch, sparsity);
  double residual = 0.0;
  for (Eigen::Index j = 0; j < batch.cols(); ++j) {
    const auto& code = codes.columns[static_cast<std::size_t>(j)];
    accumulate_code(state, batch.col(j), code);
    residual += code.residual_norm;
  }
  update_atoms(state);
  ++state.iterations;
  return residual / static_cast<double>(batch.cols());
}

OdlState odl_step(OdlState state, const Eigen::Ref<const Eigen::VectorXd>& x,
                  int sparsity, double lambda) {
  if (!(lambda >= 0.0)) throw ParameterError("lambda must be >= 0");
  odl_batch_update(state, x, sparsity);
  return state;
}

TrainResult resume(OdlState state, const PixelMatrix& pixels, int extra_iters,
                   int sparsity, int batch_size) {
  if (extra_iters < 0) throw ParameterError("extra iterations must be >= 0");
  if (batch_size < 1) throw ParameterError("batch size must be >= 1");
  TrainResult result{std::move(state), {}};
  if (extra_iters == 0) return result;
  check_pixels(pixels);
  if (pixels.m() != result.state.dictionary.signal_dim())
    throw DataError("new data has " + std::to_string(pixels.m()) +
                    " bands but the dictionary expects " +
                    std::to_string(result.state.dictionary.signal_dim()));

  const auto n = static_cast<std::size_t>(pixels.n());
  Eigen::MatrixXd batch(pixels.m(), batch_size);
  result.trace.reserve(static_cast<std::size_t>(extra_iters));
  for (int it = 0; it < extra_iters; ++it) {
    const std::uint64_t base =
        result.state.iterations * static_cast<std::uint64_t>(batch_size);
    for (int b = 0; b < batch_size; ++b)
      batch.col(b) = pixels.values.col(static_cast<Eigen::Index>(
          training_sample(result.state.seed, base + static_cast<std::uint64_t>(b), n)));
    result.trace.push_back(odl_batch_update(result.state, batch, sparsity));
  }
  return result;
}

TrainResult train(const PixelMatrix& pixels, const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.tile)
    throw ParameterError("tile training needs the image cube; use jsr_train");
  check_pixels(pixels);
  OdlState state = make_state(
      init_dictionary(pixels, cfg.atoms, cfg.seed, cfg.allow_undercomplete),
      cfg.seed);
  return resume(std::move(state), pixels, cfg.iterations, cfg.sparsity,
                cfg.batch_size);
}

TrainResult train(const HsiCube& cube, const TrainConfig& cfg, bool normalize) {
  if (cfg.tile) {
    return jsr_train(normalize ? normalize_pixels(cube) : cube, cfg);
  }
  return train(flatten(cube, nullptr, normalize).pixels, cfg);
}

TileGrid::TileGrid(const HsiCube& cube, TileSize size) : cube_(&cube), size_(size) {
  if (size.rows < 1 || size.cols < 1 || size.rows % 2 == 0 || size.cols % 2 == 0)
    throw ParameterError("tile sides must be positive odd integers");
  if (size.rows > cube.rows() || size.cols > cube.cols())
    throw ParameterError("tile " + std::to_string(size.rows) + "x" +
                         std::to_string(size.cols) + " is larger than the " +
                         std::to_string(cube.rows()) + "x" +
                         std::to_string(cube.cols()) + " image");
  center_rows_ = cube.rows() - size.rows + 1;
  center_cols_ = cube.cols() - size.cols + 1;
}

PixelCoord TileGrid::center(std::size_t i) const {
  const auto cc = static_cast<std::size_t>(center_cols_);
  return {size_.rows / 2 + static_cast<int>(i / cc),
          size_.cols / 2 + static_cast<int>(i % cc)};
}

Eigen::MatrixXd TileGrid::signals(std::size_t i) const {
  const PixelCoord c = center(i);
  Eigen::MatrixXd out(cube_->bands(), size_.rows * size_.cols);
  Eigen::Index col = 0;
  for (int dr = -size_.rows / 2; dr <= size_.rows / 2; ++dr)
    for (int dc = -size_.cols / 2; dc <= size_.cols / 2; ++dc)
      out.col(col++) = cube_->pixel(c.row + dr, c.col + dc);
  return out;
}

TileGrid extract_tiles(const HsiCube& cube, TileSize size) {
  return TileGrid(cube, size);
}

TrainResult jsr_train(const HsiCube& cube, const TrainConfig& cfg) {
  cfg.validate();
  if (!cfg.tile) throw ParameterError("jsr_train requires a tile size");
  const TileGrid grid(cube, *cfg.tile);

  const PixelMatrix init_pixels = flatten(cube, nullptr, true).pixels;
  TrainResult result{
      make_state(init_dictionary(init_pixels, cfg.atoms, cfg.seed,
                                 cfg.allow_undercomplete),
                 cfg.seed),
      {}};
  OdlState& state = result.state;
  const double columns = static_cast<double>(cfg.tile->rows * cfg.tile->cols);

  result.trace.reserve(static_cast<std::size_t>(cfg.iterations));
  for (int it = 0; it < cfg.iterations; ++it) {
    const std::uint64_t base =
        state.iterations * static_cast<std::uint64_t>(cfg.batch_size);
    double residual = 0.0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      const std::size_t tile = training_sample(
          cfg.seed, base + static_cast<std::uint64_t>(b), grid.size());
      const Eigen::MatrixXd signals = grid.signals(tile);
      const TileCode code = somp(state.dictionary, signals, cfg.sparsity);
      accumulate_tile(state, signals, code);
      residual += code.residual_norm / std::sqrt(columns);
    }
    update_atoms(state);
    ++state.iterations;
    result.trace.push_back(residual / cfg.batch_size);
  }
  return result;
}

std::vector<TileCode> jsr_encode(const Dictionary& dict, const HsiCube& cube,
                                 TileSize size, int sparsity) {
  const TileGrid grid(cube, size);
  std::vector<TileCode> codes(grid.size());
  std::vector<std::exception_ptr> errors(grid.size());
  const auto count = static_cast<std::ptrdiff_t>(grid.size());

#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto t = static_cast<std::size_t>(i);
    try {
      TileCode code = somp(dict, grid.signals(t), sparsity);
      code.tile_rows = size.rows;
      code.tile_cols = size.cols;
      code.center = grid.center(t);
      codes[t] = std::move(code);
    } catch (...) {
      errors[t] = std::current_exception();
    }
  }
  for (std::size_t t = 0; t < errors.size(); ++t) {
    if (!errors[t]) continue;
    try {
      std::rethrow_exception(errors[t]);
    } catch (const Error& e) {
      const PixelCoord c = grid.center(t);
      rethrow_with_context(e, "tile at (" + std::to_string(c.row) + ", " +
                                  std::to_string(c.col) + "): ");
    }
  }
  return codes;
}

DictionaryFile to_dictionary_file(const OdlState& state, const TrainConfig& cfg) {
  DictionaryFile file;
  file.dictionary = state.dictionary;
  file.accumulators = Accumulators{state.acc_a, state.acc_b, state.iterations};
  file.metadata["trainer"] = "odl";
  file.metadata["seed"] = std::to_string(state.seed);
  file.metadata["sparsity"] = std::to_string(cfg.sparsity);
  file.metadata["iterations"] = std::to_string(state.iterations);
  file.metadata["batch_size"] = std::to_string(cfg.batch_size);
  file.metadata["lambda"] = std::to_string(cfg.lambda);
  if (cfg.tile) {
    file.metadata["tile"] =
        std::to_string(cfg.tile->rows) + "x" + std::to_string(cfg.tile->cols);
    file.metadata["somp_aggregation"] = kSompAggregation;
  }
  return file;
}

OdlState state_from_file(const DictionaryFile& file) {
  if (!file.accumulators)
    throw DataError("dictionary file has no accumulator block; cannot resume");
  OdlState state;
  state.dictionary = file.dictionary;
  state.acc_a = file.accumulators->a;
  state.acc_b = file.accumulators->b;
  state.iterations = file.accumulators->iterations;
  if (auto it = file.metadata.find("seed"); it != file.metadata.end()) {
    try {
      state.seed = std::stoull(it->second);
    } catch (const std::exception&) {
      throw DataError("dictionary metadata has an invalid seed");
    }
  }
  return state;
}

}  // namespace hsic
