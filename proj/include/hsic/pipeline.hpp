#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hsic/clustering.hpp"
#include "hsic/config.hpp"
#include "hsic/data_io.hpp"
#include "hsic/metrics.hpp"

namespace hsic {

// End-to-end steps behind the command-line subcommands. Each step reads its
// inputs from the config, writes its artifacts under cfg.out and returns a
// summary. Errors propagate as hsic::Error subclasses.

struct Dataset {
  HsiCube cube;
  std::optional<LabelMap> labels;
};

/// Throws ParameterError without a data path and DataError when the label map
/// does not match the cube size.
Dataset load_dataset(const PipelineConfig& cfg);

struct TrainOutcome {
  std::filesystem::path dictionary_path;  // out/dictionary.sdict
  std::filesystem::path trace_path;       // out/trace.csv
  int atoms = 0;
  std::size_t samples = 0;
  /// Mean of the last min(100, T) trace entries.
  double final_mean_residual = 0.0;
};
TrainOutcome run_train(const PipelineConfig& cfg);

struct EncodeOutcome {
  std::filesystem::path codes_path;   // out/codes.scode
  std::filesystem::path coords_path;  // out/coords.npy
  std::size_t pixels = 0;
  int sparsity = 0;
  double mean_error = 0.0;  // mean ||x - D a||_2
};
/// Codes every retained pixel with cfg.dictionary. A band-count mismatch is a
/// DataError.
EncodeOutcome run_encode(const PipelineConfig& cfg);

struct ClusterOutcome {
  std::filesystem::path labels_path;   // out/labels.npy
  std::filesystem::path coords_path;   // out/coords.npy
  std::filesystem::path summary_path;  // out/summary.json
  Partition partition;
  std::vector<PixelCoord> coords;
  std::optional<AmiReport> score;  // against nonzero ground truth, if given
  std::string summary_json;
};
ClusterOutcome run_cluster(const PipelineConfig& cfg);

/// Scores `predicted` against the ground truth at `coords`, keeping only
/// pixels with a nonzero label. Length mismatches are DataErrors.
AmiReport evaluate_partition(std::span<const int> predicted,
                             std::span<const PixelCoord> coords, const LabelMap& truth);

/// Without a coords file the partition is taken to list the nonzero
/// ground-truth pixels in row-major order.
AmiReport run_evaluate(const std::filesystem::path& partition,
                       const std::filesystem::path& ground_truth,
                       const std::optional<std::filesystem::path>& coords);

std::string ami_report_json(const AmiReport& report);

struct GridCell {
  int atoms = 0;
  int sparsity = 0;
  std::uint64_t seed = 0;
  std::filesystem::path directory;
  bool ok = false;
  std::optional<double> ami;
  std::string error;
};

struct GridOutcome {
  std::vector<GridCell> cells;  // atoms-major order
  std::filesystem::path table_path;    // out/grid.csv
  std::filesystem::path montage_path;  // out/grid.png
};

/// Trains, encodes and clusters every (atoms, sparsity) cell in its own
/// directory with seed + cell_index. Cell failures are recorded, not thrown.
GridOutcome run_grid(const PipelineConfig& cfg);

/// Image size falls back to summary.json beside the partition when zero.
void run_render(const std::filesystem::path& partition,
                const std::filesystem::path& coords, int rows, int cols,
                const std::filesystem::path& png);

/// Cube format conversion by extension (.npy <-> .hsraw).
void run_convert(const std::filesystem::path& input, const std::filesystem::path& output);

}  // namespace hsic
