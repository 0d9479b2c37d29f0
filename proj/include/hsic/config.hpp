#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hsic/clustering.hpp"
#include "hsic/data_io.hpp"
#include "hsic/dictionary.hpp"

namespace hsic {

using ConfigMap = std::map<std::string, std::string>;

/// Flat `key = value` document. '#' starts a comment, values may be quoted,
/// lists are written `[a, b, c]`. Throws ParameterError with the line number
/// on malformed input or duplicate keys.
ConfigMap parse_config(const std::string& text);
ConfigMap load_config(const std::filesystem::path& path);

enum class FeatureSource { pixels, sparse, pca, nmf };
enum class ClusterMethod { kmeans, spectral };

const char* to_string(FeatureSource s);
const char* to_string(ClusterMethod m);
const char* to_string(TileReduction r);

struct PipelineConfig {
  std::filesystem::path data;
  std::optional<CubeFormat> format;  // inferred from the extension if unset
  std::filesystem::path labels;
  bool normalize = true;
  /// Train only on pixels with a nonzero ground-truth label.
  bool train_mask = true;

  TrainConfig train;  // atoms == 0 means twice the band count

  FeatureSource features = FeatureSource::sparse;
  std::filesystem::path dictionary;
  std::filesystem::path codes;
  int pca_components = 50;
  int nmf_components = 8;
  int nmf_iterations = 200;

  ClusterMethod method = ClusterMethod::spectral;
  int k_nn = 10;
  AffinityOptions affinity;
  int clusters = 0;  // 0: number of ground-truth classes
  int kmeans_restarts = 1;
  int kmeans_max_iter = 300;
  TileReduction reduce = TileReduction::mean;

  std::uint64_t seed = 0;
  std::filesystem::path out = ".";

  std::vector<int> grid_atoms;
  std::vector<int> grid_sparsity;

  /// Keys given explicitly (config file or overrides).
  std::set<std::string> explicit_keys;

  /// Applies each entry; unknown keys and bad values throw ParameterError.
  void apply(const ConfigMap& entries);
  bool is_set(const std::string& key) const { return explicit_keys.count(key) > 0; }

  static PipelineConfig from_map(const ConfigMap& entries);
};

/// Parses "3x3", "3 3" or "3,3".
TileSize parse_tile(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

}  // namespace hsic
