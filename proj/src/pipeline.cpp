#include "hsic/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hsic/baselines.hpp"
#include "hsic/dictionary.hpp"
#include "hsic/error.hpp"
#include "hsic/pursuit.hpp"
#include "hsic/render.hpp"

namespace hsic {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kResidualWindow = 100;

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

FlattenResult select_pixels(const Dataset& ds, const PipelineConfig& cfg, bool masked) {
  const LabelMap* gt = masked && ds.labels ? &*ds.labels : nullptr;
  return flatten(ds.cube, gt, cfg.normalize);
}

int resolve_sparsity(const PipelineConfig& cfg, const DictionaryFile& file) {
  if (cfg.is_set("sparsity")) return cfg.train.sparsity;
  const auto it = file.metadata.find("sparsity");
  if (it == file.metadata.end()) return cfg.train.sparsity;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw FormatError("dictionary metadata has an invalid sparsity '" + it->second + "'");
  }
}

std::optional<TileSize> resolve_tile(const PipelineConfig& cfg, const DictionaryFile* file) {
  if (cfg.is_set("tile") || !file) return cfg.train.tile;
  const auto it = file->metadata.find("tile");
  if (it == file->metadata.end() || it->second.empty() || it->second == "none")
    return std::nullopt;
  return parse_tile(it->second);
}

int resolve_clusters(const PipelineConfig& cfg, std::span<const int> truth) {
  if (cfg.clusters > 0) return cfg.clusters;
  if (cfg.is_set("clusters"))
    throw ParameterError("clusters must be positive, got " + std::to_string(cfg.clusters));
  if (truth.empty())
    throw ParameterError("cluster count needs either 'clusters' or a label map");
  std::vector<int> distinct(truth.begin(), truth.end());
  std::sort(distinct.begin(), distinct.end());
  return static_cast<int>(std::unique(distinct.begin(), distinct.end()) - distinct.begin());
}

struct Features {
  Eigen::MatrixXd matrix;
  std::vector<PixelCoord> coords;
  std::vector<int> truth;
  json info = json::object();
};

Features sparse_features(const PipelineConfig& cfg, const Dataset& ds,
                         const FlattenResult& flat) {
  Features f;
  f.coords = flat.pixels.coords;
  f.truth = flat.truth;

  if (!cfg.codes.empty()) {
    const SparseCodeMatrix codes = load_codes(cfg.codes);
    if (codes.size() != static_cast<std::size_t>(flat.pixels.n()))
      throw DataError("codes file holds " + std::to_string(codes.size()) +
                      " columns but " + std::to_string(flat.pixels.n()) +
                      " pixels are selected");
    f.matrix = codes.dense();
    f.info["codes"] = cfg.codes.string();
    return f;
  }
  if (cfg.dictionary.empty())
    throw ParameterError("sparse features need a dictionary or a codes file");

  const DictionaryFile file = load_dictionary(cfg.dictionary);
  const Dictionary& dict = file.dictionary;
  if (dict.signal_dim() != ds.cube.bands())
    throw DataError("dictionary has " + std::to_string(dict.signal_dim()) +
                    " rows but the cube has " + std::to_string(ds.cube.bands()) + " bands");
  const int s = resolve_sparsity(cfg, file);
  f.info["dictionary"] = cfg.dictionary.string();
  f.info["sparsity"] = s;

  const std::optional<TileSize> tile = resolve_tile(cfg, &file);
  if (!tile) {
    f.matrix = encode_all(dict, flat.pixels, s).dense();
    return f;
  }

  const HsiCube source = cfg.normalize ? normalize_pixels(ds.cube) : ds.cube;
  const std::vector<TileCode> codes = jsr_encode(dict, source, *tile, s);
  const ReducedCodes reduced = reduce_tile_codes(codes, cfg.reduce);
  std::map<PixelCoord, Eigen::Index> column;
  for (std::size_t i = 0; i < reduced.coords.size(); ++i)
    column.emplace(reduced.coords[i], static_cast<Eigen::Index>(i));

  // Keep the selected pixels that are tile centers (the border has none).
  std::vector<Eigen::Index> keep;
  f.coords.clear();
  f.truth.clear();
  for (std::size_t i = 0; i < flat.pixels.coords.size(); ++i) {
    const auto it = column.find(flat.pixels.coords[i]);
    if (it == column.end()) continue;
    keep.push_back(it->second);
    f.coords.push_back(flat.pixels.coords[i]);
    if (!flat.truth.empty()) f.truth.push_back(flat.truth[i]);
  }
  if (keep.empty()) throw DataError("no selected pixel is the center of a full tile");
  f.matrix.resize(reduced.features.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j)
    f.matrix.col(static_cast<Eigen::Index>(j)) = reduced.features.col(keep[j]);
  f.info["tile"] = std::to_string(tile->rows) + "x" + std::to_string(tile->cols);
  f.info["reduce"] = to_string(cfg.reduce);
  return f;
}

Features build_features(const PipelineConfig& cfg, const Dataset& ds) {
  const FlattenResult flat = select_pixels(ds, cfg, true);
  if (cfg.features == FeatureSource::sparse) return sparse_features(cfg, ds, flat);

  Features f;
  f.coords = flat.pixels.coords;
  f.truth = flat.truth;
  switch (cfg.features) {
    case FeatureSource::pixels:
      f.matrix = flat.pixels.values;
      break;
    case FeatureSource::pca: {
      const PcaModel model = pca_fit(flat.pixels.values, cfg.pca_components);
      f.matrix = pca_transform(model, flat.pixels.values);
      f.info["components"] = cfg.pca_components;
      break;
    }
    case FeatureSource::nmf: {
      const NmfModel model =
          nmf_fit(flat.pixels.values, cfg.nmf_components, cfg.nmf_iterations, cfg.seed);
      f.matrix = model.h;
      f.info["components"] = cfg.nmf_components;
      f.info["iterations"] = cfg.nmf_iterations;
      f.info["objective"] = model.objective;
      break;
    }
    case FeatureSource::sparse:
      break;
  }
  return f;
}

json report_to_json(const AmiReport& r) {
  return json{{"ami", r.ami},
              {"mi", r.mi},
              {"entropy_g", r.entropy_truth},
              {"entropy_l", r.entropy_predicted},
              {"emi", r.emi},
              {"n", r.n},
              {"clusters_g", r.clusters_truth},
              {"clusters_l", r.clusters_predicted}};
}

}  // namespace

Dataset load_dataset(const PipelineConfig& cfg) {
  if (cfg.data.empty()) throw ParameterError("no data path configured");
  Dataset ds;
  const CubeFormat format = cfg.format ? *cfg.format : cube_format_from_path(cfg.data);
  ds.cube = load_cube(cfg.data, format);
  if (!cfg.labels.empty()) {
    LabelMap gt = load_labels(cfg.labels);
    if (gt.rows != ds.cube.rows() || gt.cols != ds.cube.cols())
      throw DataError("label map is " + std::to_string(gt.rows) + "x" +
                      std::to_string(gt.cols) + " but the cube is " +
                      std::to_string(ds.cube.rows()) + "x" + std::to_string(ds.cube.cols()));
    ds.labels = std::move(gt);
  }
  return ds;
}

TrainOutcome run_train(const PipelineConfig& cfg) {
  const Dataset ds = load_dataset(cfg);
  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  if (tc.atoms == 0) tc.atoms = suggest_atom_count(ds.cube.bands());

  TrainOutcome out;
  TrainResult result;
  if (tc.tile) {
    result = jsr_train(cfg.normalize ? normalize_pixels(ds.cube) : ds.cube, tc);
    out.samples = ds.cube.pixel_count();
  } else {
    const FlattenResult flat = select_pixels(ds, cfg, cfg.train_mask);
    out.samples = static_cast<std::size_t>(flat.pixels.n());
    result = train(flat.pixels, tc);
  }

  ensure_dir(cfg.out);
  out.dictionary_path = cfg.out / "dictionary.sdict";
  out.trace_path = cfg.out / "trace.csv";
  save_dictionary(to_dictionary_file(result.state, tc), out.dictionary_path);

  std::string csv = "iteration,residual_norm\n";
  for (std::size_t t = 0; t < result.trace.size(); ++t)
    csv += std::to_string(t + 1) + "," + format_double(result.trace[t]) + "\n";
  write_text(out.trace_path, csv);

  out.atoms = tc.atoms;
  const std::size_t window = std::min(kResidualWindow, result.trace.size());
  if (window > 0) {
    double sum = 0.0;
    for (std::size_t t = result.trace.size() - window; t < result.trace.size(); ++t)
      sum += result.trace[t];
    out.final_mean_residual = sum / static_cast<double>(window);
  }
  return out;
}

EncodeOutcome run_encode(const PipelineConfig& cfg) {
  if (cfg.dictionary.empty()) throw ParameterError("encode needs a dictionary");
  const Dataset ds = load_dataset(cfg);
  const DictionaryFile file = load_dictionary(cfg.dictionary);
  if (file.dictionary.signal_dim() != ds.cube.bands())
    throw DataError("dictionary has " + std::to_string(file.dictionary.signal_dim()) +
                    " rows but the cube has " + std::to_string(ds.cube.bands()) + " bands");
  const FlattenResult flat = select_pixels(ds, cfg, true);

  EncodeOutcome out;
  out.sparsity = resolve_sparsity(cfg, file);
  const SparseCodeMatrix codes = encode_all(file.dictionary, flat.pixels, out.sparsity);
  out.pixels = codes.size();
  double sum = 0.0;
  for (const SparseCode& c : codes.columns) sum += c.residual_norm;
  out.mean_error = out.pixels ? sum / static_cast<double>(out.pixels) : 0.0;

  ensure_dir(cfg.out);
  out.codes_path = cfg.out / "codes.scode";
  out.coords_path = cfg.out / "coords.npy";
  save_codes(codes, out.codes_path);
  save_coords(flat.pixels.coords, out.coords_path);
  return out;
}

ClusterOutcome run_cluster(const PipelineConfig& cfg) {
  const Dataset ds = load_dataset(cfg);
  Features f = build_features(cfg, ds);
  const int c = resolve_clusters(cfg, f.truth);

  ClusterOutcome out;
  const KMeansOptions km{cfg.kmeans_max_iter, cfg.kmeans_restarts};
  if (cfg.method == ClusterMethod::kmeans) {
    out.partition = kmeans(f.matrix, c, cfg.seed, km).partition;
  } else {
    SpectralOptions so;
    so.k_nn = cfg.k_nn;
    so.affinity = cfg.affinity;
    so.eigen.seed = cfg.seed;
    so.kmeans = km;
    out.partition = spectral_cluster(f.matrix, c, cfg.seed, so);
  }
  out.coords = std::move(f.coords);
  if (!f.truth.empty()) out.score = ami_report(f.truth, out.partition.labels);

  json summary{{"features", to_string(cfg.features)},
               {"method", to_string(cfg.method)},
               {"clusters", c},
               {"n", out.partition.labels.size()},
               {"seed", cfg.seed},
               {"image_rows", ds.cube.rows()},
               {"image_cols", ds.cube.cols()},
               {"feature_dim", f.matrix.rows()},
               {"feature_info", f.info}};
  if (cfg.method == ClusterMethod::spectral) summary["knn"] = cfg.k_nn;
  if (out.score) {
    summary["ami"] = out.score->ami;
    summary["metrics"] = report_to_json(*out.score);
  }
  out.summary_json = summary.dump(2) + "\n";

  ensure_dir(cfg.out);
  out.labels_path = cfg.out / "labels.npy";
  out.coords_path = cfg.out / "coords.npy";
  out.summary_path = cfg.out / "summary.json";
  save_partition(out.partition.labels, out.labels_path);
  save_coords(out.coords, out.coords_path);
  write_text(out.summary_path, out.summary_json);
  return out;
}

AmiReport evaluate_partition(std::span<const int> predicted,
                             std::span<const PixelCoord> coords, const LabelMap& truth) {
  if (predicted.size() != coords.size())
    throw DataError("partition has " + std::to_string(predicted.size()) +
                    " labels but " + std::to_string(coords.size()) + " coordinates");
  std::vector<int> g;
  std::vector<int> l;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const PixelCoord& p = coords[i];
    if (p.row < 0 || p.row >= truth.rows || p.col < 0 || p.col >= truth.cols)
      throw DataError("coordinate (" + std::to_string(p.row) + ", " +
                      std::to_string(p.col) + ") lies outside the label map");
    const int label = truth.at(p.row, p.col);
    if (label == 0) continue;
    g.push_back(label);
    l.push_back(predicted[i]);
  }
  if (g.empty()) throw DataError("no labeled pixels to evaluate");
  return ami_report(g, l);
}

AmiReport run_evaluate(const fs::path& partition, const fs::path& ground_truth,
                       const std::optional<fs::path>& coords) {
  const std::vector<int> predicted = load_partition(partition);
  const LabelMap truth = load_labels(ground_truth);
  if (coords) return evaluate_partition(predicted, load_coords(*coords), truth);

  std::vector<PixelCoord> implied;
  for (int r = 0; r < truth.rows; ++r)
    for (int c = 0; c < truth.cols; ++c)
      if (truth.at(r, c) != 0) implied.push_back({r, c});
  if (implied.size() != predicted.size())
    throw DataError("partition has " + std::to_string(predicted.size()) +
                    " labels but the label map has " + std::to_string(implied.size()) +
                    " labeled pixels");
  return evaluate_partition(predicted, implied, truth);
}

std::string ami_report_json(const AmiReport& report) {
  return report_to_json(report).dump(2);
}

GridOutcome run_grid(const PipelineConfig& cfg) {
  if (cfg.grid_atoms.empty() || cfg.grid_sparsity.empty())
    throw ParameterError("grid needs nonempty grid_atoms and grid_sparsity lists");
  ensure_dir(cfg.out);
  const Dataset ds = load_dataset(cfg);

  GridOutcome out;
  std::vector<RgbImage> maps;
  std::uint64_t index = 0;
  for (int atoms : cfg.grid_atoms)
    for (int sparsity : cfg.grid_sparsity) {
      GridCell cell;
      cell.atoms = atoms;
      cell.sparsity = sparsity;
      cell.seed = cfg.seed + index++;
      cell.directory = cfg.out / ("k" + std::to_string(atoms) + "_s" + std::to_string(sparsity));

      PipelineConfig c = cfg;
      c.train.atoms = atoms;
      c.train.sparsity = sparsity;
      c.seed = cell.seed;
      c.train.seed = cell.seed;
      c.out = cell.directory;
      c.features = FeatureSource::sparse;
      c.explicit_keys.insert("sparsity");
      RgbImage map;
      try {
        const TrainOutcome t = run_train(c);
        c.dictionary = t.dictionary_path;
        if (c.train.tile) {
          c.codes.clear();
        } else {
          c.codes = run_encode(c).codes_path;
        }
        const ClusterOutcome k = run_cluster(c);
        if (k.score) cell.ami = k.score->ami;
        map = render_partition(k.partition.labels, k.coords, ds.cube.rows(), ds.cube.cols());
        write_png(map, cell.directory / "map.png");
        cell.ok = true;
      } catch (const Error& e) {
        cell.error = e.what();
      }
      maps.push_back(std::move(map));
      out.cells.push_back(std::move(cell));
    }

  std::string csv = "atoms,sparsity,seed,ami,status\n";
  for (const GridCell& cell : out.cells) {
    std::string status = cell.ok ? "ok" : cell.error;
    std::replace(status.begin(), status.end(), ',', ';');
    std::replace(status.begin(), status.end(), '\n', ' ');
    csv += std::to_string(cell.atoms) + "," + std::to_string(cell.sparsity) + "," +
           std::to_string(cell.seed) + "," + (cell.ami ? format_double(*cell.ami) : "") +
           "," + (cell.ok ? "ok" : "failed: " + status) + "\n";
  }
  out.table_path = cfg.out / "grid.csv";
  out.montage_path = cfg.out / "grid.png";
  write_text(out.table_path, csv);
  write_png(montage(maps, static_cast<int>(cfg.grid_atoms.size()),
                    static_cast<int>(cfg.grid_sparsity.size())),
            out.montage_path);
  return out;
}

void run_render(const fs::path& partition, const fs::path& coords, int rows, int cols,
                const fs::path& png) {
  const std::vector<int> labels = load_partition(partition);
  const std::vector<PixelCoord> where = load_coords(coords);
  if (rows <= 0 || cols <= 0) {
    const fs::path summary = partition.parent_path() / "summary.json";
    if (!fs::exists(summary))
      throw ParameterError("render needs --rows and --cols (no summary.json beside the partition)");
    try {
      const json s = json::parse(read_text(summary));
      rows = s.at("image_rows").get<int>();
      cols = s.at("image_cols").get<int>();
    } catch (const json::exception& e) {
      throw DataError("cannot read image size from " + summary.string() + ": " + e.what());
    }
  }
  if (!png.parent_path().empty()) ensure_dir(png.parent_path());
  write_png(render_partition(labels, where, rows, cols), png);
}

void run_convert(const fs::path& input, const fs::path& output) {
  const HsiCube cube = load_cube(input, cube_format_from_path(input));
  if (!output.parent_path().empty()) ensure_dir(output.parent_path());
  save_cube(cube, output, cube_format_from_path(output));
}

}  // namespace hsic
