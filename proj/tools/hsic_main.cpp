// hsic: hyperspectral pixel clustering pipeline.
//
// Every subcommand accepts --config FILE (flat key = value), --seed N and
// --out DIR. Flags override config entries. Exit codes: 0 success,
// 2 configuration error, 3 data error, 4 numeric error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hsic/config.hpp"
#include "hsic/error.hpp"
#include "hsic/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 1;

// Flag values destined for the config map, keyed by config key.
struct Overrides {
  std::map<std::string, std::string> values;
  std::map<std::string, const CLI::Option*> options;
  std::string config_file;

  void flag(CLI::App* app, const std::string& name, const std::string& key,
            const std::string& help) {
    options[key] = app->add_option(name, values[key], help);
  }

  hsic::PipelineConfig resolve() const {
    hsic::ConfigMap file;
    if (!config_file.empty()) file = hsic::load_config(config_file);
    hsic::PipelineConfig cfg = hsic::PipelineConfig::from_map(file);
    hsic::ConfigMap flags;
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) flags[key] = values.at(key);
    cfg.apply(flags);
    return cfg;
  }
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_file, "Config file (key = value)");
  o.flag(app, "--seed", "seed", "Random seed");
  o.flag(app, "--out", "out", "Output directory");
}

void add_data(CLI::App* app, Overrides& o) {
  o.flag(app, "--data", "data", "Cube file (.npy or .hsraw)");
  o.flag(app, "--format", "format", "Cube format: npy | hsraw");
  o.flag(app, "--labels", "labels", "Ground-truth label map (.npy)");
  o.flag(app, "--normalize", "normalize", "Scale pixels to unit norm (true | false)");
}

void add_training(CLI::App* app, Overrides& o) {
  o.flag(app, "--atoms", "atoms", "Dictionary size k (default 2 x bands)");
  o.flag(app, "--sparsity", "sparsity", "Nonzeros per code s");
  o.flag(app, "--iterations", "iterations", "Online iterations T");
  o.flag(app, "--batch-size", "batch_size", "Samples per online step");
  o.flag(app, "--lambda", "lambda", "Recorded l1 weight");
  o.flag(app, "--train-mask", "train_mask", "Train on labeled pixels only (true | false)");
}

// --tile takes two integers; it is stored as "p x q".
void add_tile(CLI::App* app, std::vector<int>& tile) {
  app->add_option("--tile", tile, "Joint-sparse tile size p q (odd)")->expected(2);
}

void apply_tile(const std::vector<int>& tile, hsic::PipelineConfig& cfg) {
  if (tile.empty()) return;
  cfg.apply({{"tile", std::to_string(tile[0]) + "x" + std::to_string(tile[1])}});
}

void print_report(const hsic::ClusterOutcome& c) {
  std::cout << "clusters " << c.partition.clusters << ", pixels " << c.partition.labels.size();
  if (c.score) std::cout << ", ami " << c.score->ami;
  std::cout << "\nwrote " << c.labels_path.string() << "\n";
}

int run(int argc, char** argv) {
  CLI::App app{"Hyperspectral pixel clustering with learned sparse codes"};
  app.require_subcommand(1);

  Overrides train_o, encode_o, cluster_o, grid_o;
  std::vector<int> train_tile, cluster_tile, grid_tile;

  auto* train = app.add_subcommand("train", "Learn a dictionary with online updates");
  add_common(train, train_o);
  add_data(train, train_o);
  add_training(train, train_o);
  add_tile(train, train_tile);

  auto* encode = app.add_subcommand("encode", "Sparse-code every retained pixel");
  add_common(encode, encode_o);
  add_data(encode, encode_o);
  encode_o.flag(encode, "--dict", "dictionary", "Dictionary file (.sdict)");
  encode_o.flag(encode, "--sparsity", "sparsity", "Nonzeros per code s");

  auto* cluster = app.add_subcommand("cluster", "Cluster pixel features");
  add_common(cluster, cluster_o);
  add_data(cluster, cluster_o);
  cluster_o.flag(cluster, "--features", "features", "pixels | sparse | pca | nmf");
  cluster_o.flag(cluster, "--method", "method", "kmeans | spectral");
  cluster_o.flag(cluster, "--dict", "dictionary", "Dictionary for sparse features");
  cluster_o.flag(cluster, "--codes", "codes", "Precomputed codes (.scode)");
  cluster_o.flag(cluster, "--sparsity", "sparsity", "Nonzeros per code s");
  cluster_o.flag(cluster, "--clusters", "clusters", "Cluster count (default: ground-truth classes)");
  cluster_o.flag(cluster, "--knn", "knn", "Neighbours in the affinity graph");
  cluster_o.flag(cluster, "--affinity", "affinity", "binary | gaussian");
  cluster_o.flag(cluster, "--sigma", "sigma", "Gaussian affinity width");
  cluster_o.flag(cluster, "--reduce", "reduce", "Tile code reduction: mean | center");
  cluster_o.flag(cluster, "--pca-components", "pca_components", "PCA components");
  cluster_o.flag(cluster, "--nmf-components", "nmf_components", "NMF components");
  cluster_o.flag(cluster, "--nmf-iterations", "nmf_iterations", "NMF iterations");
  cluster_o.flag(cluster, "--restarts", "restarts", "k-means restarts");
  cluster_o.flag(cluster, "--max-iter", "max_iter", "k-means iteration cap");
  add_tile(cluster, cluster_tile);

  auto* grid = app.add_subcommand("grid", "Train, encode and cluster over (k, s) lists");
  add_common(grid, grid_o);
  add_data(grid, grid_o);
  add_training(grid, grid_o);
  grid_o.flag(grid, "--grid-atoms", "grid_atoms", "Atom counts, e.g. [220, 306, 408]");
  grid_o.flag(grid, "--grid-sparsity", "grid_sparsity", "Sparsities, e.g. [10, 5, 2]");
  grid_o.flag(grid, "--method", "method", "kmeans | spectral");
  grid_o.flag(grid, "--knn", "knn", "Neighbours in the affinity graph");
  grid_o.flag(grid, "--clusters", "clusters", "Cluster count");
  grid_o.flag(grid, "--reduce", "reduce", "Tile code reduction: mean | center");
  add_tile(grid, grid_tile);

  std::string eval_labels, eval_gt, eval_coords;
  auto* evaluate = app.add_subcommand("evaluate", "Score a partition against ground truth (JSON)");
  evaluate->add_option("--partition", eval_labels, "Partition (.npy)")->required();
  evaluate->add_option("--gt", eval_gt, "Ground-truth label map (.npy)")->required();
  evaluate->add_option("--coords", eval_coords, "Pixel coordinates (.npy)");
  std::string eval_config, eval_out, eval_seed;
  evaluate->add_option("--config", eval_config, "Unused; accepted for uniformity");
  evaluate->add_option("--seed", eval_seed, "Unused; accepted for uniformity");
  evaluate->add_option("--out", eval_out, "Also write metrics.json here");

  std::string render_labels, render_coords, render_png, render_out, render_config, render_seed;
  int render_rows = 0, render_cols = 0;
  auto* render = app.add_subcommand("render", "Draw a partition as a PNG cluster map");
  render->add_option("--partition", render_labels, "Partition (.npy)")->required();
  render->add_option("--coords", render_coords, "Pixel coordinates (default: beside partition)");
  render->add_option("--rows", render_rows, "Image rows (default: from summary.json)");
  render->add_option("--cols", render_cols, "Image columns (default: from summary.json)");
  render->add_option("--png", render_png, "Output file (default: OUT/map.png)");
  render->add_option("--out", render_out, "Output directory");
  render->add_option("--config", render_config, "Unused; accepted for uniformity");
  render->add_option("--seed", render_seed, "Unused; accepted for uniformity");

  std::string convert_in, convert_to, convert_config, convert_seed, convert_out;
  auto* convert = app.add_subcommand("convert", "Convert a cube between .npy and .hsraw");
  convert->add_option("input", convert_in, "Source cube")->required();
  convert->add_option("output", convert_to, "Destination cube")->required();
  convert->add_option("--config", convert_config, "Unused; accepted for uniformity");
  convert->add_option("--seed", convert_seed, "Unused; accepted for uniformity");
  convert->add_option("--out", convert_out, "Directory for a relative output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (train->parsed()) {
    hsic::PipelineConfig cfg = train_o.resolve();
    apply_tile(train_tile, cfg);
    const hsic::TrainOutcome t = hsic::run_train(cfg);
    std::cout << "trained " << t.atoms << " atoms on " << t.samples << " samples\n"
              << "final mean residual " << t.final_mean_residual << "\n"
              << "wrote " << t.dictionary_path.string() << "\n";
  } else if (encode->parsed()) {
    const hsic::EncodeOutcome e = hsic::run_encode(encode_o.resolve());
    std::cout << "encoded " << e.pixels << " pixels at sparsity " << e.sparsity << "\n"
              << "mean reconstruction error " << e.mean_error << "\n"
              << "wrote " << e.codes_path.string() << "\n";
  } else if (cluster->parsed()) {
    hsic::PipelineConfig cfg = cluster_o.resolve();
    apply_tile(cluster_tile, cfg);
    print_report(hsic::run_cluster(cfg));
  } else if (grid->parsed()) {
    hsic::PipelineConfig cfg = grid_o.resolve();
    apply_tile(grid_tile, cfg);
    const hsic::GridOutcome g = hsic::run_grid(cfg);
    for (const hsic::GridCell& c : g.cells) {
      std::cout << "k=" << c.atoms << " s=" << c.sparsity << ": ";
      if (!c.ok) std::cout << "failed: " << c.error << "\n";
      else if (c.ami) std::cout << "ami " << *c.ami << "\n";
      else std::cout << "ok\n";
    }
    std::cout << "wrote " << g.table_path.string() << "\n";
  } else if (evaluate->parsed()) {
    std::optional<fs::path> coords;
    if (!eval_coords.empty()) coords = eval_coords;
    const std::string json =
        hsic::ami_report_json(hsic::run_evaluate(eval_labels, eval_gt, coords));
    std::cout << json << "\n";
    if (!eval_out.empty()) {
      fs::create_directories(eval_out);
      std::ofstream(fs::path(eval_out) / "metrics.json") << json << "\n";
    }
  } else if (render->parsed()) {
    const fs::path part = render_labels;
    const fs::path coords =
        render_coords.empty() ? part.parent_path() / "coords.npy" : fs::path(render_coords);
    fs::path png = render_png;
    if (png.empty()) png = (render_out.empty() ? fs::path(".") : fs::path(render_out)) / "map.png";
    hsic::run_render(part, coords, render_rows, render_cols, png);
    std::cout << "wrote " << png.string() << "\n";
  } else if (convert->parsed()) {
    fs::path target = convert_to;
    if (!convert_out.empty() && target.is_relative()) target = fs::path(convert_out) / target;
    hsic::run_convert(convert_in, target);
    std::cout << "wrote " << target.string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const hsic::Error& e) {
    std::cerr << "hsic: " << e.what() << "\n";
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    std::cerr << "hsic: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "hsic: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
