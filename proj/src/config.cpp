#include "hsic/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "hsic/error.hpp"

namespace hsic {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw ParameterError("config: invalid value '" + text + "' for " + key);
  return value;
}

int parse_int(const std::string& key, const std::string& text) {
  return parse_number<int>(key, text);
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ParameterError("config: invalid boolean '" + text + "' for " + key);
}

}  // namespace

ConfigMap parse_config(const std::string& text) {
  ConfigMap out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParameterError("config line " + std::to_string(number) +
                           ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ParameterError("config line " + std::to_string(number) + ": empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (!out.emplace(key, value).second)
      throw ParameterError("config line " + std::to_string(number) +
                           ": duplicate key '" + key + "'");
  }
  return out;
}

ConfigMap load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

const char* to_string(FeatureSource s) {
  switch (s) {
    case FeatureSource::pixels: return "pixels";
    case FeatureSource::sparse: return "sparse";
    case FeatureSource::pca: return "pca";
    case FeatureSource::nmf: return "nmf";
  }
  return "?";
}

const char* to_string(ClusterMethod m) {
  return m == ClusterMethod::kmeans ? "kmeans" : "spectral";
}

const char* to_string(TileReduction r) {
  return r == TileReduction::mean ? "mean" : "center";
}

TileSize parse_tile(const std::string& text) {
  std::string t = text;
  for (char& c : t)
    if (c == 'x' || c == 'X' || c == ',') c = ' ';
  std::istringstream in(t);
  TileSize size;
  std::string rest;
  if (!(in >> size.rows >> size.cols) || (in >> rest))
    throw ParameterError("invalid tile size '" + text + "'");
  if (size.rows < 1 || size.cols < 1 || size.rows % 2 == 0 || size.cols % 2 == 0)
    throw ParameterError("tile sides must be positive odd integers, got '" + text + "'");
  return size;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::string t = trim(text);
  if (!t.empty() && t.front() == '[') t.erase(t.begin());
  if (!t.empty() && t.back() == ']') t.pop_back();
  std::vector<int> out;
  std::string item;
  std::istringstream in(t);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_int("list", item));
  }
  if (out.empty()) throw ParameterError("empty list '" + text + "'");
  return out;
}

void PipelineConfig::apply(const ConfigMap& entries) {
  for (const auto& [key, value] : entries) {
    if (key == "data") data = value;
    else if (key == "format") {
      if (value == "npy") format = CubeFormat::npy;
      else if (value == "hsraw") format = CubeFormat::hsraw;
      else throw ParameterError("config: unknown format '" + value + "'");
    }
    else if (key == "labels") labels = value;
    else if (key == "normalize") normalize = parse_bool(key, value);
    else if (key == "train_mask") train_mask = parse_bool(key, value);
    else if (key == "atoms") train.atoms = parse_int(key, value);
    else if (key == "sparsity") train.sparsity = parse_int(key, value);
    else if (key == "iterations") train.iterations = parse_int(key, value);
    else if (key == "lambda") train.lambda = parse_number<double>(key, value);
    else if (key == "batch_size") train.batch_size = parse_int(key, value);
    else if (key == "tile") {
      if (value.empty() || value == "none") train.tile.reset();
      else train.tile = parse_tile(value);
    }
    else if (key == "features") {
      if (value == "pixels") features = FeatureSource::pixels;
      else if (value == "sparse") features = FeatureSource::sparse;
      else if (value == "pca") features = FeatureSource::pca;
      else if (value == "nmf") features = FeatureSource::nmf;
      else throw ParameterError("config: unknown feature source '" + value + "'");
    }
    else if (key == "dictionary") dictionary = value;
    else if (key == "codes") codes = value;
    else if (key == "pca_components") pca_components = parse_int(key, value);
    else if (key == "nmf_components") nmf_components = parse_int(key, value);
    else if (key == "nmf_iterations") nmf_iterations = parse_int(key, value);
    else if (key == "method") {
      if (value == "kmeans") method = ClusterMethod::kmeans;
      else if (value == "spectral") method = ClusterMethod::spectral;
      else throw ParameterError("config: unknown cluster method '" + value + "'");
    }
    else if (key == "knn") k_nn = parse_int(key, value);
    else if (key == "affinity") {
      if (value == "binary") affinity.weight = AffinityWeight::binary;
      else if (value == "gaussian") affinity.weight = AffinityWeight::gaussian;
      else throw ParameterError("config: unknown affinity '" + value + "'");
    }
    else if (key == "sigma") affinity.sigma = parse_number<double>(key, value);
    else if (key == "clusters") clusters = parse_int(key, value);
    else if (key == "restarts") kmeans_restarts = parse_int(key, value);
    else if (key == "max_iter") kmeans_max_iter = parse_int(key, value);
    else if (key == "reduce") {
      if (value == "mean") reduce = TileReduction::mean;
      else if (value == "center") reduce = TileReduction::center;
      else throw ParameterError("config: unknown tile reduction '" + value + "'");
    }
    else if (key == "seed") {
      seed = parse_number<std::uint64_t>(key, value);
      train.seed = seed;
    }
    else if (key == "out") out = value;
    else if (key == "grid_atoms") grid_atoms = parse_int_list(value);
    else if (key == "grid_sparsity") grid_sparsity = parse_int_list(value);
    else throw ParameterError("config: unknown key '" + key + "'");
    explicit_keys.insert(key);
  }
}

PipelineConfig PipelineConfig::from_map(const ConfigMap& entries) {
  PipelineConfig cfg;
  cfg.apply(entries);
  return cfg;
}

}  // namespace hsic
