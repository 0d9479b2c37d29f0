#include "hsic/data_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include <zlib.h>

#include "hsic/error.hpp"
#include "hsic/npy.hpp"

namespace hsic {
namespace {

using Magic = std::array<unsigned char, 8>;

constexpr Magic kHsrawMagic = {'H', 'S', 'R', 'A', 'W', 0, 0, 1};
constexpr Magic kDictMagic = {'S', 'D', 'I', 'C', 'T', 0, 0, 1};
constexpr Magic kCodeMagic = {'S', 'C', 'O', 'D', 'E', 0, 0, 1};
constexpr Magic kDenseMagic = {'S', 'D', 'E', 'N', 'S', 0, 0, 1};

constexpr std::uint8_t kHasAccumulators = 0x1;
constexpr std::uint8_t kHasMetadata = 0x2;

class ByteWriter {
public:
  void put_magic(const Magic& m) { buf_.insert(buf_.end(), m.begin(), m.end()); }
  void put_u8(std::uint8_t v) { buf_.push_back(v); }
  void put_u32(std::uint32_t v) { put_le(v); }
  void put_u64(std::uint64_t v) { put_le(v); }
  void put_f64(double v) { put_le(std::bit_cast<std::uint64_t>(v)); }
  void put_string(const std::string& s) {
    put_u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void put_matrix(const Eigen::MatrixXd& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) put_f64(m(i, j));
  }
  void put_crc() { put_u32(bytes::crc32(buf_)); }

  void write_to(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(buf_.data()),
              static_cast<std::streamsize>(buf_.size()));
    if (!out) throw DataError("write failed: " + path.string());
  }

private:
  template <typename T>
  void put_le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
      buf_.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
  }

  std::vector<unsigned char> buf_;
};

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class ByteReader {
public:
  ByteReader(std::span<const unsigned char> data, std::string name)
      : data_(data), name_(std::move(name)) {}

  // Checks the magic; a mismatch only in the trailing version byte is
  // reported as a version error.
  void expect_magic(const Magic& m, const char* kind) {
    need(8);
    if (std::memcmp(data_.data(), m.data(), 7) != 0)
      throw FormatError(name_ + ": bad magic bytes, not a " + kind + " file");
    if (data_[7] != m[7])
      throw FormatError(name_ + ": unsupported " + kind + " version " +
                        std::to_string(data_[7]));
    pos_ = 8;
  }

  // Verifies and strips the trailing CRC32.
  void verify_crc() {
    if (data_.size() < 4) throw FormatError(name_ + ": truncated");
    const auto body = data_.first(data_.size() - 4);
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i)
      stored |= static_cast<std::uint32_t>(data_[body.size() + i]) << (8 * i);
    if (bytes::crc32(body) != stored)
      throw FormatError(name_ + ": checksum mismatch");
    data_ = body;
  }

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint32_t u32() { return get_le<std::uint32_t>(); }
  std::uint64_t u64() { return get_le<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }
  std::string string() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  Eigen::MatrixXd matrix(Eigen::Index rows, Eigen::Index cols) {
    need(static_cast<std::size_t>(rows * cols) * 8);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = f64();
    return m;
  }
  std::size_t remaining() const { return data_.size() - pos_; }
  void expect_end() const {
    if (pos_ != data_.size())
      throw FormatError(name_ + ": " + std::to_string(remaining()) +
                        " unexpected trailing bytes");
  }
  const std::string& name() const { return name_; }

private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw FormatError(name_ + ": truncated");
  }
  template <typename T>
  T get_le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(data_[pos_ + i]) << (8 * i);
    pos_ += sizeof(T);
    return v;
  }

  std::span<const unsigned char> data_;
  std::size_t pos_ = 0;
  std::string name_;
};

void check_finite(const std::vector<double>& data, const std::string& name) {
  for (std::size_t i = 0; i < data.size(); ++i)
    if (!std::isfinite(data[i]))
      throw DataError(name + ": non-finite value at index " + std::to_string(i));
}

}  // namespace

HsiCube::HsiCube(int rows, int cols, int bands, std::vector<double> data)
    : rows_(rows), cols_(cols), bands_(bands), data_(std::move(data)) {
  if (rows <= 0 || cols <= 0 || bands <= 0)
    throw DataError("cube dimensions must be positive");
  const std::size_t expected = static_cast<std::size_t>(rows) *
                               static_cast<std::size_t>(cols) *
                               static_cast<std::size_t>(bands);
  if (data_.size() != expected)
    throw DataError("cube is " + std::to_string(rows) + "x" +
                    std::to_string(cols) + "x" + std::to_string(bands) +
                    " but holds " + std::to_string(data_.size()) + " values");
  check_finite(data_, "cube");
}

int LabelMap::max_label() const {
  int best = 0;
  for (int v : labels) best = std::max(best, v);
  return best;
}

FlattenResult flatten(const HsiCube& cube, const LabelMap* gt, bool normalize) {
  if (gt && (gt->rows != cube.rows() || gt->cols != cube.cols()))
    throw DataError("label map is " + std::to_string(gt->rows) + "x" +
                    std::to_string(gt->cols) + " but cube is " +
                    std::to_string(cube.rows()) + "x" +
                    std::to_string(cube.cols()));

  FlattenResult out;
  std::vector<PixelCoord> kept;
  kept.reserve(cube.pixel_count());
  for (int r = 0; r < cube.rows(); ++r) {
    for (int c = 0; c < cube.cols(); ++c) {
      if (gt && gt->at(r, c) == 0) continue;
      if (normalize && cube.pixel(r, c).squaredNorm() == 0.0) {
        ++out.dropped_zero;
        continue;
      }
      kept.push_back({r, c});
    }
  }
  if (kept.empty()) throw DataError("flatten: no pixels selected");

  out.pixels.values.resize(cube.bands(), static_cast<Eigen::Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j) {
    auto col = out.pixels.values.col(static_cast<Eigen::Index>(j));
    col = cube.pixel(kept[j].row, kept[j].col);
    if (normalize) col /= col.norm();
    if (gt) out.truth.push_back(gt->at(kept[j].row, kept[j].col));
  }
  out.pixels.coords = std::move(kept);
  return out;
}

HsiCube normalize_pixels(const HsiCube& cube) {
  HsiCube out = cube;
  for (int r = 0; r < cube.rows(); ++r)
    for (int c = 0; c < cube.cols(); ++c) {
      auto p = out.pixel(r, c);
      const double norm = p.norm();
      if (norm > 0.0) p /= norm;
    }
  return out;
}

CubeFormat cube_format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".npy") return CubeFormat::npy;
  if (ext == ".hsraw") return CubeFormat::hsraw;
  throw ParameterError("cannot infer cube format from '" + path.string() +
                       "' (expected .npy or .hsraw)");
}

HsiCube load_cube(const std::filesystem::path& path, CubeFormat format) {
  if (format == CubeFormat::npy) {
    const npy::Array a = npy::read(path);
    if (a.shape.size() != 3)
      throw DataError(path.string() + ": expected a 3-D (rows, cols, bands) array");
    for (auto d : a.shape)
      if (d == 0 || d > 0x7fffffff)
        throw DataError(path.string() + ": invalid cube dimension");
    try {
      return HsiCube(static_cast<int>(a.shape[0]), static_cast<int>(a.shape[1]),
                     static_cast<int>(a.shape[2]), a.to_doubles());
    } catch (const DataError& e) {
      throw DataError(path.string() + ": " + e.what());
    }
  }

  const auto raw = read_file(path);
  ByteReader in(raw, path.string());
  in.expect_magic(kHsrawMagic, "hsraw");
  const std::uint32_t rows = in.u32();
  const std::uint32_t cols = in.u32();
  const std::uint32_t bands = in.u32();
  if (rows == 0 || cols == 0 || bands == 0 || rows > 0x7fffffff ||
      cols > 0x7fffffff || bands > 0x7fffffff)
    throw DataError(path.string() + ": invalid cube dimensions");
  const std::size_t expected = static_cast<std::size_t>(rows) * cols * bands;
  if (in.remaining() != expected * 8)
    throw DataError(path.string() + ": header declares " +
                    std::to_string(rows) + "x" + std::to_string(cols) + "x" +
                    std::to_string(bands) + " but payload holds " +
                    std::to_string(in.remaining() / 8) + " values");
  std::vector<double> data(expected);
  for (auto& v : data) v = in.f64();
  try {
    return HsiCube(static_cast<int>(rows), static_cast<int>(cols),
                   static_cast<int>(bands), std::move(data));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_cube(const HsiCube& cube, const std::filesystem::path& path,
               CubeFormat format) {
  if (format == CubeFormat::npy) {
    npy::write_f64(path,
                   {static_cast<std::size_t>(cube.rows()),
                    static_cast<std::size_t>(cube.cols()),
                    static_cast<std::size_t>(cube.bands())},
                   cube.data());
    return;
  }
  ByteWriter out;
  out.put_magic(kHsrawMagic);
  out.put_u32(static_cast<std::uint32_t>(cube.rows()));
  out.put_u32(static_cast<std::uint32_t>(cube.cols()));
  out.put_u32(static_cast<std::uint32_t>(cube.bands()));
  for (double v : cube.data()) out.put_f64(v);
  out.write_to(path);
}

LabelMap load_labels(const std::filesystem::path& path) {
  const npy::Array a = npy::read(path);
  if (a.shape.size() != 2 || a.shape[0] == 0 || a.shape[1] == 0)
    throw DataError(path.string() + ": expected a non-empty 2-D label array");
  LabelMap map;
  map.rows = static_cast<int>(a.shape[0]);
  map.cols = static_cast<int>(a.shape[1]);
  const auto values = a.to_integers();
  map.labels.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 0 || values[i] > 0x7fffffff)
      throw DataError(path.string() + ": invalid label " +
                      std::to_string(values[i]) + " at index " +
                      std::to_string(i));
    map.labels.push_back(static_cast<int>(values[i]));
  }
  return map;
}

void save_labels(const LabelMap& labels, const std::filesystem::path& path) {
  std::vector<std::int32_t> values(labels.labels.begin(), labels.labels.end());
  npy::write_i32(path,
                 {static_cast<std::size_t>(labels.rows),
                  static_cast<std::size_t>(labels.cols)},
                 values);
}

void save_dictionary(const DictionaryFile& file,
                     const std::filesystem::path& path) {
  const Eigen::MatrixXd& d = file.dictionary.atoms();
  ByteWriter out;
  out.put_magic(kDictMagic);
  out.put_u32(static_cast<std::uint32_t>(d.rows()));
  out.put_u32(static_cast<std::uint32_t>(d.cols()));
  out.put_matrix(d);

  std::uint8_t flags = 0;
  if (file.accumulators) flags |= kHasAccumulators;
  if (!file.metadata.empty()) flags |= kHasMetadata;
  out.put_u8(flags);
  if (file.accumulators) {
    const auto& acc = *file.accumulators;
    if (acc.a.rows() != d.cols() || acc.a.cols() != d.cols() ||
        acc.b.rows() != d.rows() || acc.b.cols() != d.cols())
      throw ParameterError("accumulator shapes do not match the dictionary");
    out.put_u64(acc.iterations);
    out.put_matrix(acc.a);
    out.put_matrix(acc.b);
  }
  if (!file.metadata.empty()) {
    out.put_u32(static_cast<std::uint32_t>(file.metadata.size()));
    for (const auto& [key, value] : file.metadata) {
      out.put_string(key);
      out.put_string(value);
    }
  }
  out.put_crc();
  out.write_to(path);
}

DictionaryFile load_dictionary(const std::filesystem::path& path) {
  const auto raw = read_file(path);
  ByteReader in(raw, path.string());
  in.expect_magic(kDictMagic, "SDICT");
  in.verify_crc();
  const std::uint32_t m = in.u32();
  const std::uint32_t k = in.u32();
  if (m == 0 || k == 0) throw FormatError(path.string() + ": empty dictionary");
  Eigen::MatrixXd atoms = in.matrix(m, k);

  std::optional<Accumulators> acc;
  std::map<std::string, std::string> metadata;
  const std::uint8_t flags = in.u8();
  if (flags & ~(kHasAccumulators | kHasMetadata))
    throw FormatError(path.string() + ": unknown flags");
  if (flags & kHasAccumulators) {
    Accumulators a;
    a.iterations = in.u64();
    a.a = in.matrix(k, k);
    a.b = in.matrix(m, k);
    acc = std::move(a);
  }
  if (flags & kHasMetadata) {
    const std::uint32_t count = in.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
      std::string key = in.string();
      metadata[key] = in.string();
    }
  }
  in.expect_end();

  try {
    return {Dictionary(std::move(atoms), false), std::move(acc),
            std::move(metadata)};
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_codes(const SparseCodeMatrix& codes,
                const std::filesystem::path& path) {
  ByteWriter out;
  out.put_magic(kCodeMagic);
  out.put_u32(static_cast<std::uint32_t>(codes.atom_count));
  out.put_u64(codes.columns.size());
  for (const auto& col : codes.columns) {
    out.put_u32(static_cast<std::uint32_t>(col.entries.size()));
    for (const auto& e : col.entries) {
      out.put_u32(static_cast<std::uint32_t>(e.index));
      out.put_f64(e.value);
    }
  }
  out.put_crc();
  out.write_to(path);
}

SparseCodeMatrix load_codes(const std::filesystem::path& path) {
  const auto raw = read_file(path);
  ByteReader in(raw, path.string());
  in.expect_magic(kCodeMagic, "SCODE");
  in.verify_crc();
  SparseCodeMatrix codes;
  const std::uint32_t k = in.u32();
  if (k > 0x7fffffff) throw FormatError(path.string() + ": corrupt atom count");
  codes.atom_count = static_cast<int>(k);
  const std::uint64_t n = in.u64();
  // Each column needs at least its 4-byte count.
  if (n > in.remaining() / 4)
    throw FormatError(path.string() + ": column count exceeds payload");
  codes.columns.resize(n);
  for (std::uint64_t j = 0; j < n; ++j) {
    auto& col = codes.columns[j];
    col.atom_count = codes.atom_count;
    const std::uint32_t count = in.u32();
    if (count > k)
      throw FormatError(path.string() + ": column " + std::to_string(j) +
                        " has more entries than atoms");
    std::set<std::uint32_t> seen;
    for (std::uint32_t e = 0; e < count; ++e) {
      const std::uint32_t idx = in.u32();
      const double value = in.f64();
      if (idx >= k)
        throw FormatError(path.string() + ": corrupt code, column " +
                          std::to_string(j) + " index " + std::to_string(idx) +
                          " >= k=" + std::to_string(k));
      if (!seen.insert(idx).second)
        throw FormatError(path.string() + ": corrupt code, column " +
                          std::to_string(j) + " repeats index " +
                          std::to_string(idx));
      col.entries.push_back({static_cast<int>(idx), value});
    }
    col.target_sparsity = static_cast<int>(count);
  }
  in.expect_end();
  return codes;
}

void save_dense(const Eigen::MatrixXd& matrix,
                const std::filesystem::path& path) {
  ByteWriter out;
  out.put_magic(kDenseMagic);
  out.put_u32(static_cast<std::uint32_t>(matrix.rows()));
  out.put_u64(static_cast<std::uint64_t>(matrix.cols()));
  out.put_matrix(matrix);
  out.put_crc();
  out.write_to(path);
}

Eigen::MatrixXd load_dense(const std::filesystem::path& path) {
  const auto raw = read_file(path);
  ByteReader in(raw, path.string());
  in.expect_magic(kDenseMagic, "SDENS");
  in.verify_crc();
  const std::uint32_t rows = in.u32();
  const std::uint64_t cols = in.u64();
  if (rows != 0 && cols > in.remaining() / (8 * static_cast<std::uint64_t>(rows)))
    throw FormatError(path.string() + ": size exceeds payload");
  Eigen::MatrixXd m = in.matrix(rows, static_cast<Eigen::Index>(cols));
  in.expect_end();
  return m;
}

void save_partition(std::span<const int> labels,
                    const std::filesystem::path& path) {
  std::vector<std::uint32_t> values;
  values.reserve(labels.size());
  for (int v : labels) {
    if (v < 0) throw ParameterError("partition labels must be non-negative");
    values.push_back(static_cast<std::uint32_t>(v));
  }
  npy::write_u32(path, {values.size()}, values);
}

std::vector<int> load_partition(const std::filesystem::path& path) {
  const npy::Array a = npy::read(path);
  if (a.shape.size() != 1)
    throw DataError(path.string() + ": expected a 1-D partition array");
  std::vector<int> out;
  for (auto v : a.to_integers()) {
    if (v < 0 || v > 0x7fffffff)
      throw DataError(path.string() + ": invalid cluster label");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

void save_coords(std::span<const PixelCoord> coords,
                 const std::filesystem::path& path) {
  std::vector<std::uint32_t> values;
  values.reserve(coords.size() * 2);
  for (const auto& c : coords) {
    values.push_back(static_cast<std::uint32_t>(c.row));
    values.push_back(static_cast<std::uint32_t>(c.col));
  }
  npy::write_u32(path, {coords.size(), 2}, values);
}

std::vector<PixelCoord> load_coords(const std::filesystem::path& path) {
  const npy::Array a = npy::read(path);
  if (a.shape.size() != 2 || a.shape[1] != 2)
    throw DataError(path.string() + ": expected an (n, 2) coordinate array");
  const auto v = a.to_integers();
  std::vector<PixelCoord> out(a.shape[0]);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (v[2 * i] < 0 || v[2 * i + 1] < 0 || v[2 * i] > 0x7fffffff ||
        v[2 * i + 1] > 0x7fffffff)
      throw DataError(path.string() + ": invalid coordinate");
    out[i] = {static_cast<int>(v[2 * i]), static_cast<int>(v[2 * i + 1])};
  }
  return out;
}

namespace bytes {

std::uint32_t crc32(std::span<const unsigned char> data) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  std::size_t pos = 0;
  while (pos < data.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(data.size() - pos, 1u << 30));
    crc = ::crc32(crc, data.data() + pos, chunk);
    pos += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace bytes

}  // namespace hsic
