#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "hsic/data_io.hpp"
#include "hsic/error.hpp"
#include "hsic/npy.hpp"
#include "oracles.hpp"

using namespace hsic;
namespace fs = std::filesystem;

namespace {

void write_bytes(const fs::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

// Recomputes the trailing CRC32 after a payload edit.
void reseal(std::vector<unsigned char>& bytes) {
  const std::size_t body = bytes.size() - 4;
  const std::uint32_t crc = bytes::crc32({bytes.data(), body});
  for (int i = 0; i < 4; ++i) bytes[body + i] = static_cast<unsigned char>(crc >> (8 * i));
}

void put_f64(std::vector<unsigned char>& bytes, std::size_t offset, double v) {
  std::memcpy(bytes.data() + offset, &v, sizeof v);
}

HsiCube ramp_cube(int rows, int cols, int bands) {
  std::vector<double> data(static_cast<std::size_t>(rows) * cols * bands);
  std::iota(data.begin(), data.end(), 0.0);
  return HsiCube(rows, cols, bands, std::move(data));
}

}  // namespace

TEST(HsiCube, RejectsSizeMismatch) {
  EXPECT_THROW(HsiCube(2, 2, 3, std::vector<double>(11)), DataError);
}

TEST(HsiCube, NonFiniteValueNamesIndex) {
  std::vector<double> data(12, 1.0);
  data[7] = std::numeric_limits<double>::quiet_NaN();
  try {
    HsiCube(2, 2, 3, data);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("7"), std::string::npos) << e.what();
  }
}

TEST(CubeIo, NpyRoundTripOfRamp) {
  const auto dir = oracle::scratch_dir("cube_ramp");
  save_cube(ramp_cube(2, 2, 3), dir / "c.npy", CubeFormat::npy);
  const HsiCube back = load_cube(dir / "c.npy", CubeFormat::npy);
  EXPECT_EQ(back.rows(), 2);
  EXPECT_EQ(back.cols(), 2);
  EXPECT_EQ(back.bands(), 3);
  for (int i = 0; i < 12; ++i) EXPECT_EQ(back.data()[static_cast<std::size_t>(i)], i);
}

TEST(CubeIo, RandomCubeRoundTripsBitwiseInBothFormats) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> normal;
  std::vector<double> data(5 * 4 * 8);
  for (double& v : data) v = normal(gen);
  const HsiCube cube(5, 4, 8, data);
  const auto dir = oracle::scratch_dir("cube_rt");
  for (CubeFormat f : {CubeFormat::npy, CubeFormat::hsraw}) {
    const fs::path p = dir / (f == CubeFormat::npy ? "c.npy" : "c.hsraw");
    save_cube(cube, p, f);
    const HsiCube back = load_cube(p, f);
    ASSERT_EQ(back.data().size(), data.size());
    EXPECT_EQ(std::memcmp(back.data().data(), data.data(), data.size() * sizeof(double)), 0);
  }
}

TEST(CubeIo, HsrawShortPayloadIsDataError) {
  const auto dir = oracle::scratch_dir("hsraw_short");
  save_cube(ramp_cube(2, 2, 3), dir / "c.hsraw", CubeFormat::hsraw);
  auto bytes = oracle::read_bytes(dir / "c.hsraw");
  bytes.resize(bytes.size() - 8);  // 11 values for a 2x2x3 header
  write_bytes(dir / "c.hsraw", bytes);
  EXPECT_THROW(load_cube(dir / "c.hsraw", CubeFormat::hsraw), DataError);
}

TEST(CubeIo, HsrawBadMagicIsFormatError) {
  const auto dir = oracle::scratch_dir("hsraw_magic");
  save_cube(ramp_cube(1, 1, 2), dir / "c.hsraw", CubeFormat::hsraw);
  auto bytes = oracle::read_bytes(dir / "c.hsraw");
  bytes[0] = 'X';
  write_bytes(dir / "c.hsraw", bytes);
  EXPECT_THROW(load_cube(dir / "c.hsraw", CubeFormat::hsraw), FormatError);
}

TEST(CubeIo, FormatFromExtension) {
  EXPECT_EQ(cube_format_from_path("a/b.npy"), CubeFormat::npy);
  EXPECT_EQ(cube_format_from_path("b.hsraw"), CubeFormat::hsraw);
  EXPECT_THROW(cube_format_from_path("b.mat"), ParameterError);
}

TEST(CubeIo, MissingFileIsDataError) {
  EXPECT_THROW(load_cube("/nonexistent/cube.npy", CubeFormat::npy), DataError);
}

TEST(Flatten, MaskKeepsLabeledPixelsOnly) {
  const HsiCube cube(2, 1, 2, {1.0, 2.0, 3.0, 4.0});
  const LabelMap gt{2, 1, {1, 0}};
  const FlattenResult f = flatten(cube, &gt, false);
  ASSERT_EQ(f.pixels.n(), 1);
  EXPECT_EQ(f.truth, std::vector<int>{1});
  EXPECT_EQ(f.pixels.values(0, 0), 1.0);
  EXPECT_EQ(f.pixels.values(1, 0), 2.0);
  EXPECT_EQ(f.pixels.coords[0], (PixelCoord{0, 0}));
}

TEST(Flatten, NormalizesToUnitNorm) {
  const HsiCube cube(1, 1, 2, {3.0, 4.0});
  const FlattenResult f = flatten(cube, nullptr, true);
  EXPECT_DOUBLE_EQ(f.pixels.values(0, 0), 0.6);
  EXPECT_DOUBLE_EQ(f.pixels.values(1, 0), 0.8);
}

TEST(Flatten, RowMajorOrderWithoutLabels) {
  const FlattenResult f = flatten(ramp_cube(3, 3, 5), nullptr, false);
  ASSERT_EQ(f.pixels.n(), 9);
  EXPECT_TRUE(f.truth.empty());
  for (int i = 0; i < 9; ++i) EXPECT_EQ(f.pixels.coords[static_cast<std::size_t>(i)], (PixelCoord{i / 3, i % 3}));
}

TEST(Flatten, AllMaskedIsError) {
  const LabelMap gt{1, 2, {0, 0}};
  EXPECT_THROW(flatten(ramp_cube(1, 2, 3), &gt, true), DataError);
}

TEST(Flatten, LabelSizeMismatchIsError) {
  const LabelMap gt{2, 2, {1, 1, 1, 1}};
  EXPECT_THROW(flatten(ramp_cube(1, 2, 3), &gt, true), DataError);
}

TEST(Flatten, ZeroPixelsDroppedOnlyWhenNormalizing) {
  const HsiCube cube(1, 3, 2, {1.0, 0.0, 0.0, 0.0, 0.0, 2.0});
  const FlattenResult normalized = flatten(cube, nullptr, true);
  EXPECT_EQ(normalized.pixels.n(), 2);
  EXPECT_EQ(normalized.dropped_zero, 1u);
  EXPECT_EQ(normalized.pixels.coords[1], (PixelCoord{0, 2}));
  EXPECT_EQ(flatten(cube, nullptr, false).pixels.n(), 3);
}

TEST(FlattenProperty, NeverEmitsLabelZeroAndColumnsAreUnitNorm) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> uni(0.0, 10.0);
  std::uniform_int_distribution<int> lab(0, 3);
  for (int trial = 0; trial < 25; ++trial) {
    const int rows = 2 + trial % 5, cols = 3 + trial % 4, bands = 1 + trial % 7;
    std::vector<double> data(static_cast<std::size_t>(rows) * cols * bands);
    for (double& v : data) v = uni(gen);
    LabelMap gt{rows, cols, std::vector<int>(static_cast<std::size_t>(rows) * cols)};
    for (int& l : gt.labels) l = lab(gen);
    gt.labels[0] = 1;
    const HsiCube cube(rows, cols, bands, data);
    const FlattenResult f = flatten(cube, &gt, true);
    for (int j = 0; j < f.pixels.n(); ++j) {
      EXPECT_NE(f.truth[static_cast<std::size_t>(j)], 0);
      EXPECT_NE(gt.at(f.pixels.coords[static_cast<std::size_t>(j)].row, f.pixels.coords[static_cast<std::size_t>(j)].col), 0);
      EXPECT_LE(std::abs(f.pixels.values.col(j).norm() - 1.0), 1e-12);
    }
  }
}

TEST(Labels, RoundTripAndMaxLabel) {
  const auto dir = oracle::scratch_dir("labels");
  const LabelMap gt{2, 3, {0, 1, 2, 3, 0, 16}};
  save_labels(gt, dir / "gt.npy");
  const LabelMap back = load_labels(dir / "gt.npy");
  EXPECT_EQ(back.rows, 2);
  EXPECT_EQ(back.cols, 3);
  EXPECT_EQ(back.labels, gt.labels);
  EXPECT_EQ(back.max_label(), 16);
}

TEST(Labels, NegativeLabelIsError) {
  const auto dir = oracle::scratch_dir("labels_neg");
  npy::write_i32(dir / "gt.npy", {1, 2}, {1, -1});
  EXPECT_THROW(load_labels(dir / "gt.npy"), DataError);
}

TEST(DictionaryFileIo, RoundTripsMatrixAccumulatorsAndMetadata) {
  const Eigen::MatrixXd atoms = oracle::random_unit_columns(8, 16, 5);
  Accumulators acc;
  acc.a = Eigen::MatrixXd::Random(16, 16);
  acc.b = Eigen::MatrixXd::Random(8, 16);
  acc.iterations = 1234;
  DictionaryFile file{Dictionary(atoms), acc, {{"seed", "7"}, {"tile", "3x3"}}};
  const auto dir = oracle::scratch_dir("dict_rt");
  save_dictionary(file, dir / "d.sdict");
  const DictionaryFile back = load_dictionary(dir / "d.sdict");
  EXPECT_EQ(back.dictionary.atoms(), atoms);
  ASSERT_TRUE(back.accumulators);
  EXPECT_EQ(back.accumulators->a, acc.a);
  EXPECT_EQ(back.accumulators->b, acc.b);
  EXPECT_EQ(back.accumulators->iterations, 1234u);
  EXPECT_EQ(back.metadata, file.metadata);
}

TEST(DictionaryFileIo, WithoutOptionalBlocks) {
  const auto dir = oracle::scratch_dir("dict_plain");
  save_dictionary({Dictionary(oracle::random_unit_columns(4, 6, 1)), std::nullopt, {}},
                  dir / "d.sdict");
  const DictionaryFile back = load_dictionary(dir / "d.sdict");
  EXPECT_FALSE(back.accumulators);
  EXPECT_TRUE(back.metadata.empty());
}

TEST(DictionaryFileIo, WrongMagicIsFormatError) {
  const auto dir = oracle::scratch_dir("dict_magic");
  save_dictionary({Dictionary(oracle::random_unit_columns(4, 6, 1)), std::nullopt, {}},
                  dir / "d.sdict");
  auto bytes = oracle::read_bytes(dir / "d.sdict");
  bytes[1] = 'X';
  write_bytes(dir / "d.sdict", bytes);
  try {
    load_dictionary(dir / "d.sdict");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("magic"), std::string::npos);
  }
}

TEST(DictionaryFileIo, VersionMismatchIsReported) {
  const auto dir = oracle::scratch_dir("dict_version");
  save_dictionary({Dictionary(oracle::random_unit_columns(4, 6, 1)), std::nullopt, {}},
                  dir / "d.sdict");
  auto bytes = oracle::read_bytes(dir / "d.sdict");
  bytes[7] = 2;
  write_bytes(dir / "d.sdict", bytes);
  try {
    load_dictionary(dir / "d.sdict");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
}

TEST(DictionaryFileIo, ChecksumFailure) {
  const auto dir = oracle::scratch_dir("dict_crc");
  save_dictionary({Dictionary(oracle::random_unit_columns(4, 6, 1)), std::nullopt, {}},
                  dir / "d.sdict");
  auto bytes = oracle::read_bytes(dir / "d.sdict");
  bytes[20] ^= 0x40;
  write_bytes(dir / "d.sdict", bytes);
  EXPECT_THROW(load_dictionary(dir / "d.sdict"), FormatError);
}

TEST(DictionaryFileIo, NonUnitColumnNamesIndex) {
  const auto dir = oracle::scratch_dir("dict_norm");
  const Eigen::MatrixXd atoms = oracle::random_unit_columns(4, 6, 2);
  save_dictionary({Dictionary(atoms), std::nullopt, {}}, dir / "d.sdict");
  auto bytes = oracle::read_bytes(dir / "d.sdict");
  // Header: 8 magic + u32 m + u32 k; column 3 starts at 16 + 3*4*8.
  for (int i = 0; i < 4; ++i) put_f64(bytes, 16 + (3 * 4 + i) * 8, 2.0 * atoms(i, 3));
  reseal(bytes);
  write_bytes(dir / "d.sdict", bytes);
  try {
    load_dictionary(dir / "d.sdict");
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("column 3"), std::string::npos) << e.what();
  }
}

TEST(DictionaryFileIo, TruncatedFileIsFormatError) {
  const auto dir = oracle::scratch_dir("dict_trunc");
  save_dictionary({Dictionary(oracle::random_unit_columns(4, 6, 1)), std::nullopt, {}},
                  dir / "d.sdict");
  auto bytes = oracle::read_bytes(dir / "d.sdict");
  bytes.resize(30);
  write_bytes(dir / "d.sdict", bytes);
  EXPECT_THROW(load_dictionary(dir / "d.sdict"), FormatError);
}

TEST(CodesIo, EmptyMatrixRoundTrips) {
  const auto dir = oracle::scratch_dir("codes_empty");
  SparseCodeMatrix codes;
  codes.atom_count = 5;
  save_codes(codes, dir / "c.scode");
  const SparseCodeMatrix back = load_codes(dir / "c.scode");
  EXPECT_EQ(back.atom_count, 5);
  EXPECT_EQ(back.size(), 0u);
}

TEST(CodesIo, RandomTwoSparseColumnsRoundTripExactly) {
  std::mt19937_64 gen(9);
  std::uniform_int_distribution<int> idx(0, 19);
  std::normal_distribution<double> normal;
  SparseCodeMatrix codes;
  codes.atom_count = 20;
  for (int j = 0; j < 50; ++j) {
    SparseCode c;
    c.atom_count = 20;
    const int a = idx(gen);
    int b = idx(gen);
    if (b == a) b = (a + 1) % 20;
    c.entries = {{a, normal(gen)}, {b, normal(gen)}};
    codes.columns.push_back(c);
  }
  const auto dir = oracle::scratch_dir("codes_rt");
  save_codes(codes, dir / "c.scode");
  const SparseCodeMatrix back = load_codes(dir / "c.scode");
  ASSERT_EQ(back.size(), codes.size());
  for (std::size_t j = 0; j < codes.size(); ++j)
    EXPECT_EQ(back.columns[j].entries, codes.columns[j].entries);
  EXPECT_EQ(back.dense(), codes.dense());
}

TEST(CodesIo, IndexOutOfRangeIsCorruption) {
  SparseCodeMatrix codes;
  codes.atom_count = 4;
  codes.columns.push_back({4, 1, {{4, 1.0}}, 0.0});
  const auto dir = oracle::scratch_dir("codes_range");
  save_codes(codes, dir / "c.scode");
  try {
    load_codes(dir / "c.scode");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("corrupt"), std::string::npos);
  }
}

TEST(CodesIo, DuplicateIndexIsCorruption) {
  SparseCodeMatrix codes;
  codes.atom_count = 4;
  codes.columns.push_back({4, 2, {{1, 1.0}, {1, 2.0}}, 0.0});
  const auto dir = oracle::scratch_dir("codes_dup");
  save_codes(codes, dir / "c.scode");
  EXPECT_THROW(load_codes(dir / "c.scode"), FormatError);
}

TEST(DenseIo, RoundTripsBitwise) {
  const Eigen::MatrixXd m = Eigen::MatrixXd::Random(7, 3);
  const auto dir = oracle::scratch_dir("dense");
  save_dense(m, dir / "f.sdens");
  EXPECT_EQ(load_dense(dir / "f.sdens"), m);
}

TEST(PartitionIo, LabelsAndCoordsRoundTrip) {
  const auto dir = oracle::scratch_dir("partition");
  const std::vector<int> labels{0, 3, 1, 1, 2};
  const std::vector<PixelCoord> coords{{0, 0}, {0, 4}, {2, 1}, {7, 7}, {9, 0}};
  save_partition(labels, dir / "l.npy");
  save_coords(coords, dir / "xy.npy");
  EXPECT_EQ(load_partition(dir / "l.npy"), labels);
  EXPECT_EQ(load_coords(dir / "xy.npy"), coords);
}
