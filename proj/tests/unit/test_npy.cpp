#include <cstring>
#include <fstream>

#include <gtest/gtest.h>

#include "hsic/error.hpp"
#include "hsic/npy.hpp"
#include "oracles.hpp"

using namespace hsic;
namespace fs = std::filesystem;

namespace {

// Hand-built v1.0 file: magic, version, u16 header length, padded header.
void write_npy(const fs::path& path, const std::string& dict, const std::string& payload,
               unsigned char major = 1) {
  std::string header = dict;
  const std::size_t prefix = major == 1 ? 10 : 12;
  while ((prefix + header.size() + 1) % 64 != 0) header += ' ';
  header += '\n';
  std::ofstream out(path, std::ios::binary);
  out.write("\x93NUMPY", 6);
  out.put(static_cast<char>(major));
  out.put(0);
  const auto len = static_cast<std::uint32_t>(header.size());
  out.put(static_cast<char>(len & 0xff));
  out.put(static_cast<char>((len >> 8) & 0xff));
  if (major != 1) {
    out.put(0);
    out.put(0);
  }
  out << header << payload;
}

template <typename T>
std::string raw(std::initializer_list<T> values) {
  std::string s;
  for (T v : values) s.append(reinterpret_cast<const char*>(&v), sizeof v);
  return s;
}

}  // namespace

TEST(NpyHeader, ParsesShapeAndDtype) {
  npy::DType dt;
  std::vector<std::size_t> shape;
  npy::parse_header("{'descr': '<f8', 'fortran_order': False, 'shape': (83, 86, 204), }", dt, shape);
  EXPECT_EQ(dt, npy::DType::f8);
  EXPECT_EQ(shape, (std::vector<std::size_t>{83, 86, 204}));
  npy::parse_header("{'descr': '|u1', 'fortran_order': False, 'shape': (5,), }", dt, shape);
  EXPECT_EQ(dt, npy::DType::u1);
  EXPECT_EQ(shape, std::vector<std::size_t>{5});
}

TEST(NpyHeader, RejectsBigEndianAndFortranOrder) {
  npy::DType dt;
  std::vector<std::size_t> shape;
  EXPECT_THROW(npy::parse_header("{'descr': '>f8', 'fortran_order': False, 'shape': (2,), }", dt, shape), FormatError);
  EXPECT_THROW(npy::parse_header("{'descr': '<f8', 'fortran_order': True, 'shape': (2,), }", dt, shape), FormatError);
  EXPECT_THROW(npy::parse_header("{'descr': '<c16', 'fortran_order': False, 'shape': (2,), }", dt, shape), FormatError);
}

TEST(NpyRead, AcceptedDtypesConvertToDouble) {
  const auto dir = oracle::scratch_dir("npy_dtypes");
  write_npy(dir / "f4.npy", "{'descr': '<f4', 'fortran_order': False, 'shape': (2,), }", raw<float>({1.5f, -2.0f}));
  write_npy(dir / "u1.npy", "{'descr': '|u1', 'fortran_order': False, 'shape': (2,), }", raw<std::uint8_t>({7, 255}));
  write_npy(dir / "u2.npy", "{'descr': '<u2', 'fortran_order': False, 'shape': (2,), }", raw<std::uint16_t>({1, 65535}));
  EXPECT_EQ(npy::read(dir / "f4.npy").to_doubles(), (std::vector<double>{1.5, -2.0}));
  EXPECT_EQ(npy::read(dir / "u1.npy").to_doubles(), (std::vector<double>{7, 255}));
  EXPECT_EQ(npy::read(dir / "u2.npy").to_doubles(), (std::vector<double>{1, 65535}));
}

TEST(NpyRead, VersionTwoHeader) {
  const auto dir = oracle::scratch_dir("npy_v2");
  write_npy(dir / "a.npy", "{'descr': '<f8', 'fortran_order': False, 'shape': (1,), }", raw<double>({4.25}), 2);
  EXPECT_EQ(npy::read(dir / "a.npy").to_doubles(), std::vector<double>{4.25});
}

TEST(NpyRead, PayloadCountMismatchIsDataError) {
  const auto dir = oracle::scratch_dir("npy_short");
  write_npy(dir / "a.npy", "{'descr': '<f8', 'fortran_order': False, 'shape': (3,), }", raw<double>({1.0, 2.0}));
  EXPECT_THROW(npy::read(dir / "a.npy"), DataError);
}

TEST(NpyRead, BadMagicIsFormatError) {
  const auto dir = oracle::scratch_dir("npy_magic");
  std::ofstream(dir / "a.npy") << "not an npy file at all";
  EXPECT_THROW(npy::read(dir / "a.npy"), FormatError);
}

TEST(NpyWrite, HeaderIsAlignedAndReadable) {
  const auto dir = oracle::scratch_dir("npy_write");
  npy::write_f64(dir / "a.npy", {2, 3}, {1, 2, 3, 4, 5, 6});
  npy::write_u32(dir / "b.npy", {3}, {1, 2, 4000000000u});
  const auto bytes = oracle::read_bytes(dir / "a.npy");
  const std::size_t header_len = bytes[8] | (bytes[9] << 8);
  EXPECT_EQ((10 + header_len) % 64, 0u);
  const npy::Array a = npy::read(dir / "a.npy");
  EXPECT_EQ(a.shape, (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(a.to_doubles(), (std::vector<double>{1, 2, 3, 4, 5, 6}));
  EXPECT_EQ(npy::read(dir / "b.npy").to_integers(), (std::vector<std::int64_t>{1, 2, 4000000000LL}));
}

TEST(NpyRead, FractionalValuesAreNotIntegers) {
  const auto dir = oracle::scratch_dir("npy_frac");
  npy::write_f64(dir / "a.npy", {2}, {1.0, 1.5});
  EXPECT_THROW(npy::read(dir / "a.npy").to_integers(), DataError);
}
