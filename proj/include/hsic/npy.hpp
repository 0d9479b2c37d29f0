#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hsic::npy {

// Minimal reader/writer for the NumPy .npy container (versions 1.0 and 2.0
// on read, 1.0 on write). Only little-endian, C-ordered arrays are supported.

enum class DType { f4, f8, u1, u2, u4, u8, i1, i2, i4, i8 };

struct Array {
  DType dtype = DType::f8;
  std::vector<std::size_t> shape;
  std::vector<unsigned char> bytes;  // raw little-endian payload

  std::size_t count() const;
  std::vector<double> to_doubles() const;
  /// Throws DataError if a value does not fit in int64 exactly.
  std::vector<std::int64_t> to_integers() const;
};

Array read(const std::filesystem::path& path);

void write_f64(const std::filesystem::path& path,
               const std::vector<std::size_t>& shape,
               const std::vector<double>& values);
void write_u32(const std::filesystem::path& path,
               const std::vector<std::size_t>& shape,
               const std::vector<std::uint32_t>& values);
void write_i32(const std::filesystem::path& path,
               const std::vector<std::size_t>& shape,
               const std::vector<std::int32_t>& values);

/// Header parsing split out for testing. Returns dtype, shape; throws
/// FormatError on anything unsupported.
void parse_header(const std::string& header, DType& dtype,
                  std::vector<std::size_t>& shape);

}  // namespace hsic::npy
