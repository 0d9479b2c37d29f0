#include "hsic/npy.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "hsic/error.hpp"

namespace hsic::npy {
namespace {

static_assert(std::endian::native == std::endian::little,
              "npy payloads are copied without byte swapping");

constexpr char kMagic[] = "\x93NUMPY";

struct DTypeInfo {
  DType dtype;
  const char* code;  // without byte-order character
  std::size_t size;
};

constexpr DTypeInfo kDTypes[] = {
    {DType::f4, "f4", 4}, {DType::f8, "f8", 8}, {DType::u1, "u1", 1},
    {DType::u2, "u2", 2}, {DType::u4, "u4", 4}, {DType::u8, "u8", 8},
    {DType::i1, "i1", 1}, {DType::i2, "i2", 2}, {DType::i4, "i4", 4},
    {DType::i8, "i8", 8},
};

const DTypeInfo& info(DType t) {
  for (const auto& d : kDTypes)
    if (d.dtype == t) return d;
  throw FormatError("npy: unknown dtype");
}

// Value of `key` in the header dict literal, up to the next top-level comma.
std::string dict_value(const std::string& header, const std::string& key) {
  const std::string quoted1 = "'" + key + "'";
  const std::string quoted2 = "\"" + key + "\"";
  auto pos = header.find(quoted1);
  if (pos == std::string::npos) pos = header.find(quoted2);
  if (pos == std::string::npos)
    throw FormatError("npy: header is missing key '" + key + "'");
  pos = header.find(':', pos);
  if (pos == std::string::npos) throw FormatError("npy: malformed header");
  ++pos;
  while (pos < header.size() && header[pos] == ' ') ++pos;
  int depth = 0;
  std::size_t end = pos;
  for (; end < header.size(); ++end) {
    const char c = header[end];
    if (c == '(' || c == '[') ++depth;
    if (c == ')' || c == ']') --depth;
    if ((c == ',' || c == '}') && depth == 0) break;
  }
  std::string value = header.substr(pos, end - pos);
  while (!value.empty() && value.back() == ' ') value.pop_back();
  return value;
}

template <typename T>
T load_le(const unsigned char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

template <typename Fn>
void for_each_value(const Array& a, Fn&& fn) {
  const std::size_t n = a.count();
  const unsigned char* p = a.bytes.data();
  const std::size_t step = info(a.dtype).size;
  for (std::size_t i = 0; i < n; ++i, p += step) {
    switch (a.dtype) {
      case DType::f4: fn(i, static_cast<double>(load_le<float>(p)), false); break;
      case DType::f8: fn(i, load_le<double>(p), false); break;
      case DType::u1: fn(i, static_cast<double>(load_le<std::uint8_t>(p)), true); break;
      case DType::u2: fn(i, static_cast<double>(load_le<std::uint16_t>(p)), true); break;
      case DType::u4: fn(i, static_cast<double>(load_le<std::uint32_t>(p)), true); break;
      case DType::u8: fn(i, static_cast<double>(load_le<std::uint64_t>(p)), true); break;
      case DType::i1: fn(i, static_cast<double>(load_le<std::int8_t>(p)), true); break;
      case DType::i2: fn(i, static_cast<double>(load_le<std::int16_t>(p)), true); break;
      case DType::i4: fn(i, static_cast<double>(load_le<std::int32_t>(p)), true); break;
      case DType::i8: fn(i, static_cast<double>(load_le<std::int64_t>(p)), true); break;
    }
  }
}

std::string shape_literal(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  if (shape.size() == 1) os << ',';
  os << ')';
  return os.str();
}

void write_raw(const std::filesystem::path& path, DType dtype,
               const std::vector<std::size_t>& shape, const void* data,
               std::size_t count) {
  std::size_t expected = 1;
  for (auto d : shape) expected *= d;
  if (expected != count)
    throw ParameterError("npy: shape does not match value count");

  std::string header = "{'descr': '<" + std::string(info(dtype).code) +
                       "', 'fortran_order': False, 'shape': " +
                       shape_literal(shape) + ", }";
  if (dtype == DType::u1 || dtype == DType::i1) header[11] = '|';
  // magic(6) + version(2) + length(2) + header, padded to 64 bytes.
  const std::size_t unpadded = 10 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write(kMagic, 6);
  out.put('\x01');
  out.put('\x00');
  const auto len = static_cast<std::uint16_t>(header.size());
  out.put(static_cast<char>(len & 0xff));
  out.put(static_cast<char>(len >> 8));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(static_cast<const char*>(data),
            static_cast<std::streamsize>(count * info(dtype).size));
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace

std::size_t Array::count() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::vector<double> Array::to_doubles() const {
  std::vector<double> out(count());
  for_each_value(*this, [&](std::size_t i, double v, bool) { out[i] = v; });
  return out;
}

std::vector<std::int64_t> Array::to_integers() const {
  std::vector<std::int64_t> out(count());
  for_each_value(*this, [&](std::size_t i, double v, bool) {
    if (!std::isfinite(v) || v != std::floor(v) ||
        std::abs(v) > 9.0e15)
      throw DataError("npy: value at index " + std::to_string(i) +
                      " is not an integer");
    out[i] = static_cast<std::int64_t>(v);
  });
  // 64-bit integers beyond 2^53 lose precision through the double path.
  if (dtype == DType::i8 || dtype == DType::u8) {
    const unsigned char* p = bytes.data();
    for (std::size_t i = 0; i < out.size(); ++i, p += 8)
      out[i] = load_le<std::int64_t>(p);
  }
  return out;
}

void parse_header(const std::string& header, DType& dtype,
                  std::vector<std::size_t>& shape) {
  std::string descr = dict_value(header, "descr");
  if (descr.size() < 2 || (descr.front() != '\'' && descr.front() != '"'))
    throw FormatError("npy: malformed descr");
  descr = descr.substr(1, descr.size() - 2);
  if (descr.size() != 3)
    throw FormatError("npy: unsupported dtype '" + descr + "'");
  const char order = descr[0];
  const std::string code = descr.substr(1);
  if (order == '>')
    throw FormatError("npy: big-endian arrays are not supported");
  if (order != '<' && order != '|' && order != '=')
    throw FormatError("npy: unsupported dtype '" + descr + "'");
  bool found = false;
  for (const auto& d : kDTypes) {
    if (code == d.code) {
      dtype = d.dtype;
      found = true;
    }
  }
  if (!found) throw FormatError("npy: unsupported dtype '" + descr + "'");

  const std::string fortran = dict_value(header, "fortran_order");
  if (fortran == "True")
    throw FormatError("npy: Fortran-ordered arrays are not supported");
  if (fortran != "False") throw FormatError("npy: malformed fortran_order");

  const std::string shape_text = dict_value(header, "shape");
  if (shape_text.size() < 2 || shape_text.front() != '(' ||
      shape_text.back() != ')')
    throw FormatError("npy: malformed shape");
  shape.clear();
  std::string item;
  for (char c : shape_text.substr(1, shape_text.size() - 2) + ",") {
    if (c == ',') {
      if (!item.empty()) {
        std::size_t consumed = 0;
        unsigned long long v = 0;
        try {
          v = std::stoull(item, &consumed);
        } catch (const std::exception&) {
          throw FormatError("npy: malformed shape entry '" + item + "'");
        }
        if (consumed != item.size())
          throw FormatError("npy: malformed shape entry '" + item + "'");
        shape.push_back(static_cast<std::size_t>(v));
      }
      item.clear();
    } else if (c != ' ' && c != 'L') {
      item.push_back(c);
    }
  }
}

Array read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (raw.size() < 10 || std::memcmp(raw.data(), kMagic, 6) != 0)
    throw FormatError(path.string() + ": not an npy file");
  const int major = raw[6];
  std::size_t header_len = 0;
  std::size_t header_start = 0;
  if (major == 1) {
    header_len = raw[8] | (static_cast<std::size_t>(raw[9]) << 8);
    header_start = 10;
  } else if (major == 2 || major == 3) {
    if (raw.size() < 12) throw FormatError(path.string() + ": truncated header");
    header_len = load_le<std::uint32_t>(raw.data() + 8);
    header_start = 12;
  } else {
    throw FormatError(path.string() + ": unsupported npy version " +
                      std::to_string(major));
  }
  if (raw.size() < header_start + header_len)
    throw FormatError(path.string() + ": truncated header");

  Array a;
  const std::string header(raw.begin() + static_cast<std::ptrdiff_t>(header_start),
                           raw.begin() + static_cast<std::ptrdiff_t>(header_start + header_len));
  parse_header(header, a.dtype, a.shape);

  const std::size_t payload = raw.size() - header_start - header_len;
  const std::size_t expected = a.count() * info(a.dtype).size;
  if (payload != expected)
    throw DataError(path.string() + ": header declares " +
                    std::to_string(a.count()) + " values but payload holds " +
                    std::to_string(payload / info(a.dtype).size));
  a.bytes.assign(raw.begin() + static_cast<std::ptrdiff_t>(header_start + header_len),
                 raw.end());
  return a;
}

void write_f64(const std::filesystem::path& path,
               const std::vector<std::size_t>& shape,
               const std::vector<double>& values) {
  write_raw(path, DType::f8, shape, values.data(), values.size());
}

void write_u32(const std::filesystem::path& path,
               const std::vector<std::size_t>& shape,
               const std::vector<std::uint32_t>& values) {
  write_raw(path, DType::u4, shape, values.data(), values.size());
}

void write_i32(const std::filesystem::path& path,
               const std::vector<std::size_t>& shape,
               const std::vector<std::int32_t>& values) {
  write_raw(path, DType::i4, shape, values.data(), values.size());
}

}  // namespace hsic::npy
