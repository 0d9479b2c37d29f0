#pragma once

#include <stdexcept>
#include <string>

namespace hsic {

// Error categories map one-to-one onto the CLI exit codes.
enum class ErrorKind { parameter = 2, data = 3, numeric = 4 };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
  ErrorKind kind_;
};

/// Invalid argument or configuration value.
class ParameterError : public Error {
public:
  explicit ParameterError(const std::string& what)
      : Error(ErrorKind::parameter, what) {}
};

/// Malformed, inconsistent or unreadable input data.
class DataError : public Error {
public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

/// Binary container problems: bad magic, version, checksum or payload.
class FormatError : public DataError {
public:
  explicit FormatError(const std::string& what) : DataError(what) {}
};

class NumericError : public Error {
public:
  explicit NumericError(const std::string& what)
      : Error(ErrorKind::numeric, what) {}
};

/// Rethrows `e` as the same category with `prefix` prepended to the message.
[[noreturn]] inline void rethrow_with_context(const Error& e,
                                              const std::string& prefix) {
  const std::string msg = prefix + e.what();
  switch (e.kind()) {
    case ErrorKind::parameter: throw ParameterError(msg);
    case ErrorKind::data: throw DataError(msg);
    case ErrorKind::numeric: throw NumericError(msg);
  }
  throw Error(e.kind(), msg);
}

}  // namespace hsic
