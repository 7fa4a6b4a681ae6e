#ifndef BSKPD_ERROR_HPP
#define BSKPD_ERROR_HPP

#include <stdexcept>
#include <string>

namespace bskpd {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimension or block-split mismatch.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Distribution or model parameter outside its domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Factorization failure or non-finite state.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what, long pivot = -1)
      : Error(what), pivot_(pivot) {}
  long pivot() const noexcept { return pivot_; }

 private:
  long pivot_;
};

// Malformed input data (dataset tables, labels, metrics input).
class DataError : public Error {
 public:
  using Error::Error;
};

enum class IoErrc {
  open_failed,
  bad_magic,
  bad_version,
  bad_header,
  truncated,
  dim_overflow,
  parse_failed,
  count_mismatch,
  incomplete_chain,
  write_failed,
};

inline const char* to_string(IoErrc c) {
  switch (c) {
    case IoErrc::open_failed: return "open_failed";
    case IoErrc::bad_magic: return "bad_magic";
    case IoErrc::bad_version: return "bad_version";
    case IoErrc::bad_header: return "bad_header";
    case IoErrc::truncated: return "truncated";
    case IoErrc::dim_overflow: return "dim_overflow";
    case IoErrc::parse_failed: return "parse_failed";
    case IoErrc::count_mismatch: return "count_mismatch";
    case IoErrc::incomplete_chain: return "incomplete_chain";
    case IoErrc::write_failed: return "write_failed";
  }
  return "unknown";
}

class IoError : public Error {
 public:
  IoError(IoErrc code, const std::string& what)
      : Error(std::string(to_string(code)) + ": " + what), code_(code) {}
  IoErrc code() const noexcept { return code_; }

 private:
  IoErrc code_;
};

}  // namespace bskpd

#endif  // BSKPD_ERROR_HPP
