#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dfmap {

// Every failure surfaced by the library carries a kind so callers (and the
// CLI exit-code mapping) can react without string matching.
enum class ErrorKind {
  parse,        // malformed input file
  validation,   // invariant violated by otherwise well-formed data
  infeasible,   // no feasible point exists for an optimization problem
  timeout,      // solve hit its deadline; incumbent may be available
  limit,        // enumeration guard exceeded
  internal,     // consistency check failed (model bug detector)
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

private:
  ErrorKind kind_;
};

inline Error parse_error(const std::string& what) { return Error(ErrorKind::parse, what); }
inline Error validation_error(const std::string& what) { return Error(ErrorKind::validation, what); }
inline Error infeasible_error(const std::string& what) { return Error(ErrorKind::infeasible, what); }
inline Error timeout_error(const std::string& what) { return Error(ErrorKind::timeout, what); }
inline Error limit_error(const std::string& what) { return Error(ErrorKind::limit, what); }
inline Error internal_error(const std::string& what) { return Error(ErrorKind::internal, what); }

// Bytes/FLOP counts are carried as double: values reach 1e15 and only ever
// feed ratio arithmetic, so integer exactness is not required.
using Flops = double;
using Bytes = double;
using Seconds = double;

// Decimal units throughout: vendor datasheets quote SRAM/DRAM sizes and
// bandwidths in powers of ten.
constexpr double kKB = 1e3;
constexpr double kMB = 1e6;
constexpr double kGB = 1e9;
constexpr double kTera = 1e12;

}  // namespace dfmap
