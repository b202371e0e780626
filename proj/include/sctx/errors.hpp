#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sctx {

enum class ErrorKind {
  invalid_argument,
  invalid_range,
  invalid_cuts,
  dimension_mismatch,
  length_mismatch,
  size_mismatch,
  out_of_domain,
  exact_mode_untrainable,
  non_finite_loss,
  no_valid_records,
  parse_error,
};

const char* to_string(ErrorKind kind);

// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class NonFiniteLoss : public Error {
 public:
  explicit NonFiniteLoss(std::size_t epoch)
      : Error(ErrorKind::non_finite_loss, "loss became non-finite at epoch " + std::to_string(epoch)),
        epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace sctx
