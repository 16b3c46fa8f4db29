#pragma once

#include <stdexcept>
#include <string>

namespace tofplane {

/// Error taxonomy. The command layer maps codes onto process exit codes:
/// usage/config errors -> 1, data errors -> 2, numerical failures -> 3.
enum class Errc {
  invalid_argument,
  invalid_geometry,
  degenerate_fit,
  metric_undefined,
  no_peak,
  invalid_reference,
  recovery_failed,
  evaluation_failed,
  config,
  data,
  io,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
  if (!cond) raise(code, what);
}

}  // namespace tofplane
