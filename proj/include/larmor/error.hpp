#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace larmor {

/// Raised whenever an input or computed quantity breaks a stated invariant.
/// `invariant()` is a stable, machine-readable name (e.g. "barrier.d_positive").
class Error : public std::runtime_error {
 public:
  Error(std::string invariant, const std::string& detail)
      : std::runtime_error(invariant + ": " + detail), invariant_(std::move(invariant)) {}

  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::string invariant_;
};

inline void require(bool ok, const char* invariant, const std::string& detail) {
  if (!ok) throw Error(invariant, detail);
}

inline void require_finite(double x, const char* invariant) {
  if (!std::isfinite(x)) throw Error(invariant, "non-finite value");
}

}  // namespace larmor
