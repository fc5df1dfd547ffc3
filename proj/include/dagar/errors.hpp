#pragma once

#include <stdexcept>
#include <string>

namespace dagar {

// Bad sizes, parameters out of range, malformed files, schema mismatches.
class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// Graph-shape violations: disconnected where connectivity is required,
// non-tree input to a tree ordering, and the like.
class structure_error : public validation_error {
 public:
  explicit structure_error(const std::string& what) : validation_error(what) {}
};

// Numerical failures: non-positive pivots, singular systems, non-PSD input.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

// Always-on invariant check (unlike assert, survives NDEBUG builds).
inline void require(bool cond, const char* msg) {
  if (!cond) throw std::logic_error(msg);
}

}  // namespace detail
}  // namespace dagar
