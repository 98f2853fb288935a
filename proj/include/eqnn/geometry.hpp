#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eqnn/error.hpp"
#include "eqnn/group.hpp"

namespace eqnn {

/// Odd-sized hypercube of grid points centred at the origin: offsets in
/// [-(size-1)/2, (size-1)/2]^dim, enumerated row-major (last coordinate fastest).
struct Box {
  int size = 1;
  int dim = 1;

  Box() = default;
  Box(int s, int n) : size(s), dim(n) {
    if (s <= 0 || s % 2 == 0) throw WindowError("window size must be odd and positive, got " + std::to_string(s));
    if (n <= 0) throw WindowError("spatial dimension must be positive");
  }

  int radius() const { return (size - 1) / 2; }

  int count() const {
    int c = 1;
    for (int i = 0; i < dim; ++i) c *= size;
    return c;
  }

  IntVec offset(int index) const {
    IntVec off(dim);
    for (int i = dim - 1; i >= 0; --i) {
      off[i] = index % size - radius();
      index /= size;
    }
    return off;
  }

  /// Index of an offset, or -1 when it lies outside the box.
  int index(const IntVec& off) const {
    int idx = 0;
    for (int i = 0; i < dim; ++i) {
      const std::int64_t c = off[i] + radius();
      if (c < 0 || c >= size) return -1;
      idx = idx * size + static_cast<int>(c);
    }
    return idx;
  }

  /// Index after reducing every coordinate modulo size (torus).
  int wrap_index(const IntVec& off) const {
    int idx = 0;
    for (int i = 0; i < dim; ++i) {
      std::int64_t c = (off[i] + radius()) % size;
      if (c < 0) c += size;
      idx = idx * size + static_cast<int>(c);
    }
    return idx;
  }

  friend bool operator==(const Box&, const Box&) = default;
};

enum class Boundary { Cyclic, Zero };

inline std::string to_string(Boundary b) { return b == Boundary::Cyclic ? "cyclic" : "zero"; }

inline Boundary parse_boundary(const std::string& s) {
  if (s == "cyclic") return Boundary::Cyclic;
  if (s == "zero") return Boundary::Zero;
  throw SpecError("unknown boundary '" + s + "' (expected cyclic or zero)");
}

/// Cell index of x + u for every window cell x and filter offset u; -1 marks
/// cells that fall off the window under the zero boundary.
inline std::vector<int> neighbour_table(const Box& window, const Box& filter, Boundary boundary) {
  if (filter.dim != window.dim) throw WindowError("filter and window dimensions differ");
  if (filter.size > window.size) throw WindowError("filter larger than window");
  const int nx = window.count(), nu = filter.count();
  std::vector<int> table(static_cast<std::size_t>(nx) * nu);
  for (int x = 0; x < nx; ++x) {
    const IntVec px = window.offset(x);
    for (int u = 0; u < nu; ++u) {
      IntVec p = filter.offset(u);
      for (int i = 0; i < window.dim; ++i) p[i] += px[i];
      table[static_cast<std::size_t>(x) * nu + u] = boundary == Boundary::Cyclic ? window.wrap_index(p) : window.index(p);
    }
  }
  return table;
}

}  // namespace eqnn
