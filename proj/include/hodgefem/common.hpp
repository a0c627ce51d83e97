// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace hodgefem {

using Vec2 = Eigen::Vector2d;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Pointwise proxy of a k-form in 2D. Vector for k = 1; for k = 0 and k = 2
// the scalar lives in component 0 and component 1 stays zero.
using Proxy = Vec2;

inline Proxy scalar_proxy(double s) { return Proxy(s, 0.0); }

inline Vec2 rotate_ccw(const Vec2 &v) { return Vec2(-v.y(), v.x()); }
inline double cross(const Vec2 &a, const Vec2 &b) { return a.x() * b.y() - a.y() * b.x(); }

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed caller input: bad ids, wrong degrees, unparsable files.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Degenerate or inconsistent geometry (zero area, non-conforming mesh).
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Factorization or eigen-iteration failure.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// A computed dimension disagrees with the expected Betti number.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Number of worker threads for data-parallel loops. HODGEFEM_THREADS caps it.
inline unsigned thread_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char *env = std::getenv("HODGEFEM_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

/// Runs body(i) for i in [0, n) over contiguous chunks. Bodies must only write
/// to slot i of preallocated outputs; reductions happen afterwards in index
/// order, so results do not depend on the thread count.
template <typename Body>
void parallel_for(std::size_t n, Body &&body) {
  const unsigned workers = std::min<std::size_t>(thread_count(), std::max<std::size_t>(1, n / 256));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] {
      for (std::size_t i = begin; i < end; ++i) body(i);
    });
  }
  for (auto &t : pool) t.join();
}

}  // namespace hodgefem
