// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hodgefem/common.hpp"

#include <array>
#include <cmath>

namespace hodgefem::quadrature {

struct TrianglePoint {
  std::array<double, 3> bary;  // barycentric coordinates
  double weight;               // fraction of the triangle area
};

// Symmetric 6-point rule, exact for polynomials of degree 4.
inline constexpr double kA1 = 0.44594849091596488632;
inline constexpr double kW1 = 0.22338158967801146570;
inline constexpr double kA2 = 0.09157621350977074346;
inline constexpr double kW2 = 0.10995174365532186764;

inline const std::array<TrianglePoint, 6> &triangle_rule() {
  static const std::array<TrianglePoint, 6> rule = {{
      {{kA1, kA1, 1.0 - 2.0 * kA1}, kW1},
      {{kA1, 1.0 - 2.0 * kA1, kA1}, kW1},
      {{1.0 - 2.0 * kA1, kA1, kA1}, kW1},
      {{kA2, kA2, 1.0 - 2.0 * kA2}, kW2},
      {{kA2, 1.0 - 2.0 * kA2, kA2}, kW2},
      {{1.0 - 2.0 * kA2, kA2, kA2}, kW2},
  }};
  return rule;
}

struct EdgePoint {
  double s;       // parameter in [0, 1] from the first to the second endpoint
  double weight;  // fraction of the edge length
};

/// 3-point Gauss-Legendre, exact for degree 5.
inline const std::array<EdgePoint, 3> &edge_rule() {
  static const double r = 0.5 * std::sqrt(0.6);
  static const std::array<EdgePoint, 3> rule = {{{0.5 - r, 5.0 / 18.0}, {0.5, 8.0 / 18.0}, {0.5 + r, 5.0 / 18.0}}};
  return rule;
}

/// 2-point Gauss-Legendre, exact for degree 3 (edge degrees of freedom).
inline const std::array<EdgePoint, 2> &edge_rule2() {
  static const double r = 0.5 / std::sqrt(3.0);
  static const std::array<EdgePoint, 2> rule = {{{0.5 - r, 0.5}, {0.5 + r, 0.5}}};
  return rule;
}

}  // namespace hodgefem::quadrature
