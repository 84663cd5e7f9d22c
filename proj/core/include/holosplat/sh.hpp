#pragma once

#include "holosplat/geometry.hpp"

#include <array>
#include <vector>

namespace holosplat {

/// Number of real-SH basis functions for a given degree.
constexpr int sh_basis_size(int deg) { return (deg + 1) * (deg + 1); }
constexpr int kMaxShDegree = 3;
constexpr int kMaxShBasis = sh_basis_size(kMaxShDegree);

/// Real SH basis values Y_b(dir) for b < (deg+1)^2. dir must be unit length.
void sh_basis(const Vec3& dir, int deg, double* out);

/// d Y_b / d dir for each basis function (treating dir components as free).
void sh_basis_gradient(const Vec3& dir, int deg, Vec3* out);

/// clamp(0.5 + sum_b Y_b(dir) * coeffs[b], 0, 1) per channel.
/// coeffs holds (deg+1)^2 rgb triples.
Vec3 sh_to_color(const Vec3* coeffs, const Vec3& dir, int deg);

} // namespace holosplat
