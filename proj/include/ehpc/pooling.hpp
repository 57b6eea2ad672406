#pragma once

#include "ehpc/errors.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <string>
#include <string_view>

namespace ehpc {

enum class PoolKind { Average, Max };

std::string to_string(PoolKind kind);
/// Accepts "average"/"avg" and "max"; throws ArgumentError otherwise.
PoolKind parse_pool_kind(std::string_view name);

/// Same-length, stride-1 pooling with a centered window of nominal width
/// `kernel`: floor((kernel-1)/2) elements to the left, ceil((kernel-1)/2) to
/// the right, clipped at the edges. Average divides by the number of
/// in-range elements, so a constant vector pools to itself.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> pool_1d(
    const Eigen::MatrixBase<Derived>& v, int kernel, PoolKind kind) {
  EIGEN_STATIC_ASSERT_VECTOR_ONLY(Derived);
  using Scalar = typename Derived::Scalar;
  if (kernel < 1) throw ArgumentError("pool kernel must be at least 1, got " + std::to_string(kernel));
  const Eigen::Index n = v.size();
  const Eigen::Index left = (kernel - 1) / 2;
  const Eigen::Index right = (kernel - 1) - left;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, i - left);
    const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + right);
    const auto window = v.derived().segment(lo, hi - lo + 1);
    out(i) = kind == PoolKind::Average ? window.sum() / static_cast<Scalar>(hi - lo + 1)
                                       : window.maxCoeff();
  }
  return out;
}

}  // namespace ehpc
