// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>

namespace vrag {

// Norms below this are treated as zero vectors; their cosine is defined as 0.
inline constexpr double kZeroNorm = 1e-12;

template <typename T>
double cosine_similarity(std::span<const T> u, std::span<const T> v) {
  double dot = 0, uu = 0, vv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += static_cast<double>(u[i]) * static_cast<double>(v[i]);
    uu += static_cast<double>(u[i]) * static_cast<double>(u[i]);
    vv += static_cast<double>(v[i]) * static_cast<double>(v[i]);
  }
  const double nu = std::sqrt(uu), nv = std::sqrt(vv);
  if (nu < kZeroNorm || nv < kZeroNorm) return 0.0;
  return dot / (nu * nv);
}

inline double cosine_similarity(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  return cosine_similarity(std::span<const double>(u.data(), static_cast<std::size_t>(u.size())),
                           std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

}  // namespace vrag
