#pragma once

#include <limits>
#include <span>

#include "antidote/numerics.hpp"

namespace antidote::metrics {

using numerics::Matrix;

/// Returned by calinski_harabasz when the within-cluster dispersion is zero.
inline constexpr double kSaturated = std::numeric_limits<double>::max();

struct QualityReport {
  double silhouette = 0.0;
  double davies_bouldin = 0.0;
  double calinski_harabasz = 0.0;
  bool calinski_harabasz_saturated = false;  // zero within-cluster dispersion
};

/// Mean silhouette coefficient. Points alone in their cluster score 0, as do points with a = b = 0.
double silhouette(const Matrix& x, std::span<const int> labels);

/// Mean over clusters of the worst (s_i + s_j) / d(c_i, c_j), s being the mean distance to the centroid.
/// Pairs with coincident centroids contribute 0.
double davies_bouldin(const Matrix& x, std::span<const int> labels);

/// Between/within dispersion ratio scaled by (n - k) / (k - 1); kSaturated when within dispersion is 0.
double calinski_harabasz(const Matrix& x, std::span<const int> labels);

QualityReport quality_report(const Matrix& x, std::span<const int> labels);

}  // namespace antidote::metrics
