#include "antidote/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "antidote/error.hpp"

namespace antidote::metrics {

namespace {

struct Partition {
  std::vector<std::size_t> label;  // dense cluster index per row
  std::vector<std::size_t> size;
};

Partition densify(const Matrix& x, std::span<const int> labels) {
  require(labels.size() == x.rows(), "metrics: one label per row required");
  std::map<int, std::size_t> ids;
  for (int l : labels) ids.try_emplace(l, 0);
  std::size_t next = 0;
  for (auto& [l, id] : ids) id = next++;
  if (ids.size() < 2) fail(ErrorKind::InvalidArgument, "metrics: need ≥2 clusters, found " + std::to_string(ids.size()));
  Partition p;
  p.size.assign(ids.size(), 0);
  p.label.reserve(labels.size());
  for (int l : labels) {
    const std::size_t id = ids[l];
    p.label.push_back(id);
    ++p.size[id];
  }
  return p;
}

Matrix centroids(const Matrix& x, const Partition& p) {
  Matrix c(p.size.size(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < x.cols(); ++j) c(p.label[r], j) += x(r, j);
  for (std::size_t k = 0; k < p.size.size(); ++k)
    for (std::size_t j = 0; j < x.cols(); ++j) c(k, j) /= static_cast<double>(p.size[k]);
  return c;
}

double distance(std::span<const double> a, std::span<const double> b) { return std::sqrt(numerics::squared_distance(a, b)); }

}  // namespace

double silhouette(const Matrix& x, std::span<const int> labels) {
  const Partition p = densify(x, labels);
  const std::size_t n = x.rows();
  const std::size_t k = p.size.size();
  std::vector<double> sums(k);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t own = p.label[i];
    if (p.size[own] == 1) continue;  // contributes 0
    std::fill(sums.begin(), sums.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) sums[p.label[j]] += distance(x.row(i), x.row(j));
    const double a = sums[own] / static_cast<double>(p.size[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c)
      if (c != own) b = std::min(b, sums[c] / static_cast<double>(p.size[c]));
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

double davies_bouldin(const Matrix& x, std::span<const int> labels) {
  const Partition p = densify(x, labels);
  const std::size_t k = p.size.size();
  const Matrix c = centroids(x, p);
  std::vector<double> spread(k, 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) spread[p.label[r]] += distance(x.row(r), c.row(p.label[r]));
  for (std::size_t i = 0; i < k; ++i) spread[i] /= static_cast<double>(p.size[i]);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      const double sep = distance(c.row(i), c.row(j));
      if (sep > 0.0) worst = std::max(worst, (spread[i] + spread[j]) / sep);
    }
    total += worst;
  }
  return total / static_cast<double>(k);
}

double calinski_harabasz(const Matrix& x, std::span<const int> labels) {
  const Partition p = densify(x, labels);
  const std::size_t n = x.rows();
  const std::size_t k = p.size.size();
  const Matrix c = centroids(x, p);
  std::vector<double> mean(x.cols(), 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < x.cols(); ++j) mean[j] += x(r, j);
  for (double& v : mean) v /= static_cast<double>(n);
  double between = 0.0;
  for (std::size_t i = 0; i < k; ++i) between += static_cast<double>(p.size[i]) * numerics::squared_distance(c.row(i), mean);
  double within = 0.0;
  for (std::size_t r = 0; r < n; ++r) within += numerics::squared_distance(x.row(r), c.row(p.label[r]));
  if (within == 0.0) return kSaturated;
  return between * static_cast<double>(n - k) / (within * static_cast<double>(k - 1));
}

QualityReport quality_report(const Matrix& x, std::span<const int> labels) {
  QualityReport q;
  q.silhouette = silhouette(x, labels);
  q.davies_bouldin = davies_bouldin(x, labels);
  q.calinski_harabasz = calinski_harabasz(x, labels);
  q.calinski_harabasz_saturated = q.calinski_harabasz == kSaturated;
  return q;
}

}  // namespace antidote::metrics
