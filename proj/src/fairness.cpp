#include "antidote/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "antidote/error.hpp"

namespace antidote::fairness {

using numerics::squared_distance;

void validate(const FairnessSpec& spec) {
  require(!std::isnan(spec.alpha), "fairness: alpha is NaN");
  if (spec.notion == Notion::Balance)
    require(spec.alpha >= -1.0 && spec.alpha <= 0.0, "fairness: balance alpha must lie in [-1, 0]");
}

namespace {

void check_shapes(const Matrix& centers, const Matrix& points, std::span<const int> groups, int group_count) {
  require(centers.rows() >= 1, "fairness: no centers");
  require(centers.cols() == points.cols(), "fairness: center and point dimensions differ");
  require(groups.size() == points.rows(), "fairness: one group label per row required");
  require(group_count >= 1, "fairness: need at least one group");
  for (int g : groups) require(g < group_count, "fairness: group label out of range");
}

}  // namespace

FairnessReport social_cost(const Matrix& centers, const Matrix& points, std::span<const int> groups, int group_count) {
  check_shapes(centers, points, groups, group_count);
  const auto g = static_cast<std::size_t>(group_count);
  std::vector<double> total(g, 0.0);
  std::vector<std::size_t> count(g, 0);
  for (std::size_t r = 0; r < points.rows(); ++r) {
    if (groups[r] < 0) continue;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.rows(); ++c) best = std::min(best, squared_distance(points.row(r), centers.row(c)));
    const auto j = static_cast<std::size_t>(groups[r]);
    total[j] += best;
    ++count[j];
  }
  FairnessReport report;
  report.per_group.assign(g, 0.0);
  for (std::size_t j = 0; j < g; ++j) {
    require(count[j] > 0, "fairness: group " + std::to_string(j) + " has no members in U");
    report.per_group[j] = total[j] / static_cast<double>(count[j]);
    if (report.worst_group < 0 || report.per_group[j] > report.cost) {
      report.cost = report.per_group[j];
      report.worst_group = static_cast<int>(j);
    }
  }
  return report;
}

FairnessReport balance_cost(const Matrix& centers, const Matrix& points, std::span<const int> groups, int group_count) {
  check_shapes(centers, points, groups, group_count);
  const auto g = static_cast<std::size_t>(group_count);
  const std::size_t k = centers.rows();
  const auto labels = clustering::assign(points, centers);

  std::vector<std::size_t> group_size(g, 0);
  std::vector<std::size_t> cluster_size(k, 0);
  std::vector<std::size_t> joint(k * g, 0);
  std::size_t n = 0;
  for (std::size_t r = 0; r < points.rows(); ++r) {
    if (groups[r] < 0) continue;
    const auto j = static_cast<std::size_t>(groups[r]);
    const auto i = static_cast<std::size_t>(labels[r]);
    ++group_size[j];
    ++cluster_size[i];
    ++joint[i * g + j];
    ++n;
  }
  require(n > 0, "balance_cost: U is empty, every cluster is empty");

  FairnessReport report;
  report.per_group.assign(g, std::numeric_limits<double>::infinity());
  std::vector<int> arg_cluster(g, -1);
  for (std::size_t i = 0; i < k; ++i) {
    if (cluster_size[i] == 0) continue;
    for (std::size_t j = 0; j < g; ++j) {
      double term = 0.0;  // group j absent from cluster i: R is unbounded, min{R, 1/R} -> 0
      if (joint[i * g + j] > 0) {
        const double global = static_cast<double>(group_size[j]) / static_cast<double>(n);
        const double local = static_cast<double>(joint[i * g + j]) / static_cast<double>(cluster_size[i]);
        const double ratio = global / local;
        term = std::min(ratio, 1.0 / ratio);
      }
      if (term < report.per_group[j]) {
        report.per_group[j] = term;
        arg_cluster[j] = static_cast<int>(i);
      }
    }
  }
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < g; ++j) {
    require(group_size[j] > 0, "fairness: group " + std::to_string(j) + " has no members in U");
    if (report.per_group[j] < worst) {
      worst = report.per_group[j];
      report.worst_group = static_cast<int>(j);
      report.worst_cluster = arg_cluster[j];
    }
  }
  report.cost = -worst;
  return report;
}

FairnessReport social_cost(const clustering::Centers& centers, const data::Dataset& ds) {
  return social_cost(centers.mu, ds.points, ds.groups, ds.group_count);
}

FairnessReport balance_cost(const clustering::Centers& centers, const data::Dataset& ds) {
  return balance_cost(centers.mu, ds.points, ds.groups, ds.group_count);
}

FairnessReport social_cost_own_rows(const Matrix& mu, const data::Dataset& ds) {
  require(mu.rows() >= ds.size(), "social_cost_own_rows: fewer center rows than points");
  require(mu.cols() == ds.dims(), "social_cost_own_rows: dimension mismatch");
  const auto g = static_cast<std::size_t>(ds.group_count);
  std::vector<double> total(g, 0.0);
  std::vector<std::size_t> count(g, 0);
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const auto j = static_cast<std::size_t>(ds.groups[r]);
    total[j] += squared_distance(ds.points.row(r), mu.row(r));
    ++count[j];
  }
  FairnessReport report;
  report.per_group.assign(g, 0.0);
  for (std::size_t j = 0; j < g; ++j) {
    report.per_group[j] = total[j] / static_cast<double>(count[j]);
    if (report.worst_group < 0 || report.per_group[j] > report.cost) {
      report.cost = report.per_group[j];
      report.worst_group = static_cast<int>(j);
    }
  }
  return report;
}

FairnessReport evaluate(Notion notion, const clustering::Centers& centers, const data::Dataset& ds) {
  return notion == Notion::Social ? social_cost(centers, ds) : balance_cost(centers, ds);
}

std::string to_string(Notion notion) { return notion == Notion::Social ? "social" : "balance"; }

}  // namespace antidote::fairness
