#pragma once

// Independent reference implementations shared by the unit tests and the acceptance suite.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "antidote/numerics.hpp"
#include "antidote/random.hpp"

namespace oracle {

using antidote::Rng;
using antidote::numerics::Matrix;

struct Instance {
  Matrix points;
  Matrix centers;
  std::vector<int> groups;
  int g = 0;
};

inline Instance random_instance(Rng& rng) {
  Instance in;
  in.g = 1 + static_cast<int>(rng.below(3));
  const std::size_t n = static_cast<std::size_t>(in.g) + rng.below(13 - static_cast<std::size_t>(in.g));
  const std::size_t k = 1 + rng.below(3);
  const std::size_t d = 1 + rng.below(3);
  in.points = Matrix(n, d);
  in.centers = Matrix(k, d);
  // Small integer coordinates make exact ties between centers common.
  for (double& v : in.points.data()) v = static_cast<double>(rng.below(5));
  for (double& v : in.centers.data()) v = static_cast<double>(rng.below(5));
  for (std::size_t r = 0; r < n; ++r)
    in.groups.push_back(r < static_cast<std::size_t>(in.g) ? static_cast<int>(r) : static_cast<int>(rng.below(in.g)));
  return in;
}

inline double dist2(const Matrix& a, std::size_t i, const Matrix& b, std::size_t j) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.cols(); ++c) s += (a(i, c) - b(j, c)) * (a(i, c) - b(j, c));
  return s;
}

// max_j (1/|G_j|) sum_{x in G_j} min_c ||x - c||^2
inline double social(const Instance& in) {
  double worst = -1.0;
  for (int j = 0; j < in.g; ++j) {
    double sum = 0.0;
    int members = 0;
    for (std::size_t r = 0; r < in.points.rows(); ++r) {
      if (in.groups[r] != j) continue;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < in.centers.rows(); ++c) best = std::min(best, dist2(in.points, r, in.centers, c));
      sum += best;
      ++members;
    }
    worst = std::max(worst, sum / members);
  }
  return worst;
}

// -min over non-empty clusters i and groups j of min{R, 1/R}, R = (|G_j|/n) / (|C_i n G_j|/|C_i|),
// with the term taken as 0 when group j is absent from cluster i.
inline double balance(const Instance& in) {
  const std::size_t n = in.points.rows();
  std::vector<std::size_t> cluster(n);
  for (std::size_t r = 0; r < n; ++r) {
    std::size_t arg = 0;
    for (std::size_t c = 1; c < in.centers.rows(); ++c)
      if (dist2(in.points, r, in.centers, c) < dist2(in.points, r, in.centers, arg)) arg = c;
    cluster[r] = arg;
  }
  double least = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < in.centers.rows(); ++i) {
    const auto size = static_cast<double>(std::count(cluster.begin(), cluster.end(), i));
    if (size == 0.0) continue;
    for (int j = 0; j < in.g; ++j) {
      double in_group = 0.0, both = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        in_group += in.groups[r] == j;
        both += in.groups[r] == j && cluster[r] == i;
      }
      double term = 0.0;
      if (both > 0.0) {
        const double ratio = (in_group / static_cast<double>(n)) / (both / size);
        term = std::min(ratio, 1.0 / ratio);
      }
      least = std::min(least, term);
    }
  }
  return -least;
}

// (1/2) sum (x_i - m_i)^2 + lambda sum_{i<j} |m_i - m_j| for 1-D points.
inline double son_objective_1d(const std::array<double, 4>& x, const std::array<double, 4>& m, double lambda) {
  double f = 0.0;
  for (int i = 0; i < 4; ++i) f += 0.5 * (x[i] - m[i]) * (x[i] - m[i]);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) f += lambda * std::abs(m[i] - m[j]);
  return f;
}

// Coarse-to-fine grid search over R^4: a full grid on the hull of x, then repeated
// refinement of a shrinking grid around the incumbent.
inline double grid_search_son(const std::array<double, 4>& x, double lambda) {
  double lo = *std::min_element(x.begin(), x.end());
  double hi = *std::max_element(x.begin(), x.end());
  std::array<double, 4> center{};
  center.fill(0.5 * (lo + hi));
  double half = 0.5 * (hi - lo) + 1e-9;
  double best = std::numeric_limits<double>::infinity();
  constexpr int steps = 20;
  for (int level = 0; level < 14; ++level) {
    std::array<double, 4> incumbent = center;
    std::array<int, 4> idx{};
    for (idx[0] = 0; idx[0] <= steps; ++idx[0])
      for (idx[1] = 0; idx[1] <= steps; ++idx[1])
        for (idx[2] = 0; idx[2] <= steps; ++idx[2])
          for (idx[3] = 0; idx[3] <= steps; ++idx[3]) {
            std::array<double, 4> m{};
            for (int c = 0; c < 4; ++c) m[c] = center[c] - half + 2.0 * half * idx[c] / steps;
            const double f = son_objective_1d(x, m, lambda);
            if (f < best) {
              best = f;
              incumbent = m;
            }
          }
    center = incumbent;
    half *= 0.3;
  }
  return best;
}

}  // namespace oracle
