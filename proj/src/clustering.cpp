#include "antidote/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "antidote/error.hpp"
#include "antidote/random.hpp"

namespace antidote::clustering {

using numerics::squared_distance;

std::vector<int> assign(const Matrix& x, const Matrix& centers) {
  require(centers.rows() >= 1, "assign: no centers");
  require(x.cols() == centers.cols(), "assign: dimension mismatch (points " + std::to_string(x.cols()) +
                                          ", centers " + std::to_string(centers.cols()) + ")");
  std::vector<int> labels(x.rows(), 0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double best = squared_distance(x.row(r), centers.row(0));
    int arg = 0;
    for (std::size_t c = 1; c < centers.rows(); ++c) {
      const double d = squared_distance(x.row(r), centers.row(c));
      if (d < best) {
        best = d;
        arg = static_cast<int>(c);
      }
    }
    labels[r] = arg;
  }
  return labels;
}

double kmeans_objective(const Matrix& x, const Matrix& centers) {
  const auto labels = assign(x, centers);
  double total = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r)
    total += squared_distance(x.row(r), centers.row(static_cast<std::size_t>(labels[r])));
  return total;
}

namespace {

Matrix kmeanspp_seed(const Matrix& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.rows();
  Matrix centers(k, x.cols());
  std::vector<bool> chosen(n, false);
  std::size_t first = rng.below(n);
  chosen[first] = true;
  std::copy_n(x.row(first).begin(), x.cols(), centers.row(0).begin());
  std::vector<double> nearest(n);
  for (std::size_t r = 0; r < n; ++r) nearest[r] = squared_distance(x.row(r), centers.row(0));

  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        acc += nearest[r];
        if (nearest[r] > 0.0 && acc > target) {
          pick = r;
          break;
        }
      }
      if (pick == n) {  // rounding at the tail
        for (std::size_t r = n; r-- > 0;)
          if (nearest[r] > 0.0) {
            pick = r;
            break;
          }
      }
    } else {
      // Every remaining point coincides with a center; take the first unused row.
      for (std::size_t r = 0; r < n; ++r)
        if (!chosen[r]) {
          pick = r;
          break;
        }
    }
    chosen[pick] = true;
    std::copy_n(x.row(pick).begin(), x.cols(), centers.row(c).begin());
    for (std::size_t r = 0; r < n; ++r) nearest[r] = std::min(nearest[r], squared_distance(x.row(r), centers.row(c)));
  }
  return centers;
}

}  // namespace

KMeansFit kmeans_fit(const Matrix& x, std::size_t k, std::uint64_t seed, const KMeansOptions& options) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  require(k >= 1, "kmeans: k must be at least 1");
  require(k <= n, "kmeans: k (" + std::to_string(k) + ") exceeds number of points (" + std::to_string(n) + ")");

  Rng rng(seed);
  KMeansFit fit;
  Matrix centers = kmeanspp_seed(x, k, rng);
  std::vector<int> labels;
  std::vector<std::size_t> counts(k);

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    labels = assign(x, centers);
    double objective = 0.0;
    for (std::size_t r = 0; r < n; ++r)
      objective += squared_distance(x.row(r), centers.row(static_cast<std::size_t>(labels[r])));
    fit.objective_trace.push_back(objective);
    fit.iterations = iter + 1;

    Matrix updated(k, d);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t r = 0; r < n; ++r) {
      const auto c = static_cast<std::size_t>(labels[r]);
      ++counts[c];
      auto dst = updated.row(c);
      const auto src = x.row(r);
      for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    }
    bool repaired = false;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (double& v : updated.row(c)) v /= static_cast<double>(counts[c]);
        continue;
      }
      // Empty cluster: move it onto the point farthest from its current center.
      std::size_t far = 0;
      double far_dist = -1.0;
      for (std::size_t r = 0; r < n; ++r) {
        const auto own = static_cast<std::size_t>(labels[r]);
        if (counts[own] <= 1) continue;  // do not empty another cluster
        const double dist = squared_distance(x.row(r), centers.row(own));
        if (dist > far_dist) {
          far_dist = dist;
          far = r;
        }
      }
      std::copy_n(x.row(far).begin(), d, updated.row(c).begin());
      --counts[static_cast<std::size_t>(labels[far])];
      labels[far] = static_cast<int>(c);
      counts[c] = 1;
      repaired = true;
    }
    if (repaired) {
      // Recompute the means of clusters that lost a point to the repair.
      Matrix sums(k, d);
      std::fill(counts.begin(), counts.end(), 0);
      for (std::size_t r = 0; r < n; ++r) {
        const auto c = static_cast<std::size_t>(labels[r]);
        ++counts[c];
        for (std::size_t j = 0; j < d; ++j) sums(c, j) += x(r, j);
      }
      for (std::size_t c = 0; c < k; ++c)
        for (std::size_t j = 0; j < d; ++j) updated(c, j) = sums(c, j) / static_cast<double>(counts[c]);
    }

    double movement = 0.0;
    for (std::size_t c = 0; c < k; ++c) movement = std::max(movement, std::sqrt(squared_distance(centers.row(c), updated.row(c))));
    centers = std::move(updated);
    if (movement < options.tolerance && !repaired) break;
  }

  labels = assign(x, centers);
  fit.objective = 0.0;
  for (std::size_t r = 0; r < n; ++r)
    fit.objective += squared_distance(x.row(r), centers.row(static_cast<std::size_t>(labels[r])));
  fit.centers = Centers{std::move(centers), ClusteringKind::KMeans};
  fit.labels = std::move(labels);
  return fit;
}

SpectralFit spectral_fit(const Matrix& x, std::size_t k, std::uint64_t seed, const SpectralOptions& options) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  require(k >= 1, "spectral: k must be at least 1");
  require(k <= n, "spectral: k (" + std::to_string(k) + ") exceeds number of points (" + std::to_string(n) + ")");
  if (n > options.max_rows)
    fail(ErrorKind::InvalidArgument, "spectral: " + std::to_string(n) + " rows exceed the dense eigensolver cap of " +
                                         std::to_string(options.max_rows) + "; subsample the dataset first");

  SpectralFit fit;
  if (k == 1) {
    Matrix mean(1, d);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < d; ++j) mean(0, j) += x(r, j);
    for (double& v : mean.data()) v /= static_cast<double>(n);
    fit.centers = Centers{std::move(mean), ClusteringKind::Spectral};
    fit.labels.assign(n, 0);
    return fit;
  }

  Matrix dist2(n, n);
  std::vector<double> pairwise;
  pairwise.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = squared_distance(x.row(i), x.row(j));
      dist2(i, j) = s;
      dist2(j, i) = s;
      pairwise.push_back(std::sqrt(s));
    }
  double sigma = 1.0;
  if (!pairwise.empty()) {
    const std::size_t mid = pairwise.size() / 2;
    std::nth_element(pairwise.begin(), pairwise.begin() + static_cast<std::ptrdiff_t>(mid), pairwise.end());
    double median = pairwise[mid];
    if (pairwise.size() % 2 == 0) {
      const double lower = *std::max_element(pairwise.begin(), pairwise.begin() + static_cast<std::ptrdiff_t>(mid));
      median = 0.5 * (median + lower);
    }
    if (median > 0.0) sigma = median;
  }
  fit.bandwidth = sigma;

  Matrix laplacian(n, n);
  const double scale = 1.0 / (2.0 * sigma * sigma);
  for (std::size_t i = 0; i < n; ++i) {
    double degree = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double w = std::exp(-dist2(i, j) * scale);
      laplacian(i, j) = -w;
      degree += w;
    }
    laplacian(i, i) = degree;
  }

  numerics::EigenOptions eig_options;
  eig_options.method = options.eigen_method;
  const auto eig = numerics::sym_eig(laplacian, k, eig_options);
  const auto embed = kmeans_fit(eig.vectors, k, seed);

  Matrix means(k, d);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto c = static_cast<std::size_t>(embed.labels[r]);
    ++counts[c];
    for (std::size_t j = 0; j < d; ++j) means(c, j) += x(r, j);
  }
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t j = 0; j < d; ++j) means(c, j) /= static_cast<double>(counts[c]);
  fit.centers = Centers{std::move(means), ClusteringKind::Spectral};
  fit.labels = embed.labels;
  return fit;
}

// ---------------------------------------------------------------------------

std::vector<Edge> complete_graph_edges(std::size_t m) {
  std::vector<Edge> edges;
  edges.reserve(m * (m > 0 ? m - 1 : 0) / 2);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) edges.push_back({i, j});
  return edges;
}

Matrix incidence_matrix(std::size_t m) {
  const auto edges = complete_graph_edges(m);
  Matrix inc(m, edges.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    inc(edges[e].i, e) = 1.0;
    inc(edges[e].j, e) = -1.0;
  }
  return inc;
}

double son_objective(const Matrix& x, const Matrix& mu, double lambda) {
  require(x.rows() == mu.rows() && x.cols() == mu.cols(), "son_objective: shape mismatch");
  double fit = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r) fit += squared_distance(x.row(r), mu.row(r));
  double penalty = 0.0;
  for (std::size_t i = 0; i < mu.rows(); ++i)
    for (std::size_t j = i + 1; j < mu.rows(); ++j) penalty += std::sqrt(squared_distance(mu.row(i), mu.row(j)));
  return 0.5 * fit + lambda * penalty;
}

std::vector<std::vector<std::size_t>> fuse_rows(const Matrix& mu, double tolerance) {
  const std::size_t m = mu.rows();
  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  const double tol2 = tolerance * tolerance;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      if (squared_distance(mu.row(i), mu.row(j)) <= tol2) {
        const std::size_t a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
  std::vector<std::vector<std::size_t>> groups;
  std::vector<long> slot(m, -1);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t root = find(i);
    if (slot[root] < 0) {
      slot[root] = static_cast<long>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<std::size_t>(slot[root])].push_back(i);
  }
  return groups;
}

// r = I * v for an edge-major |O| x d matrix v: row i gains v_e, row j loses it.
Matrix incidence_apply(const std::vector<Edge>& edges, const Matrix& v, std::size_t m) {
  Matrix out(m, v.cols());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    auto a = out.row(edges[e].i);
    auto b = out.row(edges[e].j);
    const auto src = v.row(e);
    for (std::size_t c = 0; c < v.cols(); ++c) {
      a[c] += src[c];
      b[c] -= src[c];
    }
  }
  return out;
}

// Edge differences mu_i - mu_j, i.e. the rows of (mu^T I)^T.
Matrix edge_differences(const std::vector<Edge>& edges, const Matrix& mu) {
  Matrix out(edges.size(), mu.cols());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    auto dst = out.row(e);
    const auto a = mu.row(edges[e].i);
    const auto b = mu.row(edges[e].j);
    for (std::size_t c = 0; c < mu.cols(); ++c) dst[c] = a[c] - b[c];
  }
  return out;
}

namespace {

double row_norm(std::span<const double> v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return std::sqrt(s);
}

}  // namespace

SonSolution son_solve(const Matrix& x, double lambda, const SonOptions& options) {
  require(lambda >= 0.0 && std::isfinite(lambda), "son_solve: lambda must be finite and non-negative");
  require(x.rows() >= 1, "son_solve: no points");
  const std::size_t m = x.rows();
  const std::size_t d = x.cols();
  const auto edges = complete_graph_edges(m);

  SonSolution sol;
  sol.lambda = lambda;
  if (lambda == 0.0 || m == 1) {
    // Separable objective: every center sits on its own point.
    sol.mu = x;
    sol.eta = edge_differences(edges, x);
    sol.zeta = Matrix(edges.size(), d);
    sol.merged = fuse_rows(sol.mu, options.merge_tolerance);
    sol.fused_label.assign(m, 0);
    for (std::size_t g = 0; g < sol.merged.size(); ++g)
      for (std::size_t r : sol.merged[g]) sol.fused_label[r] = static_cast<int>(g);
    return sol;
  }

  std::vector<double> column_sum(d, 0.0);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < d; ++c) column_sum[c] += x(r, c);

  double rho = options.rho;
  Matrix mu = x;
  Matrix eta = edge_differences(edges, mu);
  Matrix scaled_dual(edges.size(), d);  // zeta / rho
  const double md = static_cast<double>(m);

  double primal = 0.0, dual = 0.0;
  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    // mu-update: (Id + rho L) mu = X + rho I (eta - u), with (Id + rho L)^{-1} = (Id + rho 11^T) / (1 + rho m).
    Matrix shifted = eta - scaled_dual;
    Matrix rhs = incidence_apply(edges, shifted, m);
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < d; ++c) rhs(r, c) = x(r, c) + rho * rhs(r, c);
    // 1^T rhs = 1^T X because every incidence column sums to zero.
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < d; ++c) mu(r, c) = (rhs(r, c) + rho * column_sum[c]) / (1.0 + rho * md);

    // eta-update: block soft-threshold per edge.
    const Matrix diff = edge_differences(edges, mu);
    Matrix eta_old = eta;
    const double threshold = lambda / rho;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      auto v = eta.row(e);
      const auto dv = diff.row(e);
      const auto u = scaled_dual.row(e);
      for (std::size_t c = 0; c < d; ++c) v[c] = dv[c] + u[c];
      const double norm = row_norm(v);
      const double shrink = norm > threshold ? 1.0 - threshold / norm : 0.0;
      for (double& a : v) a *= shrink;
    }

    // Dual update and residuals.
    double primal_sq = 0.0, diff_sq = 0.0, eta_sq = 0.0;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      auto u = scaled_dual.row(e);
      const auto dv = diff.row(e);
      const auto v = eta.row(e);
      for (std::size_t c = 0; c < d; ++c) {
        const double r = dv[c] - v[c];
        u[c] += r;
        primal_sq += r * r;
        diff_sq += dv[c] * dv[c];
        eta_sq += v[c] * v[c];
      }
    }
    primal = std::sqrt(primal_sq);
    const Matrix delta = incidence_apply(edges, eta - eta_old, m);
    dual = rho * numerics::frobenius_norm(delta);
    const double dual_scale = rho * numerics::frobenius_norm(incidence_apply(edges, scaled_dual, m));
    const double primal_scale = std::max({1.0, std::sqrt(diff_sq), std::sqrt(eta_sq)});

    sol.iterations = iter;
    if (primal <= options.tolerance * primal_scale && dual <= options.tolerance * std::max(1.0, dual_scale)) {
      sol.primal_residual = primal;
      sol.dual_residual = dual;
      sol.mu = std::move(mu);
      sol.eta = std::move(eta);
      sol.zeta = rho * scaled_dual;
      sol.merged = fuse_rows(sol.mu, options.merge_tolerance);
      sol.fused_label.assign(m, 0);
      for (std::size_t g = 0; g < sol.merged.size(); ++g)
        for (std::size_t r : sol.merged[g]) sol.fused_label[r] = static_cast<int>(g);
      return sol;
    }

    // Residual balancing keeps the two residuals within a factor of 10.
    if (iter % 10 == 0) {
      if (primal > 10.0 * dual) {
        rho *= 2.0;
        for (double& a : scaled_dual.data()) a *= 0.5;
      } else if (dual > 10.0 * primal) {
        rho *= 0.5;
        for (double& a : scaled_dual.data()) a *= 2.0;
      }
    }
  }
  fail(ErrorKind::NotConverged, "son_solve: ADMM did not converge within " + std::to_string(options.max_iterations) +
                                    " iterations (primal residual " + std::to_string(primal) + ", dual residual " +
                                    std::to_string(dual) + ")");
}

double KktResiduals::max() const { return std::max({stationarity, prox, primal, dual_link}); }

KktResiduals son_kkt_residuals(const SonSolution& sol, const Matrix& x, const Matrix& eta, const Matrix& theta,
                               const Matrix& zeta, ProxVariant prox) {
  const std::size_t m = x.rows();
  const std::size_t d = x.cols();
  const std::size_t edge_count = m * (m > 0 ? m - 1 : 0) / 2;
  require(sol.mu.rows() == m && sol.mu.cols() == d, "son_kkt_residuals: mu shape differs from X");
  require(theta.rows() == m && theta.cols() == d, "son_kkt_residuals: theta must be m x d");
  require(eta.rows() == edge_count && eta.cols() == d, "son_kkt_residuals: eta must have m(m-1)/2 edge rows");
  require(zeta.rows() == edge_count && zeta.cols() == d, "son_kkt_residuals: zeta must have m(m-1)/2 edge rows");
  const auto edges = complete_graph_edges(m);

  KktResiduals out;
  out.stationarity = numerics::frobenius_norm(theta + sol.mu - x);

  const double radius = prox == ProxVariant::AsPrinted ? 1.0 : sol.lambda;
  double prox_sq = 0.0;
  std::vector<double> v(d);
  for (std::size_t e = 0; e < edge_count; ++e) {
    for (std::size_t c = 0; c < d; ++c) v[c] = eta(e, c) + zeta(e, c);
    const double norm = row_norm(v);
    const double shrink = norm > radius ? 1.0 - radius / norm : 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double r = eta(e, c) - shrink * v[c];
      prox_sq += r * r;
    }
  }
  out.prox = std::sqrt(prox_sq);
  out.primal = numerics::frobenius_norm(edge_differences(edges, sol.mu) - eta);
  out.dual_link = numerics::frobenius_norm(incidence_apply(edges, zeta, m) - theta);
  return out;
}

}  // namespace antidote::clustering
