#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "antidote/numerics.hpp"

namespace antidote::clustering {

using numerics::Matrix;

enum class ClusteringKind { KMeans, Spectral, Son };

/// Cluster centers, one per row. SON produces one row per clustered point.
struct Centers {
  Matrix mu;
  ClusteringKind kind = ClusteringKind::KMeans;
};

/// Index of the nearest center for every row of `x`; ties go to the lower index.
std::vector<int> assign(const Matrix& x, const Matrix& centers);
inline std::vector<int> assign(const Matrix& x, const Centers& centers) { return assign(x, centers.mu); }

/// Sum of squared distances from each row to its nearest center.
double kmeans_objective(const Matrix& x, const Matrix& centers);

// ---------------------------------------------------------------------------
// k-means

struct KMeansOptions {
  int max_iterations = 300;
  double tolerance = 1e-6;  // stop once no center moves further than this
};

struct KMeansFit {
  Centers centers;
  std::vector<int> labels;
  double objective = 0.0;
  int iterations = 0;
  /// Objective after every assignment step; non-increasing.
  std::vector<double> objective_trace;
};

/// Lloyd iterations from k-means++ seeding. An empty cluster is reseeded at the point
/// farthest from its current center.
KMeansFit kmeans_fit(const Matrix& x, std::size_t k, std::uint64_t seed, const KMeansOptions& options = {});

inline Centers kmeans(const Matrix& x, std::size_t k, std::uint64_t seed) { return kmeans_fit(x, k, seed).centers; }

// ---------------------------------------------------------------------------
// Unnormalized spectral clustering

struct SpectralOptions {
  std::size_t max_rows = 2000;
  numerics::EigenMethod eigen_method = numerics::EigenMethod::TridiagonalInverseIteration;
};

struct SpectralFit {
  Centers centers;  // input-space means of the spectral clusters
  std::vector<int> labels;
  double bandwidth = 0.0;  // Gaussian kernel sigma (median pairwise distance)
};

/// Dense Gaussian similarity graph, L = D - W, k-means on the k smallest eigenvectors.
SpectralFit spectral_fit(const Matrix& x, std::size_t k, std::uint64_t seed, const SpectralOptions& options = {});

inline Centers spectral(const Matrix& x, std::size_t k, std::uint64_t seed) { return spectral_fit(x, k, seed).centers; }

// ---------------------------------------------------------------------------
// Sum-of-norms (convex) clustering

struct SonOptions {
  double tolerance = 1e-6;  // relative primal/dual residual tolerance
  int max_iterations = 5000;
  double merge_tolerance = 1e-4;
  double rho = 1.0;  // initial ADMM penalty, adapted by residual balancing
};

/// Edge e of the complete graph on m nodes, enumerated as (0,1), (0,2), ..., (m-2,m-1).
struct Edge {
  std::size_t i;
  std::size_t j;
};

std::vector<Edge> complete_graph_edges(std::size_t m);

/// I v for an edge-major |O| x d matrix v: row i gains v_e and row j loses it.
Matrix incidence_apply(const std::vector<Edge>& edges, const Matrix& v, std::size_t m);

/// Edge differences mu_i - mu_j, i.e. the edge-major form of mu^T I.
Matrix edge_differences(const std::vector<Edge>& edges, const Matrix& mu);

/// Node-arc incidence matrix (m x m(m-1)/2): column e has +1 at row i and -1 at row j.
Matrix incidence_matrix(std::size_t m);

struct SonSolution {
  Matrix mu;  // m x d
  double lambda = 0.0;
  std::vector<std::vector<std::size_t>> merged;  // fused groups of rows
  std::vector<int> fused_label;                  // fused group of each row

  // Primal/dual variables of the split problem, stored edge-major: row e of `eta` is the
  // difference variable of edge e, i.e. the transpose of the d x |O| layout.
  Matrix eta;
  Matrix zeta;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

/// (1/2) sum ||x_j - mu_j||^2 + lambda sum_{i<j} ||mu_i - mu_j||.
double son_objective(const Matrix& x, const Matrix& mu, double lambda);

/// ADMM on min (1/2)||mu - X||^2 + lambda sum_e ||eta_e||  s.t.  mu^T I - eta = 0.
SonSolution son_solve(const Matrix& x, double lambda, const SonOptions& options = {});

/// Rows within `tolerance` of each other (transitively) form one group.
std::vector<std::vector<std::size_t>> fuse_rows(const Matrix& mu, double tolerance);

enum class ProxVariant {
  AsPrinted,    // P(v) = max{0, 1 - 1/||v||} v
  LambdaScaled  // P(v) = max{0, 1 - lambda/||v||} v, the prox of lambda ||.||
};

struct KktResiduals {
  double stationarity = 0.0;  // ||theta + mu - X||
  double prox = 0.0;          // ||eta - P(eta + zeta)||, P applied per edge
  double primal = 0.0;        // ||mu^T I - eta||
  double dual_link = 0.0;     // ||I zeta^T - theta||

  double max() const;
};

/// Frobenius norms of the four optimality conditions. `eta` and `zeta` are edge-major
/// (|O| x d), `theta` is m x d.
KktResiduals son_kkt_residuals(const SonSolution& sol, const Matrix& x, const Matrix& eta, const Matrix& theta,
                               const Matrix& zeta, ProxVariant prox = ProxVariant::AsPrinted);

}  // namespace antidote::clustering
