#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>

#include "antidote/clustering.hpp"
#include "antidote/datasets.hpp"
#include "antidote/error.hpp"
#include "antidote/random.hpp"
#include "oracles.hpp"

using namespace antidote;
using namespace antidote::clustering;

namespace {

Matrix three_blobs_12() {
  return Matrix{{0.0, 0.0}, {0.2, 0.1}, {0.1, 0.3}, {-0.1, 0.1}, {5.0, 5.0}, {5.2, 4.9},
                {4.9, 5.1}, {5.1, 5.2}, {10.0, 0.0}, {10.1, 0.2}, {9.8, -0.1}, {10.2, 0.1}};
}

}  // namespace

TEST_SUITE("clustering") {
  TEST_CASE("assign breaks ties toward the lower index") {
    const Matrix centers{{0.0}, {2.0}};
    const auto labels = assign(Matrix{{1.0}, {-1.0}, {3.0}}, centers);
    CHECK(labels == std::vector<int>{0, 0, 1});
  }

  TEST_CASE("k-means objective trace is non-increasing and the fit is deterministic") {
    data::BlobSpec spec;
    spec.n = 150;
    spec.blobs = 3;
    const auto ds = data::make_skewed_blobs(spec);
    const auto a = kmeans_fit(ds.points, 3, 9);
    const auto b = kmeans_fit(ds.points, 3, 9);
    CHECK(a.centers.mu == b.centers.mu);
    CHECK(a.labels == b.labels);
    for (std::size_t i = 1; i < a.objective_trace.size(); ++i)
      CHECK(a.objective_trace[i] <= a.objective_trace[i - 1] + 1e-12);
    CHECK(a.objective == doctest::Approx(kmeans_objective(ds.points, a.centers.mu)));
  }

  TEST_CASE("k-means on 12 points in 3 blobs beats 200 random center triples") {
    const Matrix x = three_blobs_12();
    const double fitted = kmeans_fit(x, 3, 1).objective;
    Rng rng(77);
    for (int t = 0; t < 200; ++t) {
      Matrix c(3, 2);
      for (double& v : c.data()) v = rng.uniform(-1.0, 11.0);
      CHECK(fitted <= kmeans_objective(x, c) + 1e-12);
    }
  }

  TEST_CASE("k-means edge cases") {
    const Matrix x{{0.0}, {1.0}, {2.0}};
    const auto all = kmeans_fit(x, 3, 0);
    CHECK(all.objective == doctest::Approx(0.0));
    // Fewer distinct points than clusters: a cluster must end up empty, yet centers stay finite.
    const Matrix dup{{0.0}, {0.0}, {0.0}, {0.0}, {1.0}};
    const auto fit = kmeans_fit(dup, 3, 4);
    CHECK(fit.objective == doctest::Approx(0.0));
    for (double v : fit.centers.mu.data()) CHECK(std::isfinite(v));
    for (int l : fit.labels) CHECK((l >= 0 && l < 3));
    CHECK_THROWS_AS(kmeans_fit(x, 4, 0), Error);
    CHECK_THROWS_AS(kmeans_fit(x, 0, 0), Error);
  }

  TEST_CASE("spectral clustering separates well-separated blobs") {
    data::BlobSpec spec;
    spec.n = 60;
    spec.separation = 12.0;
    const auto ds = data::make_skewed_blobs(spec);
    const auto truth = data::skewed_blob_labels(spec);
    const auto fit = spectral_fit(ds.points, 2, 3);
    for (std::size_t r = 1; r < truth.size(); ++r)
      CHECK((fit.labels[r] == fit.labels[0]) == (truth[r] == truth[0]));
    CHECK(fit.bandwidth > 0.0);
    // Centers are input-space means of the clusters.
    double sum = 0.0;
    int count = 0;
    for (std::size_t r = 0; r < truth.size(); ++r)
      if (fit.labels[r] == 0) {
        sum += ds.points(r, 0);
        ++count;
      }
    CHECK(fit.centers.mu(0, 0) == doctest::Approx(sum / count));
  }

  TEST_CASE("spectral edge cases") {
    const Matrix x{{0.0}, {1.0}, {5.0}};
    const auto one = spectral_fit(x, 1, 0);
    CHECK(one.centers.mu(0, 0) == doctest::Approx(2.0));
    SpectralOptions small;
    small.max_rows = 2;
    CHECK_THROWS_WITH_AS(spectral_fit(x, 2, 0, small), doctest::Contains("subsample"), Error);
    SpectralOptions full;
    full.eigen_method = numerics::EigenMethod::TridiagonalQl;
    CHECK(spectral_fit(x, 2, 0, full).labels == spectral_fit(x, 2, 0).labels);
  }

  TEST_CASE("incidence matrix") {
    const std::size_t m = 5;
    const Matrix inc = incidence_matrix(m);
    CHECK(inc.cols() == m * (m - 1) / 2);
    const Matrix lap = inc * inc.transpose();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) CHECK(lap(i, j) == (i == j ? m - 1.0 : -1.0));
    Rng rng(2);
    Matrix v(inc.cols(), 3);
    for (double& x : v.data()) x = rng.normal();
    const auto edges = complete_graph_edges(m);
    const Matrix direct = inc * v;
    const Matrix applied = incidence_apply(edges, v, m);
    CHECK(numerics::frobenius_norm(direct - applied) < 1e-12);
    Matrix mu(m, 3);
    for (double& x : mu.data()) x = rng.normal();
    CHECK(numerics::frobenius_norm(edge_differences(edges, mu) - inc.transpose() * mu) < 1e-12);
  }

  TEST_CASE("SON with lambda = 0 returns X exactly") {
    const Matrix x{{0.3, 1.0}, {2.0, -1.0}, {0.0, 0.0}};
    CHECK(son_solve(x, 0.0).mu == x);
    CHECK(son_solve(Matrix{{4.0, 2.0}}, 1.0).mu == Matrix{{4.0, 2.0}});
  }

  TEST_CASE("SON objective matches a dense grid search on 4-point 1-D instances") {
    Rng rng(19);
    for (int t = 0; t < 6; ++t) {
      std::array<double, 4> x{};
      for (double& v : x) v = rng.uniform(0.0, 3.0);
      const double lambda = rng.uniform(0.05, 0.6);
      Matrix xm(4, 1);
      for (std::size_t i = 0; i < 4; ++i) xm(i, 0) = x[i];
      const auto sol = son_solve(xm, lambda);
      const double admm = son_objective(xm, sol.mu, lambda);
      const double grid = oracle::grid_search_son(x, lambda);
      CHECK(std::abs(admm - grid) < 5e-4);
    }
  }

  TEST_CASE("large lambda fuses everything at the mean") {
    const Matrix x{{0.0}, {1.0}, {2.0}, {7.0}};
    const auto sol = son_solve(x, 10.0);
    CHECK(sol.merged.size() == 1);
    for (std::size_t i = 0; i < 4; ++i) CHECK(sol.mu(i, 0) == doctest::Approx(2.5).epsilon(1e-4));
  }

  TEST_CASE("ADMM output satisfies the printed optimality conditions at lambda = 1") {
    const Matrix x{{0.0, 0.0}, {0.5, 0.2}, {4.0, 4.0}, {4.3, 3.8}, {9.0, 0.0}};
    SonOptions options;
    const auto sol = son_solve(x, 1.0, options);
    const Matrix theta = x - sol.mu;
    const auto res = son_kkt_residuals(sol, x, sol.eta, theta, sol.zeta, ProxVariant::AsPrinted);
    CHECK(res.stationarity < 10 * options.tolerance);
    CHECK(res.prox < 10 * options.tolerance);
    CHECK(res.primal < 10 * options.tolerance);
    CHECK(res.dual_link < 10 * options.tolerance);
  }

  TEST_CASE("the lambda-scaled prox condition holds for every lambda; the printed one only at 1") {
    const Matrix x{{0.0, 0.0}, {0.5, 0.2}, {4.0, 4.0}, {4.3, 3.8}, {9.0, 0.0}};
    for (double lambda : {0.05, 0.3, 2.0}) {
      const auto sol = son_solve(x, lambda);
      const Matrix theta = x - sol.mu;
      const auto scaled = son_kkt_residuals(sol, x, sol.eta, theta, sol.zeta, ProxVariant::LambdaScaled);
      CHECK(scaled.max() < 1e-5);
      if (sol.merged.size() > 1) {
        const auto printed = son_kkt_residuals(sol, x, sol.eta, theta, sol.zeta, ProxVariant::AsPrinted);
        CHECK(printed.prox > 1e-3);
      }
    }
  }

  TEST_CASE("fuse_rows groups rows transitively") {
    const Matrix mu{{0.0}, {0.00005}, {0.0001}, {1.0}};
    const auto groups = fuse_rows(mu, 6e-5);
    CHECK(groups.size() == 2);
    CHECK(groups[0].size() == 3);
  }

  TEST_CASE("SON rejects bad input") {
    CHECK_THROWS_AS(son_solve(Matrix{{1.0}}, -1.0), Error);
    CHECK_THROWS_AS(son_solve(Matrix(0, 1), 1.0), Error);
  }
}
