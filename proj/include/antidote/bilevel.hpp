#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "antidote/clustering.hpp"
#include "antidote/datasets.hpp"
#include "antidote/fairness.hpp"
#include "antidote/metrics.hpp"
#include "antidote/zoopt.hpp"

namespace antidote::bilevel {

using clustering::Centers;
using clustering::ClusteringKind;
using numerics::Matrix;

/// How U rows are charged against SON centers in the social cost.
enum class SonCenterRule {
  AllRows,  // nearest of all m center rows
  OwnRow    // row r of mu for point r
};

/// The lower-level clustering: which algorithm and its parameters.
struct ClusteringSpec {
  ClusteringKind kind = ClusteringKind::KMeans;
  std::size_t k = 2;
  std::uint64_t seed = 0;  // k-means++ / embedding k-means seed; fixed for every solve of one run
  double lambda = 0.01;    // SON regularization
  SonCenterRule son_rule = SonCenterRule::AllRows;
  std::size_t spectral_max_rows = 2000;
  clustering::SonOptions son;
};

/// Result of one lower-level solve on some point matrix.
struct LowerLevel {
  Centers centers;
  std::vector<int> labels;  // cluster of every clustered row
};

LowerLevel solve_lower_level(const Matrix& x, const ClusteringSpec& spec);

/// Fairness of a lower-level solution, charged on U (the first ds.size() rows) only.
double fairness_on_u(const LowerLevel& lower, const data::Dataset& ds, fairness::Notion notion, const ClusteringSpec& spec);

struct AntidoteConfig {
  std::size_t initial_size = 10;  // V_s
  std::size_t growth = 1;         // xi
  double alpha = 0.0;             // threshold used by algorithm1 (algorithm2 reads FairnessSpec::alpha)
  std::size_t max_outer_iters = 20;
  double max_v_fraction = 0.5;
  std::size_t n_prime = 100;
  std::size_t sre_stages = 3;
  std::size_t inner_budget = 300;  // optimizer evaluations per SRE stage
  std::uint64_t seed = 0;
  double gamma = 0.99;
  double lambda = 0.01;
  double box_margin = 0.1;  // antidote box = bounding box of U widened by this fraction per side
  zoopt::RacosConfig racos;
  std::size_t subgradient_steps = 2000;
  double step_scale = 0.1;  // initial subgradient step as a fraction of the box diagonal
};

void validate(const AntidoteConfig& cfg);

/// Threshold that only a strictly fairer clustering than `cost` satisfies.
inline double strictly_below(double cost) { return cost - 1e-9 * std::max(1.0, std::abs(cost)); }

enum class Status { MetAlpha, BudgetExhausted, VCapReached };

std::string to_string(Status status);

struct OuterIteration {
  std::size_t v_size = 0;
  double fairness = 0.0;  // recomputed on U after a fresh lower-level solve
};

struct AntidoteResult {
  Matrix v;
  double fairness_before = 0.0;
  double fairness_after = 0.0;
  double ratio = 0.0;  // |V| / |U|
  std::size_t iterations = 0;
  Status status = Status::BudgetExhausted;
  double alpha = 0.0;
  LowerLevel vanilla;   // lower level on U
  LowerLevel antidote;  // lower level on U and V, recomputed from scratch
  std::vector<OuterIteration> history;
};

/// Axis-aligned box around U's rows, widened by `margin` times the extent on each side.
zoopt::SearchBox antidote_box(const Matrix& u, double margin);

/// General route: f(V) = F(C(U u V), U) minimized by sequential random embedding over RACOS,
/// with V grown by `growth` rows until the threshold is met or a cap is hit.
/// When V_s * d <= n' the embedding is skipped and RACOS runs on the full vector.
AntidoteResult algorithm2(const data::Dataset& ds, const ClusteringSpec& clustering,
                          const fairness::FairnessSpec& fairness, const AntidoteConfig& cfg);

/// The gamma-relaxed KKT system of SON clustering on m points.
struct RelaxedKktSystem {
  std::size_t m = 0;
  double gamma = 1.0;
  double coupling = 0.0;  // (1 - gamma) / gamma
  Matrix system;          // Id + coupling (m Id - 11^T)
  // Variables reconstructed for one right-hand side X; eta and zeta are edge-major (|O| x d).
  Matrix mu;
  Matrix eta;
  Matrix theta;
  Matrix zeta;
};

/// Eliminates eta = mu^T I, zeta = c eta and theta = I zeta^T, leaving (Id + c L) mu = X.
RelaxedKktSystem build_relaxed_kkt(const Matrix& x, double gamma);

struct RelaxedKktResiduals {
  double stationarity = 0.0;  // ||theta + mu - X||
  double relaxed_prox = 0.0;  // ||eta - gamma (eta + zeta)||
  double primal = 0.0;        // ||mu^T I - eta||
  double dual_link = 0.0;     // ||I zeta^T - theta||
  double max() const;
};

RelaxedKktResiduals relaxed_kkt_residuals(const RelaxedKktSystem& sys, const Matrix& x);

/// (Id + c L)^{-1} for m points: the linear map from U u V to the relaxed centers.
Matrix relaxed_center_map(std::size_t m, double gamma);

/// Convex route for SON + social fairness: minimize the social cost of the relaxed centers
/// over V by projected subgradient descent, then verify with a real SON solve on U u V.
AntidoteResult algorithm1(const data::Dataset& ds, const AntidoteConfig& cfg,
                          SonCenterRule rule = SonCenterRule::AllRows);

struct Comparison {
  std::string combination;
  double alpha = 0.0;
  double ratio = 0.0;
  double fairness_vanilla = 0.0;
  double fairness_antidote = 0.0;
  Status status = Status::BudgetExhausted;
  std::optional<metrics::QualityReport> quality_vanilla;  // empty when fewer than 2 clusters on U
  std::optional<metrics::QualityReport> quality_antidote;
};

Comparison compare_vanilla(const data::Dataset& ds, const ClusteringSpec& clustering,
                           const fairness::FairnessSpec& fairness, const AntidoteResult& result);

std::string combination_name(ClusteringKind kind, fairness::Notion notion);

}  // namespace antidote::bilevel
