#include "antidote/bilevel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "antidote/error.hpp"
#include "antidote/random.hpp"

namespace antidote::bilevel {

using numerics::squared_distance;

LowerLevel solve_lower_level(const Matrix& x, const ClusteringSpec& spec) {
  switch (spec.kind) {
    case ClusteringKind::KMeans: {
      auto fit = clustering::kmeans_fit(x, spec.k, spec.seed);
      return {std::move(fit.centers), std::move(fit.labels)};
    }
    case ClusteringKind::Spectral: {
      clustering::SpectralOptions options;
      options.max_rows = spec.spectral_max_rows;
      auto fit = clustering::spectral_fit(x, spec.k, spec.seed, options);
      return {std::move(fit.centers), std::move(fit.labels)};
    }
    case ClusteringKind::Son: {
      auto sol = clustering::son_solve(x, spec.lambda, spec.son);
      return {Centers{std::move(sol.mu), ClusteringKind::Son}, std::move(sol.fused_label)};
    }
  }
  fail(ErrorKind::Internal, "unknown clustering kind");
}

double fairness_on_u(const LowerLevel& lower, const data::Dataset& ds, fairness::Notion notion,
                     const ClusteringSpec& spec) {
  if (lower.centers.kind == ClusteringKind::Son && spec.son_rule == SonCenterRule::OwnRow &&
      notion == fairness::Notion::Social)
    return fairness::social_cost_own_rows(lower.centers.mu, ds).cost;
  return fairness::evaluate(notion, lower.centers, ds).cost;
}

void validate(const AntidoteConfig& cfg) {
  require(cfg.growth >= 1, "antidote: growth step xi must be at least 1");
  require(cfg.gamma > 0.0 && cfg.gamma <= 1.0, "antidote: gamma must lie in (0, 1]");
  require(cfg.max_v_fraction > 0.0, "antidote: max_v_fraction must be positive");
  require(cfg.n_prime >= 1, "antidote: n' must be positive");
  require(cfg.sre_stages >= 1, "antidote: need at least one SRE stage");
  require(cfg.inner_budget >= 1, "antidote: inner budget must be positive");
  require(cfg.lambda >= 0.0, "antidote: lambda must be non-negative");
  require(cfg.box_margin >= 0.0, "antidote: box margin must be non-negative");
  require(cfg.step_scale > 0.0, "antidote: step scale must be positive");
}

std::string to_string(Status status) {
  switch (status) {
    case Status::MetAlpha:
      return "met_alpha";
    case Status::BudgetExhausted:
      return "budget_exhausted";
    case Status::VCapReached:
      return "V_cap_reached";
  }
  return "unknown";
}

zoopt::SearchBox antidote_box(const Matrix& u, double margin) {
  require(u.rows() >= 1, "antidote box: U is empty");
  const std::size_t d = u.cols();
  zoopt::SearchBox box{std::vector<double>(d, std::numeric_limits<double>::infinity()),
                       std::vector<double>(d, -std::numeric_limits<double>::infinity())};
  for (std::size_t r = 0; r < u.rows(); ++r)
    for (std::size_t c = 0; c < d; ++c) {
      box.lower[c] = std::min(box.lower[c], u(r, c));
      box.upper[c] = std::max(box.upper[c], u(r, c));
    }
  for (std::size_t c = 0; c < d; ++c) {
    const double width = box.upper[c] - box.lower[c];
    const double pad = width > 0.0 ? margin * width : margin;
    box.lower[c] -= pad;
    box.upper[c] += pad;
  }
  return box;
}

namespace {

zoopt::SearchBox repeat_box(const zoopt::SearchBox& row_box, std::size_t rows) {
  zoopt::SearchBox box;
  for (std::size_t r = 0; r < rows; ++r) {
    box.lower.insert(box.lower.end(), row_box.lower.begin(), row_box.lower.end());
    box.upper.insert(box.upper.end(), row_box.upper.begin(), row_box.upper.end());
  }
  return box;
}

// Initial V for an outer iteration: the best rows found so far, topped up with uniform draws.
Matrix initial_antidote(const Matrix& previous, std::size_t rows, const zoopt::SearchBox& row_box, Rng& rng) {
  const std::size_t d = row_box.dims();
  Matrix v(rows, d);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < d; ++c)
      v(r, c) = r < previous.rows() ? previous(r, c) : rng.uniform(row_box.lower[c], row_box.upper[c]);
  return v;
}

struct Best {
  Matrix v;
  double fairness = 0.0;
  LowerLevel lower;
  bool set = false;
};

// The grow-V outer loop shared by both algorithms. `inner` maps (initial V, iteration) to an
// optimized V of the same shape.
template <typename Inner>
AntidoteResult outer_loop(const data::Dataset& ds, const ClusteringSpec& spec, fairness::Notion notion, double alpha,
                          const AntidoteConfig& cfg, Inner&& inner) {
  const Matrix& u = ds.points;
  const std::size_t n = ds.size();
  AntidoteResult result;
  result.alpha = alpha;
  result.vanilla = solve_lower_level(u, spec);
  result.fairness_before = fairness_on_u(result.vanilla, ds, notion, spec);

  const zoopt::SearchBox row_box = antidote_box(u, cfg.box_margin);
  const auto cap = static_cast<std::size_t>(std::floor(cfg.max_v_fraction * static_cast<double>(n) + 1e-9));
  Rng init_rng(derive_seed(cfg.seed, seed_stream::kAntidoteInit));

  Best best;
  std::size_t v_size = cfg.initial_size;
  result.status = Status::BudgetExhausted;
  for (std::size_t t = 0; t < cfg.max_outer_iters; ++t) {
    if (v_size > cap) {
      result.status = Status::VCapReached;
      break;
    }
    result.iterations = t + 1;
    const Matrix start = initial_antidote(best.v, v_size, row_box, init_rng);
    Matrix v = v_size == 0 ? start : inner(start, row_box, t);

    LowerLevel lower = solve_lower_level(u.vstack(v), spec);
    const double f = fairness_on_u(lower, ds, notion, spec);
    result.history.push_back({v_size, f});
    if (!best.set || f < best.fairness) best = Best{v, f, std::move(lower), true};
    if (f <= alpha) {
      result.status = Status::MetAlpha;
      break;
    }
    v_size += cfg.growth;
  }

  if (best.set) {
    result.v = std::move(best.v);
    result.fairness_after = best.fairness;
    result.antidote = std::move(best.lower);
  } else {
    result.v = Matrix(0, u.cols());
    result.fairness_after = result.fairness_before;
    result.antidote = result.vanilla;
  }
  result.ratio = static_cast<double>(result.v.rows()) / static_cast<double>(n);
  return result;
}

}  // namespace

AntidoteResult algorithm2(const data::Dataset& ds, const ClusteringSpec& clustering,
                          const fairness::FairnessSpec& fairness, const AntidoteConfig& cfg) {
  validate(cfg);
  fairness::validate(fairness);
  require(clustering.kind == ClusteringKind::KMeans || clustering.kind == ClusteringKind::Spectral,
          "algorithm2: clustering must be kmeans or spectral");
  const Matrix& u = ds.points;
  const std::size_t d = ds.dims();

  auto inner = [&](const Matrix& start, const zoopt::SearchBox& row_box, std::size_t t) {
    const std::size_t rows = start.rows();
    const zoopt::SearchBox box = repeat_box(row_box, rows);
    const zoopt::Objective f = [&](std::span<const double> x) {
      Matrix v(rows, d, std::vector<double>(x.begin(), x.end()));
      const LowerLevel lower = solve_lower_level(u.vstack(v), clustering);
      return fairness_on_u(lower, ds, fairness.notion, clustering);
    };
    const std::uint64_t seed = derive_seed(derive_seed(cfg.seed, seed_stream::kOptimizer), t);
    std::vector<double> flat(start.values());
    std::vector<double> x;
    if (box.dims() > cfg.n_prime) {
      zoopt::SreConfig sre;
      sre.n_prime = cfg.n_prime;
      sre.stages = cfg.sre_stages;
      sre.inner_budget = cfg.inner_budget;
      sre.racos = cfg.racos;
      x = zoopt::sre_minimize(f, box, sre, seed, flat).x;
    } else {
      // Too few coordinates to embed: optimize the full vector with the same total budget.
      x = zoopt::racos_minimize(f, box, cfg.inner_budget * cfg.sre_stages, cfg.racos, seed, {flat}).x;
    }
    return Matrix(rows, d, std::move(x));
  };
  return outer_loop(ds, clustering, fairness.notion, fairness.alpha, cfg, inner);
}

// ---------------------------------------------------------------------------

RelaxedKktSystem build_relaxed_kkt(const Matrix& x, double gamma) {
  require(gamma > 0.0 && gamma <= 1.0, "build_relaxed_kkt: gamma must lie in (0, 1]");
  const std::size_t m = x.rows();
  require(m >= 1, "build_relaxed_kkt: no points");
  RelaxedKktSystem sys;
  sys.m = m;
  sys.gamma = gamma;
  sys.coupling = (1.0 - gamma) / gamma;
  sys.system = Matrix(m, m, -sys.coupling);
  for (std::size_t i = 0; i < m; ++i) sys.system(i, i) = 1.0 + sys.coupling * static_cast<double>(m - 1);

  sys.mu = numerics::solve_spd(sys.system, x);
  const auto edges = clustering::complete_graph_edges(m);
  sys.eta = clustering::edge_differences(edges, sys.mu);
  sys.zeta = sys.coupling * sys.eta;
  sys.theta = clustering::incidence_apply(edges, sys.zeta, m);
  return sys;
}

double RelaxedKktResiduals::max() const { return std::max({stationarity, relaxed_prox, primal, dual_link}); }

RelaxedKktResiduals relaxed_kkt_residuals(const RelaxedKktSystem& sys, const Matrix& x) {
  require(x.rows() == sys.m && x.cols() == sys.mu.cols(), "relaxed_kkt_residuals: X shape differs from the system");
  const auto edges = clustering::complete_graph_edges(sys.m);
  RelaxedKktResiduals r;
  r.stationarity = numerics::frobenius_norm(sys.theta + sys.mu - x);
  r.relaxed_prox = numerics::frobenius_norm(sys.eta - sys.gamma * (sys.eta + sys.zeta));
  r.primal = numerics::frobenius_norm(clustering::edge_differences(edges, sys.mu) - sys.eta);
  r.dual_link = numerics::frobenius_norm(clustering::incidence_apply(edges, sys.zeta, sys.m) - sys.theta);
  return r;
}

Matrix relaxed_center_map(std::size_t m, double gamma) {
  require(gamma > 0.0 && gamma <= 1.0, "relaxed_center_map: gamma must lie in (0, 1]");
  const double c = (1.0 - gamma) / gamma;
  Matrix system(m, m, -c);
  for (std::size_t i = 0; i < m; ++i) system(i, i) = 1.0 + c * static_cast<double>(m - 1);
  return numerics::solve_spd(system, Matrix::identity(m));
}

namespace {

// Projected subgradient descent on V -> F_social(S [U; V], U), keeping the best iterate.
Matrix descend_relaxed_social(const data::Dataset& ds, const Matrix& map, const Matrix& start,
                              const zoopt::SearchBox& row_box, const AntidoteConfig& cfg, SonCenterRule rule) {
  const std::size_t n = ds.size();
  const std::size_t d = ds.dims();
  const std::size_t rows = start.rows();
  const std::size_t m = n + rows;
  const auto group_count = static_cast<std::size_t>(ds.group_count);
  std::vector<std::size_t> group_size(group_count, 0);
  for (int g : ds.groups) ++group_size[static_cast<std::size_t>(g)];

  double diagonal = 0.0;
  for (std::size_t c = 0; c < d; ++c) diagonal += std::pow(row_box.upper[c] - row_box.lower[c], 2);
  const double base_step = cfg.step_scale * std::sqrt(diagonal);

  Matrix x = ds.points.vstack(start);
  Matrix v = start;
  Matrix best_v = start;
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> nearest(n);
  std::vector<double> group_cost(group_count);
  Matrix grad(rows, d);

  for (std::size_t step = 1; step <= cfg.subgradient_steps; ++step) {
    const Matrix mu = map * x;
    std::fill(group_cost.begin(), group_cost.end(), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
      std::size_t arg = r;
      double dist = squared_distance(ds.points.row(r), mu.row(r));
      if (rule == SonCenterRule::AllRows) {
        for (std::size_t c = 0; c < m; ++c) {
          const double dc = squared_distance(ds.points.row(r), mu.row(c));
          if (dc < dist || (dc == dist && c < arg)) {
            dist = dc;
            arg = c;
          }
        }
      }
      nearest[r] = arg;
      group_cost[static_cast<std::size_t>(ds.groups[r])] += dist;
    }
    std::size_t worst = 0;
    for (std::size_t j = 0; j < group_count; ++j) {
      group_cost[j] /= static_cast<double>(group_size[j]);
      if (group_cost[j] > group_cost[worst]) worst = j;
    }
    if (group_cost[worst] < best_value) {
      best_value = group_cost[worst];
      best_v = v;
    }

    // Subgradient of the active group's average through the linear map mu = S X.
    std::fill(grad.data().begin(), grad.data().end(), 0.0);
    const double scale = -2.0 / static_cast<double>(group_size[worst]);
    for (std::size_t r = 0; r < n; ++r) {
      if (static_cast<std::size_t>(ds.groups[r]) != worst) continue;
      const std::size_t a = nearest[r];
      for (std::size_t q = 0; q < rows; ++q) {
        const double weight = scale * map(a, n + q);
        for (std::size_t c = 0; c < d; ++c) grad(q, c) += weight * (ds.points(r, c) - mu(a, c));
      }
    }
    const double norm = numerics::frobenius_norm(grad);
    if (norm == 0.0) break;
    const double length = base_step / std::sqrt(static_cast<double>(step));
    for (std::size_t q = 0; q < rows; ++q) {
      auto row = v.row(q);
      for (std::size_t c = 0; c < d; ++c) row[c] -= length * grad(q, c) / norm;
      row_box.clip(row);
      std::copy(row.begin(), row.end(), x.row(n + q).begin());
    }
  }
  return best_v;
}

}  // namespace

AntidoteResult algorithm1(const data::Dataset& ds, const AntidoteConfig& cfg, SonCenterRule rule) {
  validate(cfg);
  ClusteringSpec spec;
  spec.kind = ClusteringKind::Son;
  spec.lambda = cfg.lambda;
  spec.son_rule = rule;
  const std::size_t n = ds.size();

  auto inner = [&](const Matrix& start, const zoopt::SearchBox& row_box, std::size_t) {
    const Matrix map = relaxed_center_map(n + start.rows(), cfg.gamma);
    return descend_relaxed_social(ds, map, start, row_box, cfg, rule);
  };
  return outer_loop(ds, spec, fairness::Notion::Social, cfg.alpha, cfg, inner);
}

// ---------------------------------------------------------------------------

std::string combination_name(ClusteringKind kind, fairness::Notion notion) {
  std::string name;
  switch (kind) {
    case ClusteringKind::KMeans:
      name = "kmeans";
      break;
    case ClusteringKind::Spectral:
      name = "spectral";
      break;
    case ClusteringKind::Son:
      name = "son";
      break;
  }
  return name + "+" + fairness::to_string(notion);
}

namespace {

std::vector<int> labels_on_u(const LowerLevel& lower, const Matrix& u) {
  if (lower.centers.kind == ClusteringKind::Son)
    return {lower.labels.begin(), lower.labels.begin() + static_cast<std::ptrdiff_t>(u.rows())};
  return clustering::assign(u, lower.centers);
}

std::optional<metrics::QualityReport> try_quality(const Matrix& u, const std::vector<int>& labels) {
  try {
    return metrics::quality_report(u, labels);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InvalidArgument) throw;
    return std::nullopt;
  }
}

}  // namespace

Comparison compare_vanilla(const data::Dataset& ds, const ClusteringSpec& clustering,
                           const fairness::FairnessSpec& fairness, const AntidoteResult& result) {
  Comparison out;
  out.combination = combination_name(clustering.kind, fairness.notion);
  out.alpha = result.alpha;
  out.ratio = result.ratio;
  out.fairness_vanilla = result.fairness_before;
  out.fairness_antidote = result.fairness_after;
  out.status = result.status;
  out.quality_vanilla = try_quality(ds.points, labels_on_u(result.vanilla, ds.points));
  out.quality_antidote = try_quality(ds.points, labels_on_u(result.antidote, ds.points));
  return out;
}

}  // namespace antidote::bilevel
