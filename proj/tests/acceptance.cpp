// Acceptance suite: one PASS/FAIL line per criterion, followed by a summary.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "antidote/bilevel.hpp"
#include "antidote/cli.hpp"
#include "antidote/clustering.hpp"
#include "antidote/datasets.hpp"
#include "antidote/fairness.hpp"
#include "antidote/metrics.hpp"
#include "antidote/random.hpp"
#include "antidote/zoopt.hpp"
#include "oracles.hpp"

using namespace antidote;
using numerics::Matrix;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Line {
  int id = 0;
  std::string title;
  Verdict verdict;
  double seconds = 0.0;
};

std::string fmt(const char* pattern, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, a);
  return buf;
}

Line timed(int id, std::string title, const std::function<Verdict()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Line line{id, std::move(title), {}, 0.0};
  try {
    line.verdict = body();
  } catch (const std::exception& e) {
    line.verdict = {false, std::string("exception: ") + e.what()};
  }
  line.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("criterion %2d: %s  %s  (%s) [%.1fs]\n", line.id, line.verdict.pass ? "PASS" : "FAIL", line.title.c_str(),
              line.verdict.detail.c_str(), line.seconds);
  std::fflush(stdout);
  return line;
}

// ---------------------------------------------------------------------------

Verdict fairness_oracle() {
  Rng rng(2024);
  double worst = 0.0;
  bool in_range = true;
  for (int t = 0; t < 1000; ++t) {
    const auto in = oracle::random_instance(rng);
    const double s = fairness::social_cost(in.centers, in.points, in.groups, in.g).cost;
    const double b = fairness::balance_cost(in.centers, in.points, in.groups, in.g).cost;
    worst = std::max({worst, std::abs(s - oracle::social(in)), std::abs(b - oracle::balance(in))});
    in_range = in_range && b >= -1.0 && b <= 0.0;
  }
  return {worst <= 1e-12 && in_range, "max |diff| " + fmt("%.1e", worst) + (in_range ? ", balance in [-1,0]" : ", balance out of range")};
}

Verdict son_correctness() {
  const Matrix x{{0.3, 1.0}, {2.0, -1.0}, {0.0, 0.0}};
  const bool identity = clustering::son_solve(x, 0.0).mu == x;

  Rng rng(19);
  double grid_gap = 0.0;
  for (int t = 0; t < 6; ++t) {
    std::array<double, 4> p{};
    for (double& v : p) v = rng.uniform(0.0, 3.0);
    const double lambda = rng.uniform(0.05, 0.6);
    Matrix xm(4, 1);
    for (std::size_t i = 0; i < 4; ++i) xm(i, 0) = p[i];
    const auto sol = clustering::son_solve(xm, lambda);
    grid_gap = std::max(grid_gap, std::abs(clustering::son_objective(xm, sol.mu, lambda) - oracle::grid_search_son(p, lambda)));
  }

  const Matrix y{{0.0, 0.0}, {0.5, 0.2}, {4.0, 4.0}, {4.3, 3.8}, {9.0, 0.0}};
  clustering::SonOptions options;
  const auto sol = clustering::son_solve(y, 1.0, options);
  const auto res = clustering::son_kkt_residuals(sol, y, sol.eta, y - sol.mu, sol.zeta, clustering::ProxVariant::AsPrinted);
  const bool kkt = res.max() < 10 * options.tolerance;
  return {identity && grid_gap < 5e-4 && kkt, std::string("lambda=0 identity ") + (identity ? "ok" : "broken") +
                                                  ", grid gap " + fmt("%.1e", grid_gap) + ", KKT residual " +
                                                  fmt("%.1e", res.max())};
}

Verdict relaxed_kkt() {
  Rng rng(4);
  Matrix x(7, 3);
  for (double& v : x.data()) v = rng.normal();
  double worst = 0.0;
  for (double gamma : {0.5, 0.9, 0.99, 1.0 - 1e-6})
    worst = std::max(worst, bilevel::relaxed_kkt_residuals(bilevel::build_relaxed_kkt(x, gamma), x).max());
  const Matrix two{{1.0}, {5.0}};
  const auto sys = bilevel::build_relaxed_kkt(two, 0.5);
  // Id + (2 Id - 11^T) with c = 1 is [[2,-1],[-1,2]]; its inverse is (1/3) [[2,1],[1,2]].
  const double gap = std::abs(sys.mu(0, 0) - 7.0 / 3.0) + std::abs(sys.mu(1, 0) - 11.0 / 3.0);
  return {worst <= 1e-10 && gap < 1e-12, "max residual " + fmt("%.1e", worst) + ", 2x2 gap " + fmt("%.1e", gap)};
}

// Best fairness on U reachable with a single antidote point, by lattice search over the box.
double single_point_oracle(const data::Dataset& ds, const bilevel::ClusteringSpec& spec, fairness::Notion notion,
                           const zoopt::SearchBox& box, std::size_t steps) {
  double best = std::numeric_limits<double>::infinity();
  if (ds.dims() == 1) {
    for (std::size_t i = 0; i <= steps; ++i) {
      const Matrix v{{box.lower[0] + (box.upper[0] - box.lower[0]) * i / steps}};
      best = std::min(best, bilevel::fairness_on_u(bilevel::solve_lower_level(ds.points.vstack(v), spec), ds, notion, spec));
    }
    return best;
  }
  for (std::size_t i = 0; i < steps; ++i)
    for (std::size_t j = 0; j < steps; ++j) {
      const Matrix v{{box.lower[0] + (box.upper[0] - box.lower[0]) * (i + 0.5) / steps,
                      box.lower[1] + (box.upper[1] - box.lower[1]) * (j + 0.5) / steps}};
      best = std::min(best, bilevel::fairness_on_u(bilevel::solve_lower_level(ds.points.vstack(v), spec), ds, notion, spec));
    }
  return best;
}

Verdict lambda_sweep() {
  const auto ds = data::make_line_fixture({});
  const auto box = bilevel::antidote_box(ds.points, 0.1);
  int nonnegative = 0, oracle_improvable = 0;
  double worst_ratio = 0.0, least_diff = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= 10; ++i) {
    const double lambda = 0.001 * i;
    bilevel::ClusteringSpec spec;
    spec.kind = clustering::ClusteringKind::Son;
    spec.lambda = lambda;
    const double vanilla = bilevel::fairness_on_u(bilevel::solve_lower_level(ds.points, spec), ds, fairness::Notion::Social, spec);
    if (single_point_oracle(ds, spec, fairness::Notion::Social, box, 200) < vanilla) ++oracle_improvable;

    bilevel::AntidoteConfig cfg;
    cfg.lambda = lambda;
    cfg.initial_size = 1;
    cfg.growth = 1;
    cfg.max_v_fraction = 0.1;
    cfg.alpha = bilevel::strictly_below(vanilla);
    const auto r = bilevel::algorithm1(ds, cfg);
    // fairness_after is recomputed by a fresh son_solve on U and V.
    const double diff = r.fairness_before - r.fairness_after;
    least_diff = std::min(least_diff, diff);
    nonnegative += diff >= 0.0;
    worst_ratio = std::max(worst_ratio, r.ratio);
  }
  return {nonnegative == 10 && worst_ratio <= 0.1,
          std::to_string(nonnegative) + "/10 lambdas with difference >= 0 (min " + fmt("%.3e", least_diff) +
              "), max |V|/|U| " + fmt("%.3f", worst_ratio) + ", single-point oracle improves " +
              std::to_string(oracle_improvable) + "/10"};
}

// ---------------------------------------------------------------------------

struct Run {
  bool improved = false;
  double ratio = 0.0;
  std::optional<double> silhouette_vanilla;
  std::optional<double> silhouette_antidote;
};

struct Protocol {
  std::string name;
  std::vector<Run> runs;
  bool oracle_found = false;
  int improved() const {
    int c = 0;
    for (const auto& r : runs) c += r.improved && r.ratio <= 0.05 + 1e-12;
    return c;
  }
};

data::Dataset protocol_fixture(std::size_t blobs) {
  data::BlobSpec spec;
  spec.n = 200;
  spec.dims = 2;
  spec.groups = 2;
  spec.skew = 0.6;
  spec.blobs = blobs;
  spec.seed = 0;
  return data::make_skewed_blobs(spec);
}

Protocol run_protocol(clustering::ClusteringKind kind, fairness::Notion notion, std::size_t k) {
  const auto ds = protocol_fixture(k);
  Protocol p;
  p.name = bilevel::combination_name(kind, notion) + " k=" + std::to_string(k);

  bilevel::ClusteringSpec oracle_spec;
  oracle_spec.kind = kind;
  oracle_spec.k = k;
  oracle_spec.seed = derive_seed(0, seed_stream::kClustering);
  const double vanilla0 =
      bilevel::fairness_on_u(bilevel::solve_lower_level(ds.points, oracle_spec), ds, notion, oracle_spec);
  p.oracle_found = single_point_oracle(ds, oracle_spec, notion, bilevel::antidote_box(ds.points, 0.1), 50) < vanilla0;

  for (std::uint64_t s = 0; s < 10; ++s) {
    bilevel::ClusteringSpec cs;
    cs.kind = kind;
    cs.k = k;
    cs.seed = derive_seed(s, seed_stream::kClustering);
    const double vanilla = bilevel::fairness_on_u(bilevel::solve_lower_level(ds.points, cs), ds, notion, cs);
    bilevel::AntidoteConfig cfg;
    cfg.seed = s;
    cfg.initial_size = 1;
    cfg.growth = 1;
    cfg.max_v_fraction = 0.05;
    cfg.inner_budget = 100;
    const fairness::FairnessSpec fs{notion, bilevel::strictly_below(vanilla)};
    const auto r = bilevel::algorithm2(ds, cs, fs, cfg);
    const auto cmp = bilevel::compare_vanilla(ds, cs, fs, r);
    Run run;
    run.improved = r.fairness_after < r.fairness_before;
    run.ratio = r.ratio;
    if (cmp.quality_vanilla) run.silhouette_vanilla = cmp.quality_vanilla->silhouette;
    if (cmp.quality_antidote) run.silhouette_antidote = cmp.quality_antidote->silhouette;
    p.runs.push_back(run);
  }
  return p;
}

Verdict protocol_verdict(const Protocol& p, int needed) {
  const int got = p.improved();
  std::string detail = p.name + ": lattice oracle " + (p.oracle_found ? "found" : "found no") +
                       " improving single point, improved in " + std::to_string(got) + "/10";
  if (!p.oracle_found && got > 0) detail += " (improvements need |V| > 1)";
  return {p.oracle_found && got >= needed, detail};
}

Verdict join(const std::vector<Verdict>& parts) {
  Verdict v{true, ""};
  for (const auto& part : parts) {
    v.pass = v.pass && part.pass;
    v.detail += (v.detail.empty() ? "" : "; ") + part.detail;
  }
  return v;
}

Verdict quality_preservation(const std::vector<Protocol>& protocols) {
  int checked = 0, within = 0;
  double worst = 0.0;
  std::string violations;
  for (const auto& p : protocols)
    for (std::size_t s = 0; s < p.runs.size(); ++s) {
      const Run& r = p.runs[s];
      if (!r.improved || !r.silhouette_vanilla || !r.silhouette_antidote) continue;
      ++checked;
      const double delta = *r.silhouette_antidote - *r.silhouette_vanilla;
      worst = std::max(worst, std::abs(delta));
      if (std::abs(delta) <= 0.1) {
        ++within;
      } else {
        violations += (violations.empty() ? "" : ", ") + p.name + " seed " + std::to_string(s) + " " + fmt("%+.3f", delta);
      }
    }
  std::string detail = std::to_string(within) + "/" + std::to_string(checked) +
                       " successful runs within 0.1, max |delta| " + fmt("%.3f", worst);
  if (!violations.empty()) detail += "; outside: " + violations;
  return {checked > 0 && within == checked, detail};
}

// ---------------------------------------------------------------------------

Verdict optimizer_sanity() {
  const auto sphere = [](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
  };
  int racos_ok = 0, sre_ok = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    racos_ok += zoopt::racos_minimize(sphere, zoopt::SearchBox::uniform(10, -1.0, 1.0), 2000, {}, seed).value <= 0.05;

  const auto low_dim = [](std::span<const double> x) {
    return (x[0] - 0.3) * (x[0] - 0.3) + (x[1] + 0.2) * (x[1] + 0.2);
  };
  const std::vector<double> start(200, 0.8);
  zoopt::SreConfig cfg;
  cfg.n_prime = 10;
  cfg.stages = 3;
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    sre_ok += zoopt::sre_minimize(low_dim, zoopt::SearchBox::uniform(200, -1.0, 1.0), cfg, seed, start).value <=
              0.1 * low_dim(start);
  return {racos_ok >= 9 && sre_ok >= 8,
          "racos " + std::to_string(racos_ok) + "/10 seeds <= 0.05, sre " + std::to_string(sre_ok) + "/10 seeds <= 0.1x start"};
}

Verdict metric_fixtures() {
  const Matrix x{{0.0}, {1.0}, {10.0}, {11.0}};
  const std::vector<int> labels{0, 0, 1, 1};
  const double expected = 0.5 * ((1.0 - 1.0 / 10.5) + (1.0 - 1.0 / 9.5));
  const double sil_gap = std::abs(metrics::silhouette(x, labels) - expected);
  const double db_gap = std::abs(metrics::davies_bouldin(x, labels) - 0.1);

  Rng rng(8);
  double drift = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 6 + rng.below(20), k = 2 + rng.below(3);
    Matrix pts(n, 2), moved(n, 2);
    std::vector<int> lab(n), relabeled(n);
    const double angle = rng.uniform(0.0, 6.283185307179586), tx = rng.uniform(-50, 50), ty = rng.uniform(-50, 50);
    for (std::size_t r = 0; r < n; ++r) {
      lab[r] = r < k ? static_cast<int>(r) : static_cast<int>(rng.below(k));
      relabeled[r] = 10 - lab[r];
      pts(r, 0) = 4.0 * lab[r] + rng.normal();
      pts(r, 1) = rng.normal();
      moved(r, 0) = std::cos(angle) * pts(r, 0) - std::sin(angle) * pts(r, 1) + tx;
      moved(r, 1) = std::sin(angle) * pts(r, 0) + std::cos(angle) * pts(r, 1) + ty;
    }
    const auto base = metrics::quality_report(pts, lab);
    for (const auto& q : {metrics::quality_report(pts, relabeled), metrics::quality_report(moved, lab)}) {
      drift = std::max(drift, std::abs(q.silhouette - base.silhouette));
      drift = std::max(drift, std::abs(q.davies_bouldin - base.davies_bouldin) / std::max(1.0, base.davies_bouldin));
      drift = std::max(drift, std::abs(q.calinski_harabasz - base.calinski_harabasz) / std::max(1.0, base.calinski_harabasz));
    }
  }
  return {sil_gap <= 1e-6 && db_gap <= 1e-12 && drift <= 1e-9,
          "silhouette gap " + fmt("%.1e", sil_gap) + ", DB gap " + fmt("%.1e", db_gap) + ", max relative drift " +
              fmt("%.1e", drift)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Verdict cli_determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(ANTIDOTE_TEST_TMP) / "acceptance";
  fs::create_directories(dir);
  const auto p = [&](const char* name) { return (dir / name).string(); };

  struct Case {
    std::string name;
    std::vector<std::string> args;
    std::vector<std::string> files;
  };
  const std::vector<Case> cases{
      {"gen-fixture", {"gen-fixture", "--kind", "blobs", "--n", "200", "--skew", "0.6", "--labels", "--out", p("blobs.csv")},
       {p("blobs.csv")}},
      {"run",
       {"run", "--data", p("blobs.csv"), "--exclude", "blob", "--combination", "kmeans+balance", "--seed", "7",
        "--initial-size", "1", "--max-v-fraction", "0.05", "--inner-budget", "50", "--csv", p("run.csv"), "--json",
        p("run.json")},
       {p("run.csv"), p("run.json")}},
      {"gen-fixture line",
       {"gen-fixture", "--kind", "line", "--out", p("line.csv")}, {p("line.csv")}},
      {"sweep-lambda",
       {"sweep-lambda", "--data", p("line.csv"), "--lambda-steps", "4", "--initial-size", "1", "--subgradient-steps",
        "300", "--seed", "7", "--jobs", "2", "--csv", p("sweep.csv"), "--json", p("sweep.json")},
       {p("sweep.csv"), p("sweep.json")}},
      {"metrics",
       {"metrics", "--data", p("blobs.csv"), "--labels-col", "blob", "--exclude", "group", "--json", p("metrics.json")},
       {p("metrics.json")}},
  };

  int identical = 0;
  std::string differing;
  for (const auto& c : cases) {
    std::vector<std::string> first;
    std::string first_out;
    bool same = true;
    for (int attempt = 0; attempt < 2; ++attempt) {
      for (const auto& f : c.files) fs::remove(f);
      std::ostringstream out, err;
      if (antidote::cli::run_cli(c.args, out, err) != 0) return {false, c.name + " failed: " + err.str()};
      std::vector<std::string> contents;
      for (const auto& f : c.files) contents.push_back(slurp(f));
      if (attempt == 0) {
        first = contents;
        first_out = out.str();
      } else {
        same = contents == first && out.str() == first_out;
      }
    }
    identical += same;
    if (!same) differing += " " + c.name;
  }
  return {identical == static_cast<int>(cases.size()),
          std::to_string(identical) + "/" + std::to_string(cases.size()) + " invocations byte-identical" +
              (differing.empty() ? "" : "; differing:" + differing)};
}

}  // namespace

int main() {
  std::vector<Line> lines;
  lines.push_back(timed(1, "fairness-definition oracle", fairness_oracle));
  lines.push_back(timed(2, "SON correctness", son_correctness));
  lines.push_back(timed(3, "relaxed-KKT reduction", relaxed_kkt));
  lines.push_back(timed(4, "convex route lambda sweep", lambda_sweep));

  std::vector<Protocol> protocols;
  lines.push_back(timed(5, "kmeans+balance improvement", [&] {
    protocols.push_back(run_protocol(clustering::ClusteringKind::KMeans, fairness::Notion::Balance, 2));
    return protocol_verdict(protocols.back(), 8);
  }));
  lines.push_back(timed(6, "kmeans+social and spectral+balance improvement", [&] {
    protocols.push_back(run_protocol(clustering::ClusteringKind::KMeans, fairness::Notion::Social, 2));
    protocols.push_back(run_protocol(clustering::ClusteringKind::Spectral, fairness::Notion::Balance, 2));
    return join({protocol_verdict(protocols[protocols.size() - 2], 7), protocol_verdict(protocols.back(), 7)});
  }));
  lines.push_back(timed(7, "k > 2 support", [&] {
    protocols.push_back(run_protocol(clustering::ClusteringKind::KMeans, fairness::Notion::Balance, 3));
    protocols.push_back(run_protocol(clustering::ClusteringKind::KMeans, fairness::Notion::Balance, 4));
    return join({protocol_verdict(protocols[protocols.size() - 2], 7), protocol_verdict(protocols.back(), 7)});
  }));
  lines.push_back(timed(8, "optimizer sanity", optimizer_sanity));
  lines.push_back(timed(9, "metric fixtures", metric_fixtures));
  lines.push_back(timed(10, "quality preservation", [&] { return quality_preservation(protocols); }));
  lines.push_back(timed(11, "CLI determinism", cli_determinism));

  int passed = 0;
  for (const auto& l : lines) passed += l.verdict.pass;
  std::printf("acceptance: %d/%zu criteria passed\n", passed, lines.size());
  return 0;
}
