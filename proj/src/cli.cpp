#include "antidote/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "antidote/bilevel.hpp"
#include "antidote/datasets.hpp"
#include "antidote/error.hpp"
#include "antidote/metrics.hpp"
#include "antidote/random.hpp"

namespace antidote::cli {

namespace {

using Json = nlohmann::ordered_json;
using numerics::Matrix;

// ---------------------------------------------------------------------------
// Formatting

std::string fixed4(double value) {
  if (std::isnan(value)) return "NA";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", value);
  std::string s = buf;
  if (s == "-0.0000") s = "0.0000";
  return s;
}

std::string sci4(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4e", value);
  return buf;
}

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (double v : m.row(r)) row.push_back(v);
    rows.push_back(std::move(row));
  }
  return rows;
}

Json quality_json(const std::optional<metrics::QualityReport>& q) {
  if (!q) return nullptr;
  Json j;
  j["silhouette"] = q->silhouette;
  j["davies_bouldin"] = q->davies_bouldin;
  j["calinski_harabasz"] = q->calinski_harabasz;
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) fail(ErrorKind::Io, "cannot write '" + path + "'");
  file << text;
  if (!file) fail(ErrorKind::Io, "failed writing '" + path + "'");
}

// Appends rows, writing the header first when the file is new or empty.
void append_csv(const std::string& path, const std::string& header, const std::string& rows) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  std::ofstream file(path, std::ios::binary | std::ios::app);
  if (!file) fail(ErrorKind::Io, "cannot write '" + path + "'");
  if (fresh) file << header << '\n';
  file << rows;
  if (!file) fail(ErrorKind::Io, "failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------
// Input

std::string read_text(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << file.rdbuf();
  return buffer.str();
}

std::vector<std::string> csv_header(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) fail(ErrorKind::Io, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(file, line)) fail(ErrorKind::Parse, path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return data::split_csv_line(line);
}

struct DataOptions {
  std::string path;
  std::string group_column = "group";
  std::vector<std::string> features;
  std::vector<std::string> exclude;
  bool standardize = false;
  std::size_t subsample = 0;
};

void add_data_options(CLI::App* app, DataOptions& o) {
  app->add_option("--data", o.path, "Dataset CSV with a header row")->required();
  app->add_option("--group-col", o.group_column, "Protected-group column")->capture_default_str();
  app->add_option("--features", o.features, "Feature columns (default: every other column)")->delimiter(',');
  app->add_option("--exclude", o.exclude, "Columns to drop from the default feature set")->delimiter(',');
  app->add_flag("--standardize", o.standardize, "Z-score every feature");
  app->add_option("--subsample", o.subsample, "Keep this many rows (0 keeps all)");
}

std::vector<std::string> feature_columns(const std::string& path, const std::vector<std::string>& features,
                                         const std::vector<std::string>& skip) {
  if (!features.empty()) return features;
  std::vector<std::string> out;
  for (const auto& name : csv_header(path))
    if (std::find(skip.begin(), skip.end(), name) == skip.end()) out.push_back(name);
  return out;
}

data::Dataset load_dataset(const DataOptions& o, std::uint64_t seed, std::ostream& err) {
  std::vector<std::string> skip = o.exclude;
  skip.push_back(o.group_column);
  const auto columns = feature_columns(o.path, o.features, skip);
  auto loaded = data::load_csv(o.path, o.group_column, columns);
  if (loaded.dropped_rows > 0)
    err << "note: dropped " << loaded.dropped_rows << " rows with missing values from '" << o.path << "'\n";
  data::Dataset ds = std::move(loaded.data);
  if (o.subsample > 0 && o.subsample < ds.size())
    ds = data::subsample(ds, o.subsample, derive_seed(seed, seed_stream::kSubsample));
  if (o.standardize) ds = data::standardize(ds);
  return ds;
}

std::string dataset_name(const std::string& path) { return std::filesystem::path(path).stem().string(); }

// ---------------------------------------------------------------------------
// Antidote options shared by run and sweep-lambda

struct AntidoteOptions {
  bilevel::AntidoteConfig cfg;
  std::string son_rule = "all";
  std::size_t spectral_max_rows = 2000;
  std::string alpha = "improve";
};

void add_antidote_options(CLI::App* app, AntidoteOptions& o) {
  auto& c = o.cfg;
  app->add_option("--alpha", o.alpha,
                  "Target cost: a number, 'vanilla' (no worse than vanilla) or 'improve' (strictly fairer)")
      ->capture_default_str();
  app->add_option("--initial-size", c.initial_size, "Initial number of antidote points")->capture_default_str();
  app->add_option("--growth", c.growth, "Points added per unsuccessful outer iteration")->capture_default_str();
  app->add_option("--max-outer-iters", c.max_outer_iters, "Outer iteration cap")->capture_default_str();
  app->add_option("--max-v-fraction", c.max_v_fraction, "Cap on |V|/|U|")->capture_default_str();
  app->add_option("--n-prime", c.n_prime, "Embedding dimension of the random embedding")->capture_default_str();
  app->add_option("--stages", c.sre_stages, "Random embedding stages")->capture_default_str();
  app->add_option("--inner-budget", c.inner_budget, "Objective evaluations per stage")->capture_default_str();
  app->add_option("--gamma", c.gamma, "Relaxation parameter of the convex route")->capture_default_str();
  app->add_option("--lambda", c.lambda, "SON regularization weight")->capture_default_str();
  app->add_option("--box-margin", c.box_margin, "Antidote box margin as a fraction of U's extent")
      ->capture_default_str();
  app->add_option("--subgradient-steps", c.subgradient_steps, "Steps of the convex-route inner solver")
      ->capture_default_str();
  app->add_option("--step-scale", c.step_scale, "Initial subgradient step as a fraction of the box diagonal")
      ->capture_default_str();
  app->add_option("--positive-size", c.racos.positive_size, "RACOS positive set size")->capture_default_str();
  app->add_option("--initial-samples", c.racos.initial_samples, "RACOS initial samples")->capture_default_str();
  app->add_option("--uncertain-bits", c.racos.uncertain_bits, "Coordinates resampled per proposal (0: auto)")
      ->capture_default_str();
  app->add_option("--explore", c.racos.explore_probability, "Probability of a uniform proposal")
      ->capture_default_str();
  app->add_option("--batch-size", c.racos.batch_size, "Proposals per learning round")->capture_default_str();
  app->add_option("--threads", c.racos.threads, "Worker threads per batch")->capture_default_str();
  app->add_option("--son-rule", o.son_rule, "SON centers charged in the social cost: all | own")
      ->check(CLI::IsMember({"all", "own"}))
      ->capture_default_str();
  app->add_option("--spectral-max-rows", o.spectral_max_rows, "Row cap of the dense spectral route")
      ->capture_default_str();
}

double resolve_alpha(const std::string& text, double vanilla) {
  if (text == "improve") return bilevel::strictly_below(vanilla);
  if (text == "vanilla") return vanilla;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    fail(ErrorKind::InvalidArgument, "--alpha: expected a number, 'vanilla' or 'improve', got '" + text + "'");
  return value;
}

struct Combination {
  clustering::ClusteringKind kind;
  fairness::Notion notion;
};

Combination parse_combination(const std::string& name) {
  static const std::map<std::string, Combination> known{
      {"kmeans+balance", {clustering::ClusteringKind::KMeans, fairness::Notion::Balance}},
      {"kmeans+social", {clustering::ClusteringKind::KMeans, fairness::Notion::Social}},
      {"spectral+balance", {clustering::ClusteringKind::Spectral, fairness::Notion::Balance}},
      {"son+social", {clustering::ClusteringKind::Son, fairness::Notion::Social}},
  };
  const auto it = known.find(name);
  if (it == known.end())
    fail(ErrorKind::InvalidArgument,
         "unknown combination '" + name + "' (expected kmeans+balance, kmeans+social, spectral+balance or son+social)");
  return it->second;
}

bilevel::ClusteringSpec clustering_spec(const Combination& comb, std::size_t k, std::uint64_t seed,
                                        const AntidoteOptions& o) {
  bilevel::ClusteringSpec spec;
  spec.kind = comb.kind;
  spec.k = k;
  spec.seed = derive_seed(seed, seed_stream::kClustering);
  spec.lambda = o.cfg.lambda;
  spec.son_rule = o.son_rule == "own" ? bilevel::SonCenterRule::OwnRow : bilevel::SonCenterRule::AllRows;
  spec.spectral_max_rows = o.spectral_max_rows;
  return spec;
}

struct Outcome {
  bilevel::AntidoteResult result;
  bilevel::Comparison comparison;
};

Outcome run_antidote(const data::Dataset& ds, const Combination& comb, const bilevel::ClusteringSpec& spec,
                     AntidoteOptions options, std::uint64_t seed) {
  options.cfg.seed = seed;
  options.cfg.lambda = spec.lambda;
  const bilevel::LowerLevel vanilla = bilevel::solve_lower_level(ds.points, spec);
  const double alpha = resolve_alpha(options.alpha, bilevel::fairness_on_u(vanilla, ds, comb.notion, spec));
  fairness::FairnessSpec fairness{comb.notion, alpha};
  Outcome out;
  if (comb.kind == clustering::ClusteringKind::Son) {
    options.cfg.alpha = alpha;
    out.result = bilevel::algorithm1(ds, options.cfg, spec.son_rule);
  } else {
    out.result = bilevel::algorithm2(ds, spec, fairness, options.cfg);
  }
  out.comparison = bilevel::compare_vanilla(ds, spec, fairness, out.result);
  return out;
}

Json config_json(const AntidoteOptions& o) {
  const auto& c = o.cfg;
  Json j;
  j["initial_size"] = c.initial_size;
  j["growth"] = c.growth;
  j["max_outer_iters"] = c.max_outer_iters;
  j["max_v_fraction"] = c.max_v_fraction;
  j["n_prime"] = c.n_prime;
  j["stages"] = c.sre_stages;
  j["inner_budget"] = c.inner_budget;
  j["gamma"] = c.gamma;
  j["lambda"] = c.lambda;
  j["box_margin"] = c.box_margin;
  j["subgradient_steps"] = c.subgradient_steps;
  j["step_scale"] = c.step_scale;
  j["positive_size"] = c.racos.positive_size;
  j["initial_samples"] = c.racos.initial_samples;
  j["uncertain_bits"] = c.racos.uncertain_bits;
  j["explore"] = c.racos.explore_probability;
  j["batch_size"] = c.racos.batch_size;
  j["son_rule"] = o.son_rule;
  j["alpha_rule"] = o.alpha;
  return j;
}

Json result_json(const Outcome& o) {
  const auto& r = o.result;
  Json j;
  j["alpha"] = r.alpha;
  j["status"] = bilevel::to_string(r.status);
  j["iterations"] = r.iterations;
  j["V_ratio"] = r.ratio;
  j["F_vanilla"] = r.fairness_before;
  j["F_antidote"] = r.fairness_after;
  j["V"] = matrix_json(r.v);
  Json history = Json::array();
  for (const auto& h : r.history) history.push_back({{"v_size", h.v_size}, {"fairness", h.fairness}});
  j["history"] = std::move(history);
  j["quality_vanilla"] = quality_json(o.comparison.quality_vanilla);
  j["quality_antidote"] = quality_json(o.comparison.quality_antidote);
  j["centers_vanilla"] = matrix_json(r.vanilla.centers.mu);
  j["centers_antidote"] = matrix_json(r.antidote.centers.mu);
  return j;
}

std::string run_row(const bilevel::Comparison& c, const std::string& dataset, std::size_t k, std::uint64_t seed) {
  const double nan = std::nan("");
  auto sil = [&](const auto& q) { return q ? q->silhouette : nan; };
  auto db = [&](const auto& q) { return q ? q->davies_bouldin : nan; };
  auto ch = [&](const auto& q) {
    return q ? (q->calinski_harabasz_saturated ? std::numeric_limits<double>::infinity() : q->calinski_harabasz) : nan;
  };
  std::ostringstream row;
  row << c.combination << ',' << dataset << ',' << k << ',' << fixed4(c.alpha) << ',' << fixed4(c.ratio) << ','
      << fixed4(c.fairness_vanilla) << ',' << fixed4(c.fairness_antidote) << ',' << fixed4(sil(c.quality_vanilla))
      << ',' << fixed4(sil(c.quality_antidote)) << ',' << fixed4(db(c.quality_vanilla)) << ','
      << fixed4(db(c.quality_antidote)) << ',' << fixed4(ch(c.quality_vanilla)) << ','
      << fixed4(ch(c.quality_antidote)) << ',' << bilevel::to_string(c.status) << ',' << seed << '\n';
  return row.str();
}

// ---------------------------------------------------------------------------
// Subcommands

struct RunOptions {
  DataOptions data;
  AntidoteOptions antidote;
  std::string combination = "kmeans+balance";
  std::size_t k = 2;
  std::uint64_t seed = 0;
  std::string json_path;
  std::string csv_path;
};

int cmd_run(const RunOptions& o, std::ostream& out, std::ostream& err) {
  const Combination comb = parse_combination(o.combination);
  if (comb.kind != clustering::ClusteringKind::Son)
    require(o.k >= 2, "--k must be at least 2 for " + o.combination);
  const data::Dataset ds = load_dataset(o.data, o.seed, err);
  const auto spec = clustering_spec(comb, o.k, o.seed, o.antidote);
  const Outcome outcome = run_antidote(ds, comb, spec, o.antidote, o.seed);

  const std::string name = dataset_name(o.data.path);
  const std::string row = run_row(outcome.comparison, name, o.k, o.seed);
  if (!o.csv_path.empty()) append_csv(o.csv_path, kRunCsvHeader, row);
  if (!o.json_path.empty()) {
    Json j;
    j["combination"] = o.combination;
    j["dataset"] = name;
    j["n"] = ds.size();
    j["d"] = ds.dims();
    j["k"] = o.k;
    j["seed"] = o.seed;
    j["config"] = config_json(o.antidote);
    j["result"] = result_json(outcome);
    write_text(o.json_path, j.dump(2) + "\n");
  }
  out << kRunCsvHeader << '\n' << row;
  return kSuccess;
}

struct SweepOptions {
  DataOptions data;
  AntidoteOptions antidote;
  std::vector<double> lambdas;
  double lambda_min = 0.001;
  double lambda_max = 0.01;
  std::size_t lambda_steps = 10;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
  std::string csv_path;
  std::string json_path;
};

std::vector<double> lambda_grid(const SweepOptions& o) {
  if (!o.lambdas.empty()) return o.lambdas;
  require(o.lambda_steps >= 1, "--lambda-steps must be positive");
  require(o.lambda_min > 0.0 && o.lambda_max >= o.lambda_min, "lambda range must satisfy 0 < min <= max");
  std::vector<double> grid;
  for (std::size_t i = 0; i < o.lambda_steps; ++i) {
    const double t = o.lambda_steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(o.lambda_steps - 1);
    grid.push_back(o.lambda_min + t * (o.lambda_max - o.lambda_min));
  }
  return grid;
}

int cmd_sweep(const SweepOptions& o, std::ostream& out, std::ostream& err) {
  const data::Dataset ds = load_dataset(o.data, o.seed, err);
  const std::vector<double> grid = lambda_grid(o);
  for (double l : grid) require(l >= 0.0, "lambda values must be non-negative");
  const Combination comb{clustering::ClusteringKind::Son, fairness::Notion::Social};

  std::vector<std::optional<Outcome>> outcomes(grid.size());
  std::vector<std::exception_ptr> errors(grid.size());
  auto work = [&](std::size_t i) {
    try {
      AntidoteOptions options = o.antidote;
      options.cfg.lambda = grid[i];
      const std::uint64_t seed = derive_seed(o.seed, i);
      const auto spec = clustering_spec(comb, 1, seed, options);
      outcomes[i] = run_antidote(ds, comb, spec, options, seed);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(o.jobs, 1, grid.size());
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < jobs; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < grid.size(); i += jobs) work(i);
    });
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::ostringstream rows;
  Json points = Json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& r = outcomes[i]->result;
    const double diff = r.fairness_before - r.fairness_after;
    rows << sci4(grid[i]) << ',' << sci4(r.fairness_before) << ',' << sci4(r.fairness_after) << ',' << sci4(diff)
         << '\n';
    Json p;
    p["lambda"] = grid[i];
    p["seed"] = derive_seed(o.seed, i);
    p["F_vanilla"] = r.fairness_before;
    p["F_antidote"] = r.fairness_after;
    p["difference"] = diff;
    p["V_ratio"] = r.ratio;
    p["status"] = bilevel::to_string(r.status);
    p["V"] = matrix_json(r.v);
    points.push_back(std::move(p));
  }
  if (!o.csv_path.empty()) write_text(o.csv_path, std::string(kSweepCsvHeader) + "\n" + rows.str());
  if (!o.json_path.empty()) {
    Json j;
    j["combination"] = "son+social";
    j["dataset"] = dataset_name(o.data.path);
    j["seed"] = o.seed;
    j["config"] = config_json(o.antidote);
    j["points"] = std::move(points);
    write_text(o.json_path, j.dump(2) + "\n");
  }
  out << kSweepCsvHeader << '\n' << rows.str();
  return kSuccess;
}

struct MetricsOptions {
  std::string path;
  std::string labels_column;
  std::string labels_file;
  std::vector<std::string> features;
  std::vector<std::string> exclude;
  std::string json_path;
};

double parse_number(const std::string& text, const std::string& where) {
  std::string trimmed = text;
  while (!trimmed.empty() && (trimmed.back() == ' ' || trimmed.back() == '\r')) trimmed.pop_back();
  std::size_t start = trimmed.find_first_not_of(' ');
  trimmed = start == std::string::npos ? "" : trimmed.substr(start);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), value);
  if (trimmed.empty() || ec != std::errc() || ptr != trimmed.data() + trimmed.size())
    fail(ErrorKind::Parse, where + ": '" + text + "' is not a number");
  return value;
}

std::vector<std::vector<std::string>> read_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(data::split_csv_line(line));
  }
  return rows;
}

int cmd_metrics(const MetricsOptions& o, std::ostream& out) {
  require(o.labels_column.empty() != o.labels_file.empty(), "metrics: give exactly one of --labels-col or --labels-file");
  const auto rows = read_rows(read_text(o.path));
  if (rows.empty()) fail(ErrorKind::Parse, o.path + ": empty file");
  const auto& header = rows.front();
  auto column_of = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) fail(ErrorKind::InvalidArgument, o.path + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };

  std::vector<std::string> skip = o.exclude;
  if (!o.labels_column.empty()) skip.push_back(o.labels_column);
  std::vector<std::size_t> feature_index;
  for (const auto& name : feature_columns(o.path, o.features, skip)) feature_index.push_back(column_of(name));
  require(!feature_index.empty(), "metrics: no feature columns");

  std::vector<std::string> raw_labels;
  if (!o.labels_column.empty()) {
    const std::size_t c = column_of(o.labels_column);
    for (std::size_t r = 1; r < rows.size(); ++r) {
      if (c >= rows[r].size()) fail(ErrorKind::Parse, o.path + ":" + std::to_string(r + 1) + ": too few fields");
      raw_labels.push_back(rows[r][c]);
    }
  } else {
    for (const auto& row : read_rows(read_text(o.labels_file))) raw_labels.push_back(row.front());
    // One line more than the data means the file has a header.
    if (!raw_labels.empty() && raw_labels.size() == rows.size()) raw_labels.erase(raw_labels.begin());
  }
  const std::size_t n = rows.size() - 1;
  if (raw_labels.size() != n)
    fail(ErrorKind::InvalidArgument, "metrics: " + std::to_string(raw_labels.size()) + " labels for " +
                                         std::to_string(n) + " rows");

  Matrix x(n, feature_index.size());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < feature_index.size(); ++c) {
      const auto& row = rows[r + 1];
      if (feature_index[c] >= row.size())
        fail(ErrorKind::Parse, o.path + ":" + std::to_string(r + 2) + ": too few fields");
      x(r, c) = parse_number(row[feature_index[c]], o.path + ":" + std::to_string(r + 2));
    }
  std::map<std::string, int> ids;
  std::vector<int> labels;
  for (const auto& l : raw_labels) labels.push_back(ids.emplace(l, static_cast<int>(ids.size())).first->second);

  const metrics::QualityReport q = metrics::quality_report(x, labels);
  Json j;
  j["silhouette"] = q.silhouette;
  j["davies_bouldin"] = q.davies_bouldin;
  j["calinski_harabasz"] = q.calinski_harabasz;
  const std::string text = j.dump(2) + "\n";
  if (!o.json_path.empty()) write_text(o.json_path, text);
  out << text;
  return kSuccess;
}

struct FixtureOptions {
  std::string kind = "blobs";
  data::BlobSpec blobs;
  data::LineSpec line;
  bool labels = false;
  std::string out_path;
};

int cmd_gen_fixture(const FixtureOptions& o, std::ostream& out) {
  std::string text;
  if (o.kind == "blobs") {
    const data::Dataset ds = data::make_skewed_blobs(o.blobs);
    text = o.labels ? data::to_csv(ds, data::skewed_blob_labels(o.blobs), "blob") : data::to_csv(ds);
  } else {
    text = data::to_csv(data::make_line_fixture(o.line));
  }
  write_text(o.out_path, text);
  out << "wrote " << o.out_path << '\n';
  return kSuccess;
}

// ---------------------------------------------------------------------------
// Flat key=value config files; keys are long option names, command-line flags win.

bool truthy(const std::string& v) { return v == "true" || v == "1" || v == "yes" || v == "on"; }

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> expand_config(std::vector<std::string> args, const CLI::App& app) {
  auto it = std::find_if(args.begin(), args.end(), [](const std::string& a) {
    return a == "--config" || a.rfind("--config=", 0) == 0;
  });
  if (it == args.end()) return args;
  std::string path;
  if (*it == "--config") {
    if (std::next(it) == args.end()) fail(ErrorKind::InvalidArgument, "--config needs a file");
    path = *std::next(it);
    args.erase(it, std::next(it, 2));
  } else {
    path = it->substr(9);
    args.erase(it);
  }
  const CLI::App* sub = nullptr;
  for (const auto& a : args)
    if (a.empty() || a[0] != '-') {
      sub = app.get_subcommand_no_throw(a);
      break;
    }
  if (sub == nullptr) fail(ErrorKind::InvalidArgument, "--config must follow a subcommand");

  std::istringstream lines(read_text(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    const std::string flag = "--" + key;
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (opt == nullptr) fail(ErrorKind::InvalidArgument, path + ":" + std::to_string(line_no) + ": unknown key '" + key + "'");
    const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (given) continue;
    if (opt->get_expected_max() == 0) {
      if (truthy(value)) args.push_back(flag);
    } else {
      args.push_back(flag);
      args.push_back(value);
    }
  }
  return args;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Antidote data for fair clustering", "antidote"};
  app.require_subcommand(1);
  app.add_option("--config", "Flat key=value file of option defaults (flags win)");

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Compute antidote data and compare against vanilla clustering");
  add_data_options(run_cmd, run.data);
  add_antidote_options(run_cmd, run.antidote);
  run_cmd->add_option("--combination", run.combination, "kmeans+balance | kmeans+social | spectral+balance | son+social")
      ->capture_default_str();
  run_cmd->add_option("--k", run.k, "Number of clusters")->capture_default_str();
  run_cmd->add_option("--seed", run.seed, "Master seed")->capture_default_str();
  run_cmd->add_option("--json", run.json_path, "Write the full result as JSON");
  run_cmd->add_option("--csv", run.csv_path, "Append the summary row to this CSV");
  run_cmd->add_option("--config", "Flat key=value file of option defaults (flags win)");

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep-lambda", "SON + social antidote over a grid of lambda values");
  add_data_options(sweep_cmd, sweep.data);
  add_antidote_options(sweep_cmd, sweep.antidote);
  sweep_cmd->add_option("--lambdas", sweep.lambdas, "Explicit lambda grid")->delimiter(',');
  sweep_cmd->add_option("--lambda-min", sweep.lambda_min, "Smallest lambda")->capture_default_str();
  sweep_cmd->add_option("--lambda-max", sweep.lambda_max, "Largest lambda")->capture_default_str();
  sweep_cmd->add_option("--lambda-steps", sweep.lambda_steps, "Evenly spaced grid size")->capture_default_str();
  sweep_cmd->add_option("--jobs", sweep.jobs, "Lambda points solved concurrently")->capture_default_str();
  sweep_cmd->add_option("--seed", sweep.seed, "Master seed")->capture_default_str();
  sweep_cmd->add_option("--csv", sweep.csv_path, "Write the sweep table as CSV");
  sweep_cmd->add_option("--json", sweep.json_path, "Write the sweep with full precision as JSON");
  sweep_cmd->add_option("--config", "Flat key=value file of option defaults (flags win)");

  MetricsOptions metrics_opts;
  auto* metrics_cmd = app.add_subcommand("metrics", "Silhouette, Davies-Bouldin and Calinski-Harabasz of a labeling");
  metrics_cmd->add_option("--data", metrics_opts.path, "CSV with feature columns")->required();
  metrics_cmd->add_option("--labels-col", metrics_opts.labels_column, "Column holding cluster labels");
  metrics_cmd->add_option("--labels-file", metrics_opts.labels_file, "File with one label per row");
  metrics_cmd->add_option("--features", metrics_opts.features, "Feature columns")->delimiter(',');
  metrics_cmd->add_option("--exclude", metrics_opts.exclude, "Columns to drop from the default feature set")
      ->delimiter(',');
  metrics_cmd->add_option("--json", metrics_opts.json_path, "Also write the report to this file");
  metrics_cmd->add_option("--config", "Flat key=value file of option defaults (flags win)");

  FixtureOptions fixture;
  auto* fixture_cmd = app.add_subcommand("gen-fixture", "Write a synthetic dataset as CSV");
  fixture_cmd->add_option("--kind", fixture.kind, "blobs | line")
      ->check(CLI::IsMember({"blobs", "line"}))
      ->capture_default_str();
  fixture_cmd->add_option("--n", fixture.blobs.n, "Rows (blobs)")->capture_default_str();
  fixture_cmd->add_option("--dims", fixture.blobs.dims, "Dimensions (blobs)")->capture_default_str();
  fixture_cmd->add_option("--groups", fixture.blobs.groups, "Protected groups (blobs)")->capture_default_str();
  fixture_cmd->add_option("--skew", fixture.blobs.skew, "Group skew per blob in [0, 1]")->capture_default_str();
  fixture_cmd->add_option("--blobs", fixture.blobs.blobs, "Number of blobs")->capture_default_str();
  fixture_cmd->add_option("--separation", fixture.blobs.separation, "Distance between neighbouring blob centers")
      ->capture_default_str();
  fixture_cmd->add_option("--seed", fixture.blobs.seed, "Generator seed")->capture_default_str();
  fixture_cmd->add_option("--line-n", fixture.line.n, "Rows (line)")->capture_default_str();
  fixture_cmd->add_option("--line-first-group", fixture.line.first_group, "Rows in group 0 (line)")
      ->capture_default_str();
  fixture_cmd->add_option("--line-spacing", fixture.line.spacing, "Spacing (line)")->capture_default_str();
  fixture_cmd->add_flag("--labels", fixture.labels, "Add the true blob of each row as column 'blob'");
  fixture_cmd->add_option("--out", fixture.out_path, "Output CSV")->required();
  fixture_cmd->add_option("--config", "Flat key=value file of option defaults (flags win)");

  try {
    std::vector<std::string> expanded = expand_config(args, app);
    std::reverse(expanded.begin(), expanded.end());
    try {
      app.parse(expanded);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return kSuccess;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return kSuccess;
    } catch (const CLI::ParseError& e) {
      err << "error: " << e.what() << '\n';
      for (const auto* sub : app.get_subcommands())
        if (sub->parsed()) {
          err << "run 'antidote " << sub->get_name() << " --help' for usage\n";
          return kUserError;
        }
      err << "run 'antidote --help' for usage\n";
      return kUserError;
    }
    if (run_cmd->parsed()) return cmd_run(run, out, err);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep, out, err);
    if (metrics_cmd->parsed()) return cmd_metrics(metrics_opts, out);
    if (fixture_cmd->parsed()) return cmd_gen_fixture(fixture, out);
    err << "error: no subcommand\n";
    return kUserError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.is_user_error() ? kUserError : kInternalError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
}

}  // namespace antidote::cli
