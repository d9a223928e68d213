#include "antidote/zoopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>

#include "antidote/error.hpp"
#include "antidote/random.hpp"

namespace antidote::zoopt {

SearchBox SearchBox::uniform(std::size_t dims, double lower, double upper) {
  return SearchBox{std::vector<double>(dims, lower), std::vector<double>(dims, upper)};
}

void SearchBox::validate() const {
  require(lower.size() == upper.size(), "search box: lower and upper bounds differ in length");
  require(!lower.empty(), "search box: zero dimensions");
  for (std::size_t i = 0; i < lower.size(); ++i) {
    require(std::isfinite(lower[i]) && std::isfinite(upper[i]), "search box: bounds must be finite");
    require(lower[i] <= upper[i], "search box: lower bound exceeds upper bound at coordinate " + std::to_string(i));
  }
}

bool SearchBox::contains(std::span<const double> x) const {
  if (x.size() != lower.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
  return true;
}

void SearchBox::clip(std::span<double> x) const {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
}

namespace {

std::vector<double> uniform_point(const SearchBox& box, Rng& rng) {
  std::vector<double> x(box.dims());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(box.lower[i], box.upper[i]);
  return x;
}

std::vector<double> evaluate_all(const Objective& f, const std::vector<std::vector<double>>& xs, std::size_t threads) {
  std::vector<double> values(xs.size());
  const std::size_t workers = std::min(threads, xs.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < xs.size(); ++i) values[i] = f(xs[i]);
    return values;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < xs.size(); i += workers) values[i] = f(xs[i]);
    });
  for (auto& t : pool) t.join();
  return values;
}

class Racos {
 public:
  Racos(const SearchBox& box, const RacosConfig& config, std::uint64_t seed) : box_(box), config_(config), rng_(seed) {
    uncertain_bits_ = config.uncertain_bits > 0 ? std::min(config.uncertain_bits, box.dims())
                                                : std::max<std::size_t>(1, box.dims() / 10);
  }

  // Training set kept sorted ascending; the first positive_size entries are the positives.
  void seed_training(std::vector<Sample> samples) {
    training_ = std::move(samples);
    std::stable_sort(training_.begin(), training_.end(), [](const Sample& a, const Sample& b) { return a.value < b.value; });
  }

  void offer(Sample s) {
    if (training_.empty() || !(s.value < training_.back().value)) return;
    training_.back() = std::move(s);
    // One insertion step keeps the set sorted; equal values keep their older position.
    for (std::size_t i = training_.size() - 1; i > 0 && training_[i].value < training_[i - 1].value; --i)
      std::swap(training_[i], training_[i - 1]);
  }

  std::vector<double> propose() {
    if (rng_.bernoulli(config_.explore_probability)) return uniform_point(box_, rng_);
    const std::size_t r = std::min(config_.positive_size, training_.size());
    const Sample& anchor = training_[rng_.below(r)];
    learn_region(anchor.x, r);
    std::vector<double> x = anchor.x;
    // Resample a few random coordinates inside the learned region.
    for (std::size_t b = 0; b < uncertain_bits_; ++b) {
      const std::size_t k = rng_.below(x.size());
      x[k] = rng_.uniform(lower_[k], upper_[k]);
    }
    return x;
  }

  void export_state(OptState& state) const {
    const std::size_t r = std::min(config_.positive_size, training_.size());
    state.positive.assign(training_.begin(), training_.begin() + static_cast<std::ptrdiff_t>(r));
    state.negative.assign(training_.begin() + static_cast<std::ptrdiff_t>(r), training_.end());
    state.region_lower = lower_.empty() ? box_.lower : lower_;
    state.region_upper = upper_.empty() ? box_.upper : upper_;
  }

 private:
  // Randomized coordinate shrinking: cut the box between the anchor and a negative still
  // inside the region until no negative remains or the attempt cap is hit.
  void learn_region(const std::vector<double>& anchor, std::size_t positives) {
    lower_ = box_.lower;
    upper_ = box_.upper;
    const std::size_t dims = anchor.size();
    std::vector<std::size_t> inside;
    for (int attempt = 0; attempt < config_.max_shrink_attempts; ++attempt) {
      inside.clear();
      for (std::size_t i = positives; i < training_.size(); ++i) {
        const auto& x = training_[i].x;
        bool in = true;
        for (std::size_t k = 0; k < dims && in; ++k) in = x[k] >= lower_[k] && x[k] <= upper_[k];
        if (in) inside.push_back(i);
      }
      if (inside.empty()) break;
      const auto& negative = training_[inside[rng_.below(inside.size())]].x;
      const std::size_t k = rng_.below(dims);
      if (negative[k] < anchor[k])
        lower_[k] = std::max(lower_[k], rng_.uniform(negative[k], anchor[k]));
      else if (negative[k] > anchor[k])
        upper_[k] = std::min(upper_[k], rng_.uniform(anchor[k], negative[k]));
    }
  }

  const SearchBox& box_;
  RacosConfig config_;
  Rng rng_;
  std::size_t uncertain_bits_ = 1;
  std::vector<Sample> training_;
  std::vector<double> lower_;
  std::vector<double> upper_;
};

}  // namespace

RacosResult racos_minimize(const Objective& f, const SearchBox& box, std::size_t budget, const RacosConfig& config,
                           std::uint64_t seed, const std::vector<std::vector<double>>& warm_start) {
  box.validate();
  require(config.positive_size >= 1, "racos: positive set must be nonempty");
  require(config.initial_samples > config.positive_size, "racos: initial samples must exceed the positive set size");
  require(config.explore_probability >= 0.0 && config.explore_probability <= 1.0,
          "racos: exploration probability must lie in [0, 1]");
  require(budget >= config.initial_samples, "racos: budget (" + std::to_string(budget) +
                                                ") is smaller than the initial sample count (" +
                                                std::to_string(config.initial_samples) + ")");

  Racos engine(box, config, seed);
  RacosResult result;
  result.state.seed = seed;
  result.value = std::numeric_limits<double>::infinity();
  Rng init_rng(derive_seed(seed, 0x1517));

  auto record = [&](const std::vector<double>& x, double value) {
    result.state.archive.push_back({x, value});
    ++result.state.evaluations;
    if (value < result.value || result.x.empty()) {
      result.value = value;
      result.x = x;
    }
    result.state.best_trace.push_back(result.value);
  };

  std::vector<std::vector<double>> initial;
  for (const auto& w : warm_start) {
    if (initial.size() == config.initial_samples) break;
    require(w.size() == box.dims(), "racos: warm-start point has wrong dimension");
    std::vector<double> x = w;
    box.clip(x);
    initial.push_back(std::move(x));
  }
  while (initial.size() < config.initial_samples) initial.push_back(uniform_point(box, init_rng));
  const auto initial_values = evaluate_all(f, initial, config.threads);
  std::vector<Sample> training;
  for (std::size_t i = 0; i < initial.size(); ++i) {
    record(initial[i], initial_values[i]);
    training.push_back({initial[i], initial_values[i]});
  }
  engine.seed_training(std::move(training));

  const std::size_t batch = std::max<std::size_t>(1, config.batch_size);
  while (result.state.evaluations < budget) {
    const std::size_t count = std::min(batch, budget - result.state.evaluations);
    std::vector<std::vector<double>> candidates;
    candidates.reserve(count);
    for (std::size_t i = 0; i < count; ++i) candidates.push_back(engine.propose());
    const auto values = evaluate_all(f, candidates, config.threads);
    for (std::size_t i = 0; i < count; ++i) {
      record(candidates[i], values[i]);
      engine.offer({std::move(candidates[i]), values[i]});
    }
  }
  engine.export_state(result.state);
  return result;
}

EmbeddingStage make_embedding_stage(std::size_t full_dims, std::size_t n_prime, std::vector<double> offset,
                                    std::uint64_t seed) {
  require(n_prime >= 1, "embedding: n' must be positive");
  require(offset.size() == full_dims, "embedding: offset has wrong dimension");
  EmbeddingStage stage;
  stage.projection = numerics::Matrix(full_dims, n_prime);
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_prime));
  for (double& v : stage.projection.data()) v = scale * rng.normal();
  stage.offset = std::move(offset);
  return stage;
}

std::vector<double> embed(const EmbeddingStage& stage, std::span<const double> w, const SearchBox& box) {
  require(w.size() == stage.projection.cols(), "embedding: low-dimensional point has wrong dimension");
  std::vector<double> x = stage.offset;
  for (std::size_t r = 0; r < x.size(); ++r) {
    const auto row = stage.projection.row(r);
    double s = 0.0;
    for (std::size_t c = 0; c < w.size(); ++c) s += row[c] * w[c];
    x[r] += s;
  }
  box.clip(x);
  return x;
}

std::uint64_t sre_projection_seed(std::uint64_t seed, std::size_t stage) { return derive_seed(seed, 2 * stage + 1); }
std::uint64_t sre_racos_seed(std::uint64_t seed, std::size_t stage) { return derive_seed(seed, 2 * stage + 2); }

SreResult sre_minimize(const Objective& f, const SearchBox& box, const SreConfig& config, std::uint64_t seed,
                       std::vector<double> start) {
  box.validate();
  const std::size_t full_dims = box.dims();
  require(config.n_prime < full_dims, "sre: n' (" + std::to_string(config.n_prime) + ") must be smaller than D (" +
                                          std::to_string(full_dims) + ")");
  require(config.stages >= 1, "sre: need at least one stage");
  require(config.embed_scale > 0.0, "sre: embed_scale must be positive");

  std::vector<double> offset = std::move(start);
  if (offset.empty()) {
    offset.resize(full_dims);
    for (std::size_t i = 0; i < full_dims; ++i) offset[i] = 0.5 * (box.lower[i] + box.upper[i]);
  }
  require(offset.size() == full_dims, "sre: start point has wrong dimension");
  box.clip(offset);

  double half_width = 0.0;
  for (std::size_t i = 0; i < full_dims; ++i) half_width = std::max(half_width, 0.5 * (box.upper[i] - box.lower[i]));
  const double s = config.embed_scale * (half_width > 0.0 ? half_width : 1.0);
  const SearchBox low = SearchBox::uniform(config.n_prime, -s, s);
  const std::vector<std::vector<double>> origin{std::vector<double>(config.n_prime, 0.0)};

  SreResult result;
  result.value = std::numeric_limits<double>::infinity();
  for (std::size_t stage_index = 0; stage_index < config.stages; ++stage_index) {
    const EmbeddingStage stage =
        make_embedding_stage(full_dims, config.n_prime, offset, sre_projection_seed(seed, stage_index));
    const Objective g = [&](std::span<const double> w) { return f(embed(stage, w, box)); };
    const RacosResult inner =
        racos_minimize(g, low, config.inner_budget, config.racos, sre_racos_seed(seed, stage_index), origin);
    result.evaluations += inner.state.evaluations;
    if (inner.value < result.value || result.x.empty()) {
      result.value = inner.value;
      result.x = embed(stage, inner.x, box);
      offset = result.x;
    }
    result.stage_values.push_back(result.value);
  }
  return result;
}

}  // namespace antidote::zoopt
