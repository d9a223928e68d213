#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "antidote/numerics.hpp"

namespace antidote::zoopt {

/// Objective to minimize. Must be pure: the engine may call it from several threads.
using Objective = std::function<double(std::span<const double>)>;

struct SearchBox {
  std::vector<double> lower;
  std::vector<double> upper;

  static SearchBox uniform(std::size_t dims, double lower, double upper);

  std::size_t dims() const noexcept { return lower.size(); }
  void validate() const;
  bool contains(std::span<const double> x) const;
  void clip(std::span<double> x) const;
};

struct RacosConfig {
  std::size_t positive_size = 5;
  std::size_t initial_samples = 20;  // also the size of the training set
  double explore_probability = 0.1;
  int max_shrink_attempts = 30;
  /// Coordinates resampled from the learned region per new sample; 0 picks a default
  /// from the dimension. The rest are copied from the chosen positive solution.
  std::size_t uncertain_bits = 0;
  /// Candidates drawn per learned region; values above 1 enable batched evaluation.
  std::size_t batch_size = 1;
  /// Worker threads used to evaluate a batch. Results do not depend on this value.
  std::size_t threads = 1;
};

struct Sample {
  std::vector<double> x;
  double value = 0.0;
};

struct OptState {
  std::vector<Sample> positive;  // best `positive_size` of the training set, ascending
  std::vector<Sample> negative;  // rest of the training set
  std::vector<double> region_lower;  // last learned region
  std::vector<double> region_upper;
  std::uint64_t seed = 0;
  std::size_t evaluations = 0;
  std::vector<Sample> archive;      // every evaluated point, in evaluation order
  std::vector<double> best_trace;   // best value after each evaluation
};

struct RacosResult {
  std::vector<double> x;
  double value = 0.0;
  OptState state;
};

/// Sampling-and-learning minimization: learn an axis-aligned region around a positive solution
/// that excludes the negatives, sample inside it (or, with the exploration probability, in the
/// whole box), and keep the best `initial_samples` solutions as training set.
/// `warm_start` points are evaluated first, in place of uniform initial samples.
RacosResult racos_minimize(const Objective& f, const SearchBox& box, std::size_t budget, const RacosConfig& config,
                           std::uint64_t seed, const std::vector<std::vector<double>>& warm_start = {});

/// One low-dimensional random embedding: x = clip(offset + projection * w).
struct EmbeddingStage {
  numerics::Matrix projection;  // D x n', entries N(0, 1/n')
  std::vector<double> offset;   // D
};

EmbeddingStage make_embedding_stage(std::size_t full_dims, std::size_t n_prime, std::vector<double> offset,
                                    std::uint64_t seed);

/// Maps a low-dimensional point to the (clipped) full-dimensional point.
std::vector<double> embed(const EmbeddingStage& stage, std::span<const double> w, const SearchBox& box);

struct SreConfig {
  std::size_t n_prime = 100;
  std::size_t stages = 3;
  std::size_t inner_budget = 300;  // evaluations per stage
  /// Low-dimensional box is [-s, s]^n' with s = embed_scale * (largest half-width of the full box).
  double embed_scale = 1.0;
  RacosConfig racos;
};

struct SreResult {
  std::vector<double> x;
  double value = 0.0;
  std::vector<double> stage_values;  // best value after each stage
  std::size_t evaluations = 0;
};

/// Seed of the projection drawn for `stage`, and of the RACOS run inside it.
std::uint64_t sre_projection_seed(std::uint64_t seed, std::size_t stage);
std::uint64_t sre_racos_seed(std::uint64_t seed, std::size_t stage);

/// Sequential random embedding: each stage optimizes g(w) = f(clip(offset + P w)) with RACOS
/// (w = 0 is always among the evaluated points) and moves the offset to the best point found.
/// `start` defaults to the center of the box.
SreResult sre_minimize(const Objective& f, const SearchBox& box, const SreConfig& config, std::uint64_t seed,
                       std::vector<double> start = {});

}  // namespace antidote::zoopt
