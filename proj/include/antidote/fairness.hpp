#pragma once

#include <span>
#include <string>
#include <vector>

#include "antidote/clustering.hpp"
#include "antidote/datasets.hpp"

namespace antidote::fairness {

using numerics::Matrix;

enum class Notion { Social, Balance };

struct FairnessSpec {
  Notion notion = Notion::Balance;
  double alpha = 0.0;  // target: a run succeeds once cost <= alpha
};

/// Throws unless alpha is admissible for the notion (balance needs alpha in [-1, 0]).
void validate(const FairnessSpec& spec);

struct FairnessReport {
  double cost = 0.0;
  /// Social: average cost of each group. Balance: worst min{R, 1/R} of each group over clusters.
  std::vector<double> per_group;
  int worst_group = -1;
  int worst_cluster = -1;  // balance only
};

/// Rows whose group label is negative do not belong to U and are ignored; this is how
/// antidote points are kept out of every fairness computation.
FairnessReport social_cost(const Matrix& centers, const Matrix& points, std::span<const int> groups, int group_count);
FairnessReport balance_cost(const Matrix& centers, const Matrix& points, std::span<const int> groups, int group_count);

FairnessReport social_cost(const clustering::Centers& centers, const data::Dataset& ds);
FairnessReport balance_cost(const clustering::Centers& centers, const data::Dataset& ds);

/// Social cost where U row r is charged against center row r only (one center per point, as SON
/// produces) instead of its nearest center.
FairnessReport social_cost_own_rows(const Matrix& mu, const data::Dataset& ds);

FairnessReport evaluate(Notion notion, const clustering::Centers& centers, const data::Dataset& ds);

std::string to_string(Notion notion);

}  // namespace antidote::fairness
