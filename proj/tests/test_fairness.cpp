#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "antidote/datasets.hpp"
#include "antidote/error.hpp"
#include "antidote/fairness.hpp"
#include "antidote/random.hpp"
#include "oracles.hpp"

using namespace antidote;
using namespace antidote::fairness;
using numerics::Matrix;

TEST_SUITE("fairness") {
  TEST_CASE("costs match a from-the-definition recomputation on 1000 random instances") {
    Rng rng(2024);
    int checked = 0;
    for (int t = 0; t < 1000; ++t) {
      const oracle::Instance in = oracle::random_instance(rng);
      const auto social = social_cost(in.centers, in.points, in.groups, in.g);
      const auto balance = balance_cost(in.centers, in.points, in.groups, in.g);
      CHECK(std::abs(social.cost - oracle::social(in)) <= 1e-12);
      CHECK(std::abs(balance.cost - oracle::balance(in)) <= 1e-12);
      CHECK(balance.cost >= -1.0);
      CHECK(balance.cost <= 0.0);
      ++checked;
    }
    CHECK(checked == 1000);
  }

  TEST_CASE("hand-computed balance") {
    // Cluster A: groups {0,0,1}; cluster B: {1}. Global shares 1/2 each.
    // A: group 0 local 2/3 -> R = 0.75; group 1 local 1/3 -> R = 1.5 -> 2/3. B: group 0 absent -> 0.
    const Matrix points{{0.0}, {0.1}, {0.2}, {5.0}};
    const Matrix centers{{0.0}, {5.0}};
    const std::vector<int> groups{0, 0, 1, 1};
    const auto b = balance_cost(centers, points, groups, 2);
    CHECK(b.cost == doctest::Approx(0.0));
    const Matrix one{{2.0}};
    CHECK(balance_cost(one, points, groups, 2).cost == doctest::Approx(-1.0));
  }

  TEST_CASE("hand-computed social cost") {
    const Matrix points{{0.0}, {2.0}, {10.0}};
    const Matrix centers{{1.0}, {10.0}};
    const auto s = social_cost(centers, points, std::vector<int>{0, 0, 1}, 2);
    CHECK(s.per_group[0] == doctest::Approx(1.0));
    CHECK(s.per_group[1] == doctest::Approx(0.0));
    CHECK(s.cost == doctest::Approx(1.0));
    CHECK(s.worst_group == 0);
  }

  TEST_CASE("rows with negative group labels are ignored") {
    const Matrix points{{0.0}, {2.0}, {10.0}, {100.0}};
    const Matrix centers{{1.0}, {10.0}};
    const auto with = social_cost(centers, points, std::vector<int>{0, 0, 1, -1}, 2);
    const auto without = social_cost(centers, Matrix{{0.0}, {2.0}, {10.0}}, std::vector<int>{0, 0, 1}, 2);
    CHECK(with.cost == without.cost);
    CHECK(balance_cost(centers, points, std::vector<int>{0, 0, 1, -1}, 2).cost ==
          balance_cost(centers, Matrix{{0.0}, {2.0}, {10.0}}, std::vector<int>{0, 0, 1}, 2).cost);
  }

  TEST_CASE("own-row social cost and dataset overloads") {
    const auto ds = data::make_dataset(Matrix{{0.0}, {1.0}, {4.0}}, {0, 1, 1}, 2);
    const Matrix mu{{0.5}, {1.0}, {3.0}};
    // Own rows: group 0 -> 0.25; group 1 -> (0 + 1) / 2.
    CHECK(social_cost_own_rows(mu, ds).cost == doctest::Approx(0.5));
    const clustering::Centers centers{mu, clustering::ClusteringKind::Son};
    // Nearest rows: 0 -> 0.25, 1 -> 0, 4 -> 1.
    CHECK(social_cost(centers, ds).cost == doctest::Approx(0.5));
    CHECK(evaluate(Notion::Social, centers, ds).cost == social_cost(centers, ds).cost);
    CHECK(evaluate(Notion::Balance, centers, ds).cost == balance_cost(centers, ds).cost);
  }

  TEST_CASE("spec validation") {
    CHECK_NOTHROW(validate(FairnessSpec{Notion::Balance, -0.5}));
    CHECK_THROWS_AS(validate(FairnessSpec{Notion::Balance, 0.5}), Error);
    CHECK_THROWS_AS(validate(FairnessSpec{Notion::Balance, -1.5}), Error);
    CHECK_NOTHROW(validate(FairnessSpec{Notion::Social, std::numeric_limits<double>::infinity()}));
    CHECK(to_string(Notion::Balance) == "balance");
    CHECK(to_string(Notion::Social) == "social");
  }

  TEST_CASE("shape errors") {
    CHECK_THROWS_AS(social_cost(Matrix{{0.0, 1.0}}, Matrix{{0.0}}, std::vector<int>{0}, 1), Error);
    CHECK_THROWS_AS(social_cost(Matrix{{0.0}}, Matrix{{0.0}}, std::vector<int>{0, 1}, 2), Error);
  }
}
