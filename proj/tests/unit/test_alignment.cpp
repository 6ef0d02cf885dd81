#include <random>

#include <gtest/gtest.h>

#include "echoea/alignment.hpp"
#include "echoea/error.hpp"
#include "support.hpp"

using namespace echoea;
using echoea::testing::is_stable;
using echoea::testing::local_oracle;
using echoea::testing::random_matrix;

TEST(RelSimilarity, HandComputedL1) {
  Matrix x1{{0, 0}, {1, 2}, {3, -1}};
  Matrix x2{{0, 1}, {1, 1}, {2, 2}};
  CandidateSets c{{0, 1, 2}, {0, 1, 2}};
  Eigen::MatrixXd expect{{1.0, 0.75, 0.25}, {0.75, 1.0, 1.0}, {0.0, 0.25, 0.25}};
  EXPECT_TRUE(rel_similarity(x1, x2, c).isApprox(expect, 1e-12));
  EXPECT_TRUE(pairwise_l1(x1, x2).isApprox(
      Eigen::MatrixXd{{1, 2, 4}, {2, 1, 1}, {5, 4, 4}}, 1e-12));
}

TEST(RelSimilarity, IdenticalRowsAndDegenerateGuard) {
  Matrix x{{1, 2}, {3, 4}};
  CandidateSets c{{0, 1}, {0, 1}};
  EXPECT_DOUBLE_EQ(rel_similarity(x, x, c).maxCoeff(), 1.0);
  Eigen::MatrixXd constant = Eigen::MatrixXd::Constant(2, 3, -4.0);
  EXPECT_TRUE(minmax_normalize(constant).isApprox(Eigen::MatrixXd::Constant(2, 3, 0.5)));
  EXPECT_THROW(rel_similarity(x, x, CandidateSets{{}, {0}}), ArgumentError);
}

TEST(LocalAlign, Examples) {
  auto a = local_align(Eigen::MatrixXd{{0.9, 0.1}, {0.2, 0.8}});
  EXPECT_EQ(a.plus, (PairSet{{{0, 0}, {1, 1}}}));
  EXPECT_TRUE(a.minus.empty());

  auto b = local_align(Eigen::MatrixXd{{0.9, 0.8}, {0.95, 0.1}});
  EXPECT_EQ(b.plus, (PairSet{{{1, 0}}}));
  EXPECT_EQ(b.minus, (PairSet{{{0, 0}, {0, 1}}}));

  auto c = local_align(Eigen::MatrixXd::Constant(1, 1, 0.3));
  EXPECT_EQ(c.plus, (PairSet{{{0, 0}}}));
  EXPECT_TRUE(c.minus.empty());
}

TEST(LocalAlign, TiesGoToLowestIndex) {
  auto a = local_align(Eigen::MatrixXd::Constant(2, 2, 1.0));
  EXPECT_EQ(a.plus, (PairSet{{{0, 0}}}));
}

TEST(GlobalAlign, DiagonalRectangularAndStable) {
  Eigen::MatrixXd diag{{0.9, 0.1, 0.2}, {0.1, 0.8, 0.3}, {0.0, 0.2, 0.7}};
  EXPECT_EQ(global_align(diag), (PairSet{{{0, 0}, {1, 1}, {2, 2}}}));
  std::mt19937_64 rng(3);
  Eigen::MatrixXd wide = random_matrix(2, 3, rng);
  auto m = global_align(wide);
  EXPECT_EQ(m.size(), 2U);
  EXPECT_TRUE(m.is_one_to_one());
  for (int t = 0; t < 100; ++t) {
    Eigen::MatrixXd s = random_matrix(3, 3, rng);
    EXPECT_TRUE(is_stable(s, global_align(s)));
  }
}

TEST(GlobalAlign, StableUpToFifty) {
  std::mt19937_64 rng(4);
  for (int n : {10, 25, 50}) {
    Eigen::MatrixXd s = random_matrix(n, n, rng);
    auto m = global_align(s);
    EXPECT_EQ(m.size(), static_cast<std::size_t>(n));
    EXPECT_TRUE(m.is_one_to_one());
    EXPECT_TRUE(is_stable(s, m));
  }
}

namespace {

/// Take the largest remaining entry, drop its row and column, repeat.
PairSet greedy_matching(const Eigen::MatrixXd& s) {
  std::vector<std::tuple<double, int, int>> entries;
  for (int i = 0; i < s.rows(); ++i)
    for (int j = 0; j < s.cols(); ++j) entries.emplace_back(-s(i, j), i, j);
  std::sort(entries.begin(), entries.end());
  std::vector<bool> row_used(s.rows()), col_used(s.cols());
  PairSet m;
  for (const auto& [neg, i, j] : entries) {
    if (row_used[i] || col_used[j]) continue;
    row_used[i] = col_used[j] = true;
    m.insert({i, j});
  }
  return m;
}

}  // namespace

// With one shared score for both sides the stable matching is unique and
// coincides with the greedy one, so its weight is never below greedy.
TEST(GlobalAlign, EqualsGreedyOnSharedPreferences) {
  std::mt19937_64 rng(10);
  for (int t = 0; t < 50; ++t) {
    Eigen::MatrixXd s = random_matrix(10, 10, rng);
    EXPECT_EQ(global_align(s), greedy_matching(s));
  }
}

TEST(GlobalAlign, WorkedExample) {
  EXPECT_EQ(global_align(Eigen::MatrixXd{{0.9, 0.8}, {0.95, 0.1}}), (PairSet{{{0, 1}, {1, 0}}}));
}

TEST(Alignment, ScaleInvariant) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 20; ++t) {
    Eigen::MatrixXd s = random_matrix(6, 5, rng);
    auto a = local_align(s);
    auto b = local_align(3.5 * s);
    EXPECT_EQ(a.plus, b.plus);
    EXPECT_EQ(a.minus, b.minus);
    EXPECT_EQ(global_align(s), global_align(3.5 * s));
  }
}

TEST(LocalAlign, MatchesOracle) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 100; ++t) {
    Eigen::MatrixXd s = random_matrix(1 + t % 6, 1 + (t / 6) % 6, rng);
    auto got = local_align(s);
    auto [plus, minus] = local_oracle(s);
    EXPECT_EQ(got.plus, plus);
    EXPECT_EQ(got.minus, minus);
  }
}

TEST(Abgs, Examples) {
  auto r = abgs_on(Eigen::MatrixXd{{0.9, 0.8}, {0.95, 0.1}});
  EXPECT_EQ(r.global, (PairSet{{{0, 1}, {1, 0}}}));
  EXPECT_EQ(r.iter_plus, (PairSet{{{1, 0}}}));
  EXPECT_EQ(r.iter_minus, (PairSet{{{0, 0}}}));

  Eigen::MatrixXd diag{{0.9, 0.1}, {0.2, 0.8}};
  SparseSimilarity zero(2, 2);
  auto d = abgs(diag, zero, zero, {1, 0, 0});
  EXPECT_EQ(d.iter_plus, (PairSet{{{0, 0}, {1, 1}}}));
  EXPECT_TRUE(d.iter_minus.empty());
}

TEST(Abgs, SetIdentitiesAndDisjointness) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 100; ++t) {
    Eigen::MatrixXd s = random_matrix(2 + t % 7, 2 + t % 5, rng);
    auto r = abgs_on(s, {t % 2 == 0});
    EXPECT_EQ(r.iter_plus, set_intersection(r.local_plus, r.global));
    EXPECT_EQ(r.iter_minus, set_difference(r.local_minus, r.global));
    EXPECT_TRUE(set_intersection(r.iter_plus, r.iter_minus).empty());
  }
}

TEST(Refinement, SoftmaxSumShape) {
  std::mt19937_64 rng(8);
  Eigen::MatrixXd s = random_matrix(3, 4, rng);
  Eigen::MatrixXd r = bidirectional_softmax_sum(s);
  ASSERT_EQ(r.rows(), 3);
  // Row softmax rows sum to 1 and column softmax columns sum to 1.
  EXPECT_NEAR(r.sum(), 3.0 + 4.0, 1e-12);
}
