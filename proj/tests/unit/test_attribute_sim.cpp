#include <fstream>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "echoea/attribute_sim.hpp"
#include "echoea/error.hpp"
#include "similarity_cases.hpp"
#include "support.hpp"

using namespace echoea;

TEST(Dice, FixtureTable) {
  for (const auto& c : echoea::testing::kDiceCases) {
    EXPECT_NEAR(dice(c.a, c.b), c.expected, 1e-12) << c.a << " / " << c.b;
    EXPECT_DOUBLE_EQ(dice(c.a, c.b), dice(c.b, c.a));
  }
}

TEST(Jaccard, Basics) {
  using V = std::vector<int>;
  EXPECT_DOUBLE_EQ(jaccard(V{1, 2}, V{2, 3}), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(jaccard(V{1, 2, 3}, V{1, 2, 3}), 1.0);
  EXPECT_DOUBLE_EQ(jaccard(V{1, 2}, V{3, 4}), 0.0);
  EXPECT_DOUBLE_EQ(jaccard(V{}, V{}), 0.0);
  EXPECT_DOUBLE_EQ(jaccard(V{1, 2, 3, 4}, V{3, 4, 5, 6}), 1.0 / 3.0);
}

TEST(Normalizer, MappingThenLocalName) {
  NameNormalizer n(std::map<std::string, std::string>{{"http://x/geburtsdatum", "Birth  Date"}});
  EXPECT_EQ(n("http://x/geburtsdatum"), "birth date");
  EXPECT_EQ(n("http://dbpedia.org/property/Population"), "population");
  EXPECT_EQ(normalize_text("  A \t B  "), "a b");
}

TEST(MatchAttributes, IdentityAndStrictThreshold) {
  std::vector<std::string> names{"birth date", "population", "area"};
  auto m = match_attributes(names, names, 0.5);
  ASSERT_EQ(m.matches.size(), 3U);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(m.lookup(i), i);
  EXPECT_TRUE(match_attributes(names, names, 1.0).matches.empty());
}

TEST(MatchAttributes, TopOneWithLowestIdOnTie) {
  auto m = match_attributes({"birth date"}, {"date of birth", "death date"}, 0.5);
  ASSERT_EQ(m.matches.size(), 1U);
  EXPECT_EQ(m.matches[0].right, 0);
  EXPECT_NEAR(m.matches[0].score, 2.0 / 3.0, 1e-12);
  EXPECT_TRUE(match_attributes({"birth date"}, {"date of birth"}, 0.7).matches.empty());
}

namespace {

/// Attribute triples given as (entity, attribute name, value).
KnowledgeGraph attr_kg(int n, const std::vector<std::tuple<int, std::string, std::string>>& facts) {
  KnowledgeGraphBuilder b;
  for (int i = 0; i < n; ++i) b.add_entity(i, "e" + std::to_string(i));
  for (const auto& [e, a, v] : facts) {
    b.add_attr_triple(e, b.intern_attribute(a), b.intern_value(v));
  }
  return std::move(b).build();
}

CandidateSets all(int n1, int n2) {
  CandidateSets c;
  for (int i = 0; i < n1; ++i) c.left.push_back(i);
  for (int j = 0; j < n2; ++j) c.right.push_back(j);
  return c;
}

}  // namespace

TEST(AttrSimilarity, ThreeByThreeTable) {
  // KG1 sets: {a,b}, {a}, {}   KG2 sets: {a,b}, {b,c}, {c}; c has no partner
  auto kg1 = attr_kg(3, {{0, "a", "1"}, {0, "b", "1"}, {1, "a", "2"}});
  auto kg2 = attr_kg(3, {{0, "a", "1"}, {0, "b", "1"}, {1, "b", "1"}, {1, "c", "1"}, {2, "c", "3"}});
  auto align = match_attributes(normalized_attribute_names(kg1, {}),
                                normalized_attribute_names(kg2, {}), 0.85);
  ASSERT_EQ(align.matches.size(), 2U);  // a and b; c exists only in KG2
  Eigen::MatrixXd s(attr_similarity(kg1, kg2, align, all(3, 3)));
  Eigen::MatrixXd expect{{1.0, 0.5, 0.0}, {0.5, 0.0, 0.0}, {0.0, 0.0, 0.0}};
  EXPECT_TRUE(s.isApprox(expect, 1e-12)) << s;
}

TEST(AttrSimilarity, UnmatchedAttributeDoesNotChangeScores) {
  auto kg1 = attr_kg(1, {{0, "a", "1"}});
  auto kg2 = attr_kg(1, {{0, "a", "1"}, {0, "zzz", "1"}});
  auto align = match_attributes(normalized_attribute_names(kg1, {}),
                                normalized_attribute_names(kg2, {}), 0.85);
  EXPECT_DOUBLE_EQ(Eigen::MatrixXd(attr_similarity(kg1, kg2, align, all(1, 1)))(0, 0), 1.0);
}

TEST(AttrValueSimilarity, MeanOverSharedAttributes) {
  // Shared attributes a (values {x} vs {x}) and b (values {p,q} vs {q,r}).
  auto kg1 = attr_kg(2, {{0, "a", "x"}, {0, "b", "p"}, {0, "b", "q"}, {1, "c", "v"}});
  auto kg2 = attr_kg(1, {{0, "a", "x"}, {0, "b", "q"}, {0, "b", "r"}, {0, "c", "w"}});
  auto align = match_attributes(normalized_attribute_names(kg1, {}),
                                normalized_attribute_names(kg2, {}), 0.85);
  Eigen::MatrixXd s(attr_value_similarity(kg1, kg2, align, all(2, 1)));
  EXPECT_NEAR(s(0, 0), 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(s(1, 0), 0.0);  // shares c but the values differ

  auto lone = attr_kg(1, {{0, "zzz", "x"}});
  auto lone_align = match_attributes(normalized_attribute_names(lone, {}),
                                     normalized_attribute_names(kg2, {}), 0.85);
  Eigen::MatrixXd none(attr_value_similarity(lone, kg2, lone_align, all(1, 1)));
  EXPECT_DOUBLE_EQ(none(0, 0), 0.0);
}

TEST(AttrValueSimilarity, ForeignAlignmentIsRejected) {
  auto kg = attr_kg(1, {{0, "a", "x"}});
  auto wide = match_attributes({"p", "q", "a"}, {"a"}, 0.5);
  EXPECT_THROW(attr_value_similarity(kg, kg, wide, all(1, 1)), ArgumentError);
}

TEST(AttrValueSimilarity, IdenticalSingleAttribute) {
  auto kg = attr_kg(1, {{0, "a", "x"}, {0, "a", "y"}});
  auto align = match_attributes({"a"}, {"a"}, 0.5);
  EXPECT_DOUBLE_EQ(Eigen::MatrixXd(attr_value_similarity(kg, kg, align, all(1, 1)))(0, 0), 1.0);
}

TEST(Combine, WeightsAndShapes) {
  std::mt19937_64 rng(9);
  Eigen::MatrixXd r = echoea::testing::random_matrix(2, 2, rng, 0, 1);
  Eigen::MatrixXd a = echoea::testing::random_matrix(2, 2, rng, 0, 1);
  Eigen::MatrixXd v = echoea::testing::random_matrix(2, 2, rng, 0, 1);
  EXPECT_EQ(combine_similarity(r, a, v, {1, 0, 0}), r);
  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(2, 2);
  EXPECT_TRUE(combine_similarity(ones, ones, ones, {0.1, 0.5, 0.4}).isApprox(ones, 1e-15));
  Eigen::MatrixXd c = combine_similarity(r, a, v, {0.1, 0.5, 0.4});
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      EXPECT_NEAR(c(i, j), 0.1 * r(i, j) + 0.5 * a(i, j) + 0.4 * v(i, j), 1e-12);
  EXPECT_THROW(combine_similarity(r, Eigen::MatrixXd::Ones(3, 2), v, {}), ArgumentError);
  SparseSimilarity sa = a.sparseView();
  SparseSimilarity sv = v.sparseView();
  EXPECT_TRUE(combine_similarity(r, sa, sv, {0.1, 0.5, 0.4}).isApprox(c, 1e-15));
}

TEST(Weights, RangeChecked) {
  SimilarityWeights w{1.5, 0, 0};
  EXPECT_THROW(w.validate(), ValidationError);
}

TEST(AttributeReport, CsvHeader) {
  auto kg = attr_kg(1, {{0, "a", "x"}});
  auto align = match_attributes({"a"}, {"a"}, 0.5);
  auto path = std::filesystem::temp_directory_path() / "echoea_attr.csv";
  write_attribute_report(path, align, kg, kg);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "attr1,attr2,dice");
}
