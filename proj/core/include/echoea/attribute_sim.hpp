#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "echoea/knowledge_graph.hpp"

namespace echoea {

using SparseSimilarity = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Lowercases ASCII letters, trims, and collapses whitespace runs to one space.
std::string normalize_text(std::string_view text);

/// Maps raw attribute names to a common vocabulary before matching. Names
/// listed in the mapping are replaced; others fall back to their URI local
/// name (text after the last '/' or '#'). The result is normalize_text()ed.
class NameNormalizer {
 public:
  NameNormalizer() = default;
  explicit NameNormalizer(std::map<std::string, std::string> mapping)
      : mapping_(std::move(mapping)) {}

  /// Two tab-separated columns per line: raw name, replacement.
  static NameNormalizer load(const std::filesystem::path& path);

  std::string operator()(std::string_view raw) const;

 private:
  std::map<std::string, std::string> mapping_;
};

/// Sorensen-Dice coefficient over character-bigram multisets. Two strings
/// without bigrams score 1 when equal and 0 otherwise.
double dice(std::string_view a, std::string_view b);

/// |A n B| / |A u B| over sorted, duplicate-free ranges; 0 when both are empty.
template <typename T>
double jaccard(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::size_t common = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++common;
      ++ia;
      ++ib;
    }
  }
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

struct AttributeMatch {
  AttributeId left = 0;
  AttributeId right = 0;
  double score = 0.0;
};

/// Partial map from KG1 attributes to KG2 attributes.
struct AttributeAlignment {
  std::vector<AttributeMatch> matches;  ///< sorted by left id
  double dice_threshold = 0.0;

  std::optional<AttributeId> lookup(AttributeId left) const;
};

/// For each KG1 name, its best-scoring KG2 name by dice(), kept iff the score
/// is strictly greater than `threshold`. Ties go to the lowest KG2 id.
AttributeAlignment match_attributes(const std::vector<std::string>& names1,
                                    const std::vector<std::string>& names2, double threshold);

/// Normalized attribute names of a KG, in attribute-id order.
std::vector<std::string> normalized_attribute_names(const KnowledgeGraph& kg,
                                                    const NameNormalizer& normalizer);

/// S^attr over candidate sets: Jaccard of matched-attribute sets, with KG1
/// attributes mapped into the KG2 attribute space.
SparseSimilarity attr_similarity(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                                 const AttributeAlignment& alignment,
                                 const CandidateSets& candidates);

/// S^attr_value over candidate sets: mean over common matched attributes of
/// the Jaccard of their (normalized) value sets; 0 without common attributes.
SparseSimilarity attr_value_similarity(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                                       const AttributeAlignment& alignment,
                                       const CandidateSets& candidates);

struct SimilarityWeights {
  double relation = 0.1;
  double attribute = 0.5;
  double value = 0.4;

  /// Throws ValidationError unless every weight lies in [0, 1].
  void validate() const;
};

/// w.relation * s_rel + w.attribute * s_attr + w.value * s_value.
/// Throws ArgumentError on shape mismatch.
Eigen::MatrixXd combine_similarity(const Eigen::MatrixXd& s_rel, const Eigen::MatrixXd& s_attr,
                                   const Eigen::MatrixXd& s_value, const SimilarityWeights& w);
Eigen::MatrixXd combine_similarity(const Eigen::MatrixXd& s_rel, const SparseSimilarity& s_attr,
                                   const SparseSimilarity& s_value, const SimilarityWeights& w);

/// CSV audit trail: attr1,attr2,dice.
void write_attribute_report(const std::filesystem::path& path, const AttributeAlignment& alignment,
                            const KnowledgeGraph& kg1, const KnowledgeGraph& kg2);

}  // namespace echoea
