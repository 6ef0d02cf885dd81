#include "echoea/attribute_sim.hpp"

#include <cctype>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "echoea/error.hpp"

namespace echoea {

std::string normalize_text(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

NameNormalizer NameNormalizer::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  std::map<std::string, std::string> mapping;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError(path.filename().string(), line_no, "expected 'name<TAB>replacement'");
    }
    mapping[line.substr(0, tab)] = line.substr(tab + 1);
  }
  return NameNormalizer(std::move(mapping));
}

std::string NameNormalizer::operator()(std::string_view raw) const {
  if (auto it = mapping_.find(std::string(raw)); it != mapping_.end()) {
    return normalize_text(it->second);
  }
  auto cut = raw.find_last_of("/#");
  if (cut != std::string_view::npos && cut + 1 < raw.size()) raw.remove_prefix(cut + 1);
  return normalize_text(raw);
}

double dice(std::string_view a, std::string_view b) {
  auto bigrams = [](std::string_view s) {
    std::map<std::string_view, int> counts;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) ++counts[s.substr(i, 2)];
    return counts;
  };
  const auto ba = bigrams(a);
  const auto bb = bigrams(b);
  if (ba.empty() && bb.empty()) return a == b ? 1.0 : 0.0;
  int total = 0;
  for (const auto& [_, c] : ba) total += c;
  for (const auto& [_, c] : bb) total += c;
  int common = 0;
  for (const auto& [g, c] : ba) {
    if (auto it = bb.find(g); it != bb.end()) common += std::min(c, it->second);
  }
  return 2.0 * common / total;
}

std::optional<AttributeId> AttributeAlignment::lookup(AttributeId left) const {
  auto it = std::lower_bound(matches.begin(), matches.end(), left,
                             [](const AttributeMatch& m, AttributeId id) { return m.left < id; });
  if (it == matches.end() || it->left != left) return std::nullopt;
  return it->right;
}

AttributeAlignment match_attributes(const std::vector<std::string>& names1,
                                    const std::vector<std::string>& names2, double threshold) {
  AttributeAlignment out;
  out.dice_threshold = threshold;
  for (std::size_t i = 0; i < names1.size(); ++i) {
    double best = -1.0;
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < names2.size(); ++j) {
      const double s = dice(names1[i], names2[j]);
      if (s > best) {
        best = s;
        best_j = j;
      }
    }
    if (!names2.empty() && best > threshold) {
      out.matches.push_back(
          {static_cast<AttributeId>(i), static_cast<AttributeId>(best_j), best});
    }
  }
  return out;
}

std::vector<std::string> normalized_attribute_names(const KnowledgeGraph& kg,
                                                    const NameNormalizer& normalizer) {
  std::vector<std::string> out;
  out.reserve(kg.num_attributes());
  for (const auto& name : kg.attribute_names()) out.push_back(normalizer(name));
  return out;
}

namespace {

/// Matched attributes (in KG2 attribute space) and their value sets for
/// the candidate entities of one side.
struct SideProfile {
  std::vector<std::vector<AttributeId>> attrs;  ///< sorted, unique per candidate
  /// values[c][attr] = sorted unique value ids in the shared value dictionary
  std::vector<std::map<AttributeId, std::vector<int>>> values;
};

class ValueDictionary {
 public:
  int intern(const std::string& text) {
    return ids_.emplace(normalize_text(text), static_cast<int>(ids_.size())).first->second;
  }

 private:
  std::map<std::string, int> ids_;
};

SideProfile profile(const KnowledgeGraph& kg, const std::vector<EntityId>& candidates,
                    const std::vector<std::optional<AttributeId>>& attr_map,
                    ValueDictionary& dict) {
  std::map<EntityId, std::size_t> row_of;
  for (std::size_t i = 0; i < candidates.size(); ++i) row_of[candidates[i]] = i;

  std::vector<std::map<AttributeId, std::set<int>>> acc(candidates.size());
  for (const auto& t : kg.attr_triples()) {
    auto row = row_of.find(t.entity);
    if (row == row_of.end()) continue;
    auto shared = attr_map[t.attribute];
    if (!shared) continue;
    acc[row->second][*shared].insert(dict.intern(kg.value(t.value)));
  }

  SideProfile p;
  p.attrs.resize(candidates.size());
  p.values.resize(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (const auto& [attr, vals] : acc[i]) {
      p.attrs[i].push_back(attr);
      p.values[i][attr] = std::vector<int>(vals.begin(), vals.end());
    }
  }
  return p;
}

std::pair<SideProfile, SideProfile> profiles(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                                             const AttributeAlignment& alignment,
                                             const CandidateSets& candidates) {
  std::vector<std::optional<AttributeId>> map1(kg1.num_attributes());
  std::vector<std::optional<AttributeId>> map2(kg2.num_attributes());
  for (const auto& m : alignment.matches) {
    if (m.left < 0 || static_cast<std::size_t>(m.left) >= map1.size() || m.right < 0 ||
        static_cast<std::size_t>(m.right) >= map2.size()) {
      throw ArgumentError("attribute alignment refers to attribute ids outside the graphs");
    }
    map1[m.left] = m.right;
    map2[m.right] = m.right;
  }
  ValueDictionary dict;
  auto left = profile(kg1, candidates.left, map1, dict);
  auto right = profile(kg2, candidates.right, map2, dict);
  return {std::move(left), std::move(right)};
}

/// Calls fn(row, col) for every candidate pair that shares an attribute.
template <typename Fn>
void for_each_sharing_pair(const SideProfile& left, const SideProfile& right, Fn&& fn) {
  std::map<AttributeId, std::vector<int>> postings;
  for (std::size_t j = 0; j < right.attrs.size(); ++j) {
    for (auto a : right.attrs[j]) postings[a].push_back(static_cast<int>(j));
  }
  for (std::size_t i = 0; i < left.attrs.size(); ++i) {
    std::set<int> cols;
    for (auto a : left.attrs[i]) {
      if (auto it = postings.find(a); it != postings.end()) cols.insert(it->second.begin(), it->second.end());
    }
    for (int j : cols) fn(static_cast<int>(i), j);
  }
}

}  // namespace

SparseSimilarity attr_similarity(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                                 const AttributeAlignment& alignment,
                                 const CandidateSets& candidates) {
  const auto [left, right] = profiles(kg1, kg2, alignment, candidates);
  std::vector<Eigen::Triplet<double>> entries;
  for_each_sharing_pair(left, right, [&](int i, int j) {
    entries.emplace_back(i, j, jaccard(left.attrs[i], right.attrs[j]));
  });
  SparseSimilarity s(static_cast<Eigen::Index>(candidates.left.size()),
                     static_cast<Eigen::Index>(candidates.right.size()));
  s.setFromTriplets(entries.begin(), entries.end());
  return s;
}

SparseSimilarity attr_value_similarity(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                                       const AttributeAlignment& alignment,
                                       const CandidateSets& candidates) {
  const auto [left, right] = profiles(kg1, kg2, alignment, candidates);
  std::vector<Eigen::Triplet<double>> entries;
  for_each_sharing_pair(left, right, [&](int i, int j) {
    double total = 0.0;
    int common = 0;
    for (const auto& [attr, vals] : left.values[i]) {
      auto it = right.values[j].find(attr);
      if (it == right.values[j].end()) continue;
      total += jaccard(vals, it->second);
      ++common;
    }
    if (common > 0 && total > 0.0) entries.emplace_back(i, j, total / common);
  });
  SparseSimilarity s(static_cast<Eigen::Index>(candidates.left.size()),
                     static_cast<Eigen::Index>(candidates.right.size()));
  s.setFromTriplets(entries.begin(), entries.end());
  return s;
}

void SimilarityWeights::validate() const {
  for (double w : {relation, attribute, value}) {
    if (!(w >= 0.0 && w <= 1.0)) {
      throw ValidationError("similarity weights must lie in [0, 1]");
    }
  }
}

Eigen::MatrixXd combine_similarity(const Eigen::MatrixXd& s_rel, const Eigen::MatrixXd& s_attr,
                                   const Eigen::MatrixXd& s_value, const SimilarityWeights& w) {
  if (s_rel.rows() != s_attr.rows() || s_rel.cols() != s_attr.cols() ||
      s_rel.rows() != s_value.rows() || s_rel.cols() != s_value.cols()) {
    throw ArgumentError("combine_similarity: matrices must have the same shape");
  }
  return w.relation * s_rel + w.attribute * s_attr + w.value * s_value;
}

Eigen::MatrixXd combine_similarity(const Eigen::MatrixXd& s_rel, const SparseSimilarity& s_attr,
                                   const SparseSimilarity& s_value, const SimilarityWeights& w) {
  if (s_rel.rows() != s_attr.rows() || s_rel.cols() != s_attr.cols() ||
      s_rel.rows() != s_value.rows() || s_rel.cols() != s_value.cols()) {
    throw ArgumentError("combine_similarity: matrices must have the same shape");
  }
  Eigen::MatrixXd out = w.relation * s_rel;
  for (Eigen::Index i = 0; i < s_attr.outerSize(); ++i) {
    for (SparseSimilarity::InnerIterator it(s_attr, i); it; ++it)
      out(it.row(), it.col()) += w.attribute * it.value();
    for (SparseSimilarity::InnerIterator it(s_value, i); it; ++it)
      out(it.row(), it.col()) += w.value * it.value();
  }
  return out;
}

void write_attribute_report(const std::filesystem::path& path, const AttributeAlignment& alignment,
                            const KnowledgeGraph& kg1, const KnowledgeGraph& kg2) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot write " + path.string());
  auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q.push_back('"');
      q.push_back(c);
    }
    return q + "\"";
  };
  out << "attr1,attr2,dice\n";
  for (const auto& m : alignment.matches) {
    out << quote(kg1.attribute_name(m.left)) << ',' << quote(kg2.attribute_name(m.right)) << ','
        << fmt::format("{:.6f}", m.score) << '\n';
  }
}

}  // namespace echoea
