#include "echoea/knowledge_graph.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "echoea/error.hpp"

namespace echoea {

std::optional<EntityId> KnowledgeGraph::find_entity_by_source_id(
    std::int64_t source_id) const {
  auto it = std::find(entity_source_ids_.begin(), entity_source_ids_.end(), source_id);
  if (it == entity_source_ids_.end()) return std::nullopt;
  return static_cast<EntityId>(it - entity_source_ids_.begin());
}

EntityId KnowledgeGraphBuilder::add_entity(std::int64_t source_id, std::string uri) {
  auto id = static_cast<EntityId>(kg_.entity_uris_.size());
  if (!entity_by_source_.emplace(source_id, id).second) {
    throw IntegrityError("duplicate entity id " + std::to_string(source_id));
  }
  entity_by_uri_.emplace(uri, id);
  kg_.entity_uris_.push_back(std::move(uri));
  kg_.entity_source_ids_.push_back(source_id);
  return id;
}

RelationId KnowledgeGraphBuilder::intern_relation(std::int64_t source_id) {
  auto [it, inserted] = relation_by_source_.emplace(
      source_id, static_cast<RelationId>(kg_.relation_source_ids_.size()));
  if (inserted) kg_.relation_source_ids_.push_back(source_id);
  return it->second;
}

AttributeId KnowledgeGraphBuilder::intern_attribute(const std::string& name) {
  auto [it, inserted] = attribute_by_name_.emplace(
      name, static_cast<AttributeId>(kg_.attribute_names_.size()));
  if (inserted) kg_.attribute_names_.push_back(name);
  return it->second;
}

ValueId KnowledgeGraphBuilder::intern_value(const std::string& value) {
  auto [it, inserted] =
      value_by_text_.emplace(value, static_cast<ValueId>(kg_.values_.size()));
  if (inserted) kg_.values_.push_back(value);
  return it->second;
}

std::optional<EntityId> KnowledgeGraphBuilder::find_entity(std::int64_t source_id) const {
  auto it = entity_by_source_.find(source_id);
  if (it == entity_by_source_.end()) return std::nullopt;
  return it->second;
}

std::optional<EntityId> KnowledgeGraphBuilder::find_entity_by_uri(
    const std::string& uri) const {
  auto it = entity_by_uri_.find(uri);
  if (it == entity_by_uri_.end()) return std::nullopt;
  return it->second;
}

void KnowledgeGraphBuilder::add_rel_triple(EntityId head, RelationId relation,
                                           EntityId tail) {
  kg_.rel_triples_.push_back({head, relation, tail});
}

void KnowledgeGraphBuilder::add_attr_triple(EntityId entity, AttributeId attribute,
                                            ValueId value) {
  kg_.attr_triples_.push_back({entity, attribute, value});
}

namespace {

template <typename T>
void dedupe_stable(std::vector<T>& items) {
  std::set<T> seen;
  std::erase_if(items, [&](const T& t) { return !seen.insert(t).second; });
}

bool in_range(std::int64_t id, std::size_t n) {
  return id >= 0 && static_cast<std::size_t>(id) < n;
}

}  // namespace

KnowledgeGraph KnowledgeGraphBuilder::build() && {
  const auto ne = kg_.num_entities();
  for (const auto& t : kg_.rel_triples_) {
    if (!in_range(t.head, ne) || !in_range(t.tail, ne) ||
        !in_range(t.relation, kg_.num_relations())) {
      throw IntegrityError("relation triple (" + std::to_string(t.head) + ", " +
                           std::to_string(t.relation) + ", " +
                           std::to_string(t.tail) + ") references a missing id");
    }
  }
  for (const auto& t : kg_.attr_triples_) {
    if (!in_range(t.entity, ne) || !in_range(t.attribute, kg_.num_attributes()) ||
        !in_range(t.value, kg_.num_values())) {
      throw IntegrityError("attribute triple references a missing id");
    }
  }
  dedupe_stable(kg_.rel_triples_);
  dedupe_stable(kg_.attr_triples_);
  return std::move(kg_);
}

SeedPairs::SeedPairs(PairSet pairs) : pairs_(std::move(pairs)) {
  if (!pairs_.is_one_to_one()) {
    throw IntegrityError("seed pairs are not a partial bijection");
  }
}

CandidateSets default_candidates(const SeedPairs& test) {
  CandidateSets c;
  for (const auto& p : test.pairs()) {
    c.left.push_back(p.left);
    c.right.push_back(p.right);
  }
  std::sort(c.left.begin(), c.left.end());
  std::sort(c.right.begin(), c.right.end());
  return c;
}

PairSet to_entity_pairs(const PairSet& index_pairs, const CandidateSets& candidates) {
  PairSet out;
  for (const auto& p : index_pairs) {
    out.insert({candidates.left.at(p.left), candidates.right.at(p.right)});
  }
  return out;
}

PairSet to_index_pairs(const PairSet& entity_pairs, const CandidateSets& candidates) {
  PairSet out;
  for (const auto& p : entity_pairs) {
    auto li = std::lower_bound(candidates.left.begin(), candidates.left.end(), p.left);
    auto ri = std::lower_bound(candidates.right.begin(), candidates.right.end(), p.right);
    if (li == candidates.left.end() || *li != p.left) continue;
    if (ri == candidates.right.end() || *ri != p.right) continue;
    out.insert({static_cast<EntityId>(li - candidates.left.begin()),
                static_cast<EntityId>(ri - candidates.right.begin())});
  }
  return out;
}

AdjacencyStructure build_adjacency(const KnowledgeGraph& kg, bool undirected) {
  const auto n = static_cast<Eigen::Index>(kg.num_entities());
  AdjacencyStructure adj;
  adj.neighbor_lists.resize(static_cast<std::size_t>(n));

  std::vector<std::set<EntityId>> rows(static_cast<std::size_t>(n));
  for (EntityId i = 0; i < n; ++i) rows[i].insert(i);
  for (const auto& t : kg.rel_triples()) {
    rows[t.head].insert(t.tail);
    adj.neighbor_lists[t.head].push_back({t.tail, t.relation, Direction::kHeadToTail});
    if (undirected) {
      rows[t.tail].insert(t.head);
      adj.neighbor_lists[t.tail].push_back({t.head, t.relation, Direction::kTailToHead});
    }
  }

  std::vector<Eigen::Triplet<double>> entries;
  adj.degree.resize(static_cast<std::size_t>(n));
  for (EntityId i = 0; i < n; ++i) {
    adj.degree[i] = static_cast<int>(rows[i].size());
    for (EntityId j : rows[i]) entries.emplace_back(i, j, 1.0);
  }
  adj.self_loop_adjacency.resize(n, n);
  adj.self_loop_adjacency.setFromTriplets(entries.begin(), entries.end());
  return adj;
}

SeedSplit split_seeds(const SeedPairs& seeds, double train_fraction,
                      std::uint64_t rng_seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ArgumentError("train_fraction must lie in (0, 1)");
  }
  if (seeds.empty()) throw ArgumentError("cannot split an empty seed set");

  auto pairs = seeds.pairs().to_vector();
  std::mt19937_64 rng(rng_seed);
  std::shuffle(pairs.begin(), pairs.end(), rng);
  const auto n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(pairs.size())));

  PairSet train(std::vector<EntityPair>(pairs.begin(), pairs.begin() + n_train));
  PairSet test(std::vector<EntityPair>(pairs.begin() + n_train, pairs.end()));
  return {SeedPairs(std::move(train)), SeedPairs(std::move(test))};
}

}  // namespace echoea
