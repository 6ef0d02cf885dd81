#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "echoea/pair_set.hpp"

namespace echoea {

struct RelTriple {
  EntityId head = 0;
  RelationId relation = 0;
  EntityId tail = 0;

  friend auto operator<=>(const RelTriple&, const RelTriple&) = default;
};

struct AttrTriple {
  EntityId entity = 0;
  AttributeId attribute = 0;
  ValueId value = 0;

  friend auto operator<=>(const AttrTriple&, const AttrTriple&) = default;
};

/// One side of an alignment task. Entities, relations, attributes and
/// values are densely indexed from zero; the ids they had in the source
/// files are kept in side tables for reporting and re-serialization.
///
/// Instances are immutable once built and safe to share across readers.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;

  std::size_t num_entities() const noexcept { return entity_uris_.size(); }
  std::size_t num_relations() const noexcept { return relation_source_ids_.size(); }
  std::size_t num_attributes() const noexcept { return attribute_names_.size(); }
  std::size_t num_values() const noexcept { return values_.size(); }

  const std::vector<RelTriple>& rel_triples() const noexcept { return rel_triples_; }
  const std::vector<AttrTriple>& attr_triples() const noexcept { return attr_triples_; }

  const std::string& entity_uri(EntityId e) const { return entity_uris_.at(e); }
  std::int64_t entity_source_id(EntityId e) const { return entity_source_ids_.at(e); }
  std::int64_t relation_source_id(RelationId r) const { return relation_source_ids_.at(r); }
  const std::string& attribute_name(AttributeId a) const { return attribute_names_.at(a); }
  const std::string& value(ValueId v) const { return values_.at(v); }

  const std::vector<std::string>& attribute_names() const noexcept { return attribute_names_; }

  std::optional<EntityId> find_entity_by_source_id(std::int64_t source_id) const;

  friend bool operator==(const KnowledgeGraph&, const KnowledgeGraph&) = default;

 private:
  friend class KnowledgeGraphBuilder;

  std::vector<std::string> entity_uris_;
  std::vector<std::int64_t> entity_source_ids_;
  std::vector<std::int64_t> relation_source_ids_;
  std::vector<std::string> attribute_names_;
  std::vector<std::string> values_;
  std::vector<RelTriple> rel_triples_;
  std::vector<AttrTriple> attr_triples_;
};

/// Accumulates entities and triples, then validates and deduplicates them
/// into a KnowledgeGraph.
class KnowledgeGraphBuilder {
 public:
  /// Throws IntegrityError when `source_id` was already added.
  EntityId add_entity(std::int64_t source_id, std::string uri);

  RelationId intern_relation(std::int64_t source_id);
  AttributeId intern_attribute(const std::string& name);
  ValueId intern_value(const std::string& value);

  std::optional<EntityId> find_entity(std::int64_t source_id) const;
  std::optional<EntityId> find_entity_by_uri(const std::string& uri) const;

  void add_rel_triple(EntityId head, RelationId relation, EntityId tail);
  void add_attr_triple(EntityId entity, AttributeId attribute, ValueId value);

  /// Duplicate triples are dropped, first occurrence wins. Throws
  /// IntegrityError on a triple whose ids are out of range.
  KnowledgeGraph build() &&;

 private:
  KnowledgeGraph kg_;
  std::map<std::int64_t, EntityId> entity_by_source_;
  std::map<std::string, EntityId> entity_by_uri_;
  std::map<std::int64_t, RelationId> relation_by_source_;
  std::map<std::string, AttributeId> attribute_by_name_;
  std::map<std::string, ValueId> value_by_text_;
};

/// Reference alignment: a partial bijection between KG1 and KG2 entities.
class SeedPairs {
 public:
  SeedPairs() = default;
  /// Throws IntegrityError if an entity appears twice on either side.
  explicit SeedPairs(PairSet pairs);

  const PairSet& pairs() const noexcept { return pairs_; }
  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }

  friend bool operator==(const SeedPairs&, const SeedPairs&) = default;

 private:
  PairSet pairs_;
};

/// The unaligned entities E'1 and E'2 that bootstrapping draws from. Both
/// lists are sorted; row/column i of a candidate similarity matrix refers
/// to left[i] / right[i].
struct CandidateSets {
  std::vector<EntityId> left;
  std::vector<EntityId> right;
};

/// All test-seed entities on each side, which excludes every train-seed
/// entity because seeds are a bijection.
CandidateSets default_candidates(const SeedPairs& test);

/// Maps candidate-index pairs back to entity ids.
PairSet to_entity_pairs(const PairSet& index_pairs, const CandidateSets& candidates);

/// Ground-truth pairs restricted to the candidate sets, in index space.
PairSet to_index_pairs(const PairSet& entity_pairs, const CandidateSets& candidates);

enum class Direction : std::uint8_t {
  kHeadToTail,  ///< the owning entity is the head of the triple
  kTailToHead,  ///< the owning entity is the tail of the triple
};

struct Neighbor {
  EntityId entity = 0;
  RelationId relation = 0;
  Direction direction = Direction::kHeadToTail;
};

struct AdjacencyStructure {
  /// 0/1 matrix M + I.
  Eigen::SparseMatrix<double, Eigen::RowMajor> self_loop_adjacency;
  /// Row sums of self_loop_adjacency.
  std::vector<int> degree;
  /// Relation-labelled edges per entity; parallel edges are kept.
  std::vector<std::vector<Neighbor>> neighbor_lists;

  std::size_t size() const noexcept { return degree.size(); }
};

AdjacencyStructure build_adjacency(const KnowledgeGraph& kg, bool undirected = true);

struct SeedSplit {
  SeedPairs train;
  SeedPairs test;
};

/// Random partition with |train| = round(train_fraction * |seeds|).
/// Throws ArgumentError for a fraction outside (0, 1) or empty seeds.
SeedSplit split_seeds(const SeedPairs& seeds, double train_fraction,
                      std::uint64_t rng_seed);

}  // namespace echoea
