#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <set>
#include <vector>

namespace echoea {

using EntityId = std::int32_t;
using RelationId = std::int32_t;
using AttributeId = std::int32_t;
using ValueId = std::int32_t;

/// An ordered (left KG entity, right KG entity) pair.
struct EntityPair {
  EntityId left = 0;
  EntityId right = 0;

  friend auto operator<=>(const EntityPair&, const EntityPair&) = default;
};

/// Ordered set of entity pairs with the set algebra the bootstrapping
/// procedure needs. Iteration order is lexicographic, so anything derived
/// from a PairSet is deterministic.
class PairSet {
 public:
  using const_iterator = std::set<EntityPair>::const_iterator;

  PairSet() = default;
  PairSet(std::initializer_list<EntityPair> pairs) : pairs_(pairs) {}
  explicit PairSet(const std::vector<EntityPair>& pairs)
      : pairs_(pairs.begin(), pairs.end()) {}

  bool insert(EntityPair pair) { return pairs_.insert(pair).second; }
  bool erase(EntityPair pair) { return pairs_.erase(pair) > 0; }
  bool contains(EntityPair pair) const { return pairs_.contains(pair); }
  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }
  void clear() noexcept { pairs_.clear(); }

  const_iterator begin() const { return pairs_.begin(); }
  const_iterator end() const { return pairs_.end(); }

  std::vector<EntityPair> to_vector() const {
    return {pairs_.begin(), pairs_.end()};
  }

  /// True when no left and no right entity occurs twice.
  bool is_one_to_one() const;

  friend bool operator==(const PairSet&, const PairSet&) = default;

 private:
  std::set<EntityPair> pairs_;
};

PairSet set_union(const PairSet& a, const PairSet& b);
PairSet set_intersection(const PairSet& a, const PairSet& b);
PairSet set_difference(const PairSet& a, const PairSet& b);

}  // namespace echoea
