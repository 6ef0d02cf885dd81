#include "echoea/pair_set.hpp"

#include <algorithm>
#include <iterator>

namespace echoea {

bool PairSet::is_one_to_one() const {
  std::set<EntityId> lefts;
  std::set<EntityId> rights;
  for (const auto& p : pairs_) {
    if (!lefts.insert(p.left).second || !rights.insert(p.right).second) {
      return false;
    }
  }
  return true;
}

PairSet set_union(const PairSet& a, const PairSet& b) {
  std::vector<EntityPair> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return PairSet(out);
}

PairSet set_intersection(const PairSet& a, const PairSet& b) {
  std::vector<EntityPair> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return PairSet(out);
}

PairSet set_difference(const PairSet& a, const PairSet& b) {
  std::vector<EntityPair> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::back_inserter(out));
  return PairSet(out);
}

}  // namespace echoea
