#include "echoea/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "echoea/error.hpp"

namespace echoea {
namespace {

std::string random_word(std::mt19937_64& rng, int length) {
  std::uniform_int_distribution<int> letter(0, 25);
  std::string w;
  for (int i = 0; i < length; ++i) w.push_back(static_cast<char>('a' + letter(rng)));
  return w;
}

/// Same name after lowercase + whitespace collapsing, different raw text.
std::string restyle(std::string name) {
  std::string out;
  bool word_start = true;
  for (char c : name) {
    if (c == ' ') {
      out += "  ";
      word_start = true;
      continue;
    }
    out.push_back(word_start ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c);
    word_start = false;
  }
  return out;
}

}  // namespace

Dataset synth_kg_pair(const SynthOptions& opt) {
  if (opt.n_entities < 2) throw ArgumentError("synth_kg_pair needs at least 2 entities");
  if (opt.n_relations < 1) throw ArgumentError("synth_kg_pair needs at least 1 relation");
  if (!(opt.noise >= 0.0 && opt.noise <= 1.0)) throw ArgumentError("noise must lie in [0, 1]");
  if (opt.embedding_dim < 1) throw ArgumentError("embedding_dim must be positive");
  const auto n = opt.n_entities;
  const auto target = std::llround(opt.triple_density * n);
  if (target <= 0) throw ArgumentError("triple_density yields no triples");
  const auto max_triples = static_cast<long long>(n) * (n - 1) * opt.n_relations;
  if (target > max_triples) throw ArgumentError("triple_density exceeds the number of distinct triples");

  std::mt19937_64 rng(opt.rng_seed);
  std::uniform_int_distribution<int> pick_entity(0, n - 1);
  std::uniform_int_distribution<int> pick_relation(0, opt.n_relations - 1);
  std::bernoulli_distribution is_noisy(opt.noise);

  std::vector<RelTriple> triples;
  std::set<RelTriple> seen;
  while (static_cast<long long>(triples.size()) < target) {
    RelTriple t{pick_entity(rng), pick_relation(rng), pick_entity(rng)};
    if (t.head == t.tail || !seen.insert(t).second) continue;
    triples.push_back(t);
  }

  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> rel_perm(static_cast<std::size_t>(opt.n_relations));
  std::iota(rel_perm.begin(), rel_perm.end(), 0);
  std::shuffle(rel_perm.begin(), rel_perm.end(), rng);

  // Attribute names and per-entity attribute values.
  std::vector<std::string> attr_names;
  for (int a = 0; a < opt.attr_vocab; ++a) {
    attr_names.push_back(random_word(rng, 5) + " " + random_word(rng, 4));
  }
  struct AttrValue { int entity; int attribute; std::string value; };
  std::vector<AttrValue> attr_values;
  if (opt.attr_vocab > 0) {
    std::uniform_int_distribution<int> count(1, std::min(3, opt.attr_vocab));
    std::uniform_int_distribution<int> pick_attr(0, opt.attr_vocab - 1);
    for (int e = 0; e < n; ++e) {
      std::set<int> chosen;
      const int c = count(rng);
      while (static_cast<int>(chosen.size()) < c) chosen.insert(pick_attr(rng));
      for (int a : chosen) attr_values.push_back({e, a, random_word(rng, 6)});
    }
  }

  Dataset ds;
  KnowledgeGraphBuilder b1;
  KnowledgeGraphBuilder b2;
  for (int e = 0; e < n; ++e) b1.add_entity(e, fmt::format("kg1/e{}", e));
  for (int j = 0; j < n; ++j) b2.add_entity(n + j, fmt::format("kg2/e{}", j));

  for (const auto& t : triples) {
    b1.add_rel_triple(t.head, b1.intern_relation(t.relation), t.tail);
  }
  for (const auto& t : triples) {
    int tail = t.tail;
    if (is_noisy(rng)) {
      do { tail = pick_entity(rng); } while (tail == t.head);
    }
    b2.add_rel_triple(perm[t.head],
                      b2.intern_relation(opt.n_relations + rel_perm[t.relation]),
                      perm[tail]);
  }
  for (const auto& av : attr_values) {
    b1.add_attr_triple(av.entity, b1.intern_attribute(attr_names[av.attribute]),
                       b1.intern_value(av.value));
  }
  for (const auto& av : attr_values) {
    std::string value = is_noisy(rng) ? random_word(rng, 6) : av.value;
    b2.add_attr_triple(perm[av.entity], b2.intern_attribute(restyle(attr_names[av.attribute])),
                       b2.intern_value(value));
  }
  ds.kg1 = std::move(b1).build();
  ds.kg2 = std::move(b2).build();

  PairSet truth;
  for (int e = 0; e < n; ++e) truth.insert({e, perm[e]});
  ds.seeds = SeedPairs(std::move(truth));

  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd x1(n, opt.embedding_dim);
  for (Eigen::Index r = 0; r < x1.rows(); ++r)
    for (Eigen::Index c = 0; c < x1.cols(); ++c) x1(r, c) = gauss(rng);
  Eigen::MatrixXd x2(n, opt.embedding_dim);
  for (int e = 0; e < n; ++e) {
    x2.row(perm[e]) = x1.row(e);
    if (is_noisy(rng)) {
      for (Eigen::Index c = 0; c < x2.cols(); ++c)
        x2(perm[e], c) += opt.perturbation_scale * gauss(rng);
    }
  }
  ds.embeddings1 = std::move(x1);
  ds.embeddings2 = std::move(x2);
  return ds;
}

}  // namespace echoea
