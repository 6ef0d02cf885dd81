#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "echoea/alignment.hpp"
#include "echoea/encoder.hpp"
#include "echoea/knowledge_graph.hpp"
#include "echoea/training.hpp"

namespace echoea::testing {

inline KnowledgeGraph make_kg(int n, const std::vector<RelTriple>& triples) {
  KnowledgeGraphBuilder b;
  for (int i = 0; i < n; ++i) b.add_entity(i, "e" + std::to_string(i));
  RelationId max_rel = -1;
  for (const auto& t : triples) max_rel = std::max(max_rel, t.relation);
  for (RelationId r = 0; r <= max_rel; ++r) b.intern_relation(r);
  for (const auto& t : triples) b.add_rel_triple(t.head, t.relation, t.tail);
  return std::move(b).build();
}

/// Random KG; every relation id below n_rel gets at least one triple when
/// n_triples allows it.
inline KnowledgeGraph random_kg(int n, int n_rel, int n_triples, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> ent(0, n - 1);
  std::uniform_int_distribution<int> rel(0, n_rel - 1);
  std::vector<RelTriple> triples;
  for (int i = 0; i < n_triples; ++i) {
    triples.push_back({ent(rng), i < n_rel ? i : rel(rng), ent(rng)});
  }
  return make_kg(n, triples);
}

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng,
                                     double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

/// One entry per parameter group plus "x1" and "x2".
struct GroupError {
  std::string name;
  double relative_error = 0.0;
};

/// Relative error ||analytic - numeric|| / max(||analytic||, ||numeric||, 1e-8)
/// per group, for L = hinge_loss(encode(x1), encode(x2)) with central
/// differences of step h. Dropout is active with a replayed rng so the mask
/// is the same in every evaluation.
inline std::vector<GroupError> gradient_check(const KnowledgeGraph& kg1, const KnowledgeGraph& kg2,
                                              const EncoderConfig& config, ModelParams params,
                                              Matrix x1, Matrix x2, const SampleBank& bank,
                                              double margin, double h = 1e-5) {
  const auto g1 = EncoderGraph::build(kg1, build_adjacency(kg1));
  const auto g2 = EncoderGraph::build(kg2, build_adjacency(kg2));
  constexpr std::uint64_t kDropSeed = 99;

  auto loss_at = [&](const ModelParams& p, const Matrix& a, const Matrix& b) {
    Rng rng(kDropSeed);
    const Matrix o1 = encode(g1, a, p, config, Mode::kTrain, &rng);
    const Matrix o2 = encode(g2, b, p, config, Mode::kTrain, &rng);
    return hinge_loss(o1, o2, bank, margin);
  };

  autodiff::Tape tape;
  auto bound = bind(tape, params, true);
  Var v1 = tape.parameter(x1);
  Var v2 = tape.parameter(x2);
  Rng rng(kDropSeed);
  Var o1 = encode(v1, g1, bound, config, Mode::kTrain, &rng);
  Var o2 = encode(v2, g2, bound, config, Mode::kTrain, &rng);
  tape.backward(hinge_loss(o1, o2, bank, margin));
  const ModelParams analytic = gradients(tape, bound);

  auto rel_err = [](const Matrix& a, const Matrix& n) {
    return (a - n).norm() / std::max({a.norm(), n.norm(), 1e-8});
  };
  auto numeric_of = [&](Matrix& target) {
    Matrix g(target.rows(), target.cols());
    for (Eigen::Index i = 0; i < target.size(); ++i) {
      const double keep = target.data()[i];
      target.data()[i] = keep + h;
      const double up = loss_at(params, x1, x2);
      target.data()[i] = keep - h;
      const double down = loss_at(params, x1, x2);
      target.data()[i] = keep;
      g.data()[i] = (up - down) / (2.0 * h);
    }
    return g;
  };

  std::vector<GroupError> out;
  std::vector<const Matrix*> analytic_groups;
  analytic.for_each([&](const std::string&, const Matrix& m) { analytic_groups.push_back(&m); });
  std::size_t idx = 0;
  params.for_each([&](const std::string& name, Matrix& m) {
    out.push_back({name, rel_err(*analytic_groups[idx++], numeric_of(m))});
  });
  out.push_back({"x1", rel_err(tape.grad(v1), numeric_of(x1))});
  out.push_back({"x2", rel_err(tape.grad(v2), numeric_of(x2))});
  return out;
}

/// A small bank with positives (i, i), nearest-neighbour negatives and one
/// iter_minus pair, for gradient checks on identity-aligned toy KGs.
inline SampleBank toy_bank(int n, const Matrix& x1, const Matrix& x2, int k) {
  SampleBank bank;
  for (int i = 0; i + 1 < n; ++i) bank.plus.insert({i, i});
  bank.minus = sample_negatives(bank.plus, x1, x2, k);
  bank.iter_minus.insert({n - 1, 0});
  return bank;
}

/// No pair (i, j) with S[i,j] above both current partners' scores.
inline bool is_stable(const Eigen::MatrixXd& s, const PairSet& m) {
  const auto rows = s.rows();
  const auto cols = s.cols();
  std::vector<int> col_of(rows, -1), row_of(cols, -1);
  for (const auto& p : m) {
    col_of[p.left] = p.right;
    row_of[p.right] = p.left;
  }
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (col_of[i] == j) continue;
      const bool row_prefers = col_of[i] < 0 || s(i, j) > s(i, col_of[i]);
      const bool col_prefers = row_of[j] < 0 || s(i, j) > s(row_of[j], j);
      if (row_prefers && col_prefers) return false;
    }
  }
  return true;
}

/// Full-scan double argmax, ties to the lowest index.
inline std::pair<PairSet, PairSet> local_oracle(const Eigen::MatrixXd& s) {
  PairSet p1, p2;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < s.cols(); ++j)
      if (s(i, j) > s(i, best)) best = j;
    p1.insert({static_cast<int>(i), static_cast<int>(best)});
  }
  for (Eigen::Index j = 0; j < s.cols(); ++j) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < s.rows(); ++i)
      if (s(i, j) > s(best, j)) best = i;
    p2.insert({static_cast<int>(best), static_cast<int>(j)});
  }
  const PairSet plus = set_intersection(p1, p2);
  return {plus, set_difference(set_union(p1, p2), plus)};
}

}  // namespace echoea::testing
