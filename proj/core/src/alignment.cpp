#include "echoea/alignment.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <vector>

#include "echoea/error.hpp"

namespace echoea {

Eigen::MatrixXd pairwise_l1(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.cols() != b.cols()) throw ArgumentError("pairwise_l1: dimension mismatch");
  Eigen::MatrixXd d(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) d(i, j) = (a.row(i) - b.row(j)).cwiseAbs().sum();
  }
  return d;
}

Eigen::MatrixXd minmax_normalize(const Eigen::MatrixXd& s) {
  if (s.size() == 0) return s;
  const double lo = s.minCoeff();
  const double hi = s.maxCoeff();
  if (hi == lo) return Eigen::MatrixXd::Constant(s.rows(), s.cols(), 0.5);
  return (s.array() - lo) / (hi - lo);
}

Eigen::MatrixXd rel_similarity(const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2,
                               const CandidateSets& candidates) {
  if (candidates.left.empty() || candidates.right.empty()) {
    throw ArgumentError("rel_similarity: candidate sets must be non-empty");
  }
  Eigen::MatrixXd a(static_cast<Eigen::Index>(candidates.left.size()), x1.cols());
  Eigen::MatrixXd b(static_cast<Eigen::Index>(candidates.right.size()), x2.cols());
  for (std::size_t i = 0; i < candidates.left.size(); ++i) a.row(i) = x1.row(candidates.left[i]);
  for (std::size_t j = 0; j < candidates.right.size(); ++j) b.row(j) = x2.row(candidates.right[j]);
  return minmax_normalize(-pairwise_l1(a, b));
}

LocalAlignment local_align(const Eigen::MatrixXd& s) {
  PairSet p1;
  PairSet p2;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < s.cols(); ++j) {
      if (s(i, j) > s(i, best)) best = j;
    }
    if (s.cols() > 0) p1.insert({static_cast<EntityId>(i), static_cast<EntityId>(best)});
  }
  for (Eigen::Index j = 0; j < s.cols(); ++j) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < s.rows(); ++i) {
      if (s(i, j) > s(best, j)) best = i;
    }
    if (s.rows() > 0) p2.insert({static_cast<EntityId>(best), static_cast<EntityId>(j)});
  }
  LocalAlignment out;
  out.plus = set_intersection(p1, p2);
  out.minus = set_difference(set_union(p1, p2), out.plus);
  return out;
}

namespace {

/// Lazily materialised preference list of one proposer: columns in
/// decreasing S order, ties to the lower column.
class PreferenceList {
 public:
  int at(const Eigen::MatrixXd& s, Eigen::Index row, std::size_t rank, std::vector<int>& scratch) {
    if (rank >= prefix_.size()) extend(s, row, rank + 1, scratch);
    return prefix_[rank];
  }

 private:
  void extend(const Eigen::MatrixXd& s, Eigen::Index row, std::size_t need,
              std::vector<int>& scratch) {
    const auto m = static_cast<std::size_t>(s.cols());
    const std::size_t k = std::min(m, std::max<std::size_t>({need, 2 * prefix_.size(), 8}));
    scratch.resize(m);
    std::iota(scratch.begin(), scratch.end(), 0);
    std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k),
                      scratch.end(), [&](int a, int b) {
                        return s(row, a) > s(row, b) || (s(row, a) == s(row, b) && a < b);
                      });
    prefix_.assign(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k));
  }

  std::vector<int> prefix_;
};

}  // namespace

PairSet global_align(const Eigen::MatrixXd& s) {
  const auto n = static_cast<std::size_t>(s.rows());
  const auto m = static_cast<std::size_t>(s.cols());
  std::vector<int> holder(m, -1);
  std::vector<std::size_t> next(n, 0);
  std::vector<PreferenceList> prefs(n);
  std::vector<int> scratch;
  std::deque<int> free_rows(n);
  std::iota(free_rows.begin(), free_rows.end(), 0);

  while (!free_rows.empty()) {
    const int i = free_rows.front();
    free_rows.pop_front();
    if (next[i] >= m) continue;  // exhausted: stays unmatched
    const int j = prefs[i].at(s, i, next[i]++, scratch);
    const int h = holder[j];
    if (h < 0) {
      holder[j] = i;
    } else if (s(i, j) > s(h, j) || (s(i, j) == s(h, j) && i < h)) {
      holder[j] = i;
      free_rows.push_back(h);
    } else {
      free_rows.push_back(i);
    }
  }

  PairSet out;
  for (std::size_t j = 0; j < m; ++j) {
    if (holder[j] >= 0) out.insert({holder[j], static_cast<EntityId>(j)});
  }
  return out;
}

Eigen::MatrixXd bidirectional_softmax_sum(const Eigen::MatrixXd& s) {
  Eigen::MatrixXd row = s;
  for (Eigen::Index i = 0; i < s.rows(); ++i) {
    row.row(i) = (s.row(i).array() - s.row(i).maxCoeff()).exp();
    row.row(i) /= row.row(i).sum();
  }
  Eigen::MatrixXd col = s;
  for (Eigen::Index j = 0; j < s.cols(); ++j) {
    col.col(j) = (s.col(j).array() - s.col(j).maxCoeff()).exp();
    col.col(j) /= col.col(j).sum();
  }
  return row + col;
}

AlignmentResult abgs_on(const Eigen::MatrixXd& s, const AbgsOptions& options) {
  AlignmentResult r;
  auto local = local_align(s);
  r.local_plus = std::move(local.plus);
  r.local_minus = std::move(local.minus);
  r.global = global_align(options.refine_global ? bidirectional_softmax_sum(s) : s);
  r.iter_plus = set_intersection(r.local_plus, r.global);
  r.iter_minus = set_difference(r.local_minus, r.global);
  return r;
}

AlignmentResult abgs(const Eigen::MatrixXd& s_rel, const SparseSimilarity& s_attr,
                     const SparseSimilarity& s_value, const SimilarityWeights& weights,
                     const AbgsOptions& options) {
  return abgs_on(combine_similarity(s_rel, s_attr, s_value, weights), options);
}

}  // namespace echoea
