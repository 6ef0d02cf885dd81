#pragma once

#include <Eigen/Core>

#include "echoea/attribute_sim.hpp"
#include "echoea/pair_set.hpp"

namespace echoea {

/// Pairwise L1 distances between rows of a and rows of b.
Eigen::MatrixXd pairwise_l1(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Affine map onto [0, 1]; a constant matrix maps to 0.5 everywhere.
Eigen::MatrixXd minmax_normalize(const Eigen::MatrixXd& s);

/// S^rel over candidate sets: -||x_i - x_j||_1, min-max normalized.
/// Throws ArgumentError when either candidate set is empty.
Eigen::MatrixXd rel_similarity(const Eigen::MatrixXd& x1, const Eigen::MatrixXd& x2,
                               const CandidateSets& candidates);

struct LocalAlignment {
  PairSet plus;   ///< mutual nearest neighbours
  PairSet minus;  ///< the remaining one-directional nearest-neighbour pairs
};

/// Row- and column-argmax pairs of S (ties to the lowest index) split into
/// their intersection and symmetric remainder. Pairs are (row, col).
LocalAlignment local_align(const Eigen::MatrixXd& s);

/// One-to-one stable matching by deferred acceptance: rows propose in
/// decreasing S order, each column holds its best proposer so far. Ties
/// prefer the lower index on both sides. Pairs are (row, col).
PairSet global_align(const Eigen::MatrixXd& s);

/// Row-softmax(S) + column-softmax(S); optional sharpening before matching.
Eigen::MatrixXd bidirectional_softmax_sum(const Eigen::MatrixXd& s);

struct AlignmentResult {
  PairSet local_plus;
  PairSet local_minus;
  PairSet global;
  PairSet iter_plus;   ///< local_plus n global
  PairSet iter_minus;  ///< local_minus - global
};

struct AbgsOptions {
  /// Replace S by bidirectional_softmax_sum(S) before global matching.
  bool refine_global = false;
};

/// Local and global alignment on an already-combined similarity matrix.
AlignmentResult abgs_on(const Eigen::MatrixXd& s, const AbgsOptions& options = {});

/// Combines the three similarity matrices and runs abgs_on. All pairs are in
/// candidate-index space.
AlignmentResult abgs(const Eigen::MatrixXd& s_rel, const SparseSimilarity& s_attr,
                     const SparseSimilarity& s_value, const SimilarityWeights& weights,
                     const AbgsOptions& options = {});

}  // namespace echoea
