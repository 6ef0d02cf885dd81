#pragma once

#include <map>
#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "echoea/pair_set.hpp"

namespace echoea {

enum class EvalDirection { kLeftToRight, kRightToLeft, kAveraged };

EvalDirection parse_direction(std::string_view name);
const char* to_string(EvalDirection direction) noexcept;

/// 1-based rank of column `col` in row `row` of S: entries strictly greater
/// come first, equal entries with a lower column index come first.
int rank_in_row(const Eigen::MatrixXd& s, Eigen::Index row, Eigen::Index col);

/// Fraction of truth pairs (row, col) whose col ranks within the top k of
/// its row. Throws ArgumentError on empty truth or out-of-range pairs.
double hits_at_k(const Eigen::MatrixXd& s, const PairSet& truth, int k);

/// Mean of 1/rank over truth pairs. Throws ArgumentError on empty truth.
double mrr(const Eigen::MatrixXd& s, const PairSet& truth);

struct EvalReport {
  std::map<int, double> hits;  ///< k -> rate
  double mrr = 0.0;
  EvalDirection direction = EvalDirection::kLeftToRight;
};

EvalReport evaluate(const Eigen::MatrixXd& s, const PairSet& truth, EvalDirection direction,
                    const std::vector<int>& ks = {1, 10});

/// Hits@1 of a one-to-one matching: the fraction of truth pairs it contains.
double matching_hits_at_1(const PairSet& matching, const PairSet& truth);

/// Quality rates of one bootstrap round; r_p / r_n are absent when the
/// corresponding sample set is empty.
struct BootstrapQuality {
  double r_u = 0.0;
  std::optional<double> r_p;
  std::optional<double> r_n;
};

/// r_u = (|P+| + |P-|) / |P'|, r_p = |P+ \ P'| / |P+|, r_n = |P- n P'| / |P-|.
/// Throws ArgumentError when `truth` is empty.
BootstrapQuality bootstrap_quality(const PairSet& iter_plus, const PairSet& iter_minus,
                                   const PairSet& truth);

}  // namespace echoea
