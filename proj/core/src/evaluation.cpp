#include "echoea/evaluation.hpp"

#include "echoea/error.hpp"

namespace echoea {

EvalDirection parse_direction(std::string_view name) {
  if (name == "left_to_right") return EvalDirection::kLeftToRight;
  if (name == "right_to_left") return EvalDirection::kRightToLeft;
  if (name == "averaged") return EvalDirection::kAveraged;
  throw ValidationError("unknown evaluation direction '" + std::string(name) + "'");
}

const char* to_string(EvalDirection direction) noexcept {
  switch (direction) {
    case EvalDirection::kLeftToRight: return "left_to_right";
    case EvalDirection::kRightToLeft: return "right_to_left";
    case EvalDirection::kAveraged: return "averaged";
  }
  return "left_to_right";
}

int rank_in_row(const Eigen::MatrixXd& s, Eigen::Index row, Eigen::Index col) {
  const double target = s(row, col);
  int rank = 1;
  for (Eigen::Index j = 0; j < s.cols(); ++j) {
    if (s(row, j) > target || (s(row, j) == target && j < col)) ++rank;
  }
  return rank;
}

namespace {

void check_truth(const Eigen::MatrixXd& s, const PairSet& truth) {
  if (truth.empty()) throw ArgumentError("evaluation needs at least one truth pair");
  for (const auto& p : truth) {
    if (p.left < 0 || p.left >= s.rows() || p.right < 0 || p.right >= s.cols()) {
      throw ArgumentError("truth pair outside the similarity matrix");
    }
  }
}

PairSet flipped(const PairSet& pairs) {
  PairSet out;
  for (const auto& p : pairs) out.insert({p.right, p.left});
  return out;
}

}  // namespace

double hits_at_k(const Eigen::MatrixXd& s, const PairSet& truth, int k) {
  check_truth(s, truth);
  std::size_t hit = 0;
  for (const auto& p : truth) {
    if (rank_in_row(s, p.left, p.right) <= k) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

double mrr(const Eigen::MatrixXd& s, const PairSet& truth) {
  check_truth(s, truth);
  double total = 0.0;
  for (const auto& p : truth) total += 1.0 / rank_in_row(s, p.left, p.right);
  return total / static_cast<double>(truth.size());
}

EvalReport evaluate(const Eigen::MatrixXd& s, const PairSet& truth, EvalDirection direction,
                    const std::vector<int>& ks) {
  auto one_way = [&](const Eigen::MatrixXd& m, const PairSet& t) {
    EvalReport r;
    // Ranks are computed once per truth pair and reused for every k.
    check_truth(m, t);
    std::vector<int> ranks;
    for (const auto& p : t) ranks.push_back(rank_in_row(m, p.left, p.right));
    for (int k : ks) {
      std::size_t hit = 0;
      for (int rk : ranks) hit += rk <= k ? 1 : 0;
      r.hits[k] = static_cast<double>(hit) / static_cast<double>(ranks.size());
    }
    double total = 0.0;
    for (int rk : ranks) total += 1.0 / rk;
    r.mrr = total / static_cast<double>(ranks.size());
    return r;
  };

  EvalReport out;
  switch (direction) {
    case EvalDirection::kLeftToRight:
      out = one_way(s, truth);
      break;
    case EvalDirection::kRightToLeft:
      out = one_way(s.transpose(), flipped(truth));
      break;
    case EvalDirection::kAveraged: {
      auto a = one_way(s, truth);
      auto b = one_way(s.transpose(), flipped(truth));
      for (int k : ks) out.hits[k] = 0.5 * (a.hits[k] + b.hits[k]);
      out.mrr = 0.5 * (a.mrr + b.mrr);
      break;
    }
  }
  out.direction = direction;
  return out;
}

double matching_hits_at_1(const PairSet& matching, const PairSet& truth) {
  if (truth.empty()) throw ArgumentError("evaluation needs at least one truth pair");
  return static_cast<double>(set_intersection(matching, truth).size()) /
         static_cast<double>(truth.size());
}

BootstrapQuality bootstrap_quality(const PairSet& iter_plus, const PairSet& iter_minus,
                                   const PairSet& truth) {
  if (truth.empty()) throw ArgumentError("bootstrap_quality needs a non-empty truth set");
  BootstrapQuality q;
  q.r_u = static_cast<double>(iter_plus.size() + iter_minus.size()) /
          static_cast<double>(truth.size());
  if (!iter_plus.empty()) {
    q.r_p = static_cast<double>(set_difference(iter_plus, truth).size()) /
            static_cast<double>(iter_plus.size());
  }
  if (!iter_minus.empty()) {
    q.r_n = static_cast<double>(set_intersection(iter_minus, truth).size()) /
            static_cast<double>(iter_minus.size());
  }
  return q;
}

}  // namespace echoea
