#include "echoea/training.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "echoea/error.hpp"

namespace echoea {

void TrainingConfig::validate() const {
  std::vector<std::string> bad;
  if (!(learning_rate > 0.0)) bad.push_back("learning_rate");
  if (!(margin > 0.0)) bad.push_back("margin");
  if (neg_per_pos < 1) bad.push_back("neg_per_pos");
  if (refresh_period < 1) bad.push_back("refresh_period");
  if (max_epochs < 0) bad.push_back("max_epochs");
  if (eval_every < 0) bad.push_back("eval_every");
  if (!bad.empty()) {
    throw ValidationError(fmt::format("invalid training config: {}", fmt::join(bad, ", ")));
  }
  weights.validate();
}

namespace {

double l1(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  return (a.row(i) - b.row(j)).cwiseAbs().sum();
}

void check_bank(const SampleBank& bank) {
  if (bank.plus.empty()) throw ArgumentError("hinge_loss: the positive set is empty");
}

// max(0, t) that lets NaN through, so a diverged model cannot report zero loss.
double relu_keep_nan(double t) { return std::isnan(t) || t > 0.0 ? t : 0.0; }

}  // namespace

double hinge_loss(const Matrix& x1, const Matrix& x2, const SampleBank& bank, double margin) {
  check_bank(bank);
  double loss = 0.0;
  for (const auto& r : bank.minus) {
    const double d_pos = l1(x1, r.positive.left, x2, r.positive.right);
    const double d_neg = l1(x1, r.negative.left, x2, r.negative.right);
    loss += relu_keep_nan(margin + d_pos - d_neg);
  }
  for (const auto& p : bank.iter_minus) {
    loss += relu_keep_nan(margin - l1(x1, p.left, x2, p.right));
  }
  return loss;
}

Var hinge_loss(Var x1, Var x2, const SampleBank& bank, double margin) {
  check_bank(bank);
  auto& tape = x1.tape();
  Matrix value(1, 1);
  value(0, 0) = hinge_loss(x1.value(), x2.value(), bank, margin);
  auto records = std::make_shared<const std::vector<NegativeRecord>>(bank.minus);
  auto iter_minus = std::make_shared<const std::vector<EntityPair>>(bank.iter_minus.to_vector());
  return tape.record(
      std::move(value), {x1, x2},
      [x1, x2, records, iter_minus, margin](autodiff::Tape& tp, const Matrix&, const Matrix& g) {
        const auto& a = x1.value();
        const auto& b = x2.value();
        const double scale = g(0, 0);
        Matrix g1 = Matrix::Zero(a.rows(), a.cols());
        Matrix g2 = Matrix::Zero(b.rows(), b.cols());
        // d/dx1_i ||x1_i - x2_j||_1 = sign(x1_i - x2_j); sign(0) = 0.
        auto push = [&](const EntityPair& p, double w) {
          Eigen::RowVectorXd s = (a.row(p.left) - b.row(p.right)).array().sign().matrix();
          g1.row(p.left) += w * s;
          g2.row(p.right) -= w * s;
        };
        for (const auto& r : *records) {
          const double d_pos = l1(a, r.positive.left, b, r.positive.right);
          const double d_neg = l1(a, r.negative.left, b, r.negative.right);
          if (margin + d_pos - d_neg > 0.0) {
            push(r.positive, scale);
            push(r.negative, -scale);
          }
        }
        for (const auto& p : *iter_minus) {
          if (margin - l1(a, p.left, b, p.right) > 0.0) push(p, -scale);
        }
        tp.accumulate(x1, g1);
        tp.accumulate(x2, g2);
      });
}

namespace {

/// Indices of the `k` largest scores whose index is not excluded; ties to
/// the lower index.
template <typename Excluded>
std::vector<int> top_k(const Eigen::VectorXd& scores, int k, Excluded&& excluded) {
  std::vector<int> idx;
  for (Eigen::Index j = 0; j < scores.size(); ++j) {
    if (!excluded(static_cast<int>(j))) idx.push_back(static_cast<int>(j));
  }
  const auto take = std::min<std::size_t>(idx.size(), static_cast<std::size_t>(k));
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                    [&](int a, int b) {
                      return scores(a) > scores(b) || (scores(a) == scores(b) && a < b);
                    });
  idx.resize(take);
  return idx;
}

/// Shared sampling driver; row(a) / col(b) return the similarity of
/// every right entity to a / every left entity to b.
template <typename RowFn, typename ColFn>
std::vector<NegativeRecord> sample_with(const PairSet& plus, int k, RowFn&& row, ColFn&& col) {
  if (k < 1) throw ArgumentError("sample_negatives: k must be at least 1");
  std::map<EntityId, std::set<EntityId>> rights_of;
  std::map<EntityId, std::set<EntityId>> lefts_of;
  for (const auto& p : plus) {
    rights_of[p.left].insert(p.right);
    lefts_of[p.right].insert(p.left);
  }
  const int k_right = (k + 1) / 2;
  const int k_left = k / 2;
  std::vector<NegativeRecord> out;
  for (const auto& p : plus) {
    const auto& taken_r = rights_of[p.left];
    for (int j : top_k(row(p.left), k_right, [&](int j) { return taken_r.contains(j); })) {
      out.push_back({p, {p.left, j}});
    }
    if (k_left == 0) continue;
    const auto& taken_l = lefts_of[p.right];
    for (int i : top_k(col(p.right), k_left, [&](int i) { return taken_l.contains(i); })) {
      out.push_back({p, {i, p.right}});
    }
  }
  return out;
}

}  // namespace

std::vector<NegativeRecord> sample_negatives(const PairSet& plus, const Eigen::MatrixXd& s,
                                             int k) {
  for (const auto& p : plus) {
    if (p.left < 0 || p.left >= s.rows() || p.right < 0 || p.right >= s.cols()) {
      throw ArgumentError("sample_negatives: positive pair outside the similarity matrix");
    }
  }
  return sample_with(
      plus, k, [&](EntityId a) -> Eigen::VectorXd { return s.row(a).transpose(); },
      [&](EntityId b) -> Eigen::VectorXd { return s.col(b); });
}

std::vector<NegativeRecord> sample_negatives(const PairSet& plus, const Matrix& x1,
                                             const Matrix& x2, int k) {
  return sample_with(
      plus, k,
      [&](EntityId a) -> Eigen::VectorXd {
        return -(x2.rowwise() - x1.row(a)).cwiseAbs().rowwise().sum();
      },
      [&](EntityId b) -> Eigen::VectorXd {
        return -(x1.rowwise() - x2.row(b)).cwiseAbs().rowwise().sum();
      });
}

void Adam::step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  if (m_.empty()) {
    for (const auto* p : params) {
      m_.push_back(Matrix::Zero(p->rows(), p->cols()));
      v_.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grads[i];
    v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grads[i].cwiseAbs2();
    params[i]->array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + kEps);
  }
}

Eigen::MatrixXd candidate_similarity(const Matrix& out1, const Matrix& out2,
                                     const CandidateSets& candidates, bool use_attributes,
                                     const SimilarityWeights& weights,
                                     const std::optional<SparseSimilarity>& s_attr,
                                     const std::optional<SparseSimilarity>& s_value) {
  Eigen::MatrixXd s_rel = rel_similarity(out1, out2, candidates);
  if (!use_attributes) return s_rel;
  if (!s_attr || !s_value) {
    throw ArgumentError("attribute similarities are required when attributes are enabled");
  }
  return combine_similarity(s_rel, *s_attr, *s_value, weights);
}

TrainResult train_loop(const TrainInputs& in, const EncoderConfig& enc,
                       const TrainingConfig& cfg) {
  enc.validate();
  cfg.validate();
  if (in.kg1 == nullptr || in.kg2 == nullptr) throw ArgumentError("train_loop: missing KGs");
  if (in.train_seeds.empty()) throw ArgumentError("train_loop: no training seeds");

  const auto graph1 = EncoderGraph::build(*in.kg1, build_adjacency(*in.kg1, true));
  const auto graph2 = EncoderGraph::build(*in.kg2, build_adjacency(*in.kg2, true));

  TrainResult res;
  res.params = initialize_params(enc, cfg.rng_seed);
  res.x1 = in.x1;
  res.x2 = in.x2;
  Rng rng(cfg.rng_seed ^ 0x9e3779b97f4a7c15ULL);

  auto infer = [&] {
    res.out1 = encode(graph1, res.x1, res.params, enc, Mode::kInfer);
    res.out2 = encode(graph2, res.x2, res.params, enc, Mode::kInfer);
  };

  res.bank.plus = in.train_seeds.pairs();
  infer();
  res.bank.minus = sample_negatives(res.bank.plus, res.out1, res.out2, cfg.neg_per_pos);

  Adam adam(cfg.learning_rate);
  std::size_t last_iter_plus = 0;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    autodiff::Tape tape;
    auto bound = bind(tape, res.params, true);
    const bool train_inputs = !cfg.freeze_embeddings;
    Var x1 = train_inputs ? tape.parameter(res.x1) : tape.constant(res.x1);
    Var x2 = train_inputs ? tape.parameter(res.x2) : tape.constant(res.x2);
    Var o1 = encode(x1, graph1, bound, enc, Mode::kTrain, &rng);
    Var o2 = encode(x2, graph2, bound, enc, Mode::kTrain, &rng);
    Var loss = hinge_loss(o1, o2, res.bank, cfg.margin);
    const double loss_value = loss.value()(0, 0);
    if (!std::isfinite(loss_value)) {
      throw NumericError(fmt::format("loss became non-finite at epoch {}", epoch));
    }
    tape.backward(loss);

    std::vector<Matrix*> targets;
    std::vector<Matrix> grads;
    res.params.for_each([&](const std::string&, Matrix& m) { targets.push_back(&m); });
    bound.for_each([&](const std::string&, const Var& v) { grads.push_back(tape.grad(v)); });
    if (train_inputs) {
      targets.push_back(&res.x1);
      targets.push_back(&res.x2);
      grads.push_back(tape.grad(x1));
      grads.push_back(tape.grad(x2));
    }
    adam.step(targets, grads);

    const bool refresh = epoch % cfg.refresh_period == 0;
    const bool evaluate_now =
        cfg.eval_every > 0 && in.candidate_truth && (epoch + 1) % cfg.eval_every == 0;
    if (refresh || evaluate_now) infer();

    if (refresh) {
      if (cfg.use_abgs && !in.candidates.left.empty() && !in.candidates.right.empty()) {
        const auto s = candidate_similarity(res.out1, res.out2, in.candidates, cfg.use_attributes,
                                            cfg.weights, in.s_attr, in.s_value);
        const auto r = abgs_on(s, cfg.abgs);
        BootstrapRound round;
        round.round = static_cast<int>(res.rounds.size());
        round.epoch = epoch;
        round.iter_plus = r.iter_plus.size();
        round.iter_minus = r.iter_minus.size();
        round.global = r.global.size();
        round.local_plus = r.local_plus.size();
        round.local_minus = r.local_minus.size();
        if (in.candidate_truth && !in.candidate_truth->empty()) {
          round.filtered = bootstrap_quality(r.iter_plus, r.iter_minus, *in.candidate_truth);
          round.local_only = bootstrap_quality(r.local_plus, r.local_minus, *in.candidate_truth);
        }
        res.rounds.push_back(round);
        last_iter_plus = r.iter_plus.size();

        res.bank.plus = set_union(res.bank.plus, to_entity_pairs(r.iter_plus, in.candidates));
        res.bank.iter_minus =
            set_difference(to_entity_pairs(r.iter_minus, in.candidates), res.bank.plus);
      }
      res.bank.minus = sample_negatives(res.bank.plus, res.out1, res.out2, cfg.neg_per_pos);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_value;
    rec.plus = res.bank.plus.size();
    rec.iter_plus = last_iter_plus;
    rec.iter_minus = res.bank.iter_minus.size();
    if (evaluate_now) {
      const auto s = candidate_similarity(res.out1, res.out2, in.candidates, cfg.use_attributes,
                                          cfg.weights, in.s_attr, in.s_value);
      rec.eval = evaluate(s, *in.candidate_truth, EvalDirection::kLeftToRight);
    }
    res.history.push_back(std::move(rec));
  }
  infer();
  return res;
}

}  // namespace echoea
