#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "echoea/alignment.hpp"
#include "echoea/attribute_sim.hpp"
#include "echoea/encoder.hpp"
#include "echoea/evaluation.hpp"

namespace echoea {

struct TrainingConfig {
  double learning_rate = 0.001;
  double margin = 3.0;
  int neg_per_pos = 5;
  /// Bootstrap and negative refresh happen when epoch % refresh_period == 0.
  int refresh_period = 10;
  int max_epochs = 100;
  std::uint64_t rng_seed = 1;
  /// Keep the initial entity embeddings fixed (ablation).
  bool freeze_embeddings = false;
  bool use_abgs = true;
  /// Combine S^rel with the attribute similarities inside ABGS.
  bool use_attributes = true;
  SimilarityWeights weights;
  AbgsOptions abgs;
  /// Evaluate on the held-out truth every this many epochs; 0 disables.
  int eval_every = 0;

  /// Throws ValidationError listing every offending field.
  void validate() const;
};

/// A positive pair and one of its corruptions.
struct NegativeRecord {
  EntityPair positive;
  EntityPair negative;
};

struct SampleBank {
  PairSet plus;                        ///< train seeds u accepted bootstrap pairs
  std::vector<NegativeRecord> minus;   ///< k corruptions per positive
  PairSet iter_minus;                  ///< bootstrap negatives, disjoint from plus
};

/// Sum over records of max(0, margin + d(pos) - d(neg)) plus the sum over
/// iter_minus of max(0, margin - d(neg)), with d the L1 distance between
/// rows of x1 and x2. Throws ArgumentError when bank.plus is empty.
double hinge_loss(const Matrix& x1, const Matrix& x2, const SampleBank& bank, double margin);
Var hinge_loss(Var x1, Var x2, const SampleBank& bank, double margin);

/// For each positive (a, b): ceil(k/2) corruptions (a, b') with the b' most
/// similar to a in row a of `s`, and floor(k/2) corruptions (a', b) from
/// column b. Candidates forming a pair in `plus` are skipped; ties go to
/// the lower index; a side with too few candidates yields what it has.
std::vector<NegativeRecord> sample_negatives(const PairSet& plus, const Eigen::MatrixXd& s, int k);

/// Same, with similarity -||x1_a - x2_b||_1 computed on the fly.
std::vector<NegativeRecord> sample_negatives(const PairSet& plus, const Matrix& x1,
                                             const Matrix& x2, int k);

/// Adam (beta1 0.9, beta2 0.999, eps 1e-8) over a fixed list of matrices.
class Adam {
 public:
  explicit Adam(double learning_rate) : lr_(learning_rate) {}

  /// `params` and `grads` must keep the same order and shapes across calls.
  void step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads);

 private:
  double lr_;
  long t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  std::size_t plus = 0;
  std::size_t iter_plus = 0;   ///< size of the latest bootstrap P_iter+
  std::size_t iter_minus = 0;  ///< size of the current P_iter- in the bank
  std::optional<EvalReport> eval;
};

struct BootstrapRound {
  int round = 0;
  int epoch = 0;
  std::size_t iter_plus = 0;
  std::size_t iter_minus = 0;
  std::size_t global = 0;
  std::size_t local_plus = 0;
  std::size_t local_minus = 0;
  /// Rates of the global-filtered samples and of plain local alignment,
  /// when the candidate truth is known.
  std::optional<BootstrapQuality> filtered;
  std::optional<BootstrapQuality> local_only;
};

struct TrainInputs {
  const KnowledgeGraph* kg1 = nullptr;
  const KnowledgeGraph* kg2 = nullptr;
  SeedPairs train_seeds;
  CandidateSets candidates;
  Matrix x1;  ///< initial embeddings, |E1| x d_e
  Matrix x2;
  /// Precomputed over the candidate sets; required when use_attributes.
  std::optional<SparseSimilarity> s_attr;
  std::optional<SparseSimilarity> s_value;
  /// Ground truth inside the candidate sets, in candidate-index space. Used
  /// for bootstrap quality and periodic evaluation only.
  std::optional<PairSet> candidate_truth;
};

struct TrainResult {
  ModelParams params;
  Matrix x1;    ///< trained input embeddings
  Matrix x2;
  Matrix out1;  ///< final embeddings (inference mode)
  Matrix out2;
  SampleBank bank;
  std::vector<EpochRecord> history;
  std::vector<BootstrapRound> rounds;
};

/// The semi-supervised loop: encode both KGs, take an Adam step on the
/// hinge loss w.r.t. the encoder and the input embeddings, and every
/// refresh_period epochs run ABGS, grow P+, replace P_iter- and resample P-.
///
/// Throws NumericError if the loss becomes non-finite.
TrainResult train_loop(const TrainInputs& inputs, const EncoderConfig& encoder_config,
                       const TrainingConfig& config);

/// Similarity over candidates used by bootstrapping and evaluation:
/// S^rel, or the weighted combination when attributes are enabled.
Eigen::MatrixXd candidate_similarity(const Matrix& out1, const Matrix& out2,
                                     const CandidateSets& candidates, bool use_attributes,
                                     const SimilarityWeights& weights,
                                     const std::optional<SparseSimilarity>& s_attr,
                                     const std::optional<SparseSimilarity>& s_value);

}  // namespace echoea
