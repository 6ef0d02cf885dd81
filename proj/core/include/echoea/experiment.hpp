#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "echoea/config.hpp"
#include "echoea/dataset_io.hpp"
#include "echoea/training.hpp"

namespace echoea {

/// One line of eval.csv. Global alignment only yields Hits@1.
struct EvalRow {
  std::string method;
  std::string alignment;  ///< "local" or "global"
  EvalDirection direction = EvalDirection::kLeftToRight;
  double hits1 = 0.0;
  std::optional<double> hits10;
  std::optional<double> mrr;
};

/// Method label derived from the ablation switches, e.g. "abgs" or
/// "base-no-can".
std::string method_label(const ExperimentConfig& config);

/// Local rows use ranking metrics on `s`; the global row runs one-to-one
/// matching and scores Hits@1. `truth` is in candidate-index space.
std::vector<EvalRow> evaluate_similarity(const Eigen::MatrixXd& s, const PairSet& truth,
                                         const std::string& method, EvalDirection direction,
                                         bool local, bool global, bool refine_global);

void write_eval_csv(const std::filesystem::path& path, const std::vector<EvalRow>& rows);
void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history);
void write_bootstrap_csv(const std::filesystem::path& path,
                         const std::vector<BootstrapRound>& rounds);
/// gnuplot script drawing loss and |P+| from history.csv.
void write_plot_script(const std::filesystem::path& path);

/// Loads the configured dataset or generates the synthetic pair; the
/// synthetic embedding width follows d_e.
Dataset prepare_dataset(const ExperimentConfig& config);

/// Initial embeddings for one KG: the provided matrix, or a seeded
/// N(0, 1/d_e) draw when the dataset ships none.
Matrix initial_embeddings(const std::optional<Eigen::MatrixXd>& provided, int num_entities,
                          int d_e, std::uint64_t seed);

struct ExperimentResult {
  std::vector<std::string> stages;  ///< pipeline stages in execution order
  std::vector<EvalRow> eval;
  TrainResult training;
  SeedSplit split;
  CandidateSets candidates;
  std::vector<std::filesystem::path> artifacts;
};

/// load -> split -> attribute similarity -> train_loop -> evaluation on the
/// held-out seeds, then writes every artifact under config.output_dir:
/// config.txt, stages.txt, history.csv, eval.csv, bootstrap.csv,
/// history.gp, checkpoint.bin, out_embeds_1/2, train_pairs, test_pairs and,
/// with attributes on, attribute_matches.csv.
ExperimentResult run_experiment(const ExperimentConfig& config);

}  // namespace echoea
