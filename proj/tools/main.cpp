// echoea command-line front end.
//
//   echoea synth           --out DIR [--synth_* ...]
//   echoea train           [--config FILE] [--<key> VALUE ...]
//   echoea evaluate        --left FILE --right FILE --truth FILE
//   echoea evaluate        --checkpoint FILE [--config FILE] [--<key> VALUE ...]
//   echoea align           --left FILE --right FILE --out DIR [--candidates FILE]
//   echoea bootstrap-stats --iter-plus FILE --iter-minus FILE --truth FILE
//
// Exit status: 0 on success, otherwise the numeric ErrorCategory of the
// failure (2 argument, 3 validation, 4 io, 5 parse, 6 integrity, 7 numeric),
// or 1 for anything unexpected.

#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "echoea/alignment.hpp"
#include "echoea/checkpoint.hpp"
#include "echoea/config.hpp"
#include "echoea/dataset_io.hpp"
#include "echoea/error.hpp"
#include "echoea/experiment.hpp"
#include "echoea/synth.hpp"

namespace fs = std::filesystem;
using namespace echoea;

namespace {

/// Registers one `--<key>` option per config key; values stay as text and
/// are applied through apply_overrides so typing rules live in one place.
class ConfigFlags {
 public:
  void attach(CLI::App& app, std::string_view prefix_filter = {}) {
    app.add_option("--config", config_file_, "flat key = value configuration file");
    for (const auto& key : config_keys()) {
      if (!prefix_filter.empty() && key.name.rfind(prefix_filter, 0) != 0) continue;
      app.add_option("--" + key.name, values_[key.name],
                     fmt::format("{} [{}]", key.help, key.type));
    }
  }

  ExperimentConfig resolve(const CLI::App& app) const {
    ExperimentConfig config = config_file_.empty() ? ExperimentConfig{} : load_config(config_file_);
    std::vector<std::pair<std::string, std::string>> overrides;
    for (const auto& [name, value] : values_) {
      if (app.count("--" + name) > 0) overrides.emplace_back(name, value);
    }
    apply_overrides(config, overrides);
    return config;
  }

 private:
  std::string config_file_;
  std::map<std::string, std::string> values_;
};

void print_eval(const std::vector<EvalRow>& rows) {
  fmt::print("{:<24} {:<7} {:>8} {:>8} {:>8}\n", "method", "align", "hits@1", "hits@10", "mrr");
  for (const auto& r : rows) {
    auto opt = [](const std::optional<double>& v) {
      return v ? fmt::format("{:.4f}", *v) : std::string("-");
    };
    fmt::print("{:<24} {:<7} {:>8.4f} {:>8} {:>8}\n", r.method, r.alignment, r.hits1,
               opt(r.hits10), opt(r.mrr));
  }
}

/// Sorted distinct left and right ids of `pairs`.
CandidateSets candidates_of(const PairSet& pairs) {
  std::set<EntityId> l;
  std::set<EntityId> r;
  for (const auto& p : pairs) {
    l.insert(p.left);
    r.insert(p.right);
  }
  return {{l.begin(), l.end()}, {r.begin(), r.end()}};
}

CandidateSets all_rows(const Matrix& a, const Matrix& b) {
  CandidateSets c;
  for (EntityId i = 0; i < a.rows(); ++i) c.left.push_back(i);
  for (EntityId j = 0; j < b.rows(); ++j) c.right.push_back(j);
  return c;
}

void check_rows(const PairSet& pairs, const Matrix& a, const Matrix& b, const std::string& what) {
  for (const auto& p : pairs) {
    if (p.left < 0 || p.left >= a.rows() || p.right < 0 || p.right >= b.rows()) {
      throw ValidationError(fmt::format("{} pair ({}, {}) is outside the embedding rows", what,
                                        p.left, p.right));
    }
  }
}

int run_synth(const ExperimentConfig& config, const fs::path& out) {
  config.validate();
  auto options = config.synth;
  options.embedding_dim = config.encoder.d_e;
  const auto data = synth_kg_pair(options);
  save_dataset(out, data);
  fmt::print("{}\nwritten to {}\n", describe(data), out.string());
  return 0;
}

int run_train(const ExperimentConfig& config) {
  const auto result = run_experiment(config);
  print_eval(result.eval);
  fmt::print("artifacts in {}\n", config.output_dir.string());
  return 0;
}

int run_evaluate_embeddings(const fs::path& left, const fs::path& right, const fs::path& truth_file,
                            EvalDirection direction, bool refine) {
  const Matrix a = read_embeddings(left);
  const Matrix b = read_embeddings(right);
  const PairSet truth = read_pairs(truth_file);
  check_rows(truth, a, b, "truth");
  const auto candidates = candidates_of(truth);
  const auto s = rel_similarity(a, b, candidates);
  print_eval(evaluate_similarity(s, to_index_pairs(truth, candidates), "embeddings", direction,
                                 true, true, refine));
  return 0;
}

/// Re-encodes the configured dataset with checkpointed weights and
/// embeddings, then scores the held-out split of the same config.
int run_evaluate_checkpoint(const ExperimentConfig& config, const fs::path& checkpoint_file) {
  config.validate();
  const auto ck = load_checkpoint(checkpoint_file);
  auto experiment = config;
  experiment.encoder = ck.config;
  const auto data = prepare_dataset(experiment);
  const auto split = split_seeds(data.seeds, config.train_fraction, config.split_seed);
  const auto candidates = default_candidates(split.test);

  auto embeds = [&](const char* key, const std::optional<Eigen::MatrixXd>& provided,
                    const KnowledgeGraph& kg, std::uint64_t seed) {
    if (auto it = ck.extras.find(key); it != ck.extras.end()) return it->second;
    return initial_embeddings(provided, static_cast<int>(kg.num_entities()), ck.config.d_e, seed);
  };
  const Matrix x1 = embeds("embeddings.kg1", data.embeddings1, data.kg1,
                           config.training.rng_seed * 2 + 1);
  const Matrix x2 = embeds("embeddings.kg2", data.embeddings2, data.kg2,
                           config.training.rng_seed * 2 + 2);
  const Matrix out1 = encode(data.kg1, x1, ck.params, ck.config, Mode::kInfer);
  const Matrix out2 = encode(data.kg2, x2, ck.params, ck.config, Mode::kInfer);

  std::optional<SparseSimilarity> s_attr;
  std::optional<SparseSimilarity> s_value;
  if (config.training.use_attributes) {
    const auto normalizer = config.normalizer_file.empty()
                                ? NameNormalizer()
                                : NameNormalizer::load(config.normalizer_file);
    const auto alignment = match_attributes(normalized_attribute_names(data.kg1, normalizer),
                                            normalized_attribute_names(data.kg2, normalizer),
                                            config.attr_match_threshold);
    s_attr = attr_similarity(data.kg1, data.kg2, alignment, candidates);
    s_value = attr_value_similarity(data.kg1, data.kg2, alignment, candidates);
  }
  const auto s = candidate_similarity(out1, out2, candidates, config.training.use_attributes,
                                      config.training.weights, s_attr, s_value);
  const auto rows = evaluate_similarity(s, to_index_pairs(split.test.pairs(), candidates),
                                        method_label(config), config.eval_direction, true,
                                        config.use_global, config.training.abgs.refine_global);
  print_eval(rows);
  return 0;
}

int run_align(const fs::path& left, const fs::path& right, const fs::path& candidate_file,
              const fs::path& out, bool refine) {
  const Matrix a = read_embeddings(left);
  const Matrix b = read_embeddings(right);
  CandidateSets candidates = all_rows(a, b);
  if (!candidate_file.empty()) {
    const auto pairs = read_pairs(candidate_file);
    check_rows(pairs, a, b, "candidate");
    candidates = candidates_of(pairs);
  }
  const auto s = rel_similarity(a, b, candidates);
  const auto r = abgs_on(s, AbgsOptions{refine});
  fs::create_directories(out);
  write_pairs(out / "local_plus", to_entity_pairs(r.local_plus, candidates));
  write_pairs(out / "local_minus", to_entity_pairs(r.local_minus, candidates));
  write_pairs(out / "global", to_entity_pairs(r.global, candidates));
  write_pairs(out / "iter_plus", to_entity_pairs(r.iter_plus, candidates));
  write_pairs(out / "iter_minus", to_entity_pairs(r.iter_minus, candidates));
  BootstrapRound round;
  round.iter_plus = r.iter_plus.size();
  round.iter_minus = r.iter_minus.size();
  round.global = r.global.size();
  round.local_plus = r.local_plus.size();
  round.local_minus = r.local_minus.size();
  write_bootstrap_csv(out / "bootstrap.csv", {round});
  fmt::print("|P_iter+| = {}  |P_iter-| = {}  |P_global| = {}  (written to {})\n",
             r.iter_plus.size(), r.iter_minus.size(), r.global.size(), out.string());
  return 0;
}

int run_bootstrap_stats(const fs::path& plus_file, const fs::path& minus_file,
                        const fs::path& truth_file) {
  const auto q =
      bootstrap_quality(read_pairs(plus_file), read_pairs(minus_file), read_pairs(truth_file));
  auto opt = [](const std::optional<double>& v) {
    return v ? fmt::format("{:.6f}", *v) : std::string("absent");
  };
  fmt::print("r_u = {:.6f}\nr_p = {}\nr_n = {}\n", q.r_u, opt(q.r_p), opt(q.r_n));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entity alignment with echo-style relation encoding and bootstrapping"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "generate a synthetic KG pair");
  ConfigFlags synth_flags;
  synth_flags.attach(*synth, "synth_");
  std::string d_e_text;
  synth->add_option("--d_e", d_e_text, "embedding width of the generated ent_embeds files");
  fs::path synth_out;
  synth->add_option("--out", synth_out, "output dataset directory")->required();

  auto* train = app.add_subcommand("train", "run a full experiment and write its artifacts");
  ConfigFlags train_flags;
  train_flags.attach(*train);

  auto* eval = app.add_subcommand("evaluate", "score saved embeddings or a checkpoint");
  ConfigFlags eval_flags;
  eval_flags.attach(*eval);
  fs::path eval_left, eval_right, eval_truth, eval_checkpoint;
  eval->add_option("--left", eval_left, "KG1 output embeddings");
  eval->add_option("--right", eval_right, "KG2 output embeddings");
  eval->add_option("--truth", eval_truth, "gold pairs indexing the embedding rows");
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint written by train");

  auto* align = app.add_subcommand("align", "one-shot ABGS on saved embeddings");
  fs::path align_left, align_right, align_candidates, align_out;
  bool align_refine = false;
  align->add_option("--left", align_left, "KG1 embeddings")->required();
  align->add_option("--right", align_right, "KG2 embeddings")->required();
  align->add_option("--candidates", align_candidates,
                    "pairs file whose entities form the candidate sets (default: all rows)");
  align->add_option("--out", align_out, "directory for the pair files")->required();
  align->add_flag("--refine_global", align_refine, "softmax-sum refinement before matching");

  auto* stats = app.add_subcommand("bootstrap-stats", "rates r_u, r_p, r_n of bootstrap samples");
  fs::path stats_plus, stats_minus, stats_truth;
  stats->add_option("--iter-plus", stats_plus, "pairs generated as positives")->required();
  stats->add_option("--iter-minus", stats_minus, "pairs generated as negatives")->required();
  stats->add_option("--truth", stats_truth, "gold pairs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorCategory::kArgument);
  }

  try {
    if (synth->parsed()) {
      auto config = synth_flags.resolve(*synth);
      if (!d_e_text.empty()) apply_overrides(config, {{"d_e", d_e_text}});
      return run_synth(config, synth_out);
    }
    if (train->parsed()) return run_train(train_flags.resolve(*train));
    if (eval->parsed()) {
      const auto config = eval_flags.resolve(*eval);
      if (!eval_checkpoint.empty()) return run_evaluate_checkpoint(config, eval_checkpoint);
      if (eval_left.empty() || eval_right.empty() || eval_truth.empty()) {
        throw ArgumentError("evaluate needs --checkpoint, or all of --left, --right and --truth");
      }
      return run_evaluate_embeddings(eval_left, eval_right, eval_truth, config.eval_direction,
                                     config.training.abgs.refine_global);
    }
    if (align->parsed()) {
      return run_align(align_left, align_right, align_candidates, align_out, align_refine);
    }
    if (stats->parsed()) return run_bootstrap_stats(stats_plus, stats_minus, stats_truth);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.category()) << "]: " << e.what() << '\n';
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
