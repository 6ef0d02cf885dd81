#include "echoea/experiment.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <fmt/format.h>

#include "echoea/alignment.hpp"
#include "echoea/attribute_sim.hpp"
#include "echoea/checkpoint.hpp"
#include "echoea/error.hpp"
#include "echoea/synth.hpp"

namespace echoea {
namespace fs = std::filesystem;

namespace {

std::string fmt_rate(const std::optional<double>& v) {
  return v ? fmt::format("{:.6f}", *v) : std::string();
}

std::ofstream open_csv(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError(fmt::format("cannot write '{}'", path.string()));
  return out;
}

}  // namespace

std::string method_label(const ExperimentConfig& config) {
  std::string label = config.training.use_abgs ? "abgs" : "base";
  if (!config.training.use_attributes && config.training.use_abgs) label += "-rel-only";
  if (!config.encoder.use_pan) label += "-no-pan";
  if (!config.encoder.use_en) label += "-no-en";
  if (!config.encoder.use_can) label += "-no-can";
  if (config.training.freeze_embeddings) label += "-frozen";
  return label;
}

std::vector<EvalRow> evaluate_similarity(const Eigen::MatrixXd& s, const PairSet& truth,
                                         const std::string& method, EvalDirection direction,
                                         bool local, bool global, bool refine_global) {
  std::vector<EvalRow> rows;
  if (local) {
    const auto report = evaluate(s, truth, direction, {1, 10});
    rows.push_back({method, "local", direction, report.hits.at(1), report.hits.at(10), report.mrr});
  }
  if (global) {
    const auto matching = global_align(refine_global ? bidirectional_softmax_sum(s) : s);
    rows.push_back({method, "global", direction, matching_hits_at_1(matching, truth), {}, {}});
  }
  return rows;
}

void write_eval_csv(const fs::path& path, const std::vector<EvalRow>& rows) {
  auto out = open_csv(path);
  out << "method,alignment,direction,hits@1,hits@10,mrr\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{},{},{:.6f},{},{}\n", r.method, r.alignment, to_string(r.direction),
                       r.hits1, fmt_rate(r.hits10), fmt_rate(r.mrr));
  }
}

void write_history_csv(const fs::path& path, const std::vector<EpochRecord>& history) {
  auto out = open_csv(path);
  out << "epoch,loss,plus,iter_plus,iter_minus,hits@1,hits@10,mrr\n";
  for (const auto& h : history) {
    std::string metrics = ",,";
    if (h.eval) {
      metrics = fmt::format("{:.6f},{:.6f},{:.6f}", h.eval->hits.at(1), h.eval->hits.at(10),
                            h.eval->mrr);
    }
    out << fmt::format("{},{:.6f},{},{},{},{}\n", h.epoch, h.loss, h.plus, h.iter_plus,
                       h.iter_minus, metrics);
  }
}

void write_bootstrap_csv(const fs::path& path, const std::vector<BootstrapRound>& rounds) {
  auto out = open_csv(path);
  out << "round,iter_plus,iter_minus,global,epoch,local_plus,local_minus,"
         "r_u,r_p,r_n,local_r_u,local_r_p,local_r_n\n";
  for (const auto& r : rounds) {
    auto rates = [](const std::optional<BootstrapQuality>& q) {
      if (!q) return std::string(",,");
      return fmt::format("{:.6f},{},{}", q->r_u, fmt_rate(q->r_p), fmt_rate(q->r_n));
    };
    out << fmt::format("{},{},{},{},{},{},{},{},{}\n", r.round, r.iter_plus, r.iter_minus,
                       r.global, r.epoch, r.local_plus, r.local_minus, rates(r.filtered),
                       rates(r.local_only));
  }
}

void write_plot_script(const fs::path& path) {
  auto out = open_csv(path);
  out << "# gnuplot -e \"dir='<run dir>'\" history.gp\n"
         "if (!exists(\"dir\")) dir = '.'\n"
         "set datafile separator ','\n"
         "set terminal pngcairo size 900,400\n"
         "set output dir.'/history.png'\n"
         "set multiplot layout 1,2\n"
         "set xlabel 'epoch'\n"
         "set title 'loss'\n"
         "plot dir.'/history.csv' using 1:2 skip 1 with lines notitle\n"
         "set title '|P+|'\n"
         "plot dir.'/history.csv' using 1:3 skip 1 with steps notitle\n"
         "unset multiplot\n";
}

Dataset prepare_dataset(const ExperimentConfig& config) {
  if (!config.data_dir.empty()) return load_dataset(config.data_dir);
  auto options = config.synth;
  options.embedding_dim = config.encoder.d_e;
  return synth_kg_pair(options);
}

Matrix initial_embeddings(const std::optional<Eigen::MatrixXd>& provided, int num_entities,
                          int d_e, std::uint64_t seed) {
  if (provided) {
    if (provided->rows() != num_entities || provided->cols() != d_e) {
      throw ValidationError(fmt::format(
          "embedding matrix is {}x{} but the KG has {} entities and d_e = {}", provided->rows(),
          provided->cols(), num_entities, d_e));
    }
    return *provided;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(d_e)));
  Matrix x(num_entities, d_e);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = dist(rng);
  }
  return x;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  config.encoder.validate();
  config.training.validate();

  ExperimentResult result;
  auto& stages = result.stages;

  const Dataset data = prepare_dataset(config);
  stages.push_back(config.data_dir.empty() ? "load:synthetic" : "load:directory");

  result.split = split_seeds(data.seeds, config.train_fraction, config.split_seed);
  result.candidates = default_candidates(result.split.test);
  stages.push_back("split");

  TrainInputs in;
  in.kg1 = &data.kg1;
  in.kg2 = &data.kg2;
  in.train_seeds = result.split.train;
  in.candidates = result.candidates;
  const int d_e = config.encoder.d_e;
  in.x1 = initial_embeddings(data.embeddings1, static_cast<int>(data.kg1.num_entities()), d_e,
                             config.training.rng_seed * 2 + 1);
  in.x2 = initial_embeddings(data.embeddings2, static_cast<int>(data.kg2.num_entities()), d_e,
                             config.training.rng_seed * 2 + 2);
  const PairSet truth = to_index_pairs(result.split.test.pairs(), result.candidates);
  in.candidate_truth = truth;

  std::optional<AttributeAlignment> attr_alignment;
  if (config.training.use_attributes) {
    const auto normalizer = config.normalizer_file.empty()
                                ? NameNormalizer()
                                : NameNormalizer::load(config.normalizer_file);
    attr_alignment = match_attributes(normalized_attribute_names(data.kg1, normalizer),
                                      normalized_attribute_names(data.kg2, normalizer),
                                      config.attr_match_threshold);
    in.s_attr = attr_similarity(data.kg1, data.kg2, *attr_alignment, in.candidates);
    in.s_value = attr_value_similarity(data.kg1, data.kg2, *attr_alignment, in.candidates);
    stages.push_back("attributes");
  }

  if (config.encoder.use_pan) stages.push_back("encoder:pan");
  if (config.encoder.use_en) stages.push_back("encoder:en");
  if (config.encoder.use_can) stages.push_back("encoder:can");
  if (config.training.use_abgs) stages.push_back("abgs");
  stages.push_back("train");

  result.training = train_loop(in, config.encoder, config.training);

  const auto s = candidate_similarity(result.training.out1, result.training.out2, in.candidates,
                                      config.training.use_attributes, config.training.weights,
                                      in.s_attr, in.s_value);
  stages.push_back("eval:local");
  if (config.use_global) stages.push_back("eval:global");
  result.eval = evaluate_similarity(s, truth, method_label(config), config.eval_direction, true,
                                    config.use_global, config.training.abgs.refine_global);

  const fs::path dir = config.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw LoadError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
  auto emit = [&](const char* name) {
    result.artifacts.push_back(dir / name);
    return dir / name;
  };

  {
    auto out = open_csv(emit("config.txt"));
    out << to_text(config);
  }
  {
    auto out = open_csv(emit("stages.txt"));
    for (const auto& st : stages) out << st << '\n';
  }
  write_history_csv(emit("history.csv"), result.training.history);
  write_eval_csv(emit("eval.csv"), result.eval);
  write_bootstrap_csv(emit("bootstrap.csv"), result.training.rounds);
  write_plot_script(emit("history.gp"));
  write_embeddings(emit("out_embeds_1"), result.training.out1);
  write_embeddings(emit("out_embeds_2"), result.training.out2);
  write_pairs(emit("train_pairs"), result.split.train.pairs());
  write_pairs(emit("test_pairs"), result.split.test.pairs());
  if (attr_alignment) {
    write_attribute_report(emit("attribute_matches.csv"), *attr_alignment, data.kg1, data.kg2);
  }
  Checkpoint ck{config.encoder, result.training.params, {}};
  ck.extras["embeddings.kg1"] = result.training.x1;
  ck.extras["embeddings.kg2"] = result.training.x2;
  save_checkpoint(emit("checkpoint.bin"), ck);
  return result;
}

}  // namespace echoea
