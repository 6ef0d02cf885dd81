#include "echoea/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>

#include "echoea/error.hpp"

namespace echoea {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw std::invalid_argument("not a number");
  }
  return value;
}

bool parse_bool(std::string_view text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw std::invalid_argument("not a boolean");
}

struct Binding {
  ConfigKey key;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <typename Member>
Binding int_key(std::string name, std::string help, Member member) {
  return {{std::move(name), "int", std::move(help)},
          [member](ExperimentConfig& c, std::string_view v) { member(c) = parse_number<int>(v); },
          [member](const ExperimentConfig& c) {
            return fmt::format("{}", member(c));
          }};
}

template <typename Member>
Binding seed_key(std::string name, std::string help, Member member) {
  return {{std::move(name), "seed", std::move(help)},
          [member](ExperimentConfig& c, std::string_view v) {
            member(c) = parse_number<std::uint64_t>(v);
          },
          [member](const ExperimentConfig& c) {
            return fmt::format("{}", member(c));
          }};
}

template <typename Member>
Binding real_key(std::string name, std::string help, Member member) {
  return {{std::move(name), "real", std::move(help)},
          [member](ExperimentConfig& c, std::string_view v) {
            member(c) = parse_number<double>(v);
          },
          [member](const ExperimentConfig& c) {
            return fmt::format("{}", member(c));
          }};
}

template <typename Member>
Binding bool_key(std::string name, std::string help, Member member) {
  return {{std::move(name), "bool", std::move(help)},
          [member](ExperimentConfig& c, std::string_view v) { member(c) = parse_bool(v); },
          [member](const ExperimentConfig& c) {
            return std::string(member(c) ? "true" : "false");
          }};
}

template <typename Member>
Binding path_key(std::string name, std::string help, Member member) {
  return {{std::move(name), "path", std::move(help)},
          [member](ExperimentConfig& c, std::string_view v) { member(c) = std::string(v); },
          [member](const ExperimentConfig& c) {
            return member(c).string();
          }};
}

#define ECHOEA_FIELD(expr) [](auto& c) -> auto& { return c.expr; }

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = [] {
    std::vector<Binding> t;
    t.push_back(path_key("data_dir", "dataset directory; empty generates a synthetic pair",
                         ECHOEA_FIELD(data_dir)));
    t.push_back(int_key("synth_n", "synthetic entities per KG", ECHOEA_FIELD(synth.n_entities)));
    t.push_back(int_key("synth_relations", "synthetic relation types",
                        ECHOEA_FIELD(synth.n_relations)));
    t.push_back(real_key("synth_density", "synthetic triples per entity",
                         ECHOEA_FIELD(synth.triple_density)));
    t.push_back(int_key("synth_attr_vocab", "synthetic attribute names",
                        ECHOEA_FIELD(synth.attr_vocab)));
    t.push_back(real_key("synth_noise", "fraction of KG2 facts rewired", ECHOEA_FIELD(synth.noise)));
    t.push_back(real_key("synth_perturbation", "scale of KG2 embedding noise",
                         ECHOEA_FIELD(synth.perturbation_scale)));
    t.push_back(seed_key("synth_seed", "synthetic generator seed", ECHOEA_FIELD(synth.rng_seed)));
    t.push_back(real_key("train_fraction", "share of seeds used for training",
                         ECHOEA_FIELD(train_fraction)));
    t.push_back(seed_key("split_seed", "seed of the train/test split", ECHOEA_FIELD(split_seed)));
    t.push_back(int_key("d_e", "entity embedding width", ECHOEA_FIELD(encoder.d_e)));
    t.push_back(int_key("d_r", "relation embedding width", ECHOEA_FIELD(encoder.d_r)));
    t.push_back(real_key("dropout", "dropout rate after the GCN highway",
                         ECHOEA_FIELD(encoder.dropout_rate)));
    t.push_back(int_key("pan_gcn_layers", "GCN layers in PAN", ECHOEA_FIELD(encoder.pan_gcn_layers)));
    t.push_back(int_key("pan_gat_layers", "GAT layers in PAN", ECHOEA_FIELD(encoder.pan_gat_layers)));
    t.push_back({{"activation", "string", "identity | relu | tanh | sigmoid"},
                 [](ExperimentConfig& c, std::string_view v) {
                   c.encoder.activation = parse_activation(v);
                 },
                 [](const ExperimentConfig& c) {
                   return std::string(to_string(c.encoder.activation));
                 }});
    t.push_back(real_key("leaky_slope", "LeakyReLU slope inside attention",
                         ECHOEA_FIELD(encoder.leaky_slope)));
    t.push_back(bool_key("use_pan", "enable the PAN stage", ECHOEA_FIELD(encoder.use_pan)));
    t.push_back(bool_key("use_en", "enable the echo stage", ECHOEA_FIELD(encoder.use_en)));
    t.push_back(bool_key("use_can", "enable the CAN stage", ECHOEA_FIELD(encoder.use_can)));
    t.push_back(bool_key("use_abgs", "bootstrap with ABGS during training",
                         ECHOEA_FIELD(training.use_abgs)));
    t.push_back(bool_key("use_attributes", "mix attribute similarities into S",
                         ECHOEA_FIELD(training.use_attributes)));
    t.push_back(bool_key("use_global", "report global-alignment results",
                         ECHOEA_FIELD(use_global)));
    t.push_back(bool_key("refine_global", "softmax-sum refinement before global matching",
                         ECHOEA_FIELD(training.abgs.refine_global)));
    t.push_back(real_key("learning_rate", "optimizer step size",
                         ECHOEA_FIELD(training.learning_rate)));
    t.push_back(real_key("margin", "hinge margin", ECHOEA_FIELD(training.margin)));
    t.push_back(int_key("neg_per_pos", "negatives per positive pair",
                        ECHOEA_FIELD(training.neg_per_pos)));
    t.push_back(int_key("refresh_period", "epochs between bootstrap rounds",
                        ECHOEA_FIELD(training.refresh_period)));
    t.push_back(int_key("max_epochs", "training epochs", ECHOEA_FIELD(training.max_epochs)));
    t.push_back(seed_key("rng_seed", "seed for initialization, dropout and sampling",
                         ECHOEA_FIELD(training.rng_seed)));
    t.push_back(bool_key("freeze_embeddings", "keep input embeddings fixed",
                         ECHOEA_FIELD(training.freeze_embeddings)));
    t.push_back(real_key("alpha1", "weight of S^rel", ECHOEA_FIELD(training.weights.relation)));
    t.push_back(real_key("alpha2", "weight of S^attr", ECHOEA_FIELD(training.weights.attribute)));
    t.push_back(real_key("alpha3", "weight of S^attr_value", ECHOEA_FIELD(training.weights.value)));
    t.push_back(real_key("attr_match_threshold", "dice threshold for attribute-name matches",
                         ECHOEA_FIELD(attr_match_threshold)));
    t.push_back(path_key("normalizer_file", "two-column attribute-name mapping",
                         ECHOEA_FIELD(normalizer_file)));
    t.push_back({{"eval_direction", "string", "left_to_right | right_to_left | averaged"},
                 [](ExperimentConfig& c, std::string_view v) {
                   c.eval_direction = parse_direction(v);
                 },
                 [](const ExperimentConfig& c) {
                   return std::string(to_string(c.eval_direction));
                 }});
    t.push_back(int_key("eval_every", "epochs between held-out evaluations (0 = off)",
                        ECHOEA_FIELD(training.eval_every)));
    t.push_back(path_key("output_dir", "artifact directory", ECHOEA_FIELD(output_dir)));
    return t;
  }();
  return table;
}

#undef ECHOEA_FIELD

const Binding* find_binding(std::string_view name) {
  for (const auto& b : bindings()) {
    if (b.key.name == name) return &b;
  }
  return nullptr;
}

}  // namespace

void ExperimentConfig::validate() const {
  std::vector<std::string> bad;
  auto check = [&](bool ok, const char* key) {
    if (!ok) bad.emplace_back(key);
  };
  check(train_fraction > 0.0 && train_fraction < 1.0, "train_fraction");
  check(attr_match_threshold >= 0.0 && attr_match_threshold <= 1.0, "attr_match_threshold");
  if (data_dir.empty()) {
    check(synth.n_entities >= 2, "synth_n");
    check(synth.n_relations >= 1, "synth_relations");
    check(synth.triple_density > 0.0, "synth_density");
    check(synth.attr_vocab >= 0, "synth_attr_vocab");
    check(synth.noise >= 0.0 && synth.noise <= 1.0, "synth_noise");
    check(synth.perturbation_scale >= 0.0, "synth_perturbation");
  }
  check(encoder.d_e >= 1, "d_e");
  check(encoder.d_r >= 1, "d_r");
  check(encoder.dropout_rate >= 0.0 && encoder.dropout_rate < 1.0, "dropout");
  check(encoder.pan_gcn_layers >= 0, "pan_gcn_layers");
  check(encoder.pan_gat_layers >= 0, "pan_gat_layers");
  check(encoder.leaky_slope >= 0.0, "leaky_slope");
  check(training.learning_rate > 0.0, "learning_rate");
  check(training.margin > 0.0, "margin");
  check(training.neg_per_pos >= 1, "neg_per_pos");
  check(training.refresh_period >= 1, "refresh_period");
  check(training.max_epochs >= 0, "max_epochs");
  check(training.eval_every >= 0, "eval_every");
  const auto& w = training.weights;
  check(w.relation >= 0.0, "alpha1");
  check(w.attribute >= 0.0, "alpha2");
  check(w.value >= 0.0, "alpha3");
  if (!bad.empty()) {
    throw ValidationError(fmt::format("invalid configuration keys: {}", fmt::join(bad, ", ")));
  }
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& b : bindings()) k.push_back(b.key);
    return k;
  }();
  return keys;
}

void apply_overrides(ExperimentConfig& config,
                     const std::vector<std::pair<std::string, std::string>>& assignments) {
  std::vector<std::string> problems;
  for (const auto& [key, value] : assignments) {
    const auto* b = find_binding(key);
    if (b == nullptr) {
      problems.push_back(fmt::format("{} (unknown key)", key));
      continue;
    }
    try {
      b->set(config, trim(value));
    } catch (const std::exception&) {
      problems.push_back(fmt::format("{} (expected {}, got '{}')", key, b->key.type, value));
    }
  }
  if (!problems.empty()) {
    throw ValidationError(fmt::format("invalid configuration keys: {}", fmt::join(problems, ", ")));
  }
}

ExperimentConfig parse_config(std::string_view text, const std::string& origin) {
  std::vector<std::pair<std::string, std::string>> assignments;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(origin, line_no, "expected 'key = value'");
    assignments.emplace_back(std::string(trim(line.substr(0, eq))),
                             std::string(trim(line.substr(eq + 1))));
  }
  ExperimentConfig config;
  apply_overrides(config, assignments);
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(fmt::format("cannot read config file '{}'", path.string()));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), path.string());
}

std::string config_value(const ExperimentConfig& config, std::string_view key) {
  const auto* b = find_binding(key);
  if (b == nullptr) throw ArgumentError(fmt::format("unknown configuration key '{}'", key));
  return b->get(config);
}

std::string to_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& b : bindings()) {
    out += fmt::format("{} = {}\n", b.key.name, b.get(config));
  }
  return out;
}

}  // namespace echoea
