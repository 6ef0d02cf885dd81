#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "echoea/encoder.hpp"
#include "echoea/evaluation.hpp"
#include "echoea/synth.hpp"
#include "echoea/training.hpp"

namespace echoea {

/// Everything one experiment run needs. Text form is one `key = value`
/// per line; `#` starts a comment; blank lines are ignored.
struct ExperimentConfig {
  /// Dataset directory. Empty means "generate a synthetic pair".
  std::filesystem::path data_dir;
  SynthOptions synth;

  double train_fraction = 0.3;
  std::uint64_t split_seed = 1;

  EncoderConfig encoder;
  TrainingConfig training;

  /// Also score the global one-to-one matching ("global" rows of eval.csv).
  bool use_global = true;
  double attr_match_threshold = 0.85;
  std::filesystem::path normalizer_file;

  EvalDirection eval_direction = EvalDirection::kLeftToRight;
  std::filesystem::path output_dir = "runs/default";

  /// Throws ValidationError naming every invalid key.
  void validate() const;
};

/// Key registry used by the parser, the serializer and the CLI.
struct ConfigKey {
  std::string name;
  std::string type;  ///< "int", "real", "bool", "string", "path", "seed"
  std::string help;
};
const std::vector<ConfigKey>& config_keys();

/// Applies `key = value` assignments in order. Unknown keys and malformed
/// values are collected and reported together in one ValidationError.
void apply_overrides(ExperimentConfig& config,
                     const std::vector<std::pair<std::string, std::string>>& assignments);

/// Reads `path`; throws LoadError if unreadable, ParseError on a line
/// without `=`, ValidationError for bad keys or values.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(std::string_view text, const std::string& origin = "<string>");

/// Current value of `key` in text form, or throws ArgumentError.
std::string config_value(const ExperimentConfig& config, std::string_view key);

/// Every key with its value, in registry order; parse_config round-trips it.
std::string to_text(const ExperimentConfig& config);

}  // namespace echoea
