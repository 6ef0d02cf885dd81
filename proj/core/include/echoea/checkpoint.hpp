#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "echoea/encoder.hpp"

namespace echoea {

/// Binary layout (all integers little-endian u32):
///   "ECHOEACK" | version | len | EncoderConfig as JSON | group count |
///   per group: len | name | rows | cols | rows*cols float32, row-major.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  EncoderConfig config;
  ModelParams params;
  /// Additional named matrices, e.g. the trained input embeddings.
  std::map<std::string, Matrix> extras;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);

/// Throws LoadError if unreadable, ParseError on a bad magic/version or a
/// truncated payload, and ValidationError when a parameter group is missing
/// or mis-shaped for the stored config.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace echoea
