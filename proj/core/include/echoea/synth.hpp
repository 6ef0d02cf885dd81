#pragma once

#include <cstdint>

#include "echoea/dataset_io.hpp"

namespace echoea {

struct SynthOptions {
  int n_entities = 100;
  int n_relations = 10;
  /// Expected relation triples per entity; the KG gets round(density * n).
  double triple_density = 3.0;
  /// Number of distinct attributes; 0 disables attribute triples.
  int attr_vocab = 20;
  /// Probability that a KG2 triple is rewired, a KG2 attribute value is
  /// replaced, and a KG2 embedding row is perturbed.
  double noise = 0.1;
  std::uint64_t rng_seed = 1;
  int embedding_dim = 32;
  /// Standard deviation of the perturbation added to a noisy embedding row.
  double perturbation_scale = 1.5;
};

/// Generates a KG pair where KG2 is a relabelled copy of KG1 with optional
/// noise. `seeds` holds the full ground-truth bijection and both embedding
/// matrices are filled. Output is a pure function of `options`.
///
/// Throws ArgumentError when n_entities < 2 or the density yields no triples.
Dataset synth_kg_pair(const SynthOptions& options);

}  // namespace echoea
