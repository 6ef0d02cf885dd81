#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "echoea/knowledge_graph.hpp"

namespace echoea {

/// File names of a DBP15K-style dataset directory.
namespace dataset_files {
inline constexpr const char* kTriples1 = "triples_1";
inline constexpr const char* kTriples2 = "triples_2";
inline constexpr const char* kEntIds1 = "ent_ids_1";
inline constexpr const char* kEntIds2 = "ent_ids_2";
inline constexpr const char* kRefEntIds = "ref_ent_ids";
inline constexpr const char* kAttrTriples1 = "attr_triples_1";
inline constexpr const char* kAttrTriples2 = "attr_triples_2";
inline constexpr const char* kEmbeddings1 = "ent_embeds_1";
inline constexpr const char* kEmbeddings2 = "ent_embeds_2";
}  // namespace dataset_files

struct Dataset {
  KnowledgeGraph kg1;
  KnowledgeGraph kg2;
  SeedPairs seeds;
  /// Initial entity embeddings, when the directory provides them.
  std::optional<Eigen::MatrixXd> embeddings1;
  std::optional<Eigen::MatrixXd> embeddings2;
};

/// Loads a dataset directory. Entity, relation, attribute and value ids are
/// densely re-indexed per side; original ids are kept in the KG side tables.
///
/// Required: triples_{1,2}, ent_ids_{1,2}, ref_ent_ids. Optional:
/// attr_triples_{1,2} and ent_embeds_{1,2}.
///
/// Throws LoadError (missing file), ParseError (malformed line, with line
/// number) or IntegrityError (dangling id).
Dataset load_dataset(const std::filesystem::path& directory);

/// Writes `dataset` in the layout load_dataset reads, using the original
/// ids from the side tables. Embeddings are written only when present.
void save_dataset(const std::filesystem::path& directory, const Dataset& dataset);

/// One-line summary of entity/relation/triple counts per side.
std::string describe(const Dataset& dataset);

/// Reads "|E| d" followed by |E| rows of d reals.
Eigen::MatrixXd read_embeddings(const std::filesystem::path& path);
void write_embeddings(const std::filesystem::path& path, const Eigen::MatrixXd& matrix);

/// Reads one "left\tright" pair per line using raw integer ids.
PairSet read_pairs(const std::filesystem::path& path);
void write_pairs(const std::filesystem::path& path, const PairSet& pairs);

}  // namespace echoea
