#include "echoea/dataset_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include <fmt/format.h>

#include "echoea/error.hpp"

namespace echoea {
namespace {

namespace fs = std::filesystem;

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  return in;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw LoadError("cannot write " + path.string());
  return out;
}

/// Splits on tabs into at most `max_fields` fields; the last field keeps
/// any remaining tabs.
std::vector<std::string_view> split_tabs(std::string_view line, std::size_t max_fields) {
  std::vector<std::string_view> fields;
  while (fields.size() + 1 < max_fields) {
    auto pos = line.find('\t');
    if (pos == std::string_view::npos) break;
    fields.push_back(line.substr(0, pos));
    line.remove_prefix(pos + 1);
  }
  fields.push_back(line);
  return fields;
}

std::int64_t parse_int(std::string_view text, const fs::path& file, std::size_t line_no) {
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ParseError(file.filename().string(), line_no,
                     "expected an integer, got '" + std::string(text) + "'");
  }
  return value;
}

/// Calls `fn(fields, line_no)` for every non-blank line.
template <typename Fn>
void for_each_line(const fs::path& path, std::size_t max_fields, Fn&& fn) {
  auto in = open_input(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fn(split_tabs(line, max_fields), line_no);
  }
}

void expect_fields(const std::vector<std::string_view>& fields, std::size_t n,
                   const fs::path& path, std::size_t line_no) {
  if (fields.size() != n) {
    throw ParseError(path.filename().string(), line_no,
                     fmt::format("expected {} tab-separated fields, got {}", n,
                                 fields.size()));
  }
}

KnowledgeGraph load_side(const fs::path& dir, const char* ent_file,
                         const char* triple_file, const char* attr_file) {
  KnowledgeGraphBuilder builder;

  const auto ent_path = dir / ent_file;
  for_each_line(ent_path, 2, [&](const auto& f, std::size_t line_no) {
    expect_fields(f, 2, ent_path, line_no);
    builder.add_entity(parse_int(f[0], ent_path, line_no), std::string(f[1]));
  });

  const auto triple_path = dir / triple_file;
  for_each_line(triple_path, 3, [&](const auto& f, std::size_t line_no) {
    expect_fields(f, 3, triple_path, line_no);
    const auto h = parse_int(f[0], triple_path, line_no);
    const auto r = parse_int(f[1], triple_path, line_no);
    const auto t = parse_int(f[2], triple_path, line_no);
    auto head = builder.find_entity(h);
    auto tail = builder.find_entity(t);
    if (!head || !tail) {
      throw IntegrityError(fmt::format("{}:{}: entity id {} not listed in {}",
                                       triple_file, line_no, head ? t : h, ent_file));
    }
    builder.add_rel_triple(*head, builder.intern_relation(r), *tail);
  });

  const auto attr_path = dir / attr_file;
  if (fs::exists(attr_path)) {
    for_each_line(attr_path, 3, [&](const auto& f, std::size_t line_no) {
      expect_fields(f, 3, attr_path, line_no);
      auto entity = builder.find_entity_by_uri(std::string(f[0]));
      if (!entity) {
        throw IntegrityError(fmt::format("{}:{}: entity '{}' not listed in {}",
                                         attr_file, line_no, f[0], ent_file));
      }
      builder.add_attr_triple(*entity, builder.intern_attribute(std::string(f[1])),
                              builder.intern_value(std::string(f[2])));
    });
  }
  return std::move(builder).build();
}

void save_side(const fs::path& dir, const KnowledgeGraph& kg, const char* ent_file,
               const char* triple_file, const char* attr_file) {
  {
    auto out = open_output(dir / ent_file);
    for (std::size_t e = 0; e < kg.num_entities(); ++e) {
      auto id = static_cast<EntityId>(e);
      out << kg.entity_source_id(id) << '\t' << kg.entity_uri(id) << '\n';
    }
  }
  {
    auto out = open_output(dir / triple_file);
    for (const auto& t : kg.rel_triples()) {
      out << kg.entity_source_id(t.head) << '\t' << kg.relation_source_id(t.relation)
          << '\t' << kg.entity_source_id(t.tail) << '\n';
    }
  }
  if (!kg.attr_triples().empty()) {
    auto out = open_output(dir / attr_file);
    for (const auto& t : kg.attr_triples()) {
      out << kg.entity_uri(t.entity) << '\t' << kg.attribute_name(t.attribute) << '\t'
          << kg.value(t.value) << '\n';
    }
  }
}

}  // namespace

Dataset load_dataset(const fs::path& directory) {
  if (!fs::is_directory(directory)) {
    throw LoadError("dataset directory " + directory.string() + " does not exist");
  }
  Dataset ds;
  ds.kg1 = load_side(directory, dataset_files::kEntIds1, dataset_files::kTriples1,
                     dataset_files::kAttrTriples1);
  ds.kg2 = load_side(directory, dataset_files::kEntIds2, dataset_files::kTriples2,
                     dataset_files::kAttrTriples2);

  const auto ref_path = directory / dataset_files::kRefEntIds;
  PairSet seeds;
  for_each_line(ref_path, 2, [&](const auto& f, std::size_t line_no) {
    expect_fields(f, 2, ref_path, line_no);
    auto left = ds.kg1.find_entity_by_source_id(parse_int(f[0], ref_path, line_no));
    auto right = ds.kg2.find_entity_by_source_id(parse_int(f[1], ref_path, line_no));
    if (!left || !right) {
      throw IntegrityError(fmt::format("{}:{}: seed references an unknown entity",
                                       dataset_files::kRefEntIds, line_no));
    }
    seeds.insert({*left, *right});
  });
  ds.seeds = SeedPairs(std::move(seeds));

  for (auto [file, target, kg] :
       {std::tuple{dataset_files::kEmbeddings1, &ds.embeddings1, &ds.kg1},
        std::tuple{dataset_files::kEmbeddings2, &ds.embeddings2, &ds.kg2}}) {
    const auto path = directory / file;
    if (!fs::exists(path)) continue;
    auto m = read_embeddings(path);
    if (static_cast<std::size_t>(m.rows()) != kg->num_entities()) {
      throw IntegrityError(fmt::format("{} has {} rows but the KG has {} entities", file,
                                       m.rows(), kg->num_entities()));
    }
    *target = std::move(m);
  }
  return ds;
}

void save_dataset(const fs::path& directory, const Dataset& ds) {
  fs::create_directories(directory);
  save_side(directory, ds.kg1, dataset_files::kEntIds1, dataset_files::kTriples1,
            dataset_files::kAttrTriples1);
  save_side(directory, ds.kg2, dataset_files::kEntIds2, dataset_files::kTriples2,
            dataset_files::kAttrTriples2);
  {
    auto out = open_output(directory / dataset_files::kRefEntIds);
    for (const auto& p : ds.seeds.pairs()) {
      out << ds.kg1.entity_source_id(p.left) << '\t' << ds.kg2.entity_source_id(p.right)
          << '\n';
    }
  }
  if (ds.embeddings1) write_embeddings(directory / dataset_files::kEmbeddings1, *ds.embeddings1);
  if (ds.embeddings2) write_embeddings(directory / dataset_files::kEmbeddings2, *ds.embeddings2);
}

std::string describe(const Dataset& ds) {
  auto side = [](const KnowledgeGraph& kg) {
    return fmt::format("{} entities, {} relations, {} rel triples, {} attributes, {} attr triples",
                       kg.num_entities(), kg.num_relations(), kg.rel_triples().size(),
                       kg.num_attributes(), kg.attr_triples().size());
  };
  return fmt::format("KG1: {}\nKG2: {}\nseeds: {}", side(ds.kg1), side(ds.kg2),
                     ds.seeds.size());
}

Eigen::MatrixXd read_embeddings(const fs::path& path) {
  auto in = open_input(path);
  const auto name = path.filename().string();
  std::string line;
  if (!std::getline(in, line)) throw ParseError(name, 1, "missing header line");
  std::istringstream header(line);
  long rows = -1;
  long cols = -1;
  if (!(header >> rows >> cols) || rows < 0 || cols <= 0) {
    throw ParseError(name, 1, "header must be '<rows> <dim>'");
  }
  Eigen::MatrixXd m(rows, cols);
  for (long r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) {
      throw ParseError(name, static_cast<std::size_t>(r + 2), "missing embedding row");
    }
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (long c = 0; c < cols; ++c) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) {
        throw ParseError(name, static_cast<std::size_t>(r + 2),
                         fmt::format("expected {} reals", cols));
      }
      m(r, c) = v;
      p = next;
    }
  }
  return m;
}

void write_embeddings(const fs::path& path, const Eigen::MatrixXd& m) {
  auto out = open_output(path);
  out << m.rows() << ' ' << m.cols() << '\n';
  std::string row;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    row.clear();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) row.push_back(' ');
      row += fmt::format("{}", m(r, c));
    }
    out << row << '\n';
  }
}

PairSet read_pairs(const fs::path& path) {
  PairSet pairs;
  for_each_line(path, 2, [&](const auto& f, std::size_t line_no) {
    expect_fields(f, 2, path, line_no);
    pairs.insert({static_cast<EntityId>(parse_int(f[0], path, line_no)),
                  static_cast<EntityId>(parse_int(f[1], path, line_no))});
  });
  return pairs;
}

void write_pairs(const fs::path& path, const PairSet& pairs) {
  auto out = open_output(path);
  for (const auto& p : pairs) out << p.left << '\t' << p.right << '\n';
}

}  // namespace echoea
