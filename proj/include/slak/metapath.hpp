#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slak/kg.hpp"

namespace slak {

// An alternating entity-type / relation sequence, always starting at Region.
// Textual form: `Region -[Has]-> POI -[Competitive]-> POI [# label]`.
struct MetaPathSchema {
  struct Hop {
    std::string relation;
    std::string next_type;
  };
  std::string start_type;  // always "Region"
  std::vector<Hop> hops;   // 1..6
  std::string label;       // optional agent-given name

  size_t hop_count() const { return hops.size(); }
  bool operator==(const MetaPathSchema& o) const {
    if (start_type != o.start_type || hops.size() != o.hops.size()) return false;
    for (size_t i = 0; i < hops.size(); ++i)
      if (hops[i].relation != o.hops[i].relation || hops[i].next_type != o.hops[i].next_type)
        return false;
    return true;  // label intentionally ignored
  }
};

inline constexpr size_t kMaxMetaPathHops = 6;

// Parses and validates the DSL against a schema. Errors carry the character
// position of the offending token.
MetaPathSchema parse_metapath(const std::string& text, const Schema& schema);

// Canonical text; parse(format(p)) == p.
std::string format_metapath(const MetaPathSchema& path);

// Deterministic THAT-clause rendering used for semantic embeddings, e.g.
// `Region THAT Has POI THAT Competitive POI`.
std::string to_natural_language(const MetaPathSchema& path);

// All path instances (entity-id sequences of length hops+1) in deterministic
// order. Exhaustive when `limit` is absent.
std::vector<std::vector<std::string>> match_paths(const KnowledgeGraph& kg,
                                                  const MetaPathSchema& path,
                                                  std::optional<size_t> limit = std::nullopt);

// The subgraph induced by all complete instances of one meta-path schema.
struct SubKG {
  const KnowledgeGraph* parent = nullptr;
  std::vector<Fact> facts;     // subset of parent facts, canonical order
  std::vector<int> entities;   // incident entity indices, sorted by id
};

SubKG extract_subkg(const KnowledgeGraph& kg, const MetaPathSchema& path);

// Number of instances whose first entity is `region`.
uint64_t count_instances(const KnowledgeGraph& kg, const MetaPathSchema& path,
                         const std::string& region);

// Instance counts for every entity of the start type, keyed by entity index.
// One dynamic-programming sweep; used by the synthetic generator.
std::vector<std::pair<int, uint64_t>> count_instances_all(const KnowledgeGraph& kg,
                                                          const MetaPathSchema& path);

// Meta-path list file: one DSL string per line, `#` comments, optional
// trailing `# label`.
std::vector<MetaPathSchema> load_metapath_file(const std::string& path, const Schema& schema);
void save_metapath_file(const std::string& path, const std::vector<MetaPathSchema>& paths);

}  // namespace slak
