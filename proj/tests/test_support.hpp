#pragma once

// Shared fixtures and independent oracles for the test suites. Oracles here
// deliberately avoid the library's indexed/DP code paths.

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "slak/dataio.hpp"
#include "slak/kg.hpp"
#include "slak/metapath.hpp"

namespace slak::testing {

inline std::string source_dir() { return SLAK_SOURCE_DIR; }

inline std::string default_schema_path() { return source_dir() + "/data/lbkg_schema.tsv"; }

inline Schema default_schema() { return Schema::load(default_schema_path()); }

// Fresh temp directory under the system temp root; removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<uint64_t> counter{0};
    path_ = (std::filesystem::temp_directory_path() /
             ("slak_" + tag + "_" + std::to_string(::getpid()) + "_" +
              std::to_string(counter.fetch_add(1))))
                .string();
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::string& path() const { return path_; }
  std::string file(const std::string& name) const { return path_ + "/" + name; }

 private:
  std::string path_;
};

// Tiny schema used by most unit fixtures.
inline Schema mini_schema() {
  return Schema::from_relations({
      {"Has", "Region", "POI", "Region contains POI"},
      {"LocateAt", "POI", "Region", "POI locates at the region"},
      {"Competitive", "POI", "POI", "Nearby POIs with the same brand"},
      {"HasBrandOf", "POI", "Brand", "Brand of the POI"},
      {"PopulationFlowTo", "Region", "Region", "Population flow"},
  });
}

// Naive brute-force meta-path enumeration: scans the raw fact list at every
// hop, no adjacency index. The independent oracle for match_paths.
inline std::vector<std::vector<std::string>> brute_force_match(const KnowledgeGraph& kg,
                                                               const MetaPathSchema& path) {
  std::vector<std::vector<std::string>> out;
  std::vector<int> rels;
  for (const auto& hop : path.hops) rels.push_back(kg.schema().index_of(hop.relation));

  std::vector<int> stack;
  auto extend = [&](auto&& self, size_t hop) -> void {
    if (hop == rels.size()) {
      std::vector<std::string> ids;
      for (int e : stack) ids.push_back(kg.entity(e).id);
      out.push_back(std::move(ids));
      return;
    }
    for (const Fact& f : kg.facts()) {
      if (f.rel != rels[hop] || f.head != stack.back()) continue;
      stack.push_back(f.tail);
      self(self, hop + 1);
      stack.pop_back();
    }
  };
  for (size_t e = 0; e < kg.entity_count(); ++e) {
    if (kg.entity(static_cast<int>(e)).etype != path.start_type) continue;
    stack.assign(1, static_cast<int>(e));
    extend(extend, 0);
  }
  return out;
}

// Random schema-valid KG over the default 35-relation schema.
inline KnowledgeGraph random_kg(const Schema& schema, Rng& rng, size_t entities_per_type,
                                size_t n_facts) {
  KnowledgeGraphBuilder builder(schema);
  std::map<std::string, std::vector<std::string>> by_type;
  for (const std::string& etype : schema.entity_types()) {
    for (size_t i = 0; i < entities_per_type; ++i) {
      std::string id = etype + std::to_string(i);
      builder.add_entity(id, etype);
      by_type[etype].push_back(id);
    }
  }
  size_t added = 0, attempts = 0;
  while (added < n_facts && attempts < n_facts * 20) {
    ++attempts;
    const RelationType& rel =
        schema.relations()[rng.index(schema.relation_count())];
    const auto& heads = by_type[rel.head_type];
    const auto& tails = by_type[rel.tail_type];
    if (heads.empty() || tails.empty()) continue;
    if (builder.add_fact(heads[rng.index(heads.size())], rel.name, tails[rng.index(tails.size())]))
      ++added;
  }
  return builder.build();
}

}  // namespace slak::testing
