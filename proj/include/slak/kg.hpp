#pragma once

#include <array>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "slak/util.hpp"

namespace slak {

// The closed set of entity types in the location-based knowledge graph.
namespace entity_types {
inline constexpr std::array<const char*, 7> kNames = {
    "Region", "POI", "Category1", "Category2", "Category3", "Brand", "BusinessArea"};
bool is_valid(const std::string& name);
}  // namespace entity_types

struct RelationType {
  std::string name;
  std::string head_type;
  std::string tail_type;
  std::string description;  // optional, feeds the agent schema prompt
};

class Schema {
 public:
  // File format: `relation<TAB>head_type<TAB>tail_type[<TAB>description]`,
  // UTF-8, `#` comments and blank lines ignored.
  static Schema load(const std::string& path);
  static Schema from_relations(std::vector<RelationType> relations);

  const std::vector<RelationType>& relations() const { return relations_; }
  const RelationType* find(const std::string& name) const;
  int index_of(const std::string& name) const;  // -1 when absent
  size_t relation_count() const { return relations_.size(); }

  // Entity types referenced by at least one relation, in canonical order.
  std::vector<std::string> entity_types() const;

 private:
  std::vector<RelationType> relations_;
  std::unordered_map<std::string, int> by_name_;
};

struct Entity {
  std::string id;
  std::string etype;
};

// Fact with entity/relation resolved to dense indices.
struct Fact {
  int head;
  int rel;
  int tail;
  bool operator==(const Fact&) const = default;
};

enum class Direction { Forward, Reverse };

class KnowledgeGraph;

// Incremental construction with full type checking against the schema.
class KnowledgeGraphBuilder {
 public:
  explicit KnowledgeGraphBuilder(Schema schema);

  int add_entity(const std::string& id, const std::string& etype);
  // Returns false when the fact is a duplicate (dropped).
  bool add_fact(const std::string& head, const std::string& relation, const std::string& tail);

  KnowledgeGraph build();

 private:
  friend class KnowledgeGraph;
  Schema schema_;
  std::vector<Entity> entities_;
  std::unordered_map<std::string, int> by_id_;
  std::vector<Fact> facts_;
  std::unordered_set<uint64_t> fact_keys_;
  size_t duplicates_ = 0;
};

// Immutable after construction; safe for shared concurrent reads.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;  // empty graph; populate via load() or a builder

  // Entities file: `entity_id<TAB>entity_type`; facts file:
  // `head_id<TAB>relation<TAB>tail_id`. `#` comments and blank lines ignored.
  static KnowledgeGraph load(const std::string& entities_path, const std::string& facts_path,
                             const Schema& schema);

  void save(const std::string& entities_path, const std::string& facts_path) const;

  const Schema& schema() const { return schema_; }
  size_t entity_count() const { return entities_.size(); }
  size_t fact_count() const { return facts_.size(); }
  size_t duplicates_dropped() const { return duplicates_; }

  const Entity& entity(int idx) const { return entities_[idx]; }
  int entity_index(const std::string& id) const;  // -1 when absent
  const std::vector<Fact>& facts() const { return facts_; }

  // Neighbor ids in deterministic order (sorted by id).
  std::vector<std::string> neighbors(const std::string& entity_id, const std::string& relation,
                                     Direction dir) const;
  // Index-level access; returns a (possibly empty) sorted list.
  const std::vector<int>& neighbor_indices(int entity, int relation, Direction dir) const;

  // Entity indices of one type, sorted by id.
  std::vector<int> entities_of_type(const std::string& etype) const;

  std::string content_hash() const;

 private:
  friend class KnowledgeGraphBuilder;
  void build_index();

  Schema schema_;
  std::vector<Entity> entities_;
  std::unordered_map<std::string, int> by_id_;
  std::vector<Fact> facts_;
  size_t duplicates_ = 0;
  // adjacency[rel] maps entity -> sorted neighbor indices
  std::vector<std::unordered_map<int, std::vector<int>>> forward_;
  std::vector<std::unordered_map<int, std::vector<int>>> reverse_;
};

}  // namespace slak
