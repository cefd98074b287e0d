#include "slak/kg.hpp"

#include <algorithm>
#include <sstream>

namespace slak {

namespace entity_types {
bool is_valid(const std::string& name) {
  for (const char* n : kNames)
    if (name == n) return true;
  return false;
}
}  // namespace entity_types

namespace {

// Splits a line into tab-separated fields, dropping trailing \r.
std::vector<std::string> tsv_fields(std::string_view line) {
  std::string s(line);
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return split(s, '\t');
}

bool skippable(const std::string& line) {
  std::string t = trim(line);
  return t.empty() || t[0] == '#';
}

uint64_t fact_key(int head, int rel, int tail) {
  uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](uint64_t v) {
    h ^= v;
    h *= 1099511628211ULL;
  };
  mix(static_cast<uint64_t>(head));
  mix(static_cast<uint64_t>(rel));
  mix(static_cast<uint64_t>(tail));
  return h;
}

}  // namespace

Schema Schema::load(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<RelationType> relations;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    auto fields = tsv_fields(line);
    if (fields.size() < 3)
      fail(ErrorKind::Parse, path + ":" + std::to_string(lineno) +
                                 ": expected `relation<TAB>head_type<TAB>tail_type`");
    RelationType rel;
    rel.name = trim(fields[0]);
    rel.head_type = trim(fields[1]);
    rel.tail_type = trim(fields[2]);
    if (fields.size() > 3) rel.description = trim(fields[3]);
    if (rel.name.empty())
      fail(ErrorKind::Parse, path + ":" + std::to_string(lineno) + ": empty relation name");
    for (const std::string& t : {rel.head_type, rel.tail_type})
      if (!entity_types::is_valid(t))
        fail(ErrorKind::Validation,
             path + ":" + std::to_string(lineno) + ": unknown entity type `" + t + "`");
    relations.push_back(std::move(rel));
  }
  return from_relations(std::move(relations));
}

Schema Schema::from_relations(std::vector<RelationType> relations) {
  Schema s;
  s.relations_ = std::move(relations);
  for (size_t i = 0; i < s.relations_.size(); ++i) {
    const auto& rel = s.relations_[i];
    if (!entity_types::is_valid(rel.head_type) || !entity_types::is_valid(rel.tail_type))
      fail(ErrorKind::Validation, "unknown entity type in relation `" + rel.name + "`");
    if (!s.by_name_.emplace(rel.name, static_cast<int>(i)).second)
      fail(ErrorKind::Validation, "duplicate relation name `" + rel.name + "`");
  }
  return s;
}

const RelationType* Schema::find(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? nullptr : &relations_[static_cast<size_t>(it->second)];
}

int Schema::index_of(const std::string& name) const {
  auto it = by_name_.find(name);
  return it == by_name_.end() ? -1 : it->second;
}

std::vector<std::string> Schema::entity_types() const {
  std::vector<std::string> out;
  for (const char* name : entity_types::kNames) {
    for (const auto& rel : relations_) {
      if (rel.head_type == name || rel.tail_type == name) {
        out.emplace_back(name);
        break;
      }
    }
  }
  return out;
}

KnowledgeGraphBuilder::KnowledgeGraphBuilder(Schema schema) : schema_(std::move(schema)) {}

int KnowledgeGraphBuilder::add_entity(const std::string& id, const std::string& etype) {
  if (!entity_types::is_valid(etype))
    fail(ErrorKind::Validation, "unknown entity type `" + etype + "` for entity `" + id + "`");
  auto [it, inserted] = by_id_.emplace(id, static_cast<int>(entities_.size()));
  if (!inserted) {
    if (entities_[static_cast<size_t>(it->second)].etype != etype)
      fail(ErrorKind::Validation, "entity `" + id + "` redeclared with a different type");
    return it->second;
  }
  entities_.push_back({id, etype});
  return it->second;
}

bool KnowledgeGraphBuilder::add_fact(const std::string& head, const std::string& relation,
                                     const std::string& tail) {
  int rel = schema_.index_of(relation);
  if (rel < 0) fail(ErrorKind::Validation, "unknown relation `" + relation + "`");
  auto head_it = by_id_.find(head);
  if (head_it == by_id_.end()) fail(ErrorKind::Validation, "unknown entity id `" + head + "`");
  auto tail_it = by_id_.find(tail);
  if (tail_it == by_id_.end()) fail(ErrorKind::Validation, "unknown entity id `" + tail + "`");
  const RelationType& sig = schema_.relations()[static_cast<size_t>(rel)];
  const Entity& h = entities_[static_cast<size_t>(head_it->second)];
  const Entity& t = entities_[static_cast<size_t>(tail_it->second)];
  if (h.etype != sig.head_type)
    fail(ErrorKind::Validation, "head type " + h.etype + " != " + sig.head_type +
                                    " for relation " + relation + " (fact " + head + ")");
  if (t.etype != sig.tail_type)
    fail(ErrorKind::Validation, "tail type " + t.etype + " != " + sig.tail_type +
                                    " for relation " + relation + " (fact " + tail + ")");
  uint64_t key = fact_key(head_it->second, rel, tail_it->second);
  if (!fact_keys_.insert(key).second) {
    // Hash collisions across distinct facts are possible in principle; confirm
    // by scanning before counting a duplicate.
    Fact candidate{head_it->second, rel, tail_it->second};
    if (std::find(facts_.begin(), facts_.end(), candidate) != facts_.end()) {
      ++duplicates_;
      return false;
    }
  }
  facts_.push_back({head_it->second, rel, tail_it->second});
  return true;
}

KnowledgeGraph KnowledgeGraphBuilder::build() {
  KnowledgeGraph kg;
  kg.schema_ = std::move(schema_);
  kg.entities_ = std::move(entities_);
  kg.by_id_ = std::move(by_id_);
  kg.facts_ = std::move(facts_);
  kg.duplicates_ = duplicates_;
  kg.build_index();
  return kg;
}

KnowledgeGraph KnowledgeGraph::load(const std::string& entities_path,
                                    const std::string& facts_path, const Schema& schema) {
  KnowledgeGraphBuilder builder(schema);
  {
    std::istringstream in(read_file(entities_path));
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || trim(line).empty() || trim(line)[0] == '#') continue;
      auto fields = split(line.back() == '\r' ? line.substr(0, line.size() - 1) : line, '\t');
      if (fields.size() != 2)
        fail(ErrorKind::Parse, entities_path + ":" + std::to_string(lineno) +
                                   ": expected `entity_id<TAB>entity_type`");
      builder.add_entity(trim(fields[0]), trim(fields[1]));
    }
  }
  {
    std::istringstream in(read_file(facts_path));
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || trim(line).empty() || trim(line)[0] == '#') continue;
      auto fields = split(line.back() == '\r' ? line.substr(0, line.size() - 1) : line, '\t');
      if (fields.size() != 3)
        fail(ErrorKind::Parse, facts_path + ":" + std::to_string(lineno) +
                                   ": expected `head_id<TAB>relation<TAB>tail_id`");
      try {
        builder.add_fact(trim(fields[0]), trim(fields[1]), trim(fields[2]));
      } catch (const Error& e) {
        throw Error(e.kind(),
                    facts_path + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
  }
  return builder.build();
}

void KnowledgeGraph::build_index() {
  forward_.assign(schema_.relation_count(), {});
  reverse_.assign(schema_.relation_count(), {});
  // Canonical fact order: by relation name, then head id, then tail id.
  std::sort(facts_.begin(), facts_.end(), [this](const Fact& a, const Fact& b) {
    const std::string& ra = schema_.relations()[static_cast<size_t>(a.rel)].name;
    const std::string& rb = schema_.relations()[static_cast<size_t>(b.rel)].name;
    if (ra != rb) return ra < rb;
    const std::string& ha = entities_[static_cast<size_t>(a.head)].id;
    const std::string& hb = entities_[static_cast<size_t>(b.head)].id;
    if (ha != hb) return ha < hb;
    return entities_[static_cast<size_t>(a.tail)].id < entities_[static_cast<size_t>(b.tail)].id;
  });
  for (const Fact& f : facts_) {
    forward_[static_cast<size_t>(f.rel)][f.head].push_back(f.tail);
    reverse_[static_cast<size_t>(f.rel)][f.tail].push_back(f.head);
  }
  auto sort_by_id = [this](std::vector<int>& v) {
    std::sort(v.begin(), v.end(), [this](int a, int b) {
      return entities_[static_cast<size_t>(a)].id < entities_[static_cast<size_t>(b)].id;
    });
  };
  for (auto& rel_map : forward_)
    for (auto& [_, v] : rel_map) sort_by_id(v);
  for (auto& rel_map : reverse_)
    for (auto& [_, v] : rel_map) sort_by_id(v);
}

void KnowledgeGraph::save(const std::string& entities_path, const std::string& facts_path) const {
  std::string ents;
  for (const Entity& e : entities_) {
    ents += e.id;
    ents += '\t';
    ents += e.etype;
    ents += '\n';
  }
  write_file(entities_path, ents);
  std::string facts;
  for (const Fact& f : facts_) {
    facts += entities_[static_cast<size_t>(f.head)].id;
    facts += '\t';
    facts += schema_.relations()[static_cast<size_t>(f.rel)].name;
    facts += '\t';
    facts += entities_[static_cast<size_t>(f.tail)].id;
    facts += '\n';
  }
  write_file(facts_path, facts);
}

int KnowledgeGraph::entity_index(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? -1 : it->second;
}

const std::vector<int>& KnowledgeGraph::neighbor_indices(int entity, int relation,
                                                         Direction dir) const {
  static const std::vector<int> kEmpty;
  const auto& index = dir == Direction::Forward ? forward_ : reverse_;
  const auto& rel_map = index[static_cast<size_t>(relation)];
  auto it = rel_map.find(entity);
  return it == rel_map.end() ? kEmpty : it->second;
}

std::vector<std::string> KnowledgeGraph::neighbors(const std::string& entity_id,
                                                   const std::string& relation,
                                                   Direction dir) const {
  int e = entity_index(entity_id);
  if (e < 0) fail(ErrorKind::Invalid, "unknown entity `" + entity_id + "`");
  int rel = schema_.index_of(relation);
  if (rel < 0) fail(ErrorKind::Invalid, "unknown relation `" + relation + "`");
  std::vector<std::string> out;
  for (int n : neighbor_indices(e, rel, dir)) out.push_back(entities_[static_cast<size_t>(n)].id);
  return out;
}

std::vector<int> KnowledgeGraph::entities_of_type(const std::string& etype) const {
  std::vector<int> out;
  for (size_t i = 0; i < entities_.size(); ++i)
    if (entities_[i].etype == etype) out.push_back(static_cast<int>(i));
  std::sort(out.begin(), out.end(), [this](int a, int b) {
    return entities_[static_cast<size_t>(a)].id < entities_[static_cast<size_t>(b)].id;
  });
  return out;
}

std::string KnowledgeGraph::content_hash() const {
  std::string blob;
  for (const Entity& e : entities_) {
    blob += e.id;
    blob += '\t';
    blob += e.etype;
    blob += '\n';
  }
  for (const Fact& f : facts_) {
    blob += entities_[static_cast<size_t>(f.head)].id;
    blob += '\t';
    blob += schema_.relations()[static_cast<size_t>(f.rel)].name;
    blob += '\t';
    blob += entities_[static_cast<size_t>(f.tail)].id;
    blob += '\n';
  }
  return sha256_hex(blob);
}

}  // namespace slak
