#include "slak/metapath.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace slak {

namespace {

struct Cursor {
  const std::string& text;
  size_t pos = 0;

  void skip_ws() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
  }
  bool at_end() {
    skip_ws();
    return pos >= text.size();
  }
  [[noreturn]] void error(const std::string& what) {
    fail(ErrorKind::Parse,
         "meta-path syntax error at position " + std::to_string(pos) + ": " + what);
  }
  std::string identifier(const char* what) {
    skip_ws();
    size_t start = pos;
    while (pos < text.size() &&
           (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
      ++pos;
    if (pos == start) error(std::string("expected ") + what);
    return text.substr(start, pos - start);
  }
  bool try_literal(std::string_view lit) {
    skip_ws();
    if (text.compare(pos, lit.size(), lit) != 0) return false;
    pos += lit.size();
    return true;
  }
  void literal(std::string_view lit) {
    if (!try_literal(lit)) error("expected `" + std::string(lit) + "`");
  }
};

}  // namespace

MetaPathSchema parse_metapath(const std::string& raw, const Schema& schema) {
  // Split off an optional trailing `# label` comment first.
  std::string text = raw;
  std::string label;
  if (size_t hash = text.find('#'); hash != std::string::npos) {
    label = trim(text.substr(hash + 1));
    text = text.substr(0, hash);
  }

  Cursor cur{text};
  MetaPathSchema path;
  path.label = label;
  path.start_type = cur.identifier("entity type");
  if (!entity_types::is_valid(path.start_type))
    fail(ErrorKind::Validation, "unknown entity type `" + path.start_type + "`");
  if (path.start_type != "Region")
    fail(ErrorKind::Validation, "start type must be Region, got `" + path.start_type + "`");

  std::string current_type = path.start_type;
  while (!cur.at_end()) {
    cur.literal("-[");
    std::string rel_name = cur.identifier("relation name");
    cur.literal("]->");
    std::string next_type = cur.identifier("entity type");
    if (!entity_types::is_valid(next_type))
      fail(ErrorKind::Validation, "unknown entity type `" + next_type + "`");
    const RelationType* rel = schema.find(rel_name);
    if (!rel) fail(ErrorKind::Validation, "unknown relation `" + rel_name + "`");
    if (rel->head_type != current_type)
      fail(ErrorKind::Validation, "type-chain mismatch: relation " + rel_name + " expects head " +
                                      rel->head_type + " but path is at " + current_type);
    if (rel->tail_type != next_type)
      fail(ErrorKind::Validation, "type-chain mismatch: relation " + rel_name + " yields " +
                                      rel->tail_type + " but path declares " + next_type);
    path.hops.push_back({rel_name, next_type});
    if (path.hops.size() > kMaxMetaPathHops)
      fail(ErrorKind::Validation,
           "meta-path exceeds " + std::to_string(kMaxMetaPathHops) + " hops");
    current_type = next_type;
  }
  if (path.hops.empty()) cur.error("expected at least one `-[Relation]-> EntityType` hop");
  return path;
}

std::string format_metapath(const MetaPathSchema& path) {
  std::string out = path.start_type;
  for (const auto& hop : path.hops) {
    out += " -[";
    out += hop.relation;
    out += "]-> ";
    out += hop.next_type;
  }
  if (!path.label.empty()) {
    out += " # ";
    out += path.label;
  }
  return out;
}

std::string to_natural_language(const MetaPathSchema& path) {
  std::string out = path.start_type;
  for (const auto& hop : path.hops) {
    out += " THAT ";
    out += hop.relation;
    out += ' ';
    out += hop.next_type;
  }
  return out;
}

namespace {

std::vector<int> relation_indices(const KnowledgeGraph& kg, const MetaPathSchema& path) {
  std::vector<int> rels;
  for (const auto& hop : path.hops) {
    int r = kg.schema().index_of(hop.relation);
    if (r < 0)
      fail(ErrorKind::Validation, "meta-path relation `" + hop.relation +
                                      "` is not in the graph's schema");
    rels.push_back(r);
  }
  return rels;
}

}  // namespace

std::vector<std::vector<std::string>> match_paths(const KnowledgeGraph& kg,
                                                  const MetaPathSchema& path,
                                                  std::optional<size_t> limit) {
  std::vector<int> rels = relation_indices(kg, path);
  std::vector<std::vector<std::string>> out;
  std::vector<int> stack;

  // Relation-indexed forward expansion, join order = schema order. Start
  // entities and adjacency lists are both id-sorted, so the output order is
  // deterministic (lexicographic DFS).
  auto dfs = [&](auto&& self, size_t hop) -> bool {
    if (limit && out.size() >= *limit) return false;
    if (hop == rels.size()) {
      std::vector<std::string> ids;
      ids.reserve(stack.size());
      for (int e : stack) ids.push_back(kg.entity(e).id);
      out.push_back(std::move(ids));
      return !(limit && out.size() >= *limit);
    }
    for (int next : kg.neighbor_indices(stack.back(), rels[hop], Direction::Forward)) {
      stack.push_back(next);
      bool keep_going = self(self, hop + 1);
      stack.pop_back();
      if (!keep_going) return false;
    }
    return true;
  };

  for (int start : kg.entities_of_type(path.start_type)) {
    stack.assign(1, start);
    if (!dfs(dfs, 0)) break;
  }
  return out;
}

SubKG extract_subkg(const KnowledgeGraph& kg, const MetaPathSchema& path) {
  std::vector<int> rels = relation_indices(kg, path);
  size_t n_stages = rels.size() + 1;

  // Stage k holds entities reachable from some start after k hops.
  std::vector<std::set<int>> forward(n_stages);
  for (int start : kg.entities_of_type(path.start_type)) forward[0].insert(start);
  for (size_t k = 0; k < rels.size(); ++k)
    for (int e : forward[k])
      for (int n : kg.neighbor_indices(e, rels[k], Direction::Forward)) forward[k + 1].insert(n);

  // Prune to entities that can also complete the remaining hops, so that
  // every surviving fact lies on at least one full instance.
  std::vector<std::set<int>> alive(n_stages);
  alive[n_stages - 1] = forward[n_stages - 1];
  for (size_t k = rels.size(); k-- > 0;)
    for (int e : forward[k])
      for (int n : kg.neighbor_indices(e, rels[k], Direction::Forward))
        if (alive[k + 1].count(n)) {
          alive[k].insert(e);
          break;
        }

  SubKG sub;
  sub.parent = &kg;
  std::set<std::tuple<int, int, int>> seen;
  std::set<int> entity_set;
  for (const Fact& f : kg.facts()) {
    for (size_t k = 0; k < rels.size(); ++k) {
      if (f.rel != rels[k]) continue;
      if (alive[k].count(f.head) && alive[k + 1].count(f.tail)) {
        if (seen.insert({f.head, f.rel, f.tail}).second) {
          sub.facts.push_back(f);
          entity_set.insert(f.head);
          entity_set.insert(f.tail);
        }
        break;
      }
    }
  }
  sub.entities.assign(entity_set.begin(), entity_set.end());
  std::sort(sub.entities.begin(), sub.entities.end(), [&kg](int a, int b) {
    return kg.entity(a).id < kg.entity(b).id;
  });
  return sub;
}

std::vector<std::pair<int, uint64_t>> count_instances_all(const KnowledgeGraph& kg,
                                                          const MetaPathSchema& path) {
  std::vector<int> rels = relation_indices(kg, path);
  // counts[e] = number of ways to complete hops k..end starting from e.
  std::vector<uint64_t> counts(kg.entity_count(), 1);
  for (size_t k = rels.size(); k-- > 0;) {
    std::vector<uint64_t> next(kg.entity_count(), 0);
    for (const Fact& f : kg.facts())
      if (f.rel == rels[k]) next[static_cast<size_t>(f.head)] += counts[static_cast<size_t>(f.tail)];
    counts = std::move(next);
  }
  std::vector<std::pair<int, uint64_t>> out;
  for (int e : kg.entities_of_type(path.start_type))
    out.emplace_back(e, counts[static_cast<size_t>(e)]);
  return out;
}

uint64_t count_instances(const KnowledgeGraph& kg, const MetaPathSchema& path,
                         const std::string& region) {
  int e = kg.entity_index(region);
  if (e < 0) fail(ErrorKind::Invalid, "unknown region `" + region + "`");
  if (kg.entity(e).etype != path.start_type)
    fail(ErrorKind::Invalid, "entity `" + region + "` has type " + kg.entity(e).etype +
                                 ", expected " + path.start_type);
  for (const auto& [idx, count] : count_instances_all(kg, path))
    if (idx == e) return count;
  return 0;
}

std::vector<MetaPathSchema> load_metapath_file(const std::string& path, const Schema& schema) {
  std::istringstream in(read_file(path));
  std::vector<MetaPathSchema> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    try {
      out.push_back(parse_metapath(t, schema));
    } catch (const Error& e) {
      throw Error(e.kind(), path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void save_metapath_file(const std::string& path, const std::vector<MetaPathSchema>& paths) {
  std::string out;
  for (const auto& p : paths) {
    out += format_metapath(p);
    out += '\n';
  }
  write_file(path, out);
}

}  // namespace slak
