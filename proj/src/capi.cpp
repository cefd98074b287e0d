#include "slak/slak.h"

#include <cstring>
#include <string>

#include "slak/kg.hpp"
#include "slak/metapath.hpp"
#include "slak/runner.hpp"

using namespace slak;

struct slak_schema {
  Schema schema;
};

struct slak_kg {
  KnowledgeGraph kg;
};

struct slak_metapath {
  MetaPathSchema path;
};

namespace {

thread_local std::string g_last_error;

slak_status status_of(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Io: return SLAK_ERR_IO;
    case ErrorKind::Parse: return SLAK_ERR_PARSE;
    case ErrorKind::Validation: return SLAK_ERR_VALIDATION;
    case ErrorKind::Invalid: return SLAK_ERR_INVALID;
    case ErrorKind::Runtime: return SLAK_ERR_RUNTIME;
  }
  return SLAK_ERR_RUNTIME;
}

template <typename Fn>
slak_status guarded(Fn&& fn) {
  try {
    fn();
    return SLAK_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SLAK_ERR_RUNTIME;
  } catch (...) {
    g_last_error = "unknown error";
    return SLAK_ERR_RUNTIME;
  }
}

slak_status invalid_argument(const char* what) {
  g_last_error = what;
  return SLAK_ERR_INVALID;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* slak_version(void) { return kVersion; }

const char* slak_last_error(void) { return g_last_error.c_str(); }

const char* slak_status_name(slak_status status) {
  switch (status) {
    case SLAK_OK: return "ok";
    case SLAK_ERR_INVALID: return "invalid-argument";
    case SLAK_ERR_PARSE: return "parse-error";
    case SLAK_ERR_VALIDATION: return "validation-error";
    case SLAK_ERR_IO: return "io-error";
    case SLAK_ERR_RUNTIME: return "runtime-error";
  }
  return "unknown";
}

void slak_string_free(char* s) { std::free(s); }

slak_status slak_schema_load(const char* path, slak_schema** out) {
  if (!path || !out) return invalid_argument("slak_schema_load: null argument");
  return guarded([&]() { *out = new slak_schema{Schema::load(path)}; });
}

void slak_schema_free(slak_schema* schema) { delete schema; }

size_t slak_schema_relation_count(const slak_schema* schema) {
  return schema ? schema->schema.relation_count() : 0;
}

size_t slak_schema_entity_type_count(const slak_schema* schema) {
  return schema ? schema->schema.entity_types().size() : 0;
}

slak_status slak_kg_load(const char* entities_path, const char* facts_path,
                         const slak_schema* schema, slak_kg** out) {
  if (!entities_path || !facts_path || !schema || !out)
    return invalid_argument("slak_kg_load: null argument");
  return guarded([&]() {
    *out = new slak_kg{KnowledgeGraph::load(entities_path, facts_path, schema->schema)};
  });
}

void slak_kg_free(slak_kg* kg) { delete kg; }

size_t slak_kg_entity_count(const slak_kg* kg) { return kg ? kg->kg.entity_count() : 0; }

size_t slak_kg_fact_count(const slak_kg* kg) { return kg ? kg->kg.fact_count() : 0; }

size_t slak_kg_duplicates_dropped(const slak_kg* kg) {
  return kg ? kg->kg.duplicates_dropped() : 0;
}

slak_status slak_kg_neighbors(const slak_kg* kg, const char* entity_id, const char* relation,
                              int reverse, char** out) {
  if (!kg || !entity_id || !relation || !out)
    return invalid_argument("slak_kg_neighbors: null argument");
  return guarded([&]() {
    auto ids = kg->kg.neighbors(entity_id, relation,
                                reverse ? Direction::Reverse : Direction::Forward);
    std::string joined;
    for (size_t i = 0; i < ids.size(); ++i) {
      if (i) joined += '\n';
      joined += ids[i];
    }
    *out = dup_string(joined);
  });
}

slak_status slak_metapath_parse(const char* text, const slak_schema* schema,
                                slak_metapath** out) {
  if (!text || !schema || !out) return invalid_argument("slak_metapath_parse: null argument");
  return guarded([&]() { *out = new slak_metapath{parse_metapath(text, schema->schema)}; });
}

void slak_metapath_free(slak_metapath* path) { delete path; }

size_t slak_metapath_hop_count(const slak_metapath* path) {
  return path ? path->path.hop_count() : 0;
}

slak_status slak_metapath_format(const slak_metapath* path, char** out) {
  if (!path || !out) return invalid_argument("slak_metapath_format: null argument");
  return guarded([&]() { *out = dup_string(format_metapath(path->path)); });
}

slak_status slak_metapath_to_natural_language(const slak_metapath* path, char** out) {
  if (!path || !out)
    return invalid_argument("slak_metapath_to_natural_language: null argument");
  return guarded([&]() { *out = dup_string(to_natural_language(path->path)); });
}

slak_status slak_metapath_count_instances(const slak_kg* kg, const slak_metapath* path,
                                          const char* region, uint64_t* out) {
  if (!kg || !path || !region || !out)
    return invalid_argument("slak_metapath_count_instances: null argument");
  return guarded([&]() { *out = count_instances(kg->kg, path->path, region); });
}

slak_status slak_metapath_match_count(const slak_kg* kg, const slak_metapath* path,
                                      uint64_t* out) {
  if (!kg || !path || !out) return invalid_argument("slak_metapath_match_count: null argument");
  return guarded([&]() {
    uint64_t total = 0;
    for (const auto& [_, count] : count_instances_all(kg->kg, path->path)) total += count;
    *out = total;
  });
}

slak_status slak_gen_synth(const char* spec_path, const char* out_dir) {
  if (!spec_path || !out_dir) return invalid_argument("slak_gen_synth: null argument");
  return guarded([&]() { cmd_gen_synth(spec_path, out_dir); });
}

slak_status slak_run(const char* config_path, const char* data_dir, const char* out_dir,
                     const char* round, int mock_agents, const char* ablate_csv) {
  if (!config_path || !data_dir || !out_dir || !round)
    return invalid_argument("slak_run: null argument");
  return guarded([&]() {
    std::vector<std::string> flags;
    if (ablate_csv && *ablate_csv)
      for (const std::string& f : split(ablate_csv, ','))
        if (!trim(f).empty()) flags.push_back(trim(f));
    cmd_run(config_path, data_dir, out_dir, round_selection_from_string(round),
            mock_agents != 0, flags);
  });
}

slak_status slak_search(const char* algo, const char* config_path, const char* data_dir,
                        const char* out_dir) {
  if (!algo || !config_path || !data_dir || !out_dir)
    return invalid_argument("slak_search: null argument");
  return guarded([&]() { cmd_search(algo, config_path, data_dir, out_dir); });
}

slak_status slak_report(const char* run_dir) {
  if (!run_dir) return invalid_argument("slak_report: null argument");
  return guarded([&]() { cmd_report(run_dir); });
}

}  // extern "C"
