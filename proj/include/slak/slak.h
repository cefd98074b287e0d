/* C API for the SLAK pipeline: opaque handles over the knowledge-graph
 * store and meta-path engine, plus coarse entry points for the pipeline
 * commands. All functions return SLAK_OK or an error status; the message for
 * the most recent failure on the calling thread is available through
 * slak_last_error(). Strings returned through `char**` out-parameters are
 * heap-allocated and must be released with slak_string_free().
 */
#ifndef SLAK_H
#define SLAK_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SLAK_API __declspec(dllexport)
#else
#define SLAK_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum slak_status {
  SLAK_OK = 0,
  SLAK_ERR_INVALID = 1,    /* bad argument / precondition failure */
  SLAK_ERR_PARSE = 2,      /* syntax error in a text input */
  SLAK_ERR_VALIDATION = 3, /* schema or type constraint violated */
  SLAK_ERR_IO = 4,         /* missing or malformed file */
  SLAK_ERR_RUNTIME = 5,    /* numeric or remote failure */
} slak_status;

typedef struct slak_schema slak_schema;
typedef struct slak_kg slak_kg;
typedef struct slak_metapath slak_metapath;

SLAK_API const char* slak_version(void);
SLAK_API const char* slak_last_error(void);
SLAK_API const char* slak_status_name(slak_status status);
SLAK_API void slak_string_free(char* s);

/* --- schema -------------------------------------------------------------- */

SLAK_API slak_status slak_schema_load(const char* path, slak_schema** out);
SLAK_API void slak_schema_free(slak_schema* schema);
SLAK_API size_t slak_schema_relation_count(const slak_schema* schema);
SLAK_API size_t slak_schema_entity_type_count(const slak_schema* schema);

/* --- knowledge graph ----------------------------------------------------- */

SLAK_API slak_status slak_kg_load(const char* entities_path, const char* facts_path,
                                  const slak_schema* schema, slak_kg** out);
SLAK_API void slak_kg_free(slak_kg* kg);
SLAK_API size_t slak_kg_entity_count(const slak_kg* kg);
SLAK_API size_t slak_kg_fact_count(const slak_kg* kg);
SLAK_API size_t slak_kg_duplicates_dropped(const slak_kg* kg);
/* Neighbor ids joined by '\n' in deterministic (id-sorted) order; empty
 * string when there are none. reverse=0 follows head->tail, 1 tail->head. */
SLAK_API slak_status slak_kg_neighbors(const slak_kg* kg, const char* entity_id,
                                       const char* relation, int reverse, char** out);

/* --- meta-paths ----------------------------------------------------------- */

SLAK_API slak_status slak_metapath_parse(const char* text, const slak_schema* schema,
                                         slak_metapath** out);
SLAK_API void slak_metapath_free(slak_metapath* path);
SLAK_API size_t slak_metapath_hop_count(const slak_metapath* path);
SLAK_API slak_status slak_metapath_format(const slak_metapath* path, char** out);
SLAK_API slak_status slak_metapath_to_natural_language(const slak_metapath* path, char** out);
/* Number of path instances starting at `region`. */
SLAK_API slak_status slak_metapath_count_instances(const slak_kg* kg, const slak_metapath* path,
                                                   const char* region, uint64_t* out);
/* Total number of path instances in the graph. */
SLAK_API slak_status slak_metapath_match_count(const slak_kg* kg, const slak_metapath* path,
                                               uint64_t* out);

/* --- pipeline commands ----------------------------------------------------
 * These mirror the CLI subcommands one-to-one. `round` is "1", "2" or "all";
 * `ablate_csv` is a comma-separated subset of
 * no_self_update,no_rec,no_trans,no_attn (NULL or "" for none). */

SLAK_API slak_status slak_gen_synth(const char* spec_path, const char* out_dir);
SLAK_API slak_status slak_run(const char* config_path, const char* data_dir, const char* out_dir,
                              const char* round, int mock_agents, const char* ablate_csv);
SLAK_API slak_status slak_search(const char* algo, const char* config_path, const char* data_dir,
                                 const char* out_dir);
SLAK_API slak_status slak_report(const char* run_dir);

#ifdef __cplusplus
}
#endif

#endif /* SLAK_H */
