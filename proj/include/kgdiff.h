#ifndef KGDIFF_H
#define KGDIFF_H

/* C interface to libkgdiff. Every function returns a kgd_status; on failure
 * kgd_last_error() and kgd_last_error_code() describe the error for the
 * calling thread. Strings returned through `char** out` are owned by the
 * caller and released with kgd_string_free(). */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define KGD_API __declspec(dllexport)
#else
#define KGD_API __attribute__((visibility("default")))
#endif

typedef enum kgd_status {
    KGD_OK = 0,
    KGD_INVALID_ARGUMENT = 1, /* null pointer, bad option */
    KGD_PARSE_ERROR = 2,      /* malformed RDF, graph file or JSON */
    KGD_VALIDATION_ERROR = 3, /* graph or change set violates the ontology */
    KGD_NOT_FOUND = 4,        /* unknown element, class or file */
    KGD_NETWORK_ERROR = 5,    /* endpoint unreachable, bad status, timeout */
    KGD_QUERY_ERROR = 6,      /* results cannot be compared or charted */
    KGD_IO_ERROR = 7,
    KGD_INTERNAL_ERROR = 8
} kgd_status;

typedef struct kgd_ontology kgd_ontology;
typedef struct kgd_graph kgd_graph;
typedef struct kgd_source kgd_source;
typedef struct kgd_server kgd_server;

KGD_API const char* kgd_version(void);
KGD_API const char* kgd_last_error(void);
/* Library error name, e.g. "TypeMismatchError". */
KGD_API const char* kgd_last_error_code(void);
KGD_API void kgd_string_free(char* s);

/* format: "turtle", "ntriples" or NULL to infer from the extension. */
KGD_API kgd_status kgd_ontology_load_file(const char* path, const char* format, kgd_ontology** out);
KGD_API kgd_status kgd_ontology_parse(const char* document, size_t length, const char* format, kgd_ontology** out);
KGD_API void kgd_ontology_free(kgd_ontology* o);
/* {"id", "classes", "links", "properties", "warnings"}; full=1 lists every definition. */
KGD_API kgd_status kgd_ontology_json(const kgd_ontology* o, int full, char** out);

KGD_API kgd_status kgd_graph_load_file(const char* path, kgd_graph** out);
KGD_API kgd_status kgd_graph_parse(const char* text, size_t length, kgd_graph** out);
KGD_API void kgd_graph_free(kgd_graph* g);
KGD_API kgd_status kgd_graph_serialize(const kgd_graph* g, char** out);
/* JSON array of violations; "[]" when the graph is valid. */
KGD_API kgd_status kgd_graph_validate(const kgd_graph* g, const kgd_ontology* o, char** out);

/* limit < 0: no LIMIT clause. */
KGD_API kgd_status kgd_sparql_select(const kgd_graph* g, const kgd_ontology* o, long limit, int expand_subclasses,
                                     char** out);
KGD_API kgd_status kgd_sparql_count(const kgd_graph* g, const kgd_ontology* o, int expand_subclasses, char** out);

KGD_API kgd_status kgd_diff_graphs_json(const kgd_graph* left, const kgd_graph* right, char** out);
/* o may be NULL; labels are then omitted. */
KGD_API kgd_status kgd_diff_report(const kgd_graph* left, const kgd_graph* right, const kgd_ontology* o, char** out);

/* A data source: a local RDF file served in-process, or a remote endpoint. */
KGD_API kgd_status kgd_source_open_local(const char* data_path, kgd_source** out);
KGD_API kgd_status kgd_source_open_endpoint(const char* url, long timeout_ms, kgd_source** out);
KGD_API void kgd_source_free(kgd_source* s);

enum { KGD_OUTPUT_JSON = 0, KGD_OUTPUT_CSV = 1 };

KGD_API kgd_status kgd_query(kgd_source* s, const kgd_graph* g, const kgd_ontology* o, long limit,
                             int expand_subclasses, int output, char** out);
KGD_API kgd_status kgd_instance_diff(kgd_source* s, const kgd_graph* left, const kgd_graph* right,
                                     const kgd_ontology* o, long limit, int expand_subclasses, int output, char** out);

/* Builds (or loads the cached) embedding index in data_dir. embed_url NULL
 * uses the built-in hashing embedder. Writes a JSON summary. */
KGD_API kgd_status kgd_embed_index_build(const kgd_ontology* o, const char* data_dir, const char* embed_url,
                                         const char* model, const char* api_key, char** out);

/* Configuration layers, later ones winning: KGDIFF_* environment variables
 * (when use_environment is non-zero), config_json, overrides_json. Both JSON
 * arguments take ServerConfig keys and may be NULL. */
KGD_API kgd_status kgd_server_create(const char* config_json, const char* overrides_json, int use_environment,
                                     kgd_server** out);
KGD_API kgd_status kgd_server_bind(kgd_server* s, int* port);
/* Blocks until kgd_server_stop() is called from another thread. */
KGD_API kgd_status kgd_server_run(kgd_server* s);
KGD_API kgd_status kgd_server_stop(kgd_server* s);
KGD_API void kgd_server_free(kgd_server* s);

#ifdef __cplusplus
}
#endif

#endif
