#include "kgdiff.h"

#include <cstring>
#include <map>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "kgdiff/diff.hpp"
#include "kgdiff/embedding.hpp"
#include "kgdiff/error.hpp"
#include "kgdiff/json_io.hpp"
#include "kgdiff/kg_client.hpp"
#include "kgdiff/overview.hpp"
#include "kgdiff/server.hpp"
#include "kgdiff/sparql_gen.hpp"
#include "kgdiff/triple_store.hpp"

using nlohmann::json;

struct kgd_ontology {
    kgdiff::Ontology value;
};
struct kgd_graph {
    kgdiff::PrototypeGraph value;
};
struct kgd_source {
    std::unique_ptr<kgdiff::LocalEndpoint> local;
    std::string url;
    std::chrono::milliseconds timeout{30000};
};
struct kgd_server {
    std::unique_ptr<kgdiff::Server> value;
};

namespace {

thread_local std::string last_error;
thread_local std::string last_code;

kgd_status status_for(const std::string& code) {
    static const std::map<std::string, kgd_status> table = {
        {"ParseError", KGD_PARSE_ERROR},
        {"GraphFormatError", KGD_PARSE_ERROR},
        {"SchemaViolationError", KGD_PARSE_ERROR},
        {"CyclicHierarchyError", KGD_VALIDATION_ERROR},
        {"TypeMismatchError", KGD_VALIDATION_ERROR},
        {"PropertyDomainError", KGD_VALIDATION_ERROR},
        {"OperatorKindError", KGD_VALIDATION_ERROR},
        {"InvalidGraphError", KGD_VALIDATION_ERROR},
        {"EmptyGraphError", KGD_VALIDATION_ERROR},
        {"UnrepairableError", KGD_VALIDATION_ERROR},
        {"UnknownClassError", KGD_NOT_FOUND},
        {"UnknownElementError", KGD_NOT_FOUND},
        {"NetworkError", KGD_NETWORK_ERROR},
        {"TimeoutError", KGD_NETWORK_ERROR},
        {"EndpointError", KGD_NETWORK_ERROR},
        {"MalformedResultsError", KGD_NETWORK_ERROR},
        {"EmbedderError", KGD_NETWORK_ERROR},
        {"LmError", KGD_NETWORK_ERROR},
        {"StorageError", KGD_IO_ERROR},
    };
    auto it = table.find(code);
    return it == table.end() ? KGD_QUERY_ERROR : it->second;
}

kgd_status fail(kgd_status s, std::string code, std::string message) {
    last_code = std::move(code);
    last_error = std::move(message);
    return s;
}

template <class F>
kgd_status guard(F&& f) {
    try {
        f();
        last_error.clear();
        last_code.clear();
        return KGD_OK;
    } catch (const kgdiff::Error& e) {
        return fail(status_for(e.code()), e.code(), e.what());
    } catch (const json::exception& e) {
        return fail(KGD_PARSE_ERROR, "ParseError", e.what());
    } catch (const std::invalid_argument& e) {
        return fail(KGD_INVALID_ARGUMENT, "InvalidArgument", e.what());
    } catch (const std::exception& e) {
        return fail(KGD_INTERNAL_ERROR, "InternalError", e.what());
    }
}

char* dup(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.data(), s.size() + 1);
    return out;
}

#define KGD_REQUIRE(cond)                                                                 \
    do {                                                                                  \
        if (!(cond)) return fail(KGD_INVALID_ARGUMENT, "InvalidArgument", "null argument: " #cond); \
    } while (0)

kgdiff::SparqlOptions options(long limit, int expand) {
    kgdiff::SparqlOptions opts;
    if (limit >= 0) opts.limit = static_cast<std::size_t>(limit);
    opts.expand_subclasses = expand != 0;
    return opts;
}

kgdiff::ResultTable run(kgd_source* s, const kgdiff::PrototypeGraph& g, const kgdiff::Ontology& o, long limit,
                        int expand) {
    auto q = kgdiff::generate_select(g, o, options(limit, expand));
    return kgdiff::execute(s->url, q.text, s->timeout);
}

}  // namespace

extern "C" {

const char* kgd_version(void) { return "0.1.0"; }
const char* kgd_last_error(void) { return last_error.c_str(); }
const char* kgd_last_error_code(void) { return last_code.c_str(); }
void kgd_string_free(char* s) { std::free(s); }

kgd_status kgd_ontology_load_file(const char* path, const char* format, kgd_ontology** out) {
    KGD_REQUIRE(path && out);
    return guard([&] {
        auto o = format ? kgdiff::load_ontology_file(path, kgdiff::rdf::parse_format(format))
                        : kgdiff::load_ontology_file(path);
        *out = new kgd_ontology{std::move(o)};
    });
}

kgd_status kgd_ontology_parse(const char* document, size_t length, const char* format, kgd_ontology** out) {
    KGD_REQUIRE(document && out);
    return guard([&] {
        auto fmt = kgdiff::rdf::parse_format(format ? format : "turtle");
        *out = new kgd_ontology{kgdiff::ingest_ontology(std::string_view(document, length), fmt)};
    });
}

void kgd_ontology_free(kgd_ontology* o) { delete o; }

kgd_status kgd_ontology_json(const kgd_ontology* o, int full, char** out) {
    KGD_REQUIRE(o && out);
    return guard([&] {
        json j = kgdiff::ontology_summary(o->value);
        if (full) j.update(kgdiff::ontology_listing(o->value));
        *out = dup(j.dump(2));
    });
}

kgd_status kgd_graph_load_file(const char* path, kgd_graph** out) {
    KGD_REQUIRE(path && out);
    return guard([&] { *out = new kgd_graph{kgdiff::load_graph_file(path)}; });
}

kgd_status kgd_graph_parse(const char* text, size_t length, kgd_graph** out) {
    KGD_REQUIRE(text && out);
    return guard([&] { *out = new kgd_graph{kgdiff::deserialize_graph(std::string_view(text, length))}; });
}

void kgd_graph_free(kgd_graph* g) { delete g; }

kgd_status kgd_graph_serialize(const kgd_graph* g, char** out) {
    KGD_REQUIRE(g && out);
    return guard([&] { *out = dup(kgdiff::serialize_graph(g->value)); });
}

kgd_status kgd_graph_validate(const kgd_graph* g, const kgd_ontology* o, char** out) {
    KGD_REQUIRE(g && o && out);
    return guard([&] { *out = dup(kgdiff::to_json(kgdiff::validate(g->value, o->value)).dump(2)); });
}

kgd_status kgd_sparql_select(const kgd_graph* g, const kgd_ontology* o, long limit, int expand_subclasses,
                             char** out) {
    KGD_REQUIRE(g && o && out);
    return guard([&] { *out = dup(kgdiff::generate_select(g->value, o->value, options(limit, expand_subclasses)).text); });
}

kgd_status kgd_sparql_count(const kgd_graph* g, const kgd_ontology* o, int expand_subclasses, char** out) {
    KGD_REQUIRE(g && o && out);
    return guard([&] { *out = dup(kgdiff::generate_count(g->value, o->value, options(-1, expand_subclasses)).text); });
}

kgd_status kgd_diff_graphs_json(const kgd_graph* left, const kgd_graph* right, char** out) {
    KGD_REQUIRE(left && right && out);
    return guard([&] { *out = dup(kgdiff::to_json(kgdiff::diff_graphs(left->value, right->value)).dump(2)); });
}

kgd_status kgd_diff_report(const kgd_graph* left, const kgd_graph* right, const kgd_ontology* o, char** out) {
    KGD_REQUIRE(left && right && out);
    return guard([&] { *out = dup(kgdiff::diff_report(left->value, right->value, o ? &o->value : nullptr)); });
}

kgd_status kgd_source_open_local(const char* data_path, kgd_source** out) {
    KGD_REQUIRE(data_path && out);
    return guard([&] {
        auto s = std::make_unique<kgd_source>();
        s->local = std::make_unique<kgdiff::LocalEndpoint>(kgdiff::TripleStore::load_file(data_path));
        s->url = s->local->start();
        *out = s.release();
    });
}

kgd_status kgd_source_open_endpoint(const char* url, long timeout_ms, kgd_source** out) {
    KGD_REQUIRE(url && out);
    return guard([&] {
        auto s = std::make_unique<kgd_source>();
        s->url = url;
        if (timeout_ms > 0) s->timeout = std::chrono::milliseconds(timeout_ms);
        *out = s.release();
    });
}

void kgd_source_free(kgd_source* s) { delete s; }

kgd_status kgd_query(kgd_source* s, const kgd_graph* g, const kgd_ontology* o, long limit, int expand_subclasses,
                     int output, char** out) {
    KGD_REQUIRE(s && g && o && out);
    KGD_REQUIRE(output == KGD_OUTPUT_JSON || output == KGD_OUTPUT_CSV);
    return guard([&] {
        auto t = run(s, g->value, o->value, limit, expand_subclasses);
        *out = dup(output == KGD_OUTPUT_CSV ? kgdiff::export_csv(t) : kgdiff::to_json(t).dump(2));
    });
}

kgd_status kgd_instance_diff(kgd_source* s, const kgd_graph* left, const kgd_graph* right, const kgd_ontology* o,
                             long limit, int expand_subclasses, int output, char** out) {
    KGD_REQUIRE(s && left && right && o && out);
    KGD_REQUIRE(output == KGD_OUTPUT_JSON || output == KGD_OUTPUT_CSV);
    return guard([&] {
        auto lt = run(s, left->value, o->value, limit, expand_subclasses);
        auto rt = run(s, right->value, o->value, limit, expand_subclasses);
        auto d = kgdiff::diff_instances(kgdiff::to_instance_graphs(lt, left->value),
                                        kgdiff::to_instance_graphs(rt, right->value));
        *out = dup(output == KGD_OUTPUT_CSV ? kgdiff::export_csv(d) : kgdiff::to_json(d).dump(2));
    });
}

kgd_status kgd_embed_index_build(const kgd_ontology* o, const char* data_dir, const char* embed_url,
                                 const char* model, const char* api_key, char** out) {
    KGD_REQUIRE(o && data_dir && out);
    return guard([&] {
        std::unique_ptr<kgdiff::Embedder> embedder;
        if (embed_url) embedder = std::make_unique<kgdiff::HttpEmbedder>(embed_url, model ? model : "", api_key ? api_key : "");
        else embedder = std::make_unique<kgdiff::HashingEmbedder>();
        auto idx = kgdiff::build_embedding_index(o->value, *embedder, data_dir);
        std::size_t classes = 0, links = 0;
        for (const auto& e : idx.entries) (e.kind == kgdiff::VocabKind::Class ? classes : links)++;
        json j = {{"file", kgdiff::index_path(data_dir, o->value, *embedder).string()},
                  {"model", idx.model},
                  {"dimension", idx.dimension},
                  {"classes", classes},
                  {"links", links}};
        *out = dup(j.dump(2));
    });
}

kgd_status kgd_server_create(const char* config_json, const char* overrides_json, int use_environment,
                             kgd_server** out) {
    KGD_REQUIRE(out);
    return guard([&] {
        kgdiff::ServerConfig config;
        if (use_environment) config.merge_environment();
        if (config_json) config.merge(json::parse(config_json));
        if (overrides_json) config.merge(json::parse(overrides_json));
        *out = new kgd_server{std::make_unique<kgdiff::Server>(std::move(config))};
    });
}

kgd_status kgd_server_bind(kgd_server* s, int* port) {
    KGD_REQUIRE(s);
    return guard([&] {
        int p = s->value->bind();
        if (port) *port = p;
    });
}

kgd_status kgd_server_run(kgd_server* s) {
    KGD_REQUIRE(s);
    return guard([&] { s->value->listen(); });
}

kgd_status kgd_server_stop(kgd_server* s) {
    KGD_REQUIRE(s);
    return guard([&] { s->value->stop(); });
}

void kgd_server_free(kgd_server* s) { delete s; }

}  // extern "C"
