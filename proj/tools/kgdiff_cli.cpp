// Command-line front end. Talks to the library only through kgdiff.h.

#include <csignal>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "kgdiff.h"

namespace {

struct Failure {
    int exit_code;
};

void check(kgd_status s) {
    if (s == KGD_OK) return;
    std::cerr << "kgdiff: " << kgd_last_error_code() << ": " << kgd_last_error() << "\n";
    throw Failure{static_cast<int>(s) + 1};
}

template <class T, void (*Free)(T*)>
struct Handle {
    T* p = nullptr;
    Handle() = default;
    Handle(const Handle&) = delete;
    ~Handle() { Free(p); }
    T** out() { return &p; }
    operator T*() const { return p; }
};

using Ontology = Handle<kgd_ontology, kgd_ontology_free>;
using Graph = Handle<kgd_graph, kgd_graph_free>;
using Source = Handle<kgd_source, kgd_source_free>;

struct Text {
    char* p = nullptr;
    ~Text() { kgd_string_free(p); }
    char** out() { return &p; }
};

void emit(const Text& t, const std::string& file) {
    if (file.empty() || file == "-") {
        std::cout << t.p;
        if (*t.p && t.p[std::strlen(t.p) - 1] != '\n') std::cout << "\n";
        return;
    }
    std::ofstream out(file, std::ios::binary);
    if (!out) {
        std::cerr << "kgdiff: cannot write " << file << "\n";
        throw Failure{8};
    }
    out << t.p;
}

kgd_server* running_server = nullptr;

void on_signal(int) {
    if (running_server) kgd_server_stop(running_server);
}

void open_source(Source& src, const std::string& endpoint, const std::string& local, long timeout_ms) {
    if (!endpoint.empty() == !local.empty()) {
        std::cerr << "kgdiff: give exactly one of --endpoint or --local\n";
        throw Failure{2};
    }
    if (!local.empty()) check(kgd_source_open_local(local.c_str(), src.out()));
    else check(kgd_source_open_endpoint(endpoint.c_str(), timeout_ms, src.out()));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Visual-query prototyping with graph and result diffs over SPARQL knowledge graphs"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kgd_version()));

    std::string ontology_path, format, output, endpoint, local, config, left, right;
    long limit = 1000, timeout_ms = 30000;
    bool expand = false, csv = false, full = false;
    int port = -1;

    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    serve->add_option("--config", config, "JSON configuration file");
    serve->add_option("--port", port, "Listening port (0 picks one)");

    auto* ingest = app.add_subcommand("ingest", "Parse an ontology and print its summary");
    ingest->add_option("ontology", ontology_path, "Turtle or N-Triples file")->required();
    ingest->add_option("--format", format, "turtle or ntriples (default: from extension)");
    ingest->add_flag("--full", full, "List every class, link and property");
    ingest->add_option("-o,--output", output, "Write to file instead of stdout");

    std::string data_dir = "kgdiff-data", embed_url, embed_model, embed_key;
    auto* embed = app.add_subcommand("embed", "Build the ontology embedding index");
    embed->add_option("ontology", ontology_path)->required();
    embed->add_option("--data-dir", data_dir);
    embed->add_option("--embed-url", embed_url, "Embeddings API base URL (default: built-in hashing embedder)");
    embed->add_option("--model", embed_model);
    embed->add_option("--api-key", embed_key)->envname("KGDIFF_EMBED_API_KEY");

    std::string graph_path;
    auto* sparql = app.add_subcommand("sparql", "Print the SPARQL query of a graph file");
    sparql->add_option("graph", graph_path)->required();
    sparql->add_option("--ontology", ontology_path)->required();
    sparql->add_option("--limit", limit, "Negative for no LIMIT");
    sparql->add_flag("--expand-subclasses", expand);
    bool count = false;
    sparql->add_flag("--count", count, "Emit the COUNT query");

    auto* diff = app.add_subcommand("diff", "Compare two graph files");
    diff->add_option("left", left)->required();
    diff->add_option("right", right)->required();
    diff->add_option("--ontology", ontology_path, "Adds labels to the report");
    bool diff_json = false;
    diff->add_flag("--json", diff_json, "Structured output");
    diff->add_option("-o,--output", output);

    auto* query = app.add_subcommand("query", "Run a graph file against a data source");
    query->add_option("graph", graph_path)->required();
    query->add_option("--ontology", ontology_path)->required();
    query->add_option("--endpoint", endpoint, "SPARQL endpoint URL");
    query->add_option("--local", local, "RDF data file served in-process");
    query->add_option("--limit", limit);
    query->add_option("--timeout-ms", timeout_ms);
    query->add_flag("--expand-subclasses", expand);
    query->add_flag("--csv", csv);
    query->add_option("-o,--output", output);

    auto* exp = app.add_subcommand("export", "Write results or an instance diff as CSV");
    exp->add_option("left", left)->required();
    exp->add_option("right", right, "Second graph; switches to an instance diff");
    exp->add_option("--ontology", ontology_path)->required();
    exp->add_option("--endpoint", endpoint);
    exp->add_option("--local", local);
    exp->add_option("--limit", limit);
    exp->add_option("--timeout-ms", timeout_ms);
    exp->add_flag("--expand-subclasses", expand);
    exp->add_option("-o,--output", output);

    CLI11_PARSE(app, argc, argv);

    try {
        auto load_ontology = [&](Ontology& o) {
            check(kgd_ontology_load_file(ontology_path.c_str(), format.empty() ? nullptr : format.c_str(), o.out()));
        };
        if (*serve) {
            std::string json = "{}";
            if (!config.empty()) {
                std::ifstream in(config);
                if (!in) {
                    std::cerr << "kgdiff: cannot read " << config << "\n";
                    return 2;
                }
                std::stringstream ss;
                ss << in.rdbuf();
                json = ss.str();
            }
            // a command-line port wins over the file and the environment
            std::string overrides = port >= 0 ? "{\"port\":" + std::to_string(port) + "}" : "{}";
            kgd_server* server = nullptr;
            check(kgd_server_create(json.c_str(), overrides.c_str(), 1, &server));
            std::unique_ptr<kgd_server, void (*)(kgd_server*)> owner(server, kgd_server_free);
            int bound = 0;
            check(kgd_server_bind(server, &bound));
            std::cerr << "kgdiff: listening on port " << bound << "\n";
            running_server = server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            check(kgd_server_run(server));
            running_server = nullptr;
        } else if (*ingest) {
            Ontology o;
            load_ontology(o);
            Text t;
            check(kgd_ontology_json(o, full ? 1 : 0, t.out()));
            emit(t, output);
        } else if (*embed) {
            Ontology o;
            load_ontology(o);
            Text t;
            check(kgd_embed_index_build(o, data_dir.c_str(), embed_url.empty() ? nullptr : embed_url.c_str(),
                                        embed_model.c_str(), embed_key.c_str(), t.out()));
            emit(t, "");
        } else if (*sparql) {
            Ontology o;
            load_ontology(o);
            Graph g;
            check(kgd_graph_load_file(graph_path.c_str(), g.out()));
            Text t;
            if (count) check(kgd_sparql_count(g, o, expand, t.out()));
            else check(kgd_sparql_select(g, o, limit, expand, t.out()));
            emit(t, "");
        } else if (*diff) {
            Graph l, r;
            check(kgd_graph_load_file(left.c_str(), l.out()));
            check(kgd_graph_load_file(right.c_str(), r.out()));
            Ontology o;
            if (!ontology_path.empty()) load_ontology(o);
            Text t;
            if (diff_json) check(kgd_diff_graphs_json(l, r, t.out()));
            else check(kgd_diff_report(l, r, o, t.out()));
            emit(t, output);
        } else if (*query) {
            Ontology o;
            load_ontology(o);
            Graph g;
            check(kgd_graph_load_file(graph_path.c_str(), g.out()));
            Source src;
            open_source(src, endpoint, local, timeout_ms);
            Text t;
            check(kgd_query(src, g, o, limit, expand, csv ? KGD_OUTPUT_CSV : KGD_OUTPUT_JSON, t.out()));
            emit(t, output);
        } else if (*exp) {
            Ontology o;
            load_ontology(o);
            Graph l;
            check(kgd_graph_load_file(left.c_str(), l.out()));
            Source src;
            open_source(src, endpoint, local, timeout_ms);
            Text t;
            if (right.empty()) {
                check(kgd_query(src, l, o, limit, expand, KGD_OUTPUT_CSV, t.out()));
            } else {
                Graph r;
                check(kgd_graph_load_file(right.c_str(), r.out()));
                check(kgd_instance_diff(src, l, r, o, limit, expand, KGD_OUTPUT_CSV, t.out()));
            }
            emit(t, output);
        }
    } catch (const Failure& f) {
        return f.exit_code;
    }
    return 0;
}
