#include "kgdiff/server.hpp"

#include <httplib.h>

#include <cstdlib>
#include <deque>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "kgdiff/error.hpp"
#include "kgdiff/json_io.hpp"
#include "kgdiff/kg_client.hpp"
#include "kgdiff/live_feedback.hpp"
#include "kgdiff/sparql_gen.hpp"

namespace kgdiff {

using nlohmann::json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration

void ServerConfig::merge(const json& j) {
    auto str = [&](const char* key, std::string& out) {
        if (j.contains(key)) out = j.at(key).get<std::string>();
    };
    if (j.contains("data_dir")) data_dir = j.at("data_dir").get<std::string>();
    str("host", host);
    if (j.contains("port")) port = j.at("port").get<int>();
    str("sparql_endpoint", sparql_endpoint);
    str("lm_url", lm_url);
    str("lm_model", lm_model);
    str("lm_api_key", lm_api_key);
    str("embed_url", embed_url);
    str("embed_model", embed_model);
    str("embed_api_key", embed_api_key);
    str("cors_origin", cors_origin);
    if (j.contains("mock_models")) mock_models = j.at("mock_models").get<bool>();
    if (j.contains("instance_limit")) instance_limit = j.at("instance_limit").get<std::size_t>();
    if (j.contains("distribution_limit")) distribution_limit = j.at("distribution_limit").get<std::size_t>();
    if (j.contains("expand_subclasses")) expand_subclasses = j.at("expand_subclasses").get<bool>();
    if (j.contains("debounce_ms")) debounce = std::chrono::milliseconds(j.at("debounce_ms").get<long>());
    if (j.contains("query_timeout_ms")) query_timeout = std::chrono::milliseconds(j.at("query_timeout_ms").get<long>());
    if (j.contains("few_shot")) few_shot = j.at("few_shot").get<std::string>();
}

void ServerConfig::merge_environment() {
    auto env = [](const char* name) -> std::optional<std::string> {
        const char* v = std::getenv(name);
        if (!v || !*v) return std::nullopt;
        return std::string(v);
    };
    if (auto file = env("KGDIFF_CONFIG")) {
        try {
            merge(json::parse(read_file(*file)));
        } catch (const json::exception& e) {
            throw StorageError("bad config file " + *file + ": " + e.what());
        }
    }
    json j = json::object();
    const std::pair<const char*, const char*> strings[] = {
        {"KGDIFF_DATA_DIR", "data_dir"},       {"KGDIFF_HOST", "host"},
        {"KGDIFF_SPARQL_ENDPOINT", "sparql_endpoint"}, {"KGDIFF_LM_URL", "lm_url"},
        {"KGDIFF_LM_MODEL", "lm_model"},       {"KGDIFF_LM_API_KEY", "lm_api_key"},
        {"KGDIFF_EMBED_URL", "embed_url"},     {"KGDIFF_EMBED_MODEL", "embed_model"},
        {"KGDIFF_EMBED_API_KEY", "embed_api_key"}, {"KGDIFF_CORS_ORIGIN", "cors_origin"}};
    for (const auto& [var, key] : strings)
        if (auto v = env(var)) j[key] = *v;
    if (auto v = env("KGDIFF_PORT")) j["port"] = std::stoi(*v);
    if (auto v = env("KGDIFF_EXPAND_SUBCLASSES")) j["expand_subclasses"] = (*v == "1" || *v == "true");
    if (auto v = env("KGDIFF_MOCK_MODELS")) j["mock_models"] = (*v == "1" || *v == "true");
    merge(j);
}

// ---------------------------------------------------------------------------

namespace {

class HttpError : public Error {
public:
    HttpError(int status, std::string code, const std::string& message)
        : Error(std::move(code), message), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

int status_for(const Error& e) {
    if (const auto* h = dynamic_cast<const HttpError*>(&e)) return h->status();
    static const std::map<std::string, int> table = {
        {"UnknownElementError", 404}, {"UnknownClassError", 400},   {"NetworkError", 502},
        {"EndpointError", 502},       {"MalformedResultsError", 502}, {"TimeoutError", 504},
        {"LmError", 502},             {"EmbedderError", 502},       {"StorageError", 500},
        {"UnrepairableError", 500},   {"SchemaViolationError", 502}};
    auto it = table.find(e.code());
    return it == table.end() ? 400 : it->second;
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    send_json(res, {{"error", {{"code", code}, {"message", message}}}}, status);
}

json body_json(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw HttpError(400, "BadRequest", std::string("request body is not JSON: ") + e.what());
    }
}

std::string random_id() {
    static std::mutex m;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(m);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
    return buf;
}

void write_atomically(const fs::path& file, const std::string& content) {
    std::error_code ec;
    fs::create_directories(file.parent_path(), ec);
    fs::path tmp = file;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StorageError("cannot write " + tmp.string());
        out << content;
        if (!out) throw StorageError("failed writing " + tmp.string());
    }
    fs::rename(tmp, file, ec);
    if (ec) throw StorageError("cannot replace " + file.string() + ": " + ec.message());
}

std::vector<SubQueryId> parse_ids(const std::string& list) {
    std::vector<SubQueryId> out;
    std::size_t start = 0;
    while (start <= list.size()) {
        auto end = list.find(',', start);
        if (end == std::string::npos) end = list.size();
        std::string item = list.substr(start, end - start);
        if (!item.empty()) {
            try {
                out.push_back(SubQueryId{std::stoull(item)});
            } catch (const std::exception&) {
                throw HttpError(400, "BadRequest", "not a sub-query id: " + item);
            }
        }
        start = end + 1;
    }
    return out;
}

struct SessionSettings {
    std::string endpoint;
    std::size_t instance_limit = 1000;
    std::size_t distribution_limit = 100000;
    bool expand_subclasses = false;
    bool colorblind = false;
    long timeout_ms = 30000;
    OverviewOptions overview;

    json to_json() const {
        return {{"endpoint", endpoint},
                {"instance_limit", instance_limit},
                {"distribution_limit", distribution_limit},
                {"expand_subclasses", expand_subclasses},
                {"colorblind", colorblind},
                {"timeout_ms", timeout_ms},
                {"buckets", overview.buckets},
                {"top_k", overview.top_k},
                {"heatmap_threshold", overview.heatmap_threshold},
                {"grid", overview.grid}};
    }

    void merge(const json& j) {
        if (!j.is_object()) throw HttpError(400, "BadRequest", "settings must be an object");
        try {
            if (j.contains("endpoint")) endpoint = j.at("endpoint").get<std::string>();
            if (j.contains("instance_limit")) instance_limit = j.at("instance_limit").get<std::size_t>();
            if (j.contains("distribution_limit")) distribution_limit = j.at("distribution_limit").get<std::size_t>();
            if (j.contains("expand_subclasses")) expand_subclasses = j.at("expand_subclasses").get<bool>();
            if (j.contains("colorblind")) colorblind = j.at("colorblind").get<bool>();
            if (j.contains("timeout_ms")) timeout_ms = j.at("timeout_ms").get<long>();
            if (j.contains("buckets")) overview.buckets = j.at("buckets").get<std::size_t>();
            if (j.contains("top_k")) overview.top_k = j.at("top_k").get<std::size_t>();
            if (j.contains("heatmap_threshold")) overview.heatmap_threshold = j.at("heatmap_threshold").get<std::size_t>();
            if (j.contains("grid")) overview.grid = j.at("grid").get<std::size_t>();
        } catch (const json::exception& e) {
            throw HttpError(400, "BadRequest", std::string("bad settings: ") + e.what());
        }
        if (overview.buckets == 0 || overview.top_k == 0 || overview.grid == 0)
            throw HttpError(400, "BadRequest", "buckets, top_k and grid must be positive");
    }
};

struct Pending {
    std::string request;
    std::uint64_t base_version = 0;
    Proposal proposal;
};

struct Session {
    std::string id;
    std::string ontology_id;
    std::shared_ptr<const Ontology> ontology;
    SessionSettings settings;
    PrototypeGraph graph;
    std::map<std::string, PrototypeGraph> snapshots;
    std::optional<Pending> pending;
    std::mutex mutex;
    std::unique_ptr<LiveFeedback> feedback;
};

json proposal_json(const Pending& p) {
    const auto& pr = p.proposal;
    json cands = {{"classes", json::array()}, {"links", json::array()}};
    for (const auto& c : pr.candidates.classes) cands["classes"].push_back({{"id", c.id}, {"score", c.score}});
    for (const auto& c : pr.candidates.links) cands["links"].push_back({{"id", c.id}, {"score", c.score}});
    json refs = json::object();
    for (const auto& [ref, id] : pr.applied.refs) refs[ref] = id.value;
    return {{"request", p.request},
            {"base_version_tag", "v" + std::to_string(p.base_version)},
            {"raw", changeset_to_json(pr.raw)},
            {"changeset", changeset_to_json(pr.repaired.changeset)},
            {"report", to_json(pr.repaired.report)},
            {"candidates", cands},
            {"refs", refs},
            {"diff", to_json(pr.applied.diff)},
            {"graph", graph_to_json(pr.applied.graph)},
            {"version_tag", pr.applied.graph.version_tag()}};
}

json feedback_json(const FeedbackEvent& e) {
    json j = {{"version_tag", e.version_tag}};
    if (e.type == FeedbackEvent::Type::Count) j["count"] = e.count;
    else j["error"] = {{"code", e.code}, {"message", e.message}};
    return j;
}

}  // namespace

// ---------------------------------------------------------------------------

struct Server::Impl {
    ServerConfig config;
    httplib::Server http;
    std::thread thread;
    int port = -1;
    std::atomic<bool> stopping{false};

    std::mutex registry_mutex;  // guards the maps below (not session contents)
    std::map<std::string, std::shared_ptr<const Ontology>> ontologies;
    std::map<std::string, std::shared_ptr<Session>> sessions;

    std::mutex nl_mutex;
    std::shared_ptr<Embedder> embedder;
    std::shared_ptr<LanguageModel> lm;
    std::map<std::string, std::shared_ptr<const EmbeddingIndex>> indexes;
    std::vector<FewShotExample> few_shot;
    std::unique_ptr<AuditLog> audit;

    explicit Impl(ServerConfig c) : config(std::move(c)) {
        std::error_code ec;
        fs::create_directories(config.data_dir / "ontologies", ec);
        fs::create_directories(config.data_dir / "sessions", ec);
        if (config.mock_models) embedder = std::make_shared<HashingEmbedder>();
        if (!config.embed_url.empty())
            embedder = std::make_shared<HttpEmbedder>(config.embed_url, config.embed_model, config.embed_api_key);
        if (!config.lm_url.empty())
            lm = std::make_shared<HttpLanguageModel>(config.lm_url, config.lm_model, config.lm_api_key);
        fs::path shots = config.few_shot.empty() ? default_few_shot_path() : config.few_shot;
        if (fs::exists(shots)) few_shot = load_few_shot(shots);
        audit = std::make_unique<AuditLog>(config.data_dir / "audit" / "nl.jsonl");
        load_state();
        routes();
    }

    // -- persistence -------------------------------------------------------

    fs::path ontology_file(const std::string& id) const { return config.data_dir / "ontologies" / (id + ".json"); }
    fs::path session_file(const std::string& id) const { return config.data_dir / "sessions" / (id + ".json"); }

    std::shared_ptr<const Ontology> load_ontology(const std::string& id) {
        {
            std::lock_guard lock(registry_mutex);
            auto it = ontologies.find(id);
            if (it != ontologies.end()) return it->second;
        }
        if (id.find_first_not_of("0123456789abcdef") != std::string::npos || !fs::exists(ontology_file(id)))
            throw HttpError(404, "UnknownOntology", "no ontology with id " + id);
        json doc = json::parse(read_file(ontology_file(id)));
        auto o = std::make_shared<const Ontology>(
            ingest_ontology(doc.at("document").get<std::string>(), rdf::parse_format(doc.at("format").get<std::string>())));
        std::lock_guard lock(registry_mutex);
        return ontologies.emplace(id, o).first->second;
    }

    void save_session(const Session& s) {
        json snaps = json::object();
        for (const auto& [tag, g] : s.snapshots) snaps[tag] = graph_to_json(g);
        json pending = nullptr;
        if (s.pending)
            pending = {{"request", s.pending->request},
                       {"base_version", s.pending->base_version},
                       {"raw", changeset_to_json(s.pending->proposal.raw)},
                       {"changeset", changeset_to_json(s.pending->proposal.repaired.changeset)},
                       {"report", to_json(s.pending->proposal.repaired.report)}};
        json doc = {{"id", s.id},
                    {"ontology", s.ontology_id},
                    {"settings", s.settings.to_json()},
                    {"graph", graph_to_json(s.graph)},
                    {"snapshots", snaps},
                    {"pending", pending}};
        write_atomically(session_file(s.id), doc.dump(2));
    }

    void load_state() {
        for (const auto& entry : fs::directory_iterator(config.data_dir / "sessions")) {
            if (entry.path().extension() != ".json") continue;
            try {
                json doc = json::parse(read_file(entry.path()));
                auto s = std::make_shared<Session>();
                s->id = doc.at("id").get<std::string>();
                s->ontology_id = doc.at("ontology").get<std::string>();
                s->ontology = load_ontology(s->ontology_id);
                s->settings.merge(doc.at("settings"));
                s->graph = deserialize_graph(doc.at("graph").dump());
                for (const auto& [tag, g] : doc.at("snapshots").items()) s->snapshots.emplace(tag, deserialize_graph(g.dump()));
                if (!doc.at("pending").is_null()) {
                    const json& p = doc.at("pending");
                    Pending pending;
                    pending.request = p.at("request").get<std::string>();
                    pending.base_version = p.at("base_version").get<std::uint64_t>();
                    pending.proposal.base_version = pending.base_version;
                    pending.proposal.raw = changeset_from_json(p.at("raw"));
                    pending.proposal.repaired.changeset = changeset_from_json(p.at("changeset"));
                    for (const auto& r : p.at("report")) {
                        const std::string action = r.at("action").get<std::string>();
                        auto kind = action == "synthesized" ? RepairAction::Kind::Synthesized
                                    : action == "flipped"   ? RepairAction::Kind::Flipped
                                                            : RepairAction::Kind::Dropped;
                        pending.proposal.repaired.report.push_back({kind, r.at("detail").get<std::string>()});
                    }
                    if (s->graph.version() == pending.base_version)
                        pending.proposal.applied = apply_changeset(s->graph, *s->ontology, pending.proposal.repaired.changeset);
                    s->pending = std::move(pending);
                }
                attach_feedback(*s);
                sessions.emplace(s->id, s);
            } catch (const std::exception& e) {
                throw StorageError("cannot restore session from " + entry.path().string() + ": " + e.what());
            }
        }
    }

    // -- helpers -----------------------------------------------------------

    void attach_feedback(Session& s) {
        Session* sp = &s;
        s.feedback = std::make_unique<LiveFeedback>(
            [this, sp](const PrototypeGraph& g) -> std::size_t {
                SessionSettings settings;
                {
                    std::lock_guard lock(sp->mutex);
                    settings = sp->settings;
                }
                if (settings.endpoint.empty()) throw HttpError(400, "NoEndpoint", "the session has no SPARQL endpoint");
                SparqlOptions opts;
                opts.expand_subclasses = settings.expand_subclasses;
                auto q = generate_count(g, *sp->ontology, opts);
                return execute_count(settings.endpoint, q.text, std::chrono::milliseconds(settings.timeout_ms));
            },
            config.debounce);
    }

    std::shared_ptr<Session> session(const httplib::Request& req) {
        const std::string id = req.path_params.at("id");
        std::lock_guard lock(registry_mutex);
        auto it = sessions.find(id);
        if (it == sessions.end()) throw HttpError(404, "UnknownSession", "no session with id " + id);
        return it->second;
    }

    static const PrototypeGraph& graph_ref(const Session& s, const std::string& tag) {
        if (tag.empty() || tag == "current") return s.graph;
        auto it = s.snapshots.find(tag);
        if (it == s.snapshots.end()) throw HttpError(404, "UnknownSnapshot", "no snapshot tagged '" + tag + "'");
        return it->second;
    }

    static std::string param(const httplib::Request& req, const char* name, std::string fallback = {}) {
        return req.has_param(name) ? req.get_param_value(name) : fallback;
    }

    static ResultTable run_select(const SessionSettings& settings, const Ontology& o, const PrototypeGraph& g,
                                  std::optional<std::size_t> limit) {
        if (settings.endpoint.empty()) throw HttpError(400, "NoEndpoint", "the session has no SPARQL endpoint");
        SparqlOptions opts;
        opts.limit = limit;
        opts.expand_subclasses = settings.expand_subclasses;
        auto q = generate_select(g, o, opts);
        return execute(settings.endpoint, q.text, std::chrono::milliseconds(settings.timeout_ms));
    }

    std::shared_ptr<const EmbeddingIndex> index_for(const std::string& ontology_id, const Ontology& o) {
        std::lock_guard lock(nl_mutex);
        if (!embedder) throw HttpError(503, "NotConfigured", "no embedding provider is configured");
        auto key = ontology_id + "|" + embedder->model_id();
        auto it = indexes.find(key);
        if (it != indexes.end()) return it->second;
        auto idx = std::make_shared<const EmbeddingIndex>(build_embedding_index(o, *embedder, config.data_dir / "embeddings"));
        return indexes.emplace(key, idx).first->second;
    }

    // Runs `f` on a session under its lock, then persists and notifies feedback.
    template <class F>
    json mutate(Session& s, F&& f) {
        std::lock_guard lock(s.mutex);
        json out = f();
        save_session(s);
        s.feedback->notify(s.graph);
        return out;
    }

    json graph_state(const Session& s) const {
        return {{"version_tag", s.graph.version_tag()},
                {"graph", graph_to_json(s.graph)},
                {"violations", to_json(validate(s.graph, *s.ontology))},
                {"pending_proposal", s.pending.has_value()}};
    }

    // -- routes ------------------------------------------------------------

    using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

    Handler guarded(Handler h) {
        return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
            try {
                h(req, res);
            } catch (const Error& e) {
                send_error(res, status_for(e), e.code(), e.what());
            } catch (const json::exception& e) {
                send_error(res, 400, "BadRequest", e.what());
            } catch (const std::out_of_range& e) {
                send_error(res, 400, "BadRequest", e.what());
            } catch (const std::exception& e) {
                send_error(res, 500, "InternalError", e.what());
            }
        };
    }

    void routes() {
        http.new_task_queue = [] { return new httplib::ThreadPool(16); };
        http.set_default_headers({{"Access-Control-Allow-Origin", config.cors_origin},
                                  {"Access-Control-Allow-Headers", "Content-Type"},
                                  {"Access-Control-Allow-Methods", "GET, POST, PUT, PATCH, DELETE, OPTIONS"}});
        http.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

        http.Get("/health", guarded([](const httplib::Request&, httplib::Response& res) {
            send_json(res, {{"status", "ok"}});
        }));

        // ontologies
        http.Post("/ontologies", guarded([this](const httplib::Request& req, httplib::Response& res) {
            std::string document, format = "turtle";
            const std::string type = req.get_header_value("Content-Type");
            if (type.rfind("application/json", 0) == 0) {
                json b = body_json(req);
                document = b.at("document").get<std::string>();
                format = b.value("format", format);
            } else {
                document = req.body;
                if (type.rfind("application/n-triples", 0) == 0) format = "ntriples";
            }
            rdf::Format fmt;
            try {
                fmt = rdf::parse_format(format);
            } catch (const std::invalid_argument& e) {
                throw HttpError(400, "BadRequest", e.what());
            }
            auto o = std::make_shared<const Ontology>(ingest_ontology(document, fmt));
            const std::string id = o->content_hash();
            write_atomically(ontology_file(id), json{{"format", format}, {"document", document}}.dump());
            {
                std::lock_guard lock(registry_mutex);
                ontologies[id] = o;
            }
            send_json(res, ontology_summary(*o), 201);
        }));
        http.Get("/ontologies", guarded([this](const httplib::Request&, httplib::Response& res) {
            json list = json::array();
            for (const auto& entry : fs::directory_iterator(config.data_dir / "ontologies"))
                if (entry.path().extension() == ".json") list.push_back(entry.path().stem().string());
            send_json(res, {{"ontologies", list}});
        }));
        http.Get("/ontologies/:oid", guarded([this](const httplib::Request& req, httplib::Response& res) {
            send_json(res, ontology_listing(*load_ontology(req.path_params.at("oid"))));
        }));
        http.Get("/ontologies/:oid/links", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto o = load_ontology(req.path_params.at("oid"));
            std::string from = param(req, "from", std::string(Ontology::kRoot));
            std::string to = param(req, "to", std::string(Ontology::kRoot));
            json out = json::array();
            for (const auto& l : o->links_between(from, to))
                out.push_back({{"id", l.id}, {"label", l.label}, {"fromtype", l.fromtype}, {"totype", l.totype}});
            send_json(res, {{"links", out}});
        }));
        http.Get("/ontologies/:oid/properties", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto o = load_ontology(req.path_params.at("oid"));
            json out = json::array();
            for (const auto& p : o->properties_of(param(req, "class", std::string(Ontology::kRoot))))
                out.push_back({{"id", p.id}, {"label", p.label}, {"range_kind", to_string(p.range_kind)}});
            send_json(res, {{"properties", out}});
        }));

        // sessions
        http.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
            json b = body_json(req);
            if (!b.contains("ontology")) throw HttpError(400, "BadRequest", "missing 'ontology'");
            auto s = std::make_shared<Session>();
            s->id = random_id();
            s->ontology_id = b.at("ontology").get<std::string>();
            s->ontology = load_ontology(s->ontology_id);
            s->settings.endpoint = config.sparql_endpoint;
            s->settings.instance_limit = config.instance_limit;
            s->settings.distribution_limit = config.distribution_limit;
            s->settings.expand_subclasses = config.expand_subclasses;
            s->settings.timeout_ms = static_cast<long>(config.query_timeout.count());
            if (b.contains("settings")) s->settings.merge(b.at("settings"));
            attach_feedback(*s);
            save_session(*s);
            {
                std::lock_guard lock(registry_mutex);
                sessions.emplace(s->id, s);
            }
            json out = graph_state(*s);
            out["id"] = s->id;
            out["ontology"] = s->ontology_id;
            out["settings"] = s->settings.to_json();
            send_json(res, out, 201);
        }));
        http.Get("/sessions/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            std::lock_guard lock(s->mutex);
            json tags = json::array();
            for (const auto& [tag, g] : s->snapshots) tags.push_back({{"tag", tag}, {"version_tag", g.version_tag()}});
            send_json(res, {{"id", s->id},
                            {"ontology", s->ontology_id},
                            {"settings", s->settings.to_json()},
                            {"version_tag", s->graph.version_tag()},
                            {"snapshots", tags},
                            {"pending_proposal", s->pending.has_value()}});
        }));
        http.Patch("/sessions/:id", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            json b = body_json(req);
            std::lock_guard lock(s->mutex);
            SessionSettings next = s->settings;
            next.merge(b.value("settings", json::object()));
            s->settings = next;
            save_session(*s);
            send_json(res, {{"settings", s->settings.to_json()}, {"version_tag", s->graph.version_tag()}});
        }));

        // graph
        http.Get("/sessions/:id/graph", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            std::lock_guard lock(s->mutex);
            send_json(res, graph_state(*s));
        }));
        http.Put("/sessions/:id/graph", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            json b = body_json(req);
            PrototypeGraph g = deserialize_graph((b.contains("graph") ? b.at("graph") : b).dump());
            auto violations = validate(g, *s->ontology);
            if (!violations.empty())
                throw HttpError(400, "InvalidGraphError", violations.front().message);
            json out = mutate(*s, [&] {
                // keep versions increasing so tags never repeat within a session
                g.set_version(std::max(g.version(), s->graph.version() + 1));
                s->graph = std::move(g);
                return graph_state(*s);
            });
            send_json(res, out);
        }));
        http.Patch("/sessions/:id/graph", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            json b = body_json(req);
            json out = mutate(*s, [&] {
                if (b.contains("expected_version") && b.at("expected_version").get<std::string>() != s->graph.version_tag())
                    throw HttpError(409, "VersionConflict",
                                    "graph is at " + s->graph.version_tag() + ", expected " +
                                        b.at("expected_version").get<std::string>());
                PrototypeGraph work = s->graph;
                json results = apply_ops(work, *s->ontology, b.at("ops"));
                s->graph = std::move(work);
                json state = graph_state(*s);
                state["results"] = results;
                return state;
            });
            send_json(res, out);
        }));

        // snapshots
        http.Get("/sessions/:id/snapshots", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            std::lock_guard lock(s->mutex);
            json tags = json::array();
            for (const auto& [tag, g] : s->snapshots) tags.push_back({{"tag", tag}, {"version_tag", g.version_tag()}});
            send_json(res, {{"snapshots", tags}, {"version_tag", s->graph.version_tag()}});
        }));
        http.Post("/sessions/:id/snapshots/:tag", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            const std::string tag = req.path_params.at("tag");
            if (tag.empty() || tag == "current") throw HttpError(400, "BadRequest", "'current' is reserved");
            std::lock_guard lock(s->mutex);
            s->snapshots[tag] = s->graph.snapshot();
            save_session(*s);
            send_json(res, {{"tag", tag}, {"version_tag", s->graph.version_tag()}}, 201);
        }));
        http.Get("/sessions/:id/snapshots/:tag", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            std::lock_guard lock(s->mutex);
            const auto& g = graph_ref(*s, req.path_params.at("tag"));
            send_json(res, {{"tag", req.path_params.at("tag")}, {"version_tag", g.version_tag()}, {"graph", graph_to_json(g)}});
        }));
        http.Delete("/sessions/:id/snapshots/:tag", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            std::lock_guard lock(s->mutex);
            if (!s->snapshots.erase(req.path_params.at("tag")))
                throw HttpError(404, "UnknownSnapshot", "no snapshot tagged '" + req.path_params.at("tag") + "'");
            save_session(*s);
            send_json(res, {{"version_tag", s->graph.version_tag()}});
        }));

        // diffs
        http.Get("/sessions/:id/diff", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            std::lock_guard lock(s->mutex);
            const auto& left = graph_ref(*s, param(req, "left"));
            const auto& right = graph_ref(*s, param(req, "right"));
            json out = to_json(diff_graphs(left, right));
            out["left_version_tag"] = left.version_tag();
            out["right_version_tag"] = right.version_tag();
            out["version_tag"] = s->graph.version_tag();
            send_json(res, out);
        }));
        http.Get("/sessions/:id/diff/instances", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto [d, left_tag, right_tag, current_tag] = instance_diff(req);
            json out = to_json(d);
            out["left_version_tag"] = left_tag;
            out["right_version_tag"] = right_tag;
            out["version_tag"] = current_tag;
            send_json(res, out);
        }));

        // queries
        http.Get("/sessions/:id/sparql", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            std::lock_guard lock(s->mutex);
            const auto& g = graph_ref(*s, param(req, "graph"));
            SparqlOptions opts;
            opts.expand_subclasses = s->settings.expand_subclasses;
            opts.limit = s->settings.instance_limit;
            const bool count = param(req, "count") == "1" || param(req, "count") == "true";
            auto q = count ? generate_count(g, *s->ontology, opts) : generate_select(g, *s->ontology, opts);
            send_json(res, {{"query", q.text}, {"version_tag", g.version_tag()}});
        }));
        http.Post("/sessions/:id/query", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            json b = body_json(req);
            PrototypeGraph g;
            SessionSettings settings;
            std::string current;
            {
                std::lock_guard lock(s->mutex);
                g = graph_ref(*s, b.value("graph", std::string())).snapshot();
                settings = s->settings;
                current = s->graph.version_tag();
            }
            std::optional<std::size_t> limit = settings.instance_limit;
            if (b.contains("limit")) {
                if (b.at("limit").is_null()) limit.reset();
                else limit = b.at("limit").get<std::size_t>();
            }
            ResultTable t = run_select(settings, *s->ontology, g, limit);
            json out = to_json(t);
            out["version_tag"] = g.version_tag();
            out["current_version_tag"] = current;
            send_json(res, out);
        }));

        // charts
        http.Get("/sessions/:id/chart", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto [chart, tags] = chart_for(req);
            json out = json::parse(chart_to_json(chart));
            out["version_tags"] = tags;
            send_json(res, out);
        }));

        // natural-language proposals
        http.Post("/sessions/:id/nl", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            json b = body_json(req);
            const std::string text = b.at("request").get<std::string>();
            PrototypeGraph base;
            {
                std::lock_guard lock(s->mutex);
                if (s->pending) throw HttpError(409, "ProposalPending", "accept or reject the pending proposal first");
                base = s->graph.snapshot();
            }
            auto index = index_for(s->ontology_id, *s->ontology);
            std::shared_ptr<LanguageModel> model;
            {
                std::lock_guard lock(nl_mutex);
                model = lm;
            }
            if (!model) throw HttpError(503, "NotConfigured", "no language model is configured");
            NlContext ctx;
            ctx.index = index.get();
            ctx.embedder = embedder.get();
            ctx.lm = model.get();
            ctx.few_shot = &few_shot;
            ctx.audit = audit.get();
            ctx.k = b.value("k", kDefaultCandidates);
            Pending p{text, base.version(), propose_changeset(ctx, text, base, *s->ontology)};
            std::lock_guard lock(s->mutex);
            if (s->pending) throw HttpError(409, "ProposalPending", "another proposal arrived first");
            s->pending = std::move(p);
            save_session(*s);
            json out = proposal_json(*s->pending);
            out["current_version_tag"] = s->graph.version_tag();
            send_json(res, out, 201);
        }));
        http.Get("/sessions/:id/nl", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            std::lock_guard lock(s->mutex);
            if (!s->pending) throw HttpError(404, "NoPendingProposal", "no proposal is pending");
            json out = proposal_json(*s->pending);
            out["current_version_tag"] = s->graph.version_tag();
            send_json(res, out);
        }));
        http.Post("/sessions/:id/nl/accept", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            json out = mutate(*s, [&] {
                if (!s->pending) throw HttpError(409, "NoPendingProposal", "no proposal is pending");
                if (s->graph.version() != s->pending->base_version)
                    throw HttpError(409, "StaleProposal",
                                    "the graph changed since the proposal (now " + s->graph.version_tag() + ", proposal for v" +
                                        std::to_string(s->pending->base_version) + ")");
                auto applied = apply_changeset(s->graph, *s->ontology, s->pending->proposal.repaired.changeset);
                s->snapshots["before-nl"] = s->graph.snapshot();
                s->graph = std::move(applied.graph);
                s->pending.reset();
                json state = graph_state(*s);
                state["diff"] = to_json(applied.diff);
                return state;
            });
            send_json(res, out);
        }));
        http.Post("/sessions/:id/nl/reject", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            std::lock_guard lock(s->mutex);
            if (!s->pending) throw HttpError(409, "NoPendingProposal", "no proposal is pending");
            s->pending.reset();
            save_session(*s);
            send_json(res, graph_state(*s));
        }));

        // export
        http.Get("/sessions/:id/export.csv", guarded([this](const httplib::Request& req, httplib::Response& res) {
            const std::string what = param(req, "what", "results");
            std::string csv;
            if (what == "results") {
                auto s = session(req);
                PrototypeGraph g;
                SessionSettings settings;
                {
                    std::lock_guard lock(s->mutex);
                    g = graph_ref(*s, param(req, "graph", param(req, "left"))).snapshot();
                    settings = s->settings;
                }
                csv = export_csv(run_select(settings, *s->ontology, g, settings.instance_limit));
            } else if (what == "instances") {
                csv = export_csv(std::get<0>(instance_diff(req)));
            } else if (what == "chart") {
                csv = export_csv(chart_for(req).first);
            } else {
                throw HttpError(400, "BadRequest", "what must be results, instances or chart");
            }
            res.set_header("Content-Disposition", "attachment; filename=\"" + what + ".csv\"");
            res.set_content(csv, "text/csv; charset=utf-8");
        }));

        // live feedback
        http.Get("/sessions/:id/events", guarded([this](const httplib::Request& req, httplib::Response& res) {
            auto s = session(req);
            struct Queue {
                std::mutex m;
                std::condition_variable cv;
                std::deque<std::string> items;
            };
            auto queue = std::make_shared<Queue>();
            std::string hello;
            {
                std::lock_guard lock(s->mutex);
                hello = "event: hello\ndata: " + json{{"version_tag", s->graph.version_tag()}}.dump() + "\n\n";
            }
            queue->items.push_back(hello);
            auto listener = s->feedback->subscribe([queue](const FeedbackEvent& e) {
                std::string type = e.type == FeedbackEvent::Type::Count ? "count" : "error";
                std::lock_guard lock(queue->m);
                queue->items.push_back("event: " + type + "\ndata: " + feedback_json(e).dump() + "\n\n");
                queue->cv.notify_all();
            });
            res.set_header("Cache-Control", "no-cache");
            res.set_chunked_content_provider(
                "text/event-stream",
                [this, queue](std::size_t, httplib::DataSink& sink) {
                    std::unique_lock lock(queue->m);
                    queue->cv.wait_for(lock, std::chrono::milliseconds(200), [&] { return !queue->items.empty(); });
                    if (stopping) return false;
                    if (queue->items.empty()) return sink.is_writable();
                    while (!queue->items.empty()) {
                        std::string item = std::move(queue->items.front());
                        queue->items.pop_front();
                        if (!sink.write(item.data(), item.size())) return false;
                    }
                    return true;
                },
                [s, listener](bool) { s->feedback->unsubscribe(listener); });
        }));
    }

    json apply_ops(PrototypeGraph& g, const Ontology& o, const json& ops) {
        if (!ops.is_array()) throw HttpError(400, "BadRequest", "'ops' must be an array");
        std::map<std::string, NodeId> refs;
        auto node_ref = [&](const json& j) {
            if (j.is_string()) {
                auto it = refs.find(j.get<std::string>());
                if (it == refs.end()) throw HttpError(400, "BadRequest", "unknown ref '" + j.get<std::string>() + "'");
                return it->second;
            }
            return NodeId{j.get<std::uint64_t>()};
        };
        json results = json::array();
        for (const auto& op : ops) {
            const std::string kind = op.at("op").get<std::string>();
            if (kind == "add_node") {
                NodeId id = g.add_node(o, op.at("class").get<std::string>());
                if (op.contains("ref")) refs[op.at("ref").get<std::string>()] = id;
                results.push_back({{"op", kind}, {"id", id.value}});
            } else if (kind == "add_edge") {
                EdgeId id = g.add_edge(o, node_ref(op.at("tail")), op.at("link").get<std::string>(), node_ref(op.at("head")));
                results.push_back({{"op", kind}, {"id", id.value}});
            } else if (kind == "set_subquery") {
                SubQueryKind sk = subquery_kind_from_string(op.at("kind").get<std::string>());
                std::optional<Condition> cond;
                if (op.contains("condition") && !op.at("condition").is_null()) cond = condition_from_json(op.at("condition"));
                SubQueryId id = g.set_subquery(o, node_ref(op.at("node")), op.at("property").get<std::string>(), sk, cond);
                results.push_back({{"op", kind}, {"id", id.value}});
            } else if (kind == "update_subquery") {
                SubQueryId id{op.at("id").get<std::uint64_t>()};
                g.update_subquery(o, id, condition_from_json(op.at("condition")));
                results.push_back({{"op", kind}, {"id", id.value}});
            } else if (kind == "remove") {
                auto report = g.remove_element(element_kind_from_string(op.at("kind").get<std::string>()),
                                               op.at("id").get<std::uint64_t>());
                json removed = {{"nodes", json::array()}, {"edges", json::array()}, {"subqueries", json::array()}};
                for (auto id : report.nodes) removed["nodes"].push_back(id.value);
                for (auto id : report.edges) removed["edges"].push_back(id.value);
                for (auto id : report.subqueries) removed["subqueries"].push_back(id.value);
                results.push_back({{"op", kind}, {"removed", removed}});
            } else {
                throw HttpError(400, "BadRequest", "unknown op '" + kind + "'");
            }
        }
        return results;
    }

    std::tuple<InstanceDiff, std::string, std::string, std::string> instance_diff(const httplib::Request& req) {
        auto s = session(req);
        PrototypeGraph left, right;
        SessionSettings settings;
        std::string current;
        {
            std::lock_guard lock(s->mutex);
            left = graph_ref(*s, param(req, "left")).snapshot();
            right = graph_ref(*s, param(req, "right")).snapshot();
            settings = s->settings;
            current = s->graph.version_tag();
        }
        auto lt = run_select(settings, *s->ontology, left, settings.instance_limit);
        auto rt = run_select(settings, *s->ontology, right, settings.instance_limit);
        InstanceDiff d = diff_instances(to_instance_graphs(lt, left), to_instance_graphs(rt, right));
        return {std::move(d), left.version_tag(), right.version_tag(), current};
    }

    std::pair<ChartSpec, json> chart_for(const httplib::Request& req) {
        auto s = session(req);
        const auto selected = parse_ids(param(req, "values"));
        const bool overlay = req.has_param("right");
        PrototypeGraph left, right;
        SessionSettings settings;
        {
            std::lock_guard lock(s->mutex);
            left = graph_ref(*s, param(req, "left")).snapshot();
            if (overlay) right = graph_ref(*s, param(req, "right")).snapshot();
            settings = s->settings;
        }
        auto lt = run_select(settings, *s->ontology, left, settings.distribution_limit);
        if (!overlay)
            return {build_chart(lt, left, *s->ontology, selected, settings.overview), json{{"left", left.version_tag()}}};
        auto rt = run_select(settings, *s->ontology, right, settings.distribution_limit);
        return {build_overlay(lt, left, rt, right, *s->ontology, selected, settings.overview),
                json{{"left", left.version_tag()}, {"right", right.version_tag()}}};
    }
};

// ---------------------------------------------------------------------------

Server::Server(ServerConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

Server::~Server() {
    stop();
    std::lock_guard lock(impl_->registry_mutex);
    impl_->sessions.clear();
}

void Server::set_embedder(std::shared_ptr<Embedder> e) {
    std::lock_guard lock(impl_->nl_mutex);
    impl_->embedder = std::move(e);
    impl_->indexes.clear();
}

void Server::set_language_model(std::shared_ptr<LanguageModel> lm) {
    std::lock_guard lock(impl_->nl_mutex);
    impl_->lm = std::move(lm);
}

int Server::bind() {
    if (impl_->port >= 0) return impl_->port;
    if (impl_->config.port == 0) {
        impl_->port = impl_->http.bind_to_any_port(impl_->config.host);
    } else {
        impl_->port = impl_->http.bind_to_port(impl_->config.host, impl_->config.port) ? impl_->config.port : -1;
    }
    if (impl_->port < 0)
        throw NetworkError("cannot listen on " + impl_->config.host + ":" + std::to_string(impl_->config.port));
    return impl_->port;
}

void Server::listen() {
    bind();
    impl_->http.listen_after_bind();
}

void Server::start() {
    bind();
    impl_->thread = std::thread([this] { impl_->http.listen_after_bind(); });
    impl_->http.wait_until_ready();
}

void Server::stop() {
    impl_->stopping = true;
    impl_->http.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

int Server::port() const { return impl_->port; }

std::string Server::base_url() const { return "http://" + impl_->config.host + ":" + std::to_string(impl_->port); }

}  // namespace kgdiff
