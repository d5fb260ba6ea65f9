#include "kgdiff/nl.hpp"

#include <httplib.h>

#include <ctime>
#include <fstream>

#include "kgdiff/error.hpp"

namespace kgdiff {

using nlohmann::json;

HttpLanguageModel::HttpLanguageModel(std::string base_url, std::string model, std::string api_key,
                                     std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), model_(std::move(model)), api_key_(std::move(api_key)), timeout_(timeout) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

std::string HttpLanguageModel::complete(const std::vector<ChatMessage>& messages, const json& schema) {
    auto scheme_end = base_url_.find("://");
    if (scheme_end == std::string::npos) throw LmError("not an absolute URL: " + base_url_);
    auto path_start = base_url_.find('/', scheme_end + 3);
    const std::string origin = base_url_.substr(0, path_start);
    const std::string path =
        (path_start == std::string::npos ? "" : base_url_.substr(path_start)) + "/chat/completions";

    json msgs = json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    json body = {{"model", model_},
                 {"messages", msgs},
                 {"temperature", 0},
                 {"response_format",
                  {{"type", "json_schema"}, {"json_schema", {{"name", "changeset"}, {"strict", true}, {"schema", schema}}}}}};

    httplib::Client client(origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res) throw LmError("language model request failed: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw LmError("language model endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body);
    try {
        auto doc = json::parse(res->body);
        const auto& content = doc.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) throw LmError("language model returned no text content");
        return content.get<std::string>();
    } catch (const json::exception& e) {
        throw LmError(std::string("malformed language model response: ") + e.what());
    }
}

ScriptedLanguageModel::ScriptedLanguageModel(std::vector<std::string> replies)
    : replies_(replies.begin(), replies.end()) {}

void ScriptedLanguageModel::push(std::string reply) {
    std::lock_guard lock(mutex_);
    replies_.push_back(std::move(reply));
}

std::string ScriptedLanguageModel::complete(const std::vector<ChatMessage>& messages, const json&) {
    std::lock_guard lock(mutex_);
    prompts_.push_back(messages);
    if (replies_.empty()) throw LmError("scripted model has no reply left");
    std::string reply = std::move(replies_.front());
    replies_.pop_front();
    return reply;
}

std::vector<std::vector<ChatMessage>> ScriptedLanguageModel::prompts() const {
    std::lock_guard lock(mutex_);
    return prompts_;
}

// ---------------------------------------------------------------------------

std::vector<FewShotExample> load_few_shot(const std::filesystem::path& file) {
    json doc;
    try {
        doc = json::parse(read_file(file));
        std::vector<FewShotExample> out;
        for (const auto& ex : doc.at("examples"))
            out.push_back({ex.at("graph").get<std::string>(), ex.at("request").get<std::string>(), ex.at("changeset")});
        return out;
    } catch (const json::exception& e) {
        throw StorageError("malformed few-shot file " + file.string() + ": " + e.what());
    }
}

std::filesystem::path default_few_shot_path() {
    return std::filesystem::path(KGDIFF_ASSET_DIR) / "prompts" / "changeset_fewshot.json";
}

std::string graph_summary(const PrototypeGraph& g, const Ontology& o) {
    if (g.empty()) return "(empty graph)\n";
    auto label = [&](const std::string& cls) {
        if (!o.has_class(cls)) return cls;
        const auto& def = o.class_def(cls);
        return def.label.empty() ? local_name(cls) : def.label;
    };
    std::string out;
    for (const auto& [id, n] : g.nodes())
        out += "node " + std::to_string(id.value) + ": " + label(n.cls) + " <" + n.cls + ">\n";
    for (const auto& [id, e] : g.edges())
        out += "edge " + std::to_string(id.value) + ": node " + std::to_string(e.tail.value) + " -<" + e.link +
               ">-> node " + std::to_string(e.head.value) + "\n";
    for (const auto& [id, s] : g.subqueries()) {
        out += "subquery " + std::to_string(id.value) + ": node " + std::to_string(s.node.value) + " <" + s.property +
               "> " + std::string(to_string(s.kind));
        if (s.condition)
            out += std::string(s.condition->negated ? " not " : " ") + std::string(to_string(s.condition->op)) + " \"" +
                   s.condition->operand + "\"";
        out += "\n";
    }
    return out;
}

namespace {

const char* kSystemPrompt =
    "You edit a visual SPARQL query graph. Nodes are typed by ontology classes, edges by ontology links "
    "(tail has the link's source class, head its target class), and sub-queries attach property constraints "
    "or value selections to nodes. Reply with one JSON change set. Refer to existing nodes by their integer "
    "id and to new nodes by the string ref you declare in add_nodes. Only use the classes, links and "
    "properties listed in the request. Condition operators: eq, neq, lt, leq, gt, geq, contains, regex.";

}  // namespace

std::vector<ChatMessage> build_prompt(std::string_view request, const ConstrainedSchema& schema,
                                      const PrototypeGraph& g, const Ontology& o,
                                      const std::vector<FewShotExample>& few_shot) {
    std::vector<ChatMessage> msgs{{"system", kSystemPrompt}};
    for (const auto& ex : few_shot) {
        msgs.push_back({"user", "Current graph:\n" + ex.graph + "\nRequest: " + ex.request});
        msgs.push_back({"assistant", ex.changeset.dump()});
    }
    std::string user = "Current graph:\n" + graph_summary(g, o);
    user += "\nAllowed classes:\n";
    for (const auto& c : schema.classes) user += "- <" + c + "> " + o.class_def(c).label + "\n";
    user += "\nAllowed links (source class, link, target class):\n";
    for (const auto& r : schema.rules) user += "- <" + r.from + "> <" + r.link + "> <" + r.to + ">\n";
    user += "\nAllowed properties:\n";
    for (const auto& p : schema.properties) {
        const PropertyDef* def = o.find_property(p);
        user += "- <" + p + "> on <" + def->domain + ">, " + std::string(to_string(def->range_kind)) + "\n";
    }
    user += "\nRequest: " + std::string(request);
    msgs.push_back({"user", std::move(user)});
    return msgs;
}

void AuditLog::append(const json& record) {
    std::lock_guard lock(mutex_);
    std::error_code ec;
    std::filesystem::create_directories(file_.parent_path(), ec);
    std::ofstream out(file_, std::ios::app);
    if (!out) throw StorageError("cannot append to audit log " + file_.string());
    json line = record;
    line["time"] = static_cast<std::int64_t>(std::time(nullptr));
    out << line.dump() << '\n';
}

ChangeSet request_changeset(LanguageModel& lm, std::string_view request, const ConstrainedSchema& schema,
                            const PrototypeGraph& g, const Ontology& o, const std::vector<FewShotExample>& few_shot,
                            AuditLog* audit) {
    auto prompt = build_prompt(request, schema, g, o, few_shot);
    const json js = schema.json_schema();
    std::string reply = lm.complete(prompt, js);
    if (audit) {
        json msgs = json::array();
        for (const auto& m : prompt) msgs.push_back({{"role", m.role}, {"content", m.content}});
        audit->append({{"request", request}, {"graph_version", g.version_tag()}, {"prompt", msgs}, {"reply", reply}});
    }
    ChangeSet cs = parse_changeset(reply);
    check_shape(cs, schema);
    return cs;
}

Proposal propose_changeset(const NlContext& ctx, std::string_view request, const PrototypeGraph& g,
                           const Ontology& o) {
    if (!ctx.index || !ctx.embedder || !ctx.lm) throw LmError("natural-language editing is not configured");
    static const std::vector<FewShotExample> kNone;
    Proposal p;
    p.base_version = g.version();
    p.candidates = retrieve_candidates(*ctx.index, request, *ctx.embedder, ctx.k);
    ConstrainedSchema schema = build_constrained_schema(p.candidates, g, o);
    p.raw = request_changeset(*ctx.lm, request, schema, g, o, ctx.few_shot ? *ctx.few_shot : kNone, ctx.audit);
    p.repaired = repair_changeset(p.raw, g, o);
    p.applied = apply_changeset(g, o, p.repaired.changeset);
    return p;
}

}  // namespace kgdiff
