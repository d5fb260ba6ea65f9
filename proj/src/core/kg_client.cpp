#include "kgdiff/kg_client.hpp"

#include <httplib.h>

#include <charconv>

#include <nlohmann/json.hpp>

#include "kgdiff/error.hpp"
#include "kgdiff/sparql_engine.hpp"

namespace kgdiff {

using nlohmann::json;

std::string results_to_json(const ResultTable& t) {
    json bindings = json::array();
    for (const auto& row : t.rows) {
        json b = json::object();
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (!row[i]) continue;
            const rdf::Term& term = *row[i];
            json cell;
            switch (term.kind) {
                case rdf::TermKind::Iri: cell["type"] = "uri"; break;
                case rdf::TermKind::BlankNode: cell["type"] = "bnode"; break;
                case rdf::TermKind::Literal:
                    cell["type"] = "literal";
                    if (!term.lang.empty()) cell["xml:lang"] = term.lang;
                    else if (!term.datatype.empty()) cell["datatype"] = term.datatype;
                    break;
            }
            cell["value"] = term.value;
            b[t.columns[i]] = std::move(cell);
        }
        bindings.push_back(std::move(b));
    }
    json doc = {{"head", {{"vars", t.columns}}}, {"results", {{"bindings", std::move(bindings)}}}};
    return doc.dump();
}

ResultTable parse_results_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw MalformedResultsError(std::string("results are not JSON: ") + e.what());
    }
    try {
        if (!doc.is_object() || !doc.contains("head") || !doc.contains("results"))
            throw MalformedResultsError("results document lacks head/results");
        ResultTable t;
        for (const auto& v : doc.at("head").at("vars")) t.columns.push_back(v.get<std::string>());
        for (const auto& b : doc.at("results").at("bindings")) {
            if (!b.is_object()) throw MalformedResultsError("binding is not an object");
            std::vector<Cell> row(t.columns.size());
            for (const auto& [var, cell] : b.items()) {
                auto idx = t.column_index(var);
                if (!idx) throw MalformedResultsError("binding for undeclared variable ?" + var);
                const std::string type = cell.at("type").get<std::string>();
                const std::string value = cell.at("value").get<std::string>();
                if (type == "uri") {
                    row[*idx] = rdf::Term::iri(value);
                } else if (type == "bnode") {
                    row[*idx] = rdf::Term::blank(value);
                } else if (type == "literal" || type == "typed-literal") {
                    std::string dt = cell.value("datatype", std::string());
                    if (dt == rdf::vocab::kXsdString) dt.clear();
                    row[*idx] = rdf::Term::literal(value, dt, cell.value("xml:lang", std::string()));
                } else {
                    throw MalformedResultsError("unknown term type '" + type + "'");
                }
            }
            t.rows.push_back(std::move(row));
        }
        return t;
    } catch (const json::exception& e) {
        throw MalformedResultsError(std::string("unexpected results structure: ") + e.what());
    }
}

namespace {

struct Url {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Url split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw NetworkError("not an absolute URL: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

ResultTable execute(const std::string& endpoint_url, const std::string& query, std::chrono::milliseconds timeout) {
    const Url url = split_url(endpoint_url);
    httplib::Client client(url.origin);
    if (!client.is_valid()) throw NetworkError("unsupported endpoint URL: " + endpoint_url);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    client.set_follow_location(true);

    httplib::Headers headers = {{"Accept", "application/sparql-results+json"}};
    httplib::Params params = {{"query", query}};
    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(url.path, headers, params);
    if (!res) {
        auto err = res.error();
        auto elapsed = std::chrono::steady_clock::now() - started;
        if (err == httplib::Error::ConnectionTimeout ||
            (err == httplib::Error::Read && elapsed >= timeout * 9 / 10))
            throw TimeoutError("no response from " + endpoint_url + " within " + std::to_string(timeout.count()) +
                               " ms");
        throw NetworkError("request to " + endpoint_url + " failed: " + httplib::to_string(err));
    }
    if (res->status != 200) throw EndpointError(res->status, res->body);
    ResultTable t = parse_results_json(res->body);
    check_shape(t);
    return t;
}

std::size_t execute_count(const std::string& endpoint_url, const std::string& query,
                          std::chrono::milliseconds timeout) {
    ResultTable t = execute(endpoint_url, query, timeout);
    if (t.columns.size() != 1 || t.rows.size() != 1 || !t.rows[0][0])
        throw MalformedResultsError("count query did not return a single value");
    const std::string& lex = t.rows[0][0]->value;
    std::size_t n = 0;
    auto [ptr, ec] = std::from_chars(lex.data(), lex.data() + lex.size(), n);
    if (ec != std::errc() || ptr != lex.data() + lex.size())
        throw MalformedResultsError("count is not a non-negative integer: " + lex);
    return n;
}

// ---------------------------------------------------------------------------

struct LocalEndpoint::Impl {
    TripleStore store;
    httplib::Server server;
    std::mutex mutex;
    Faults faults;
};

LocalEndpoint::LocalEndpoint(TripleStore store) : impl_(std::make_unique<Impl>()) {
    impl_->store = std::move(store);
    auto handle = [this](const httplib::Request& req, httplib::Response& res) {
        ++requests_;
        Faults faults;
        {
            std::lock_guard lock(impl_->mutex);
            faults = impl_->faults;
        }
        if (faults.delay.count() > 0) std::this_thread::sleep_for(faults.delay);
        if (faults.status != 0) {
            res.status = faults.status;
            res.set_content(faults.body, "text/plain");
            return;
        }
        if (faults.malformed) {
            res.set_content("<html>not results</html>", "application/sparql-results+json");
            return;
        }
        std::string query;
        if (req.has_param("query")) query = req.get_param_value("query");
        else if (req.method == "POST" && req.get_header_value("Content-Type").rfind("application/sparql-query", 0) == 0)
            query = req.body;
        if (query.empty()) {
            res.status = 400;
            res.set_content("missing query", "text/plain");
            return;
        }
        try {
            auto table = sparql::run(query, impl_->store);
            res.set_content(results_to_json(table), "application/sparql-results+json");
        } catch (const Error& e) {
            res.status = 400;
            res.set_content(e.code() + ": " + e.what(), "text/plain");
        }
    };
    impl_->server.Get("/sparql", handle);
    impl_->server.Post("/sparql", handle);
}

LocalEndpoint::~LocalEndpoint() { stop(); }

std::string LocalEndpoint::start() {
    if (thread_.joinable()) return url();
    port_ = impl_->server.bind_to_any_port("127.0.0.1");
    if (port_ < 0) throw NetworkError("could not bind a loopback port");
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return url();
}

void LocalEndpoint::stop() {
    if (!thread_.joinable()) return;
    impl_->server.stop();
    thread_.join();
}

std::string LocalEndpoint::url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/sparql"; }

void LocalEndpoint::set_faults(Faults f) {
    std::lock_guard lock(impl_->mutex);
    impl_->faults = std::move(f);
}

}  // namespace kgdiff
