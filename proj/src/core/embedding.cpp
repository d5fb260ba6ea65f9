#include "kgdiff/embedding.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "kgdiff/error.hpp"

namespace kgdiff {

namespace {

void normalize(std::vector<float>& v) {
    double norm = 0;
    for (float x : v) norm += static_cast<double>(x) * x;
    if (norm == 0) return;
    norm = std::sqrt(norm);
    for (float& x : v) x = static_cast<float>(x / norm);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        unsigned char u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) {
            cur += static_cast<char>(std::tolower(u));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<std::vector<float>> HashingEmbedder::embed(std::span<const std::string> texts) {
    ++calls_;
    texts_ += texts.size();
    std::vector<std::vector<float>> out;
    for (const auto& text : texts) {
        std::vector<float> v(dimension_, 0.0f);
        for (const auto& tok : tokenize(text)) {
            std::uint64_t h = std::stoull(fnv1a_hex(tok), nullptr, 16);
            v[h % dimension_] += 1.0f;
        }
        normalize(v);
        out.push_back(std::move(v));
    }
    return out;
}

HttpEmbedder::HttpEmbedder(std::string base_url, std::string model, std::string api_key,
                           std::chrono::milliseconds timeout, std::size_t batch)
    : base_url_(std::move(base_url)), model_(std::move(model)), api_key_(std::move(api_key)), timeout_(timeout),
      batch_(std::max<std::size_t>(batch, 1)) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

std::vector<std::vector<float>> HttpEmbedder::embed(std::span<const std::string> texts) {
    auto scheme_end = base_url_.find("://");
    if (scheme_end == std::string::npos) throw EmbedderError("not an absolute URL: " + base_url_);
    auto path_start = base_url_.find('/', scheme_end + 3);
    const std::string origin = base_url_.substr(0, path_start);
    const std::string path = (path_start == std::string::npos ? "" : base_url_.substr(path_start)) + "/embeddings";

    httplib::Client client(origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    std::vector<std::vector<float>> out;
    for (std::size_t start = 0; start < texts.size(); start += batch_) {
        auto chunk = texts.subspan(start, std::min(batch_, texts.size() - start));
        nlohmann::json body = {{"model", model_}, {"input", std::vector<std::string>(chunk.begin(), chunk.end())}};
        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (!res) throw EmbedderError("embedding request failed: " + httplib::to_string(res.error()));
        if (res->status != 200)
            throw EmbedderError("embedding endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body);
        try {
            auto doc = nlohmann::json::parse(res->body);
            auto data = doc.at("data");
            if (data.size() != chunk.size()) throw EmbedderError("embedding count does not match input count");
            std::vector<std::vector<float>> batch(chunk.size());
            for (std::size_t pos = 0; pos < data.size(); ++pos) {
                const auto& item = data[pos];
                std::size_t i = item.value("index", pos);
                if (i >= batch.size()) throw EmbedderError("embedding index out of range");
                batch[i] = item.at("embedding").get<std::vector<float>>();
            }
            for (auto& v : batch) {
                normalize(v);
                out.push_back(std::move(v));
            }
        } catch (const nlohmann::json::exception& e) {
            throw EmbedderError(std::string("malformed embedding response: ") + e.what());
        }
    }
    return out;
}

std::string_view to_string(VocabKind kind) { return kind == VocabKind::Class ? "class" : "link"; }

// ---------------------------------------------------------------------------
// Index file: one JSON header line, then per entry
//   u8 kind | u32 id length | id | u32 text length | text | dimension × f32

namespace {

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); }

std::uint32_t get_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

std::string get_bytes(std::istream& in, std::size_t n) {
    std::string s(n, '\0');
    in.read(s.data(), static_cast<std::streamsize>(n));
    return s;
}

}  // namespace

void EmbeddingIndex::save(const std::filesystem::path& file) const {
    std::error_code ec;
    std::filesystem::create_directories(file.parent_path(), ec);
    auto tmp = file;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw StorageError("cannot write " + tmp.string());
        nlohmann::json header = {{"format", "kgdiff-embeddings-1"},
                                 {"ontology_hash", ontology_hash},
                                 {"model", model},
                                 {"dimension", dimension},
                                 {"count", entries.size()}};
        out << header.dump() << '\n';
        for (const auto& e : entries) {
            out.put(static_cast<char>(e.kind == VocabKind::Class ? 0 : 1));
            put_u32(out, static_cast<std::uint32_t>(e.id.size()));
            out.write(e.id.data(), static_cast<std::streamsize>(e.id.size()));
            put_u32(out, static_cast<std::uint32_t>(e.text.size()));
            out.write(e.text.data(), static_cast<std::streamsize>(e.text.size()));
            out.write(reinterpret_cast<const char*>(e.vector.data()),
                      static_cast<std::streamsize>(e.vector.size() * sizeof(float)));
        }
        if (!out) throw StorageError("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, file, ec);
    if (ec) throw StorageError("cannot move index into place: " + ec.message());
}

EmbeddingIndex EmbeddingIndex::load(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw StorageError("cannot open " + file.string());
    std::string line;
    std::getline(in, line);
    EmbeddingIndex idx;
    std::size_t count = 0;
    try {
        auto header = nlohmann::json::parse(line);
        if (header.at("format") != "kgdiff-embeddings-1") throw StorageError("unknown index format in " + file.string());
        idx.ontology_hash = header.at("ontology_hash").get<std::string>();
        idx.model = header.at("model").get<std::string>();
        idx.dimension = header.at("dimension").get<std::size_t>();
        count = header.at("count").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw StorageError("corrupt index header in " + file.string() + ": " + e.what());
    }
    for (std::size_t i = 0; i < count; ++i) {
        IndexEntry e;
        int kind = in.get();
        e.kind = kind == 0 ? VocabKind::Class : VocabKind::Link;
        e.id = get_bytes(in, get_u32(in));
        e.text = get_bytes(in, get_u32(in));
        e.vector.resize(idx.dimension);
        in.read(reinterpret_cast<char*>(e.vector.data()), static_cast<std::streamsize>(idx.dimension * sizeof(float)));
        if (!in) throw StorageError("truncated index file " + file.string());
        idx.entries.push_back(std::move(e));
    }
    return idx;
}

namespace {

// Comment as a sentence; most ontology comments already end in a period.
std::string sentence(const std::string& text) {
    if (text.empty()) return text;
    const char last = text.back();
    return last == '.' || last == '!' || last == '?' ? text : text + ".";
}

}  // namespace

std::string class_text(const ClassDef& c) {
    std::string label = c.label.empty() ? local_name(c.id) : c.label;
    return c.comment.empty() ? label + "." : label + ". " + sentence(c.comment);
}

std::string link_text(const LinkDef& l, const Ontology& o) {
    auto label_of = [&](const std::string& cls) {
        const auto& def = o.class_def(cls);
        return def.label.empty() ? local_name(def.id) : def.label;
    };
    std::string out = (l.label.empty() ? local_name(l.id) : l.label) + ": " + label_of(l.fromtype) + " → " +
                      label_of(l.totype) + ".";
    if (!l.comment.empty()) out += " " + sentence(l.comment);
    return out;
}

std::filesystem::path index_path(const std::filesystem::path& data_dir, const Ontology& o, const Embedder& e) {
    return data_dir / ("embeddings-" + o.content_hash() + "-" + fnv1a_hex(e.model_id()) + ".bin");
}

EmbeddingIndex build_embedding_index(const Ontology& o, Embedder& embedder, const std::filesystem::path& data_dir) {
    const auto file = index_path(data_dir, o, embedder);
    if (std::filesystem::exists(file)) {
        try {
            auto idx = EmbeddingIndex::load(file);
            if (idx.ontology_hash == o.content_hash() && idx.model == embedder.model_id()) return idx;
        } catch (const StorageError&) {
            // unreadable cache: rebuild below
        }
    }
    EmbeddingIndex idx;
    idx.ontology_hash = o.content_hash();
    idx.model = embedder.model_id();
    std::vector<std::string> texts;
    for (const auto& [id, c] : o.classes()) {
        if (id == Ontology::kRoot) continue;
        idx.entries.push_back({VocabKind::Class, id, class_text(c), {}});
        texts.push_back(idx.entries.back().text);
    }
    for (const auto& [id, l] : o.links()) {
        idx.entries.push_back({VocabKind::Link, id, link_text(l, o), {}});
        texts.push_back(idx.entries.back().text);
    }
    auto vectors = texts.empty() ? std::vector<std::vector<float>>{} : embedder.embed(texts);
    if (vectors.size() != texts.size()) throw EmbedderError("embedder returned the wrong number of vectors");
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (i == 0) idx.dimension = vectors[0].size();
        if (vectors[i].size() != idx.dimension || idx.dimension == 0)
            throw EmbedderError("embedder returned vectors of inconsistent dimension");
        normalize(vectors[i]);
        idx.entries[i].vector = std::move(vectors[i]);
    }
    idx.save(file);
    return idx;
}

double cosine(std::span<const float> a, std::span<const float> b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0 || nb == 0) return 0;
    return dot / std::sqrt(na * nb);
}

Candidates retrieve_candidates(const EmbeddingIndex& idx, std::string_view request, Embedder& embedder,
                               std::size_t k) {
    if (k == 0) throw EmbedderError("k must be at least 1");
    std::vector<std::string> text{std::string(request)};
    auto q = embedder.embed(text);
    if (q.size() != 1 || (idx.dimension != 0 && q[0].size() != idx.dimension))
        throw EmbedderError("request embedding has the wrong dimension");
    Candidates out;
    for (const auto& e : idx.entries) {
        Candidate c{e.kind, e.id, cosine(q[0], e.vector)};
        (e.kind == VocabKind::Class ? out.classes : out.links).push_back(std::move(c));
    }
    auto rank = [k](std::vector<Candidate>& v) {
        std::sort(v.begin(), v.end(), [](const Candidate& a, const Candidate& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.id < b.id;
        });
        if (v.size() > k) v.resize(k);
    };
    rank(out.classes);
    rank(out.links);
    return out;
}

}  // namespace kgdiff
