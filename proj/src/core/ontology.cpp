#include "kgdiff/ontology.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

#include "kgdiff/error.hpp"

namespace kgdiff {

namespace v = rdf::vocab;

std::string_view to_string(RangeKind kind) {
    switch (kind) {
        case RangeKind::Numeric: return "numeric";
        case RangeKind::Text: return "text";
        case RangeKind::Date: return "date";
        case RangeKind::Boolean: return "boolean";
        case RangeKind::Iri: return "iri";
    }
    return "text";
}

RangeKind range_kind_from_string(std::string_view name) {
    if (name == "numeric") return RangeKind::Numeric;
    if (name == "text") return RangeKind::Text;
    if (name == "date") return RangeKind::Date;
    if (name == "boolean") return RangeKind::Boolean;
    if (name == "iri") return RangeKind::Iri;
    throw std::invalid_argument("unknown range kind: " + std::string(name));
}

RangeKind range_kind_for_datatype(std::string_view datatype_iri) {
    static const std::map<std::string, RangeKind, std::less<>> table = [] {
        std::map<std::string, RangeKind, std::less<>> t;
        const std::string xsd(v::kXsd);
        for (const char* n : {"integer", "int", "long", "short", "byte", "decimal", "double", "float",
                              "nonNegativeInteger", "positiveInteger", "negativeInteger",
                              "nonPositiveInteger", "unsignedInt", "unsignedLong", "unsignedShort",
                              "unsignedByte"})
            t[xsd + n] = RangeKind::Numeric;
        for (const char* n : {"date", "dateTime", "dateTimeStamp", "gYear", "gYearMonth"})
            t[xsd + n] = RangeKind::Date;
        t[xsd + "boolean"] = RangeKind::Boolean;
        t[xsd + "anyURI"] = RangeKind::Iri;
        for (const char* n : {"string", "normalizedString", "token", "language", "Name", "NCName"})
            t[xsd + n] = RangeKind::Text;
        t[std::string(v::kLangString)] = RangeKind::Text;
        t[std::string(v::kRdfsLiteral)] = RangeKind::Text;
        return t;
    }();
    auto it = table.find(datatype_iri);
    return it == table.end() ? RangeKind::Text : it->second;
}

std::string local_name(std::string_view iri) {
    auto pos = iri.find_last_of("#/");
    if (pos == std::string_view::npos || pos + 1 == iri.size()) return std::string(iri);
    return std::string(iri.substr(pos + 1));
}

std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------

Ontology Ontology::build(std::vector<ClassDef> classes, std::vector<LinkDef> links,
                         std::vector<PropertyDef> properties, std::vector<std::string> warnings) {
    Ontology o;
    o.warnings_ = std::move(warnings);
    const std::string root(kRoot);
    for (auto& c : classes) {
        std::sort(c.parents.begin(), c.parents.end());
        c.parents.erase(std::unique(c.parents.begin(), c.parents.end()), c.parents.end());
        std::string id = c.id;
        o.classes_[id] = std::move(c);
    }
    if (!o.classes_.count(root)) o.classes_[root] = ClassDef{root, "Thing", {}, {}};

    for (auto& [id, c] : o.classes_) {
        std::vector<std::string> kept;
        for (auto& p : c.parents) {
            if (p == id) throw CyclicHierarchyError("subclass cycle: " + id + " -> " + id);
            if (!o.classes_.count(p)) {
                o.warnings_.push_back("class " + id + ": unknown superclass " + p + " ignored");
                continue;
            }
            kept.push_back(p);
        }
        c.parents = std::move(kept);
    }

    // Cycle detection: DFS with colour marks over the direct-parent relation.
    {
        std::map<std::string_view, int> color;
        std::vector<std::string_view> path;
        std::function<void(const ClassDef&)> visit = [&](const ClassDef& c) {
            color[c.id] = 1;
            path.push_back(c.id);
            for (const auto& p : c.parents) {
                int col = color[p];
                if (col == 1) {
                    std::string msg = "subclass cycle: ";
                    auto start = std::find(path.begin(), path.end(), std::string_view(p));
                    for (auto it = start; it != path.end(); ++it) msg += std::string(*it) + " -> ";
                    msg += p;
                    throw CyclicHierarchyError(msg);
                }
                if (col == 0) visit(o.classes_.find(p)->second);
            }
            path.pop_back();
            color[c.id] = 2;
        };
        for (const auto& [id, c] : o.classes_)
            if (color[id] == 0) visit(c);
    }

    for (auto& l : links) {
        for (std::string* end : {&l.fromtype, &l.totype}) {
            if (end->empty()) {
                *end = root;
            } else if (!o.classes_.count(*end)) {
                o.warnings_.push_back("link " + l.id + ": unresolved class " + *end + " defaults to root");
                *end = root;
            }
        }
        if (l.label.empty()) l.label = local_name(l.id);
        std::string id = l.id;
        o.links_[id] = std::move(l);
    }
    for (auto& p : properties) {
        if (p.domain.empty()) {
            p.domain = root;
        } else if (!o.classes_.count(p.domain)) {
            o.warnings_.push_back("property " + p.id + ": unresolved domain " + p.domain + " defaults to root");
            p.domain = root;
        }
        if (p.label.empty()) p.label = local_name(p.id);
        std::string id = p.id;
        o.properties_[id] = std::move(p);
    }

    // Reflexive-transitive closure over the parent DAG.
    o.ids_.reserve(o.classes_.size());
    for (const auto& [id, c] : o.classes_) {
        o.index_[id] = o.ids_.size();
        o.ids_.push_back(id);
    }
    const std::size_t n = o.ids_.size();
    o.ancestors_.assign(n, std::vector<bool>(n, false));
    std::vector<int> state(n, 0);
    std::function<void(std::size_t)> fill = [&](std::size_t i) {
        if (state[i] == 2) return;
        state[i] = 2;
        auto& row = o.ancestors_[i];
        row[i] = true;
        for (const auto& p : o.classes_.find(o.ids_[i])->second.parents) {
            std::size_t j = o.index_.find(p)->second;
            fill(j);
            const auto& prow = o.ancestors_[j];
            for (std::size_t k = 0; k < n; ++k)
                if (prow[k]) row[k] = true;
        }
    };
    const std::size_t root_index = o.index_.find(root)->second;
    for (std::size_t i = 0; i < n; ++i) {
        fill(i);
        o.ancestors_[i][root_index] = true;
    }
    return o;
}

std::size_t Ontology::index_of(std::string_view id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw UnknownClassError("unknown class: " + std::string(id));
    return it->second;
}

const ClassDef& Ontology::class_def(std::string_view id) const {
    auto it = classes_.find(id);
    if (it == classes_.end()) throw UnknownClassError("unknown class: " + std::string(id));
    return it->second;
}

const LinkDef* Ontology::find_link(std::string_view id) const {
    auto it = links_.find(id);
    return it == links_.end() ? nullptr : &it->second;
}

const PropertyDef* Ontology::find_property(std::string_view id) const {
    auto it = properties_.find(id);
    return it == properties_.end() ? nullptr : &it->second;
}

bool Ontology::subtype_of(std::string_view sub, std::string_view super) const {
    return ancestors_[index_of(sub)][index_of(super)];
}

std::vector<LinkDef> Ontology::links_between(std::string_view from, std::string_view to) const {
    const auto& from_row = ancestors_[index_of(from)];
    const auto& to_row = ancestors_[index_of(to)];
    std::vector<LinkDef> out;
    for (const auto& [id, l] : links_) {
        if (from_row[index_.find(l.fromtype)->second] && to_row[index_.find(l.totype)->second]) out.push_back(l);
    }
    return out;
}

std::vector<PropertyDef> Ontology::properties_of(std::string_view cls) const {
    const auto& row = ancestors_[index_of(cls)];
    std::vector<PropertyDef> out;
    for (const auto& [id, p] : properties_) {
        if (row[index_.find(p.domain)->second]) out.push_back(p);
    }
    return out;
}

std::vector<std::string> Ontology::subclasses_of(std::string_view cls) const {
    const std::size_t target = index_of(cls);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < ids_.size(); ++i)
        if (ancestors_[i][target]) out.push_back(ids_[i]);
    return out;
}

std::vector<std::string> Ontology::superclasses_of(std::string_view cls) const {
    const auto& row = ancestors_[index_of(cls)];
    std::vector<std::string> out;
    for (std::size_t j = 0; j < ids_.size(); ++j)
        if (row[j]) out.push_back(ids_[j]);
    return out;
}

std::string Ontology::canonical_text() const {
    std::string out;
    for (const auto& [id, c] : classes_) {
        out += "C\t" + id + "\t" + rdf::escape_string(c.label) + "\t" + rdf::escape_string(c.comment);
        for (const auto& p : c.parents) out += "\t" + p;
        out += "\n";
    }
    for (const auto& [id, l] : links_) {
        out += "L\t" + id + "\t" + rdf::escape_string(l.label) + "\t" + rdf::escape_string(l.comment) + "\t" +
               l.fromtype + "\t" + l.totype + "\n";
    }
    for (const auto& [id, p] : properties_) {
        out += "P\t" + id + "\t" + rdf::escape_string(p.label) + "\t" + rdf::escape_string(p.comment) + "\t" +
               p.domain + "\t" + std::string(to_string(p.range_kind)) + "\t" + p.datatype + "\n";
    }
    return out;
}

std::string Ontology::content_hash() const { return fnv1a_hex(canonical_text()); }

// ---------------------------------------------------------------------------

namespace {

struct SubjectInfo {
    std::set<std::string> types;
    std::set<std::string> parents;
    std::set<std::string> domains;
    std::set<std::string> ranges;
    // (language, text); preferred label is chosen after collection
    std::vector<std::pair<std::string, std::string>> labels;
    std::vector<std::pair<std::string, std::string>> comments;
    std::size_t consumed = 0;  // triples attached to this subject that were interpreted
};

std::string pick_text(std::vector<std::pair<std::string, std::string>> options) {
    if (options.empty()) return {};
    std::sort(options.begin(), options.end());
    for (const auto& [lang, text] : options)
        if (lang == "en") return text;
    for (const auto& [lang, text] : options)
        if (lang.empty()) return text;
    return options.front().second;
}

bool is_datatype_iri(const std::string& iri) {
    return iri.rfind(std::string(v::kXsd), 0) == 0 || iri == v::kLangString || iri == v::kRdfsLiteral;
}

bool is_root_alias(const std::string& iri) { return iri == v::kOwlThing || iri == v::kRdfsResource; }

}  // namespace

Ontology ingest_ontology(std::string_view document, rdf::Format format) {
    const auto triples = rdf::parse(document, format);

    std::map<std::string, SubjectInfo> subjects;
    std::size_t ignored = 0;
    std::vector<const rdf::Triple*> pending;  // label/comment, decided after typing

    for (const auto& t : triples) {
        if (!t.subject.is_iri()) {
            ++ignored;
            continue;
        }
        const std::string& p = t.predicate.value;
        if (p == v::kType && t.object.is_iri()) {
            const std::string& o = t.object.value;
            if (o == v::kOwlClass || o == v::kRdfsClass || o == v::kObjectProperty ||
                o == v::kDatatypeProperty || o == v::kRdfProperty) {
                auto& info = subjects[t.subject.value];
                info.types.insert(o);
                ++info.consumed;
                continue;
            }
            ++ignored;
        } else if (p == v::kSubClassOf && t.object.is_iri()) {
            subjects[t.subject.value].parents.insert(t.object.value);
        } else if (p == v::kDomain && t.object.is_iri()) {
            subjects[t.subject.value].domains.insert(t.object.value);
        } else if (p == v::kRange && t.object.is_iri()) {
            subjects[t.subject.value].ranges.insert(t.object.value);
        } else if ((p == v::kLabel || p == v::kComment) && t.object.is_literal()) {
            pending.push_back(&t);
        } else {
            ++ignored;
        }
    }
    for (const auto* t : pending) {
        auto& info = subjects[t->subject.value];
        auto& bucket = t->predicate.value == v::kLabel ? info.labels : info.comments;
        bucket.emplace_back(t->object.lang, t->object.value);
    }

    std::vector<std::string> warnings;
    std::vector<ClassDef> classes;
    std::vector<LinkDef> links;
    std::vector<PropertyDef> properties;

    const std::string root(Ontology::kRoot);
    for (auto& [id, info] : subjects) {
        const bool is_class = info.types.count(std::string(v::kOwlClass)) || info.types.count(std::string(v::kRdfsClass));
        const bool is_object = info.types.count(std::string(v::kObjectProperty)) > 0;
        const bool is_datatype = info.types.count(std::string(v::kDatatypeProperty)) > 0;
        const bool is_rdf_property = info.types.count(std::string(v::kRdfProperty)) > 0;

        if (is_class && !is_root_alias(id)) {
            ClassDef c{id, pick_text(info.labels), pick_text(info.comments), {}};
            if (c.label.empty()) c.label = local_name(id);
            for (const auto& parent : info.parents) c.parents.push_back(is_root_alias(parent) ? root : parent);
            classes.push_back(std::move(c));
            continue;
        }
        if (is_class && id == root) {
            ClassDef c{root, pick_text(info.labels), pick_text(info.comments), {}};
            if (c.label.empty()) c.label = "Thing";
            classes.push_back(std::move(c));
            continue;
        }
        bool as_property = is_datatype && !is_object;
        bool as_link = is_object;
        if (is_rdf_property && !is_object && !is_datatype) {
            as_property = !info.ranges.empty() && is_datatype_iri(*info.ranges.begin());
            as_link = !as_property;
        }
        if (!as_property && !as_link) {
            ignored += info.parents.size() + info.domains.size() + info.ranges.size() + info.labels.size() +
                       info.comments.size();
            continue;
        }
        if (!info.parents.empty()) ignored += info.parents.size();

        std::string domain;
        if (!info.domains.empty()) {
            domain = *info.domains.begin();
            if (info.domains.size() > 1)
                warnings.push_back(id + ": multiple domains, using " + domain);
            if (is_root_alias(domain)) domain = root;
        }
        std::string range;
        if (!info.ranges.empty()) {
            range = *info.ranges.begin();
            if (info.ranges.size() > 1) warnings.push_back(id + ": multiple ranges, using " + range);
        }
        if (as_link) {
            if (is_root_alias(range)) range = root;
            links.push_back(LinkDef{id, pick_text(info.labels), pick_text(info.comments), domain, range});
        } else {
            PropertyDef p{id, pick_text(info.labels), pick_text(info.comments), domain,
                          range.empty() ? RangeKind::Text : range_kind_for_datatype(range), range};
            properties.push_back(std::move(p));
        }
    }
    if (ignored > 0) warnings.push_back(std::to_string(ignored) + " triples outside the interpreted vocabulary ignored");

    Ontology o = Ontology::build(std::move(classes), std::move(links), std::move(properties), std::move(warnings));
    o.ignored_triples_ = ignored;
    return o;
}

Ontology load_ontology_file(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    return load_ontology_file(path, ext == ".nt" ? rdf::Format::NTriples : rdf::Format::Turtle);
}

Ontology load_ontology_file(const std::filesystem::path& path, rdf::Format format) {
    return ingest_ontology(read_file(path), format);
}

}  // namespace kgdiff
