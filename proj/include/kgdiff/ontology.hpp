#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "kgdiff/rdf.hpp"

namespace kgdiff {

enum class RangeKind { Numeric, Text, Date, Boolean, Iri };

std::string_view to_string(RangeKind kind);
RangeKind range_kind_from_string(std::string_view name);

/// Fixed XSD-datatype → RangeKind table. Unknown datatypes map to Text.
RangeKind range_kind_for_datatype(std::string_view datatype_iri);

struct ClassDef {
    std::string id;
    std::string label;
    std::string comment;
    std::vector<std::string> parents;  // direct superclasses, sorted

    bool operator==(const ClassDef&) const = default;
};

struct LinkDef {
    std::string id;
    std::string label;
    std::string comment;
    std::string fromtype;
    std::string totype;

    bool operator==(const LinkDef&) const = default;
};

struct PropertyDef {
    std::string id;
    std::string label;
    std::string comment;
    std::string domain;
    RangeKind range_kind = RangeKind::Text;
    std::string datatype;  // declared range IRI, empty when absent

    bool operator==(const PropertyDef&) const = default;
};

/// Immutable ontology schema: classes with a (multiple-inheritance) subclass
/// DAG, typed links and datatype properties. A synthetic universal root class
/// (owl:Thing) is always present and every class is a subtype of it.
class Ontology {
public:
    static constexpr std::string_view kRoot = rdf::vocab::kOwlThing;

    /// Builds and resolves an ontology from already-extracted definitions.
    /// Dangling link/property endpoints are re-targeted to the root (with a
    /// warning); subclass cycles throw CyclicHierarchyError.
    static Ontology build(std::vector<ClassDef> classes, std::vector<LinkDef> links,
                          std::vector<PropertyDef> properties, std::vector<std::string> warnings = {});

    const std::map<std::string, ClassDef, std::less<>>& classes() const noexcept { return classes_; }
    const std::map<std::string, LinkDef, std::less<>>& links() const noexcept { return links_; }
    const std::map<std::string, PropertyDef, std::less<>>& properties() const noexcept { return properties_; }

    bool has_class(std::string_view id) const { return classes_.find(id) != classes_.end(); }
    const ClassDef& class_def(std::string_view id) const;
    const LinkDef* find_link(std::string_view id) const;
    const PropertyDef* find_property(std::string_view id) const;

    /// Reflexive-transitive subclass test. Throws UnknownClassError.
    bool subtype_of(std::string_view sub, std::string_view super) const;

    /// Links whose fromtype/totype admit `from`/`to`, ordered by link id.
    std::vector<LinkDef> links_between(std::string_view from, std::string_view to) const;

    /// Properties whose domain is a supertype of `cls` (inherited included), ordered by id.
    std::vector<PropertyDef> properties_of(std::string_view cls) const;

    /// All classes `c` with subtype_of(c, cls), including `cls`, sorted.
    std::vector<std::string> subclasses_of(std::string_view cls) const;

    /// All classes `c` with subtype_of(cls, c), including `cls` and the root, sorted.
    std::vector<std::string> superclasses_of(std::string_view cls) const;

    const std::vector<std::string>& warnings() const noexcept { return warnings_; }
    std::size_t ignored_triples() const noexcept { return ignored_triples_; }

    /// Stable line-oriented rendering of every definition; equal iff the
    /// ontologies are element-wise identical.
    std::string canonical_text() const;

    /// 64-bit FNV-1a over canonical_text(), rendered as 16 hex digits.
    std::string content_hash() const;

    bool operator==(const Ontology& other) const { return canonical_text() == other.canonical_text(); }

private:
    friend Ontology ingest_ontology(std::string_view, rdf::Format);

    std::size_t index_of(std::string_view id) const;

    std::map<std::string, ClassDef, std::less<>> classes_;
    std::map<std::string, LinkDef, std::less<>> links_;
    std::map<std::string, PropertyDef, std::less<>> properties_;
    std::map<std::string, std::size_t, std::less<>> index_;
    std::vector<std::string> ids_;                 // index -> class id
    std::vector<std::vector<bool>> ancestors_;     // ancestors_[i][j]: class i ⊑ class j
    std::vector<std::string> warnings_;
    std::size_t ignored_triples_ = 0;
};

/// Parses an RDFS/OWL ontology document. Only classes, subClassOf,
/// object/datatype property domain+range, labels and comments are
/// interpreted; all other triples are counted and reported as one warning.
Ontology ingest_ontology(std::string_view document, rdf::Format format);

/// Reads a file and ingests it; format inferred from the extension
/// (.nt → N-Triples, otherwise Turtle) unless given explicitly.
Ontology load_ontology_file(const std::filesystem::path& path);
Ontology load_ontology_file(const std::filesystem::path& path, rdf::Format format);

/// Label fallback: the IRI fragment or last path segment.
std::string local_name(std::string_view iri);

/// 64-bit FNV-1a hash as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view data);

std::string read_file(const std::filesystem::path& path);

}  // namespace kgdiff
