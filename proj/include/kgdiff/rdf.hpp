#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <vector>

namespace kgdiff::rdf {

namespace vocab {
inline constexpr std::string_view kRdf = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
inline constexpr std::string_view kRdfs = "http://www.w3.org/2000/01/rdf-schema#";
inline constexpr std::string_view kOwl = "http://www.w3.org/2002/07/owl#";
inline constexpr std::string_view kXsd = "http://www.w3.org/2001/XMLSchema#";

inline constexpr std::string_view kType = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
inline constexpr std::string_view kFirst = "http://www.w3.org/1999/02/22-rdf-syntax-ns#first";
inline constexpr std::string_view kRest = "http://www.w3.org/1999/02/22-rdf-syntax-ns#rest";
inline constexpr std::string_view kNil = "http://www.w3.org/1999/02/22-rdf-syntax-ns#nil";
inline constexpr std::string_view kRdfProperty = "http://www.w3.org/1999/02/22-rdf-syntax-ns#Property";
inline constexpr std::string_view kLangString = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";

inline constexpr std::string_view kRdfsClass = "http://www.w3.org/2000/01/rdf-schema#Class";
inline constexpr std::string_view kSubClassOf = "http://www.w3.org/2000/01/rdf-schema#subClassOf";
inline constexpr std::string_view kDomain = "http://www.w3.org/2000/01/rdf-schema#domain";
inline constexpr std::string_view kRange = "http://www.w3.org/2000/01/rdf-schema#range";
inline constexpr std::string_view kLabel = "http://www.w3.org/2000/01/rdf-schema#label";
inline constexpr std::string_view kComment = "http://www.w3.org/2000/01/rdf-schema#comment";
inline constexpr std::string_view kRdfsResource = "http://www.w3.org/2000/01/rdf-schema#Resource";
inline constexpr std::string_view kRdfsLiteral = "http://www.w3.org/2000/01/rdf-schema#Literal";

inline constexpr std::string_view kOwlClass = "http://www.w3.org/2002/07/owl#Class";
inline constexpr std::string_view kOwlThing = "http://www.w3.org/2002/07/owl#Thing";
inline constexpr std::string_view kObjectProperty = "http://www.w3.org/2002/07/owl#ObjectProperty";
inline constexpr std::string_view kDatatypeProperty = "http://www.w3.org/2002/07/owl#DatatypeProperty";

inline constexpr std::string_view kXsdString = "http://www.w3.org/2001/XMLSchema#string";
inline constexpr std::string_view kXsdBoolean = "http://www.w3.org/2001/XMLSchema#boolean";
inline constexpr std::string_view kXsdInteger = "http://www.w3.org/2001/XMLSchema#integer";
inline constexpr std::string_view kXsdDecimal = "http://www.w3.org/2001/XMLSchema#decimal";
inline constexpr std::string_view kXsdDouble = "http://www.w3.org/2001/XMLSchema#double";
inline constexpr std::string_view kXsdDateTime = "http://www.w3.org/2001/XMLSchema#dateTime";
}  // namespace vocab

enum class TermKind { Iri, BlankNode, Literal };

/// An RDF term. For literals `value` holds the lexical form; `datatype` is
/// empty for simple literals and `lang` is empty unless language-tagged.
struct Term {
    TermKind kind = TermKind::Iri;
    std::string value;
    std::string datatype;
    std::string lang;

    static Term iri(std::string v) { return {TermKind::Iri, std::move(v), {}, {}}; }
    static Term blank(std::string label) { return {TermKind::BlankNode, std::move(label), {}, {}}; }
    static Term literal(std::string lexical, std::string datatype = {}, std::string lang = {}) {
        return {TermKind::Literal, std::move(lexical), std::move(datatype), std::move(lang)};
    }

    bool is_iri() const noexcept { return kind == TermKind::Iri; }
    bool is_literal() const noexcept { return kind == TermKind::Literal; }
    bool is_blank() const noexcept { return kind == TermKind::BlankNode; }

    /// N-Triples surface form, e.g. `<http://x>`, `_:b0`, `"1"^^<...#integer>`.
    std::string to_ntriples() const;

    auto operator<=>(const Term&) const = default;
    bool operator==(const Term&) const = default;
};

struct Triple {
    Term subject;
    Term predicate;
    Term object;

    auto operator<=>(const Triple&) const = default;
    bool operator==(const Triple&) const = default;
};

enum class Format { Turtle, NTriples };

/// Parse "turtle"/"ttl" or "ntriples"/"nt"; throws std::invalid_argument otherwise.
Format parse_format(std::string_view name);

/// Parses an RDF document. N-Triples input is validated against the line-based
/// grammar (no prefixes or abbreviations); Turtle supports prefixes, base,
/// predicate/object lists, blank-node property lists and collections.
/// Throws ParseError with 1-based line/column on malformed input.
std::vector<Triple> parse(std::string_view document, Format format, std::string_view base_iri = {});

/// Escapes a string for use inside a double-quoted N-Triples/SPARQL literal.
std::string escape_string(std::string_view s);

}  // namespace kgdiff::rdf
