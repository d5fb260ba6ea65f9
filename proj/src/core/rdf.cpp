#include "kgdiff/rdf.hpp"

#include <cctype>
#include <map>
#include <stdexcept>

#include "kgdiff/error.hpp"

namespace kgdiff::rdf {

std::string escape_string(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    return out;
}

std::string Term::to_ntriples() const {
    switch (kind) {
        case TermKind::Iri: return "<" + value + ">";
        case TermKind::BlankNode: return "_:" + value;
        case TermKind::Literal: {
            std::string out = "\"" + escape_string(value) + "\"";
            if (!lang.empty()) {
                out += "@" + lang;
            } else if (!datatype.empty()) {
                out += "^^<" + datatype + ">";
            }
            return out;
        }
    }
    return {};
}

Format parse_format(std::string_view name) {
    if (name == "turtle" || name == "ttl") return Format::Turtle;
    if (name == "ntriples" || name == "nt" || name == "n-triples") return Format::NTriples;
    throw std::invalid_argument("unknown RDF format: " + std::string(name));
}

namespace {

void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

bool is_pn_chars_base(unsigned char c) {
    return std::isalpha(c) || c >= 0x80;
}

bool is_pn_chars(unsigned char c) {
    return is_pn_chars_base(c) || std::isdigit(c) || c == '_' || c == '-';
}

class Parser {
public:
    Parser(std::string_view doc, bool ntriples, std::string_view base)
        : doc_(doc), ntriples_(ntriples), base_(base) {}

    std::vector<Triple> run() {
        skip_ws();
        while (!eof()) {
            if (!ntriples_ && try_directive()) {
                skip_ws();
                continue;
            }
            statement();
            skip_ws();
        }
        return std::move(out_);
    }

private:
    std::string_view doc_;
    bool ntriples_;
    std::string base_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
    std::map<std::string, std::string, std::less<>> prefixes_;
    std::vector<Triple> out_;
    std::size_t blank_counter_ = 0;

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col_); }

    bool eof() const { return pos_ >= doc_.size(); }
    char peek(std::size_t ahead = 0) const {
        return pos_ + ahead < doc_.size() ? doc_[pos_ + ahead] : '\0';
    }
    char get() {
        if (eof()) fail("unexpected end of document");
        char c = doc_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }
    void expect(char c) {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        get();
    }
    bool starts_with_ci(std::string_view word) const {
        if (doc_.size() - pos_ < word.size()) return false;
        for (std::size_t i = 0; i < word.size(); ++i) {
            if (std::toupper(static_cast<unsigned char>(doc_[pos_ + i])) !=
                std::toupper(static_cast<unsigned char>(word[i])))
                return false;
        }
        return true;
    }

    void skip_ws() {
        while (!eof()) {
            char c = peek();
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                get();
            } else if (c == '#') {
                while (!eof() && peek() != '\n') get();
            } else {
                break;
            }
        }
    }

    std::string fresh_blank() { return "genid" + std::to_string(blank_counter_++); }

    bool try_directive() {
        if (peek() == '@') {
            if (starts_with_ci("@prefix")) {
                for (int i = 0; i < 7; ++i) get();
                prefix_body();
                skip_ws();
                expect('.');
                return true;
            }
            if (starts_with_ci("@base")) {
                for (int i = 0; i < 5; ++i) get();
                skip_ws();
                base_ = iri_ref();
                skip_ws();
                expect('.');
                return true;
            }
            fail("unknown directive");
        }
        auto boundary = [&](std::size_t n) {
            char c = peek(n);
            return c == ' ' || c == '\t' || c == '\n' || c == '\r';
        };
        if (starts_with_ci("PREFIX") && boundary(6)) {
            for (int i = 0; i < 6; ++i) get();
            prefix_body();
            return true;
        }
        if (starts_with_ci("BASE") && boundary(4)) {
            for (int i = 0; i < 4; ++i) get();
            skip_ws();
            base_ = iri_ref();
            return true;
        }
        return false;
    }

    void prefix_body() {
        skip_ws();
        std::string name;
        while (!eof() && peek() != ':') {
            unsigned char c = static_cast<unsigned char>(peek());
            if (!is_pn_chars(c) && c != '.') fail("invalid prefix name");
            name += get();
        }
        expect(':');
        skip_ws();
        prefixes_[name] = iri_ref();
    }

    std::string resolve(const std::string& iri) const {
        if (base_.empty()) return iri;
        if (iri.find(':') != std::string::npos) return iri;
        if (iri.empty()) return base_;
        if (iri[0] == '#') {
            auto hash = base_.find('#');
            return base_.substr(0, hash) + iri;
        }
        auto slash = base_.rfind('/');
        return (slash == std::string::npos ? base_ : base_.substr(0, slash + 1)) + iri;
    }

    std::uint32_t hex_escape(int digits) {
        std::uint32_t cp = 0;
        for (int i = 0; i < digits; ++i) {
            char c = get();
            cp <<= 4;
            if (c >= '0' && c <= '9') cp |= static_cast<std::uint32_t>(c - '0');
            else if (c >= 'a' && c <= 'f') cp |= static_cast<std::uint32_t>(c - 'a' + 10);
            else if (c >= 'A' && c <= 'F') cp |= static_cast<std::uint32_t>(c - 'A' + 10);
            else fail("invalid hex escape");
        }
        return cp;
    }

    std::string iri_ref() {
        expect('<');
        std::string out;
        while (true) {
            if (eof()) fail("unterminated IRI");
            char c = get();
            if (c == '>') break;
            if (c == '\\') {
                char e = get();
                if (e == 'u') append_utf8(out, hex_escape(4));
                else if (e == 'U') append_utf8(out, hex_escape(8));
                else fail("invalid escape in IRI");
                continue;
            }
            if (c == ' ' || c == '\n' || c == '<' || c == '"' || c == '{' || c == '}' || c == '|' ||
                c == '^' || c == '`')
                fail("invalid character in IRI");
            out += c;
        }
        return ntriples_ ? out : resolve(out);
    }

    std::string prefixed_name() {
        std::string prefix;
        while (!eof() && peek() != ':') {
            unsigned char c = static_cast<unsigned char>(peek());
            if (!is_pn_chars(c) && c != '.') fail("invalid prefixed name");
            prefix += get();
        }
        expect(':');
        auto it = prefixes_.find(prefix);
        if (it == prefixes_.end()) fail("undeclared prefix '" + prefix + "'");
        std::string local;
        while (!eof()) {
            unsigned char c = static_cast<unsigned char>(peek());
            if (is_pn_chars(c) || c == ':') {
                local += get();
            } else if (c == '.') {
                // a dot is part of the name only when followed by a name char
                unsigned char next = static_cast<unsigned char>(peek(1));
                if (is_pn_chars(next) || next == ':' || next == '%' || next == '\\') local += get();
                else break;
            } else if (c == '%') {
                local += get();
                local += get();
                local += get();
            } else if (c == '\\') {
                get();
                local += get();
            } else {
                break;
            }
        }
        return it->second + local;
    }

    std::string blank_label() {
        expect('_');
        expect(':');
        std::string label;
        while (!eof()) {
            unsigned char c = static_cast<unsigned char>(peek());
            if (is_pn_chars(c)) {
                label += get();
            } else if (c == '.' && is_pn_chars(static_cast<unsigned char>(peek(1)))) {
                label += get();
            } else {
                break;
            }
        }
        if (label.empty()) fail("empty blank node label");
        return "b_" + label;
    }

    Term iri_term() {
        if (peek() == '<') return Term::iri(iri_ref());
        if (ntriples_) fail("expected IRI");
        return Term::iri(prefixed_name());
    }

    std::string string_body() {
        char quote = get();
        bool long_form = peek() == quote && peek(1) == quote;
        if (long_form) {
            if (ntriples_) fail("long strings are not allowed in N-Triples");
            get();
            get();
        }
        std::string out;
        while (true) {
            if (eof()) fail("unterminated string");
            if (long_form) {
                if (peek() == quote && peek(1) == quote && peek(2) == quote) {
                    get();
                    get();
                    get();
                    break;
                }
            } else if (peek() == quote) {
                get();
                break;
            }
            char c = get();
            if (!long_form && (c == '\n' || c == '\r')) fail("newline in string");
            if (c == '\\') {
                char e = get();
                switch (e) {
                    case 't': out += '\t'; break;
                    case 'b': out += '\b'; break;
                    case 'n': out += '\n'; break;
                    case 'r': out += '\r'; break;
                    case 'f': out += '\f'; break;
                    case '"': out += '"'; break;
                    case '\'': out += '\''; break;
                    case '\\': out += '\\'; break;
                    case 'u': append_utf8(out, hex_escape(4)); break;
                    case 'U': append_utf8(out, hex_escape(8)); break;
                    default: fail("invalid string escape");
                }
                continue;
            }
            out += c;
        }
        return out;
    }

    Term literal() {
        char c = peek();
        if (c == '"' || (c == '\'' && !ntriples_)) {
            std::string lexical = string_body();
            if (peek() == '@') {
                get();
                std::string lang;
                while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '-'))
                    lang += get();
                if (lang.empty()) fail("empty language tag");
                return Term::literal(std::move(lexical), {}, std::move(lang));
            }
            if (peek() == '^' && peek(1) == '^') {
                get();
                get();
                Term dt = iri_term();
                std::string datatype = dt.value == vocab::kXsdString ? std::string() : dt.value;
                return Term::literal(std::move(lexical), std::move(datatype));
            }
            return Term::literal(std::move(lexical));
        }
        if (ntriples_) fail("expected literal");
        if (starts_with_ci("true") && !is_pn_chars(static_cast<unsigned char>(peek(4)))) {
            for (int i = 0; i < 4; ++i) get();
            return Term::literal("true", std::string(vocab::kXsdBoolean));
        }
        if (starts_with_ci("false") && !is_pn_chars(static_cast<unsigned char>(peek(5)))) {
            for (int i = 0; i < 5; ++i) get();
            return Term::literal("false", std::string(vocab::kXsdBoolean));
        }
        return numeric_literal();
    }

    Term numeric_literal() {
        std::string lex;
        if (peek() == '+' || peek() == '-') lex += get();
        bool digits = false;
        while (std::isdigit(static_cast<unsigned char>(peek()))) {
            lex += get();
            digits = true;
        }
        bool decimal = false;
        if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
            decimal = true;
            lex += get();
            while (std::isdigit(static_cast<unsigned char>(peek()))) lex += get();
            digits = true;
        }
        bool exponent = false;
        if (digits && (peek() == 'e' || peek() == 'E')) {
            exponent = true;
            lex += get();
            if (peek() == '+' || peek() == '-') lex += get();
            if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("malformed exponent");
            while (std::isdigit(static_cast<unsigned char>(peek()))) lex += get();
        }
        if (!digits) fail("expected a term");
        std::string_view dt = exponent ? vocab::kXsdDouble : decimal ? vocab::kXsdDecimal : vocab::kXsdInteger;
        return Term::literal(std::move(lex), std::string(dt));
    }

    Term subject() {
        char c = peek();
        if (c == '<') return Term::iri(iri_ref());
        if (c == '_') return Term::blank(blank_label());
        if (ntriples_) fail("expected subject");
        if (c == '(') return collection();
        if (c == '[') return blank_property_list();
        return Term::iri(prefixed_name());
    }

    Term predicate() {
        if (!ntriples_ && peek() == 'a') {
            char n = peek(1);
            if (n == ' ' || n == '\t' || n == '\n' || n == '\r' || n == '<' || n == '"' || n == '[' || n == '_') {
                get();
                return Term::iri(std::string(vocab::kType));
            }
        }
        return iri_term();
    }

    Term object() {
        char c = peek();
        if (c == '<') return Term::iri(iri_ref());
        if (c == '_') return Term::blank(blank_label());
        if (c == '"' || c == '\'') return literal();
        if (ntriples_) fail("expected object");
        if (c == '(') return collection();
        if (c == '[') return blank_property_list();
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.') return literal();
        if ((starts_with_ci("true") && !is_pn_chars(static_cast<unsigned char>(peek(4)))) ||
            (starts_with_ci("false") && !is_pn_chars(static_cast<unsigned char>(peek(5)))))
            return literal();
        return Term::iri(prefixed_name());
    }

    Term blank_property_list() {
        expect('[');
        skip_ws();
        Term node = Term::blank(fresh_blank());
        if (peek() != ']') {
            predicate_object_list(node);
            skip_ws();
        }
        expect(']');
        return node;
    }

    Term collection() {
        expect('(');
        skip_ws();
        std::vector<Term> items;
        while (peek() != ')') {
            if (eof()) fail("unterminated collection");
            items.push_back(object());
            skip_ws();
        }
        get();
        if (items.empty()) return Term::iri(std::string(vocab::kNil));
        Term head = Term::blank(fresh_blank());
        Term cur = head;
        for (std::size_t i = 0; i < items.size(); ++i) {
            out_.push_back({cur, Term::iri(std::string(vocab::kFirst)), items[i]});
            Term next = i + 1 < items.size() ? Term::blank(fresh_blank()) : Term::iri(std::string(vocab::kNil));
            out_.push_back({cur, Term::iri(std::string(vocab::kRest)), next});
            cur = next;
        }
        return head;
    }

    void predicate_object_list(const Term& subj) {
        while (true) {
            Term pred = predicate();
            skip_ws();
            while (true) {
                Term obj = object();
                out_.push_back({subj, pred, std::move(obj)});
                skip_ws();
                if (peek() != ',') break;
                get();
                skip_ws();
            }
            if (peek() != ';') return;
            while (peek() == ';') {
                get();
                skip_ws();
            }
            if (peek() == '.' || peek() == ']' || eof()) return;
        }
    }

    void statement() {
        if (ntriples_) {
            Term s = subject();
            skip_inline_ws();
            Term p = iri_term();
            skip_inline_ws();
            Term o = object();
            skip_inline_ws();
            expect('.');
            out_.push_back({std::move(s), std::move(p), std::move(o)});
            skip_inline_ws();
            if (!eof() && peek() == '#') {
                while (!eof() && peek() != '\n') get();
            }
            if (!eof() && peek() != '\n' && peek() != '\r') fail("expected end of line");
            return;
        }
        bool bare_blank_list = peek() == '[';
        Term s = subject();
        skip_ws();
        if (bare_blank_list && peek() == '.') {
            get();
            return;
        }
        predicate_object_list(s);
        skip_ws();
        expect('.');
    }

    void skip_inline_ws() {
        while (peek() == ' ' || peek() == '\t') get();
    }
};

}  // namespace

std::vector<Triple> parse(std::string_view document, Format format, std::string_view base_iri) {
    Parser parser(document, format == Format::NTriples, base_iri);
    return parser.run();
}

}  // namespace kgdiff::rdf
