#include "kgdiff/sparql_engine.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>
#include <set>

#include "kgdiff/error.hpp"
#include "kgdiff/values.hpp"

namespace kgdiff::sparql {

namespace v = rdf::vocab;

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok { End, Iri, PName, Var, String, Number, LangTag, DoubleCaret, Punct, Word };

struct Token {
    Tok type = Tok::End;
    std::string text;
    std::size_t line = 1, column = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_ws();
            Token t;
            t.line = line_;
            t.column = col_;
            if (pos_ >= src_.size()) {
                out.push_back(t);
                return out;
            }
            char c = src_[pos_];
            if (c == '<' && looks_like_iri()) {
                advance();
                while (src_[pos_] != '>') t.text += advance();
                advance();
                t.type = Tok::Iri;
            } else if (c == '?' || c == '$') {
                advance();
                while (pos_ < src_.size() && (std::isalnum(uc()) || src_[pos_] == '_')) t.text += advance();
                if (t.text.empty()) fail("empty variable name");
                t.type = Tok::Var;
            } else if (c == '"' || c == '\'') {
                t.text = string_literal();
                t.type = Tok::String;
            } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                       (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
                t.text = number();
                t.type = Tok::Number;
            } else if (c == '@') {
                advance();
                while (pos_ < src_.size() && (std::isalnum(uc()) || src_[pos_] == '-')) t.text += advance();
                t.type = Tok::LangTag;
            } else if (c == '^' && peek(1) == '^') {
                advance();
                advance();
                t.type = Tok::DoubleCaret;
            } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == ':') {
                while (pos_ < src_.size() && (std::isalnum(uc()) || src_[pos_] == '_' || src_[pos_] == '-' ||
                                              src_[pos_] == ':' ||
                                              (src_[pos_] == '.' && pos_ + 1 < src_.size() &&
                                               (std::isalnum(static_cast<unsigned char>(src_[pos_ + 1])) ||
                                                src_[pos_ + 1] == '_'))))
                    t.text += advance();
                t.type = t.text.find(':') != std::string::npos ? Tok::PName : Tok::Word;
            } else {
                static const char* two[] = {"!=", "<=", ">=", "&&", "||"};
                t.type = Tok::Punct;
                for (const char* op : two) {
                    if (src_.substr(pos_, 2) == op) {
                        t.text = op;
                        advance();
                        advance();
                        break;
                    }
                }
                if (t.text.empty()) {
                    if (std::string_view("{}().;,=<>!*+-/").find(c) == std::string_view::npos)
                        fail(std::string("unexpected character '") + c + "'");
                    t.text = std::string(1, advance());
                }
            }
            out.push_back(std::move(t));
        }
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0, line_ = 1, col_ = 1;

    unsigned char uc() const { return static_cast<unsigned char>(src_[pos_]); }
    char peek(std::size_t n) const { return pos_ + n < src_.size() ? src_[pos_ + n] : '\0'; }
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col_); }

    char advance() {
        char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void skip_ws() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else if (c == '#') {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else {
                break;
            }
        }
    }

    bool looks_like_iri() const {
        for (std::size_t i = pos_ + 1; i < src_.size(); ++i) {
            char c = src_[i];
            if (c == '>') return true;
            if (std::isspace(static_cast<unsigned char>(c)) || c == '"' || c == '{' || c == '}' || c == '<') return false;
        }
        return false;
    }

    std::string string_literal() {
        char q = advance();
        bool long_form = peek(0) == q && peek(1) == q;
        if (long_form) {
            advance();
            advance();
        }
        std::string out;
        while (true) {
            if (pos_ >= src_.size()) fail("unterminated string");
            if (long_form) {
                if (src_[pos_] == q && peek(1) == q && peek(2) == q) {
                    advance();
                    advance();
                    advance();
                    return out;
                }
            } else if (src_[pos_] == q) {
                advance();
                return out;
            }
            char c = advance();
            if (c == '\\') {
                char e = advance();
                switch (e) {
                    case 't': out += '\t'; break;
                    case 'n': out += '\n'; break;
                    case 'r': out += '\r'; break;
                    case 'b': out += '\b'; break;
                    case 'f': out += '\f'; break;
                    case '"': out += '"'; break;
                    case '\'': out += '\''; break;
                    case '\\': out += '\\'; break;
                    default: fail("unsupported string escape");
                }
            } else {
                out += c;
            }
        }
    }

    std::string number() {
        std::string out;
        while (pos_ < src_.size() && std::isdigit(uc())) out += advance();
        if (pos_ < src_.size() && src_[pos_] == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
            out += advance();
            while (pos_ < src_.size() && std::isdigit(uc())) out += advance();
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            out += advance();
            if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) out += advance();
            while (pos_ < src_.size() && std::isdigit(uc())) out += advance();
        }
        return out;
    }
};

bool keyword(const Token& t, std::string_view word) {
    if (t.type != Tok::Word || t.text.size() != word.size()) return false;
    for (std::size_t i = 0; i < word.size(); ++i)
        if (std::toupper(static_cast<unsigned char>(t.text[i])) != word[i]) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

    Query run() {
        Query q;
        while (true) {
            if (keyword(cur(), "PREFIX")) {
                next();
                const Token& name = cur();
                if (name.type != Tok::PName || name.text.back() != ':') fail("expected prefix name");
                std::string prefix = name.text.substr(0, name.text.size() - 1);
                next();
                if (cur().type != Tok::Iri) fail("expected IRI");
                prefixes_[prefix] = cur().text;
                next();
            } else if (keyword(cur(), "BASE")) {
                next();
                if (cur().type != Tok::Iri) fail("expected IRI");
                next();
            } else {
                break;
            }
        }
        if (!keyword(cur(), "SELECT")) {
            if (cur().type == Tok::Word) throw UnsupportedQueryError("only SELECT queries are supported");
            fail("expected SELECT");
        }
        next();
        if (keyword(cur(), "DISTINCT")) {
            q.distinct = true;
            next();
        } else if (keyword(cur(), "REDUCED")) {
            next();
        }
        if (is_punct("*")) {
            q.select_all = true;
            next();
        } else {
            while (cur().type == Tok::Var || is_punct("(")) {
                if (cur().type == Tok::Var) {
                    q.variables.push_back(cur().text);
                    next();
                    continue;
                }
                next();
                if (!keyword(cur(), "COUNT")) throw UnsupportedQueryError("only COUNT projections are supported");
                next();
                expect("(");
                CountProjection count;
                if (keyword(cur(), "DISTINCT")) {
                    count.distinct = true;
                    next();
                }
                if (is_punct("*")) next();
                else count.expr = expression();
                expect(")");
                if (!keyword(cur(), "AS")) fail("expected AS");
                next();
                if (cur().type != Tok::Var) fail("expected variable");
                count.alias = cur().text;
                next();
                expect(")");
                if (q.count) throw UnsupportedQueryError("at most one aggregate is supported");
                q.count = std::move(count);
            }
            if (q.variables.empty() && !q.count) fail("empty projection");
            if (q.count && !q.variables.empty())
                throw UnsupportedQueryError("mixing aggregates and plain variables needs GROUP BY");
        }
        if (keyword(cur(), "WHERE")) next();
        q.where = group();
        while (cur().type != Tok::End) {
            if (keyword(cur(), "LIMIT")) {
                next();
                q.limit = integer();
            } else if (keyword(cur(), "OFFSET")) {
                next();
                q.offset = integer();
            } else if (cur().type == Tok::Word) {
                throw UnsupportedQueryError("unsupported solution modifier " + cur().text);
            } else {
                fail("unexpected token after query body");
            }
        }
        return q;
    }

private:
    std::vector<Token> toks_;
    std::size_t i_ = 0;
    std::map<std::string, std::string> prefixes_;

    const Token& cur() const { return toks_[i_]; }
    void next() {
        if (i_ + 1 < toks_.size()) ++i_;
    }
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, cur().line, cur().column); }
    bool is_punct(std::string_view p) const { return cur().type == Tok::Punct && cur().text == p; }
    void expect(std::string_view p) {
        if (!is_punct(p)) fail("expected '" + std::string(p) + "'");
        next();
    }
    std::size_t integer() {
        if (cur().type != Tok::Number) fail("expected integer");
        auto n = static_cast<std::size_t>(std::stoull(cur().text));
        next();
        return n;
    }

    std::string expand(const std::string& pname) const {
        auto colon = pname.find(':');
        auto it = prefixes_.find(pname.substr(0, colon));
        if (it == prefixes_.end()) fail("undeclared prefix in " + pname);
        return it->second + pname.substr(colon + 1);
    }

    std::string iri() {
        std::string out;
        if (cur().type == Tok::Iri) out = cur().text;
        else if (cur().type == Tok::PName) out = expand(cur().text);
        else fail("expected IRI");
        next();
        return out;
    }

    rdf::Term literal_term() {
        if (cur().type == Tok::String) {
            std::string lex = cur().text;
            next();
            if (cur().type == Tok::LangTag) {
                std::string lang = cur().text;
                next();
                return rdf::Term::literal(lex, {}, lang);
            }
            if (cur().type == Tok::DoubleCaret) {
                next();
                std::string dt = iri();
                if (dt == v::kXsdString) dt.clear();
                return rdf::Term::literal(lex, dt);
            }
            return rdf::Term::literal(lex);
        }
        if (cur().type == Tok::Number) {
            std::string lex = cur().text;
            next();
            std::string_view dt = lex.find_first_of("eE") != std::string::npos ? v::kXsdDouble
                                  : lex.find('.') != std::string::npos      ? v::kXsdDecimal
                                                                            : v::kXsdInteger;
            return rdf::Term::literal(lex, std::string(dt));
        }
        if (keyword(cur(), "TRUE") || keyword(cur(), "FALSE")) {
            std::string lex = keyword(cur(), "TRUE") ? "true" : "false";
            next();
            return rdf::Term::literal(lex, std::string(v::kXsdBoolean));
        }
        fail("expected literal");
    }

    PatternTerm pattern_term(bool predicate_position) {
        PatternTerm t;
        if (cur().type == Tok::Var) {
            t.variable = cur().text;
            next();
        } else if (predicate_position && keyword(cur(), "A") && cur().text == "a") {
            t.term = rdf::Term::iri(std::string(v::kType));
            next();
        } else if (cur().type == Tok::Iri || cur().type == Tok::PName) {
            t.term = rdf::Term::iri(iri());
        } else if (!predicate_position) {
            if (is_punct("[") || is_punct("(")) throw UnsupportedQueryError("blank node syntax is not supported");
            t.term = literal_term();
        } else {
            fail("expected predicate");
        }
        return t;
    }

    Group group() {
        expect("{");
        Group g;
        while (!is_punct("}")) {
            if (cur().type == Tok::End) fail("unterminated group");
            if (keyword(cur(), "FILTER")) {
                next();
                ExprPtr e;
                if (is_punct("(")) {
                    next();
                    e = expression();
                    expect(")");
                } else {
                    e = primary();
                }
                g.elements.emplace_back(Filter{e});
            } else if (is_punct("{")) {
                Group first = group();
                if (keyword(cur(), "UNION")) {
                    UnionPattern u;
                    u.branches.push_back(std::move(first));
                    while (keyword(cur(), "UNION")) {
                        next();
                        u.branches.push_back(group());
                    }
                    g.elements.emplace_back(std::move(u));
                } else {
                    g.elements.emplace_back(std::move(first));
                }
            } else if (cur().type == Tok::Word && !keyword(cur(), "A") && !keyword(cur(), "TRUE") &&
                       !keyword(cur(), "FALSE")) {
                throw UnsupportedQueryError("unsupported graph pattern keyword " + cur().text);
            } else {
                triples_same_subject(g);
            }
            if (is_punct(".")) next();
        }
        next();
        return g;
    }

    void triples_same_subject(Group& g) {
        PatternTerm s = pattern_term(false);
        while (true) {
            PatternTerm p = pattern_term(true);
            while (true) {
                PatternTerm o = pattern_term(false);
                g.elements.emplace_back(TriplePattern{s, p, o});
                if (!is_punct(",")) break;
                next();
            }
            if (!is_punct(";")) break;
            while (is_punct(";")) next();
            if (is_punct(".") || is_punct("}")) break;
        }
    }

    static ExprPtr make(Expr::Kind kind, std::string name, std::vector<ExprPtr> args = {}) {
        auto e = std::make_shared<Expr>();
        e->kind = kind;
        e->name = std::move(name);
        e->args = std::move(args);
        return e;
    }

    ExprPtr expression() {
        ExprPtr left = conjunction();
        while (is_punct("||")) {
            next();
            left = make(Expr::Kind::Or, "||", {left, conjunction()});
        }
        return left;
    }

    ExprPtr conjunction() {
        ExprPtr left = relational();
        while (is_punct("&&")) {
            next();
            left = make(Expr::Kind::And, "&&", {left, relational()});
        }
        return left;
    }

    ExprPtr relational() {
        ExprPtr left = unary();
        for (const char* op : {"=", "!=", "<", ">", "<=", ">="}) {
            if (is_punct(op)) {
                next();
                return make(Expr::Kind::Compare, op, {left, unary()});
            }
        }
        bool negated_in = false;
        if (keyword(cur(), "NOT")) {
            next();
            if (!keyword(cur(), "IN")) fail("expected IN");
            negated_in = true;
        }
        if (keyword(cur(), "IN")) {
            next();
            expect("(");
            std::vector<ExprPtr> args{left};
            while (!is_punct(")")) {
                args.push_back(expression());
                if (is_punct(",")) next();
                else if (!is_punct(")")) fail("expected ',' or ')'");
            }
            next();
            return make(negated_in ? Expr::Kind::NotIn : Expr::Kind::In, "IN", std::move(args));
        }
        return left;
    }

    ExprPtr unary() {
        if (is_punct("!")) {
            next();
            return make(Expr::Kind::Not, "!", {unary()});
        }
        if (is_punct("+") || is_punct("-") || is_punct("*") || is_punct("/"))
            throw UnsupportedQueryError("arithmetic expressions are not supported");
        return primary();
    }

    std::vector<ExprPtr> arg_list() {
        expect("(");
        std::vector<ExprPtr> args;
        while (!is_punct(")")) {
            args.push_back(expression());
            if (is_punct(",")) next();
            else if (!is_punct(")")) fail("expected ',' or ')'");
        }
        next();
        return args;
    }

    ExprPtr primary() {
        if (is_punct("(")) {
            next();
            ExprPtr e = expression();
            expect(")");
            return e;
        }
        if (cur().type == Tok::Var) {
            auto e = make(Expr::Kind::Variable, cur().text);
            next();
            return e;
        }
        if (cur().type == Tok::Iri || cur().type == Tok::PName) {
            std::string name = iri();
            if (is_punct("(")) return make(Expr::Kind::Cast, name, arg_list());
            auto e = std::make_shared<Expr>();
            e->kind = Expr::Kind::Constant;
            e->constant = rdf::Term::iri(name);
            return e;
        }
        if (cur().type == Tok::Word && !keyword(cur(), "TRUE") && !keyword(cur(), "FALSE")) {
            std::string name = cur().text;
            for (auto& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            static const std::set<std::string> kFunctions = {
                "STR", "LCASE", "UCASE", "CONTAINS", "STRSTARTS", "STRENDS", "REGEX", "BOUND",
                "ISIRI", "ISURI", "ISLITERAL", "ISBLANK", "LANG", "DATATYPE", "SAMETERM", "STRLEN"};
            if (!kFunctions.count(name)) throw UnsupportedQueryError("unsupported function " + cur().text);
            next();
            return make(Expr::Kind::Call, name, arg_list());
        }
        auto e = std::make_shared<Expr>();
        e->kind = Expr::Kind::Constant;
        e->constant = literal_term();
        return e;
    }
};

// ---------------------------------------------------------------------------
// Evaluation

using Solution = std::map<std::string, rdf::Term>;

struct Value {
    enum class Type { Iri, Blank, String, Number, Boolean, DateTime, Other };
    Type type = Type::Other;
    std::string str;   // IRI, label, lexical form
    std::string lang;  // String only
    std::string datatype;
    double num = 0;
    bool flag = false;

    static Value boolean(bool b) {
        Value v;
        v.type = Type::Boolean;
        v.flag = b;
        v.datatype = std::string(rdf::vocab::kXsdBoolean);
        v.str = b ? "true" : "false";
        return v;
    }
    static Value string(std::string s, std::string lang = {}) {
        Value v;
        v.type = Type::String;
        v.str = std::move(s);
        v.lang = std::move(lang);
        return v;
    }
};

using Result = std::optional<Value>;  // nullopt = SPARQL expression error

bool numeric_datatype(const std::string& dt) {
    return range_kind_for_datatype(dt) == RangeKind::Numeric;
}

Result from_term(const rdf::Term& t) {
    Value out;
    switch (t.kind) {
        case rdf::TermKind::Iri:
            out.type = Value::Type::Iri;
            out.str = t.value;
            return out;
        case rdf::TermKind::BlankNode:
            out.type = Value::Type::Blank;
            out.str = t.value;
            return out;
        case rdf::TermKind::Literal: break;
    }
    out.str = t.value;
    out.datatype = t.datatype;
    if (t.datatype.empty()) return Value::string(t.value, t.lang);
    if (numeric_datatype(t.datatype)) {
        if (auto n = values::parse_number(t.value)) {
            out.type = Value::Type::Number;
            out.num = *n;
            return out;
        }
    } else if (t.datatype == v::kXsdBoolean) {
        if (auto b = values::parse_boolean(t.value)) return Value::boolean(*b);
    } else if (t.datatype == v::kXsdDateTime || t.datatype == std::string(v::kXsd) + "date") {
        if (auto d = values::parse_datetime(t.value)) {
            out.type = Value::Type::DateTime;
            out.num = *d;
            return out;
        }
    }
    out.type = Value::Type::Other;
    return out;
}

std::optional<bool> effective_boolean(const Result& r) {
    if (!r) return std::nullopt;
    switch (r->type) {
        case Value::Type::Boolean: return r->flag;
        case Value::Type::Number: return r->num != 0;
        case Value::Type::String: return !r->str.empty();
        default: return std::nullopt;
    }
}

bool is_literal(const Value& v) { return v.type != Value::Type::Iri && v.type != Value::Type::Blank; }

std::optional<bool> equal(const Value& a, const Value& b) {
    using T = Value::Type;
    if (!is_literal(a) || !is_literal(b)) return a.type == b.type && a.str == b.str;
    if (a.type == T::Number && b.type == T::Number) return a.num == b.num;
    if (a.type == T::DateTime && b.type == T::DateTime) return a.num == b.num;
    if (a.type == T::Boolean && b.type == T::Boolean) return a.flag == b.flag;
    if (a.type == T::String && b.type == T::String) return a.str == b.str && a.lang == b.lang;
    if (a.str == b.str && a.datatype == b.datatype && a.lang == b.lang) return true;
    return std::nullopt;
}

std::optional<int> order(const Value& a, const Value& b) {
    using T = Value::Type;
    auto cmp = [](auto x, auto y) { return x < y ? -1 : (y < x ? 1 : 0); };
    if ((a.type == T::Number && b.type == T::Number) || (a.type == T::DateTime && b.type == T::DateTime))
        return cmp(a.num, b.num);
    if (a.type == T::Boolean && b.type == T::Boolean) return cmp(a.flag, b.flag);
    if (a.type == T::String && b.type == T::String && a.lang.empty() && b.lang.empty()) return cmp(a.str, b.str);
    return std::nullopt;
}

Result string_arg(const Result& r) {
    if (!r || r->type != Value::Type::String) return std::nullopt;
    return r;
}

Result eval(const Expr& e, const Solution& s);

Result cast(const std::string& target, const Result& arg) {
    if (!arg) return std::nullopt;
    const Value& a = *arg;
    if (a.type == Value::Type::Blank) return std::nullopt;
    if (target == v::kXsdString) return Value::string(a.str);
    if (a.type == Value::Type::Iri) return std::nullopt;
    if (numeric_datatype(target)) {
        auto n = values::parse_number(a.str);
        if (!n) return std::nullopt;
        Value out;
        out.type = Value::Type::Number;
        out.num = *n;
        out.datatype = target;
        out.str = values::format_number(*n);
        return out;
    }
    if (target == v::kXsdDateTime) {
        auto d = values::parse_datetime(a.str);
        if (!d) return std::nullopt;
        Value out;
        out.type = Value::Type::DateTime;
        out.num = *d;
        out.datatype = target;
        out.str = a.str;
        return out;
    }
    if (target == v::kXsdBoolean) {
        auto b = values::parse_boolean(a.str);
        if (!b) return std::nullopt;
        return Value::boolean(*b);
    }
    throw UnsupportedQueryError("unsupported cast to <" + target + ">");
}

Result call(const Expr& e, const Solution& s) {
    const auto& n = e.name;
    auto arity = [&](std::size_t k) {
        if (e.args.size() != k)
            throw UnsupportedQueryError(n + " expects " + std::to_string(k) + " argument(s)");
    };
    if (n == "BOUND") {
        arity(1);
        if (e.args[0]->kind != Expr::Kind::Variable) throw UnsupportedQueryError("BOUND expects a variable");
        return Value::boolean(s.count(e.args[0]->name) > 0);
    }
    if (n == "STR") {
        arity(1);
        Result a = eval(*e.args[0], s);
        if (!a || a->type == Value::Type::Blank) return std::nullopt;
        return Value::string(a->str);
    }
    if (n == "LCASE" || n == "UCASE") {
        arity(1);
        Result a = string_arg(eval(*e.args[0], s));
        if (!a) return std::nullopt;
        std::string out = a->str;
        for (char& c : out) {
            if (n == "LCASE" && c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
            if (n == "UCASE" && c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
        }
        return Value::string(out, a->lang);
    }
    if (n == "STRLEN") {
        arity(1);
        Result a = string_arg(eval(*e.args[0], s));
        if (!a) return std::nullopt;
        Value out;
        out.type = Value::Type::Number;
        out.num = static_cast<double>(a->str.size());
        return out;
    }
    if (n == "CONTAINS" || n == "STRSTARTS" || n == "STRENDS") {
        arity(2);
        Result a = string_arg(eval(*e.args[0], s));
        Result b = string_arg(eval(*e.args[1], s));
        if (!a || !b) return std::nullopt;
        const std::string& x = a->str;
        const std::string& y = b->str;
        if (n == "CONTAINS") return Value::boolean(x.find(y) != std::string::npos);
        if (n == "STRSTARTS") return Value::boolean(x.rfind(y, 0) == 0);
        return Value::boolean(x.size() >= y.size() && x.compare(x.size() - y.size(), y.size(), y) == 0);
    }
    if (n == "REGEX") {
        if (e.args.size() != 2 && e.args.size() != 3) throw UnsupportedQueryError("REGEX expects 2 or 3 arguments");
        Result text = string_arg(eval(*e.args[0], s));
        Result pattern = string_arg(eval(*e.args[1], s));
        if (!text || !pattern) return std::nullopt;
        auto flags = std::regex::ECMAScript;
        if (e.args.size() == 3) {
            Result f = string_arg(eval(*e.args[2], s));
            if (!f) return std::nullopt;
            if (f->str.find('i') != std::string::npos) flags |= std::regex::icase;
        }
        try {
            return Value::boolean(std::regex_search(text->str, std::regex(pattern->str, flags)));
        } catch (const std::regex_error&) {
            return std::nullopt;
        }
    }
    if (n == "ISIRI" || n == "ISURI" || n == "ISLITERAL" || n == "ISBLANK") {
        arity(1);
        Result a = eval(*e.args[0], s);
        if (!a) return std::nullopt;
        if (n == "ISBLANK") return Value::boolean(a->type == Value::Type::Blank);
        if (n == "ISLITERAL") return Value::boolean(is_literal(*a));
        return Value::boolean(a->type == Value::Type::Iri);
    }
    if (n == "LANG") {
        arity(1);
        Result a = eval(*e.args[0], s);
        if (!a || !is_literal(*a)) return std::nullopt;
        return Value::string(a->lang);
    }
    if (n == "DATATYPE") {
        arity(1);
        Result a = eval(*e.args[0], s);
        if (!a || !is_literal(*a)) return std::nullopt;
        Value out;
        out.type = Value::Type::Iri;
        out.str = a->type == Value::Type::String ? (a->lang.empty() ? std::string(v::kXsdString) : std::string(v::kLangString))
                                                 : a->datatype;
        return out;
    }
    if (n == "SAMETERM") {
        arity(2);
        Result a = eval(*e.args[0], s);
        Result b = eval(*e.args[1], s);
        if (!a || !b) return std::nullopt;
        return Value::boolean(a->type == b->type && a->str == b->str && a->lang == b->lang &&
                              a->datatype == b->datatype);
    }
    throw UnsupportedQueryError("unsupported function " + n);
}

Result eval(const Expr& e, const Solution& s) {
    switch (e.kind) {
        case Expr::Kind::Variable: {
            auto it = s.find(e.name);
            if (it == s.end()) return std::nullopt;
            return from_term(it->second);
        }
        case Expr::Kind::Constant: return from_term(e.constant);
        case Expr::Kind::Or: {
            auto a = effective_boolean(eval(*e.args[0], s));
            auto b = effective_boolean(eval(*e.args[1], s));
            if ((a && *a) || (b && *b)) return Value::boolean(true);
            if (a && b) return Value::boolean(false);
            return std::nullopt;
        }
        case Expr::Kind::And: {
            auto a = effective_boolean(eval(*e.args[0], s));
            auto b = effective_boolean(eval(*e.args[1], s));
            if ((a && !*a) || (b && !*b)) return Value::boolean(false);
            if (a && b) return Value::boolean(true);
            return std::nullopt;
        }
        case Expr::Kind::Not: {
            auto a = effective_boolean(eval(*e.args[0], s));
            if (!a) return std::nullopt;
            return Value::boolean(!*a);
        }
        case Expr::Kind::Compare: {
            Result a = eval(*e.args[0], s);
            Result b = eval(*e.args[1], s);
            if (!a || !b) return std::nullopt;
            if (e.name == "=" || e.name == "!=") {
                auto eq = equal(*a, *b);
                if (!eq) return std::nullopt;
                return Value::boolean(e.name == "=" ? *eq : !*eq);
            }
            auto c = order(*a, *b);
            if (!c) return std::nullopt;
            if (e.name == "<") return Value::boolean(*c < 0);
            if (e.name == "<=") return Value::boolean(*c <= 0);
            if (e.name == ">") return Value::boolean(*c > 0);
            return Value::boolean(*c >= 0);
        }
        case Expr::Kind::In:
        case Expr::Kind::NotIn: {
            Result a = eval(*e.args[0], s);
            if (!a) return std::nullopt;
            bool found = false, error = false;
            for (std::size_t i = 1; i < e.args.size(); ++i) {
                Result b = eval(*e.args[i], s);
                auto eq = b ? equal(*a, *b) : std::nullopt;
                if (!eq) error = true;
                else if (*eq) found = true;
            }
            if (found) return Value::boolean(e.kind == Expr::Kind::In);
            if (error) return std::nullopt;
            return Value::boolean(e.kind == Expr::Kind::NotIn);
        }
        case Expr::Kind::Call: return call(e, s);
        case Expr::Kind::Cast: {
            if (e.args.size() != 1) throw UnsupportedQueryError("casts take one argument");
            return cast(e.name, eval(*e.args[0], s));
        }
    }
    return std::nullopt;
}

std::optional<rdf::Term> resolve(const PatternTerm& t, const Solution& s) {
    if (!t.variable) return t.term;
    auto it = s.find(*t.variable);
    if (it == s.end()) return std::nullopt;
    return it->second;
}

bool bind(Solution& s, const PatternTerm& t, const rdf::Term& value) {
    if (!t.variable) return true;
    auto [it, inserted] = s.emplace(*t.variable, value);
    return inserted || it->second == value;
}

std::size_t boundness(const TriplePattern& p, const std::set<std::string>& bound) {
    std::size_t n = 0;
    for (const PatternTerm* t : {&p.subject, &p.predicate, &p.object})
        if (!t->variable || bound.count(*t->variable)) ++n;
    return n;
}

void collect_vars(const Group& g, std::vector<std::string>& out) {
    auto add = [&](const PatternTerm& t) {
        if (t.variable && std::find(out.begin(), out.end(), *t.variable) == out.end()) out.push_back(*t.variable);
    };
    for (const auto& el : g.elements) {
        if (const auto* tp = std::get_if<TriplePattern>(&el)) {
            add(tp->subject);
            add(tp->predicate);
            add(tp->object);
        } else if (const auto* u = std::get_if<UnionPattern>(&el)) {
            for (const auto& b : u->branches) collect_vars(b, out);
        } else if (const auto* sub = std::get_if<Group>(&el)) {
            collect_vars(*sub, out);
        }
    }
}

std::vector<Solution> eval_group(const Group& g, const TripleStore& store, std::vector<Solution> input);

std::vector<Solution> join_pattern(const TriplePattern& p, const TripleStore& store, const std::vector<Solution>& in) {
    std::vector<Solution> out;
    for (const auto& s : in) {
        for (const auto* t : store.match(resolve(p.subject, s), resolve(p.predicate, s), resolve(p.object, s))) {
            Solution ext = s;
            if (bind(ext, p.subject, t->subject) && bind(ext, p.predicate, t->predicate) &&
                bind(ext, p.object, t->object))
                out.push_back(std::move(ext));
        }
    }
    return out;
}

std::vector<Solution> eval_group(const Group& g, const TripleStore& store, std::vector<Solution> sols) {
    std::vector<const Filter*> filters;
    std::set<std::string> bound;
    for (const auto& s : sols)
        for (const auto& [k, _] : s) bound.insert(k);

    std::size_t i = 0;
    const auto& els = g.elements;
    while (i < els.size()) {
        if (const auto* f = std::get_if<Filter>(&els[i])) {
            filters.push_back(f);
            ++i;
            continue;
        }
        if (std::holds_alternative<TriplePattern>(els[i])) {
            // A run of triple patterns is a BGP: join greedily, most-bound first.
            std::vector<const TriplePattern*> bgp;
            while (i < els.size()) {
                if (const auto* tp = std::get_if<TriplePattern>(&els[i])) {
                    bgp.push_back(tp);
                    ++i;
                } else if (const auto* f = std::get_if<Filter>(&els[i])) {
                    filters.push_back(f);
                    ++i;
                } else {
                    break;
                }
            }
            while (!bgp.empty()) {
                auto best = std::max_element(bgp.begin(), bgp.end(), [&](const auto* a, const auto* b) {
                    return boundness(*a, bound) < boundness(*b, bound);
                });
                sols = join_pattern(**best, store, sols);
                for (const PatternTerm* t : {&(*best)->subject, &(*best)->predicate, &(*best)->object})
                    if (t->variable) bound.insert(*t->variable);
                bgp.erase(best);
            }
            continue;
        }
        if (const auto* u = std::get_if<UnionPattern>(&els[i])) {
            // Branches carry no filters over outer variables, so seeding each
            // branch with the current solutions equals Join(current, Union).
            std::vector<Solution> out;
            for (const auto& branch : u->branches) {
                auto part = eval_group(branch, store, sols);
                out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
            }
            sols = std::move(out);
            std::vector<std::string> vars;
            collect_vars(Group{{els[i]}}, vars);
            bound.insert(vars.begin(), vars.end());
        } else if (const auto* sub = std::get_if<Group>(&els[i])) {
            sols = eval_group(*sub, store, std::move(sols));
            std::vector<std::string> vars;
            collect_vars(*sub, vars);
            bound.insert(vars.begin(), vars.end());
        }
        ++i;
    }
    if (filters.empty()) return sols;
    std::vector<Solution> kept;
    for (auto& s : sols) {
        bool ok = true;
        for (const auto* f : filters) {
            auto b = effective_boolean(eval(*f->expr, s));
            if (!b || !*b) {
                ok = false;
                break;
            }
        }
        if (ok) kept.push_back(std::move(s));
    }
    return kept;
}

}  // namespace

Query parse_query(std::string_view text) {
    Lexer lexer(text);
    Parser parser(lexer.run());
    return parser.run();
}

ResultTable evaluate(const Query& q, const TripleStore& store) {
    std::vector<Solution> sols = eval_group(q.where, store, {Solution{}});
    ResultTable table;
    if (q.count) {
        table.columns = {q.count->alias};
        std::size_t n = 0;
        if (!q.count->expr) {
            if (q.count->distinct) {
                std::set<Solution> unique(sols.begin(), sols.end());
                n = unique.size();
            } else {
                n = sols.size();
            }
        } else {
            std::set<std::string> seen;
            for (const auto& s : sols) {
                Result r = eval(*q.count->expr, s);
                if (!r) continue;
                if (q.count->distinct && !seen.insert(std::to_string(static_cast<int>(r->type)) + "|" + r->str).second)
                    continue;
                ++n;
            }
        }
        table.rows.push_back({rdf::Term::literal(std::to_string(n), std::string(v::kXsdInteger))});
        return table;
    }
    if (q.select_all) collect_vars(q.where, table.columns);
    else table.columns = q.variables;

    std::set<std::vector<Cell>> seen;
    std::size_t skipped = 0;
    for (const auto& s : sols) {
        std::vector<Cell> row;
        row.reserve(table.columns.size());
        for (const auto& c : table.columns) {
            auto it = s.find(c);
            row.push_back(it == s.end() ? Cell{} : Cell{it->second});
        }
        if (q.distinct && !seen.insert(row).second) continue;
        if (skipped < q.offset) {
            ++skipped;
            continue;
        }
        if (q.limit && table.rows.size() >= *q.limit) break;
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace kgdiff::sparql
