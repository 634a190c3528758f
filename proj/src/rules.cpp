#include "dietks/rules.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <sstream>

namespace dietks::rules {

namespace {

enum class Tok { ident, number, op, colon, assign, end };

struct Token {
    Tok kind;
    std::string text;
    std::size_t line;
    std::size_t column;
};

bool ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
bool digit(char c) { return c >= '0' && c <= '9'; }

bool is_keyword(std::string_view s) {
    return s == "rule" || s == "if" || s == "and" || s == "then" || s == "set" || s == "true" || s == "false";
}

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t line = 1, col = 1, i = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k, ++i) {
            if (text[i] == '\n') { ++line; col = 1; }
            else ++col;
        }
    };
    while (i < text.size()) {
        const char c = text[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') { advance(1); continue; }
        if (c == '#') {
            while (i < text.size() && text[i] != '\n') advance(1);
            continue;
        }
        const std::size_t tl = line, tc = col, start = i;
        if (ident_start(c)) {
            std::size_t j = i;
            while (j < text.size() && ident_char(text[j])) ++j;
            out.push_back({Tok::ident, std::string(text.substr(start, j - start)), tl, tc});
            advance(j - i);
        } else if (digit(c) || (c == '-' && i + 1 < text.size() && digit(text[i + 1]))) {
            std::size_t j = i + 1;
            while (j < text.size() && digit(text[j])) ++j;
            if (j + 1 < text.size() && text[j] == '.' && digit(text[j + 1])) {
                ++j;
                while (j < text.size() && digit(text[j])) ++j;
            }
            if (j < text.size() && ident_char(text[j]))
                throw RuleParseError(tl, tc, "malformed number");
            out.push_back({Tok::number, std::string(text.substr(start, j - start)), tl, tc});
            advance(j - i);
        } else if (c == '<' || c == '>' || c == '!' || c == '=') {
            const bool two = i + 1 < text.size() && text[i + 1] == '=';
            if (c == '!' && !two) throw RuleParseError(tl, tc, "unexpected character '!'");
            if (c == '=' && !two) {
                out.push_back({Tok::assign, "=", tl, tc});
                advance(1);
            } else {
                out.push_back({Tok::op, std::string(text.substr(start, two ? 2 : 1)), tl, tc});
                advance(two ? 2 : 1);
            }
        } else if (c == ':') {
            out.push_back({Tok::colon, ":", tl, tc});
            advance(1);
        } else {
            const auto b = static_cast<unsigned char>(c);
            std::ostringstream msg;
            msg << "unexpected character ";
            if (b >= 0x20 && b < 0x7f) msg << '\'' << c << '\'';
            else msg << "byte 0x" << std::hex << static_cast<int>(b);
            throw RuleParseError(tl, tc, msg.str());
        }
    }
    out.push_back({Tok::end, "", line, col});
    return out;
}

Cmp cmp_from(std::string_view s) {
    if (s == "<") return Cmp::lt;
    if (s == "<=") return Cmp::le;
    if (s == ">") return Cmp::gt;
    if (s == ">=") return Cmp::ge;
    if (s == "==") return Cmp::eq;
    return Cmp::ne;
}

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

    RuleSet run() {
        RuleSet rs;
        std::set<std::string> names;
        while (peek().kind != Tok::end) {
            const Token& kw = peek();
            if (!is_ident(kw, "rule")) fail(kw, "expected 'rule'");
            next();
            const Token& name = next();
            if (name.kind != Tok::ident || is_keyword(name.text)) fail(name, "expected rule name");
            if (!names.insert(name.text).second) fail(name, "duplicate rule name '" + name.text + "'");
            Rule r;
            r.name = name.text;
            r.source_order = rs.rules.size();
            expect(Tok::colon, "expected ':' after rule name");
            expect_keyword("if");
            r.conditions.push_back(condition());
            while (is_ident(peek(), "and")) {
                next();
                r.conditions.push_back(condition());
            }
            expect_keyword("then");
            expect_keyword("set");
            const Token& target = next();
            if (target.kind != Tok::ident || !is_fact_name(target.text) || is_keyword(target.text))
                fail(target, "expected fact name");
            r.target = target.text;
            expect(Tok::assign, "expected '=' after target fact");
            r.value = literal();
            rs.rules.push_back(std::move(r));
        }
        return rs;
    }

private:
    [[noreturn]] static void fail(const Token& t, const std::string& msg) {
        throw RuleParseError(t.line, t.column, msg);
    }
    static bool is_ident(const Token& t, std::string_view word) { return t.kind == Tok::ident && t.text == word; }

    const Token& peek() const { return toks_[pos_]; }
    const Token& next() {
        const Token& t = toks_[pos_];
        if (t.kind != Tok::end) ++pos_;
        return t;
    }
    // Consumes only when the kind matches, so errors point at the offending token.
    void expect(Tok kind, const std::string& msg) {
        if (peek().kind != kind) fail(peek(), msg);
        next();
    }
    void expect_keyword(std::string_view word) {
        if (!is_ident(peek(), word)) fail(peek(), "expected '" + std::string(word) + "'");
        next();
    }

    Condition condition() {
        Condition c;
        const Token& fact = next();
        if (fact.kind != Tok::ident || !is_fact_name(fact.text) || is_keyword(fact.text))
            fail(fact, "expected fact name");
        c.fact = fact.text;
        const Token& op = next();
        if (op.kind != Tok::op) fail(op, "expected comparison operator");
        c.cmp = cmp_from(op.text);
        c.literal = literal();
        const bool ordered = c.cmp == Cmp::lt || c.cmp == Cmp::le || c.cmp == Cmp::gt || c.cmp == Cmp::ge;
        if (ordered && type_of(c.literal) != ValueType::number)
            fail(op, "operator '" + op.text + "' requires a numeric literal");
        return c;
    }

    Value literal() {
        const Token& t = next();
        if (t.kind == Tok::number) {
            double d = 0;
            auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), d);
            if (ec != std::errc() || ptr != t.text.data() + t.text.size()) fail(t, "malformed number");
            return d;
        }
        if (t.kind == Tok::ident) {
            if (t.text == "true") return true;
            if (t.text == "false") return false;
            if (is_keyword(t.text)) fail(t, "keyword '" + t.text + "' cannot be used as a value");
            return EnumToken{t.text};
        }
        fail(t, "expected literal");
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

std::string format_number(double d) {
    char buf[400];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d, std::chars_format::fixed);
    return std::string(buf, ptr);
}

bool evaluate(const Rule& rule, const Condition& c, const std::map<std::string, Value>& facts) {
    auto it = facts.find(c.fact);
    if (it == facts.end()) return false;
    const Value& fact = it->second;
    if (type_of(fact) != type_of(c.literal)) {
        throw InferenceError(rule.name, "fact '" + c.fact + "' is " + std::string(to_string(type_of(fact))) +
                                            " but is compared with " +
                                            std::string(to_string(type_of(c.literal))) + " literal " +
                                            to_string(c.literal));
    }
    if (const double* n = std::get_if<double>(&fact)) {
        const double lit = std::get<double>(c.literal);
        switch (c.cmp) {
            case Cmp::lt: return *n < lit;
            case Cmp::le: return *n <= lit;
            case Cmp::gt: return *n > lit;
            case Cmp::ge: return *n >= lit;
            case Cmp::eq: return *n == lit;
            case Cmp::ne: return *n != lit;
        }
    }
    switch (c.cmp) {
        case Cmp::eq: return fact == c.literal;
        case Cmp::ne: return fact != c.literal;
        default:
            throw InferenceError(rule.name, "ordered comparison on non-numeric fact '" + c.fact + "'");
    }
}

}  // namespace

ValueType type_of(const Value& v) {
    if (std::holds_alternative<double>(v)) return ValueType::number;
    if (std::holds_alternative<bool>(v)) return ValueType::boolean;
    return ValueType::token;
}

std::string_view to_string(ValueType t) {
    switch (t) {
        case ValueType::number: return "number";
        case ValueType::boolean: return "boolean";
        case ValueType::token: return "token";
    }
    return "?";
}

std::string to_string(const Value& v) {
    if (const double* d = std::get_if<double>(&v)) return format_number(*d);
    if (const bool* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
    return std::get<EnumToken>(v).name;
}

std::string_view to_string(Cmp c) {
    switch (c) {
        case Cmp::lt: return "<";
        case Cmp::le: return "<=";
        case Cmp::gt: return ">";
        case Cmp::ge: return ">=";
        case Cmp::eq: return "==";
        case Cmp::ne: return "!=";
    }
    return "?";
}

RuleParseError::RuleParseError(std::size_t line, std::size_t column, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column),
      detail_(message) {}

InferenceError::InferenceError(std::string rule, const std::string& message)
    : std::runtime_error(rule.empty() ? message : "rule " + rule + ": " + message), rule_(std::move(rule)) {}

bool is_fact_name(std::string_view s) {
    if (s.empty() || !(s[0] >= 'a' && s[0] <= 'z')) return false;
    return std::all_of(s.begin(), s.end(), [](char c) { return (c >= 'a' && c <= 'z') || digit(c) || c == '_'; });
}

RuleSet parse_rules(std::string_view text) { return Parser(tokenize(text)).run(); }

std::string serialize_rules(const RuleSet& rules) {
    std::ostringstream os;
    bool first = true;
    for (const Rule& r : rules.rules) {
        if (!first) os << '\n';
        first = false;
        os << "rule " << r.name << ":\n  if ";
        for (std::size_t i = 0; i < r.conditions.size(); ++i) {
            const Condition& c = r.conditions[i];
            if (i) os << " and ";
            os << c.fact << ' ' << to_string(c.cmp) << ' ' << to_string(c.literal);
        }
        os << "\n  then set " << r.target << " = " << to_string(r.value) << '\n';
    }
    return os.str();
}

bool WorkingMemory::is_derived(std::string_view name) const {
    return std::find(derived.begin(), derived.end(), name) != derived.end();
}

const Value* WorkingMemory::get(std::string_view name) const {
    auto it = facts.find(std::string(name));
    return it == facts.end() ? nullptr : &it->second;
}

void WorkingMemory::assert_fact(std::string name, Value v) { facts[std::move(name)] = std::move(v); }

WorkingMemory infer(const RuleSet& rules, const WorkingMemory& initial) {
    std::set<std::string> targets;
    for (const Rule& r : rules.rules) targets.insert(r.target);
    for (const auto& [name, value] : initial.facts) {
        if (!is_fact_name(name)) throw InferenceError("", "invalid fact name '" + name + "'");
        if (targets.count(name))
            throw InferenceError("", "initial fact '" + name + "' is also a rule target");
    }

    WorkingMemory wm = initial;
    std::set<std::string> derived(wm.derived.begin(), wm.derived.end());
    std::vector<bool> fired(rules.rules.size(), false);
    std::vector<std::size_t> matched;

    // Each pass fires at least one new rule or ends the run, so this is bounded by |rules| + 1.
    for (std::size_t pass = 1;; ++pass) {
        matched.clear();
        for (std::size_t i = 0; i < rules.rules.size(); ++i) {
            const Rule& r = rules.rules[i];
            if (fired[i] || derived.count(r.target)) continue;
            bool all = true;
            for (const Condition& c : r.conditions) all = evaluate(r, c, wm.facts) && all;
            if (all) matched.push_back(i);
        }

        std::size_t firings = 0;
        for (std::size_t i : matched) {
            const Rule& r = rules.rules[i];
            if (derived.count(r.target)) continue;
            wm.facts[r.target] = r.value;
            wm.derived.push_back(r.target);
            derived.insert(r.target);
            fired[i] = true;
            Firing f{r.name, pass, r.target, {}};
            for (const Condition& c : r.conditions)
                if (std::find(f.premises.begin(), f.premises.end(), c.fact) == f.premises.end())
                    f.premises.push_back(c.fact);
            wm.trace.push_back(std::move(f));
            ++firings;
        }
        if (firings == 0) break;
    }
    return wm;
}

std::vector<std::string> explain(const WorkingMemory& memory, std::string_view fact) {
    std::set<std::size_t> used;
    std::vector<std::string> pending{std::string(fact)};
    std::set<std::string> visited;
    while (!pending.empty()) {
        std::string name = std::move(pending.back());
        pending.pop_back();
        if (!visited.insert(name).second) continue;
        for (std::size_t i = 0; i < memory.trace.size(); ++i) {
            if (memory.trace[i].fact != name) continue;
            used.insert(i);
            for (const std::string& p : memory.trace[i].premises) pending.push_back(p);
            break;
        }
    }
    std::vector<std::string> out;
    for (std::size_t i : used) out.push_back(memory.trace[i].rule);
    return out;
}

}  // namespace dietks::rules
