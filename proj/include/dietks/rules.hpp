#pragma once

// Production-rule language and forward-chaining engine.
//
// A rule is a conjunction of comparisons and a single `set` action:
//
//   rule fruit_elderly:
//     if age > 65
//     then set fruit_servings = 4
//
// Inference runs in passes. Each pass matches every not-yet-fired rule
// against the working memory as it stood when the pass began, then fires the
// matching rules in file order. A rule whose target fact has already been
// derived (earlier in the run, or earlier in the same pass) is blocked:
// derived facts are write-once, so the first rule in file order wins. A pass
// with no firings ends the run.

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dietks::rules {

/// Enumerated symbol such as `moderate` or `slim`.
struct EnumToken {
    std::string name;
    friend bool operator==(const EnumToken&, const EnumToken&) = default;
};

using Value = std::variant<double, bool, EnumToken>;

enum class ValueType { number, boolean, token };

ValueType type_of(const Value& v);
std::string_view to_string(ValueType t);
std::string to_string(const Value& v);

enum class Cmp { lt, le, gt, ge, eq, ne };

std::string_view to_string(Cmp c);

struct Condition {
    std::string fact;
    Cmp cmp = Cmp::eq;
    Value literal;

    friend bool operator==(const Condition&, const Condition&) = default;
};

struct Rule {
    std::string name;
    std::vector<Condition> conditions;
    std::string target;
    Value value;
    std::size_t source_order = 0;

    friend bool operator==(const Rule&, const Rule&) = default;
};

struct RuleSet {
    std::vector<Rule> rules;
    friend bool operator==(const RuleSet&, const RuleSet&) = default;
};

class RuleParseError : public std::runtime_error {
public:
    RuleParseError(std::size_t line, std::size_t column, const std::string& message);

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::size_t line_;
    std::size_t column_;
    std::string detail_;
};

/// Raised during inference when a condition compares a fact against a
/// literal of a different type, or when the initial memory is malformed.
class InferenceError : public std::runtime_error {
public:
    InferenceError(std::string rule, const std::string& message);
    const std::string& rule() const noexcept { return rule_; }

private:
    std::string rule_;
};

RuleSet parse_rules(std::string_view text);

/// Canonical text form, one rule block per rule, re-parseable by parse_rules.
std::string serialize_rules(const RuleSet& rules);

struct Firing {
    std::string rule;
    std::size_t pass = 0;
    std::string fact;                   // target written
    std::vector<std::string> premises;  // fact names read by the rule's conditions
};

struct WorkingMemory {
    std::map<std::string, Value> facts;
    std::vector<std::string> derived;  // in write order
    std::vector<Firing> trace;         // in firing order

    bool is_derived(std::string_view name) const;
    const Value* get(std::string_view name) const;
    void assert_fact(std::string name, Value v);
};

bool is_fact_name(std::string_view s);

/// Forward chaining to quiescence. Throws InferenceError on a type mismatch
/// or when an initial fact collides with an action target.
WorkingMemory infer(const RuleSet& rules, const WorkingMemory& initial);

/// Rules that contributed to `fact`, in firing order. Input facts and names
/// never derived yield an empty list.
std::vector<std::string> explain(const WorkingMemory& memory, std::string_view fact);

}  // namespace dietks::rules
