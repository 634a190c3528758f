#include "dietks/kb.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>

namespace dietks {

namespace {

constexpr std::array<std::string_view, 7> kGroupNames = {
    "starch", "vegetable", "fruit", "protein", "milk", "sugar", "fat"};

std::string format_position(std::size_t line, std::size_t column, const std::string& msg) {
    std::ostringstream os;
    os << "line " << line << ", column " << column << ": " << msg;
    return os.str();
}

// Length of the UTF-8 sequence starting at s[i], or 0 if malformed.
std::size_t utf8_sequence_length(std::string_view s, std::size_t i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (b0 < 0x80) return 1;
    if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1F; }
    else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0F; }
    else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07; }
    else return 0;
    if (i + len > s.size()) return 0;
    for (std::size_t k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) return 0;
        cp = (cp << 6) | (b & 0x3F);
    }
    // overlong forms, surrogates, out of range
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000)) return 0;
    if (cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
    return len;
}

enum class ValueKind { integer, string, token };

struct Value {
    ValueKind kind;
    std::string text;
    long long number = 0;
    std::size_t column = 0;
};

class LineScanner {
public:
    LineScanner(std::string_view line, std::size_t line_no) : line_(line), line_no_(line_no) {}

    [[noreturn]] void fail(std::size_t column, const std::string& msg) const {
        throw KbParseError(line_no_, column, msg);
    }

    std::size_t column() const { return pos_ + 1; }

    void skip_blanks() {
        while (pos_ < line_.size() && (line_[pos_] == ' ' || line_[pos_] == '\t')) ++pos_;
    }

    bool at_end() {
        skip_blanks();
        return pos_ >= line_.size();
    }

    std::string word() {
        skip_blanks();
        const std::size_t start = pos_;
        while (pos_ < line_.size()) {
            const char c = line_[pos_];
            if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_') ++pos_;
            else break;
        }
        if (start == pos_) fail(start + 1, "expected identifier");
        return std::string(line_.substr(start, pos_ - start));
    }

    void expect(char c) {
        if (pos_ >= line_.size() || line_[pos_] != c)
            fail(pos_ + 1, std::string("expected '") + c + "'");
        ++pos_;
    }

    Value value() {
        Value v;
        v.column = pos_ + 1;
        if (pos_ >= line_.size()) fail(v.column, "expected value");
        const char c = line_[pos_];
        if (c == '"') {
            v.kind = ValueKind::string;
            v.text = quoted();
        } else if (c == '-' || (c >= '0' && c <= '9')) {
            v.kind = ValueKind::integer;
            const std::size_t start = pos_;
            if (c == '-') ++pos_;
            while (pos_ < line_.size() && line_[pos_] >= '0' && line_[pos_] <= '9') ++pos_;
            const auto digits = line_.substr(start, pos_ - start);
            const auto* first = digits.data();
            const auto* last = digits.data() + digits.size();
            auto [ptr, ec] = std::from_chars(first, last, v.number);
            if (ec == std::errc::result_out_of_range) fail(v.column, "integer out of range");
            if (ec != std::errc() || ptr != last) fail(v.column, "malformed integer");
            v.text = std::string(digits);
        } else if ((c >= 'a' && c <= 'z') || c == '_') {
            v.kind = ValueKind::token;
            v.text = word();
        } else {
            fail(v.column, "expected value");
        }
        if (pos_ < line_.size() && line_[pos_] != ' ' && line_[pos_] != '\t')
            fail(pos_ + 1, "unexpected character after value");
        return v;
    }

private:
    std::string quoted() {
        const std::size_t open = pos_;
        ++pos_;
        std::string out;
        while (true) {
            if (pos_ >= line_.size()) fail(open + 1, "unterminated string");
            const char c = line_[pos_];
            if (c == '"') {
                ++pos_;
                return out;
            }
            if (c == '\\') {
                if (pos_ + 1 >= line_.size()) fail(pos_ + 1, "unterminated escape");
                const char e = line_[pos_ + 1];
                switch (e) {
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    case 'n': out += '\n'; break;
                    case 'r': out += '\r'; break;
                    case 't': out += '\t'; break;
                    default: fail(pos_ + 1, std::string("unknown escape '\\") + e + "'");
                }
                pos_ += 2;
                continue;
            }
            const std::size_t len = utf8_sequence_length(line_, pos_);
            if (len == 0) fail(pos_ + 1, "invalid UTF-8 in string");
            out.append(line_.substr(pos_, len));
            pos_ += len;
        }
    }

    std::string_view line_;
    std::size_t line_no_;
    std::size_t pos_ = 0;
};

std::string quote(std::string_view s) {
    std::string out = "\"";
    for (const char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    out += '"';
    return out;
}

struct Pair {
    std::string key;
    std::size_t key_column;
    Value value;
};

std::vector<Pair> read_pairs(LineScanner& sc) {
    std::vector<Pair> pairs;
    std::set<std::string> seen;
    while (!sc.at_end()) {
        Pair p;
        p.key_column = sc.column();
        p.key = sc.word();
        if (!seen.insert(p.key).second) sc.fail(p.key_column, "duplicate key '" + p.key + "'");
        sc.expect('=');
        p.value = sc.value();
        pairs.push_back(std::move(p));
    }
    return pairs;
}

void require_kind(const LineScanner& sc, const Pair& p, ValueKind kind) {
    if (p.value.kind == kind) return;
    const char* want = kind == ValueKind::integer ? "an integer"
                       : kind == ValueKind::string ? "a quoted string"
                                                   : "a group id";
    sc.fail(p.value.column, "value of '" + p.key + "' must be " + want);
}

int checked_int(const LineScanner& sc, const Pair& p, long long lo, const char* what) {
    require_kind(sc, p, ValueKind::integer);
    if (p.value.number < lo || p.value.number > 1'000'000'000)
        sc.fail(p.value.column, std::string(what));
    return static_cast<int>(p.value.number);
}

}  // namespace

std::string_view to_string(GroupId g) { return kGroupNames[static_cast<std::size_t>(g)]; }

std::optional<GroupId> group_from_string(std::string_view token) {
    for (std::size_t i = 0; i < kGroupNames.size(); ++i)
        if (kGroupNames[i] == token) return static_cast<GroupId>(i);
    return std::nullopt;
}

KbParseError::KbParseError(std::size_t line, std::size_t column, const std::string& message)
    : std::runtime_error(format_position(line, column, message)),
      line_(line),
      column_(column),
      detail_(message) {}

const FoodGroup* KnowledgeBase::find_group(GroupId g) const {
    auto it = std::find_if(groups.begin(), groups.end(), [g](const FoodGroup& fg) { return fg.id == g; });
    return it == groups.end() ? nullptr : &*it;
}

const FoodItem* KnowledgeBase::find_item(int id) const {
    auto it = std::find_if(items.begin(), items.end(), [id](const FoodItem& fi) { return fi.id == id; });
    return it == items.end() ? nullptr : &*it;
}

int KnowledgeBase::effective_kcal(const FoodItem& item) const {
    if (item.kcal_override) return *item.kcal_override;
    const FoodGroup* g = find_group(item.group);
    if (g == nullptr) throw std::invalid_argument("item " + std::to_string(item.id) + " has no group");
    return g->kcal_per_serving;
}

KnowledgeBase parse_kb(std::string_view text) {
    KnowledgeBase kb;
    std::set<int> item_ids;
    std::size_t line_no = 0;
    std::size_t last_line_len = 0;
    std::size_t start = 0;

    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        const bool final_line = end == std::string_view::npos;
        if (final_line) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        last_line_len = line.size();
        start = end + 1;

        LineScanner sc(line, line_no);
        if (sc.at_end()) {
            if (final_line) break;
            continue;
        }
        const std::size_t first = line.find_first_not_of(" \t");
        if (line[first] == '#') {
            if (final_line) break;
            continue;
        }

        const std::size_t kw_col = sc.column();
        const std::string keyword = sc.word();
        if (keyword == "group") {
            sc.skip_blanks();
            const std::size_t id_col = sc.column();
            const std::string token = sc.word();
            const auto gid = group_from_string(token);
            if (!gid) sc.fail(id_col, "unknown group id '" + token + "'");
            if (kb.find_group(*gid)) sc.fail(id_col, "group '" + token + "' declared twice");
            FoodGroup g;
            g.id = *gid;
            bool has_kcal = false, has_min = false, has_max = false;
            std::size_t min_col = 0;
            for (const Pair& p : read_pairs(sc)) {
                if (p.key == "kcal") {
                    g.kcal_per_serving = checked_int(sc, p, 1, "kcal must be a positive integer");
                    has_kcal = true;
                } else if (p.key == "min") {
                    g.min_servings = checked_int(sc, p, 0, "min must be a non-negative integer");
                    has_min = true;
                    min_col = p.key_column;
                } else if (p.key == "max") {
                    g.max_servings = checked_int(sc, p, 0, "max must be a non-negative integer");
                    has_max = true;
                } else {
                    sc.fail(p.key_column, "unknown key '" + p.key + "' in group line");
                }
            }
            if (!has_kcal || !has_min || !has_max)
                sc.fail(line.size() + 1, "group line requires kcal, min and max");
            if (g.min_servings > g.max_servings)
                sc.fail(min_col, "group " + token + " has min > max");
            kb.groups.push_back(g);
        } else if (keyword == "item") {
            FoodItem item;
            bool has_id = false, has_group = false, has_name = false;
            std::size_t id_col = 0;
            for (const Pair& p : read_pairs(sc)) {
                if (p.key == "id") {
                    item.id = checked_int(sc, p, 1, "id must be a positive integer");
                    has_id = true;
                    id_col = p.value.column;
                } else if (p.key == "group") {
                    require_kind(sc, p, ValueKind::token);
                    const auto gid = group_from_string(p.value.text);
                    if (!gid) sc.fail(p.value.column, "unknown group id '" + p.value.text + "'");
                    if (!kb.find_group(*gid))
                        sc.fail(p.value.column, "group '" + p.value.text + "' used before its declaration");
                    item.group = *gid;
                    has_group = true;
                } else if (p.key == "name_en") {
                    require_kind(sc, p, ValueKind::string);
                    if (p.value.text.empty()) sc.fail(p.value.column, "name_en must not be empty");
                    item.name_en = p.value.text;
                    has_name = true;
                } else if (p.key == "name_ar") {
                    require_kind(sc, p, ValueKind::string);
                    item.name_ar = p.value.text;
                } else if (p.key == "serving") {
                    require_kind(sc, p, ValueKind::string);
                    item.serving_desc = p.value.text;
                } else if (p.key == "kcal") {
                    item.kcal_override = checked_int(sc, p, 1, "kcal must be a positive integer");
                } else {
                    sc.fail(p.key_column, "unknown key '" + p.key + "' in item line");
                }
            }
            if (!has_id || !has_group || !has_name)
                sc.fail(line.size() + 1, "item line requires id, group and name_en");
            if (!item_ids.insert(item.id).second)
                sc.fail(id_col, "duplicate item id " + std::to_string(item.id));
            kb.items.push_back(std::move(item));
        } else {
            sc.fail(kw_col, "expected 'group' or 'item', found '" + keyword + "'");
        }
        if (final_line) break;
    }

    const std::size_t eof_line = std::max<std::size_t>(line_no, 1);
    const std::size_t eof_col = last_line_len + 1;
    for (GroupId g : kAllGroups)
        if (!kb.find_group(g))
            throw KbParseError(eof_line, eof_col, "missing group section '" + std::string(to_string(g)) + "'");
    if (auto violations = validate_kb(kb); !violations.empty())
        throw KbParseError(eof_line, eof_col, violations.front().message);

    kb.version = compute_kb_version(kb);
    return kb;
}

std::string serialize_kb(const KnowledgeBase& kb) {
    std::ostringstream os;
    for (const FoodGroup& g : kb.groups) {
        os << "group " << to_string(g.id) << " kcal=" << g.kcal_per_serving << " min=" << g.min_servings
           << " max=" << g.max_servings << '\n';
    }
    for (const FoodItem& it : kb.items) {
        os << "item id=" << it.id << " group=" << to_string(it.group) << " name_en=" << quote(it.name_en)
           << " name_ar=" << quote(it.name_ar) << " serving=" << quote(it.serving_desc);
        if (it.kcal_override) os << " kcal=" << *it.kcal_override;
        os << '\n';
    }
    return os.str();
}

std::vector<Violation> validate_kb(const KnowledgeBase& kb) {
    std::vector<Violation> out;
    auto add = [&out](std::string entity, std::string tag, std::string msg) {
        out.push_back({std::move(entity), std::move(tag), std::move(msg)});
    };

    std::map<GroupId, int> declared;
    for (const FoodGroup& g : kb.groups) {
        const std::string name(to_string(g.id));
        if (++declared[g.id] == 2) add("group " + name, "unique_group", "group " + name + " declared more than once");
        if (g.kcal_per_serving < 1)
            add("group " + name, "kcal_positive", "group " + name + " has non-positive kcal per serving");
        if (g.min_servings < 0 || g.max_servings < 0)
            add("group " + name, "servings_non_negative", "group " + name + " has a negative serving bound");
        if (g.min_servings > g.max_servings)
            add("group " + name, "min_le_max", "group " + name + " has min_servings > max_servings");
    }
    for (GroupId g : kAllGroups) {
        if (!declared.count(g)) {
            const std::string name(to_string(g));
            add("group " + name, "group_present", "group " + name + " is missing");
        }
    }

    std::set<int> ids;
    std::map<GroupId, int> per_group;
    for (const FoodItem& it : kb.items) {
        const std::string entity = "item " + std::to_string(it.id);
        if (it.id < 1) add(entity, "id_positive", entity + " has a non-positive id");
        if (!ids.insert(it.id).second) add(entity, "unique_id", "item id " + std::to_string(it.id) + " is duplicated");
        if (!declared.count(it.group))
            add(entity, "group_exists", entity + " refers to undeclared group " + std::string(to_string(it.group)));
        if (it.name_en.empty()) add(entity, "name_en_nonempty", entity + " has an empty name_en");
        if (it.kcal_override && *it.kcal_override < 1)
            add(entity, "kcal_positive", entity + " has a non-positive kcal override");
        ++per_group[it.group];
    }
    for (const auto& [gid, count] : declared) {
        if (!per_group.count(gid)) {
            const std::string name(to_string(gid));
            add("group " + name, "group_nonempty", "group " + name + " has no items");
        }
    }
    return out;
}

std::vector<FoodItem> items_in_group(const KnowledgeBase& kb, GroupId group) {
    if (!kb.find_group(group))
        throw std::invalid_argument("unknown group '" + std::string(to_string(group)) + "'");
    std::vector<FoodItem> out;
    std::copy_if(kb.items.begin(), kb.items.end(), std::back_inserter(out),
                 [group](const FoodItem& it) { return it.group == group; });
    std::sort(out.begin(), out.end(), [](const FoodItem& a, const FoodItem& b) { return a.id < b.id; });
    return out;
}

std::string compute_kb_version(const KnowledgeBase& kb) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : serialize_kb(kb)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out = "fnv1a64:";
    for (int shift = 60; shift >= 0; shift -= 4) out += kHex[(h >> shift) & 0xF];
    return out;
}

}  // namespace dietks
