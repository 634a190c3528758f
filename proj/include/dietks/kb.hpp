#pragma once

// Food knowledge base: the seven pyramid groups, the frame-style food items
// that belong to them, and the line-oriented text format they are stored in.

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dietks {

enum class GroupId { starch, vegetable, fruit, protein, milk, sugar, fat };

inline constexpr std::array<GroupId, 7> kAllGroups = {
    GroupId::starch, GroupId::vegetable, GroupId::fruit, GroupId::protein,
    GroupId::milk,   GroupId::sugar,     GroupId::fat};

std::string_view to_string(GroupId g);
std::optional<GroupId> group_from_string(std::string_view token);

struct FoodGroup {
    GroupId id = GroupId::starch;
    int kcal_per_serving = 1;
    int min_servings = 0;
    int max_servings = 0;

    friend bool operator==(const FoodGroup&, const FoodGroup&) = default;
};

struct FoodItem {
    int id = 0;
    GroupId group = GroupId::starch;
    std::string name_en;
    std::string name_ar;
    std::string serving_desc;
    std::optional<int> kcal_override;

    friend bool operator==(const FoodItem&, const FoodItem&) = default;
};

struct KnowledgeBase {
    std::vector<FoodGroup> groups;  // declaration order
    std::vector<FoodItem> items;    // file order is the canonical iteration order
    std::string version;

    const FoodGroup* find_group(GroupId g) const;
    const FoodItem* find_item(int id) const;

    // Group kcal unless the item carries an override.
    int effective_kcal(const FoodItem& item) const;

    friend bool operator==(const KnowledgeBase&, const KnowledgeBase&) = default;
};

/// Thrown by parse_kb. Line and column are 1-based; column counts bytes.
class KbParseError : public std::runtime_error {
public:
    KbParseError(std::size_t line, std::size_t column, const std::string& message);

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::size_t line_;
    std::size_t column_;
    std::string detail_;
};

/// Parses a KB document. Every structural or invariant problem is reported
/// as a KbParseError positioned at the offending token (or at end of input
/// for whole-document problems such as a missing group section).
KnowledgeBase parse_kb(std::string_view text);

/// Canonical text form: all group lines, then all item lines, in stored order.
std::string serialize_kb(const KnowledgeBase& kb);

struct Violation {
    std::string entity;     // "group fruit", "item 42", "kb"
    std::string invariant;  // short machine-friendly tag
    std::string message;    // human text

    friend bool operator==(const Violation&, const Violation&) = default;
};

std::vector<Violation> validate_kb(const KnowledgeBase& kb);

/// Items of one group sorted by ascending id. Throws std::invalid_argument
/// when the group is not declared in kb.
std::vector<FoodItem> items_in_group(const KnowledgeBase& kb, GroupId group);

/// Content hash of the canonical serialization, e.g. "fnv1a64:0123abcd...".
std::string compute_kb_version(const KnowledgeBase& kb);

}  // namespace dietks
