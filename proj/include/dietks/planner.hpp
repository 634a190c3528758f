#pragma once

// Five-meal daily plan generation.
//
//   fill_residual        adjust group servings toward the calorie target
//   distribute_servings  split each group's servings across the five meals
//   compose_meals        pick concrete food items for every serving

#include <array>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dietks/assessment.hpp"
#include "dietks/kb.hpp"

namespace dietks {

enum class MealSlot { breakfast, snack1, lunch, snack2, dinner };

inline constexpr std::array<MealSlot, 5> kAllSlots = {MealSlot::breakfast, MealSlot::snack1, MealSlot::lunch,
                                                      MealSlot::snack2, MealSlot::dinner};

/// Share of each group's daily servings per slot, in percent (sums to 100).
inline constexpr std::array<int, 5> kSlotPercent = {20, 10, 30, 10, 30};

std::string_view to_string(MealSlot s);

struct MealEntry {
    int item_id = 0;
    GroupId group = GroupId::starch;
    int servings = 0;
    int kcal = 0;

    friend bool operator==(const MealEntry&, const MealEntry&) = default;
};

struct MealPlan {
    std::string patient_id;
    std::array<std::vector<MealEntry>, 5> meals;  // indexed by MealSlot
    int total_kcal = 0;
    int target_kcal = 0;
    std::vector<std::string> warnings;

    const std::vector<MealEntry>& meal(MealSlot s) const { return meals[static_cast<std::size_t>(s)]; }

    friend bool operator==(const MealPlan&, const MealPlan&) = default;
};

struct ResidualResult {
    Servings servings;
    std::vector<std::string> warnings;
};

/// Fixed order in which groups receive extra servings. Protein and sugar are
/// never raised.
inline constexpr std::array<GroupId, 5> kFillerOrder = {GroupId::starch, GroupId::milk, GroupId::fruit,
                                                        GroupId::vegetable, GroupId::fat};

/// Brings the prescription's servings as close to `target_kcal` as possible
/// without exceeding it.
///
/// Under target: cycles kFillerOrder adding one serving to each group that
/// is below its max and still fits, until a full cycle adds nothing.
///
/// Over target (the minimum prescription already exceeds a small allowance):
/// removes single servings cycling fat, vegetable, fruit, milk, starch while
/// they stay at or above the group minimum; if still over, continues below
/// the minimum cycling sugar, fat, vegetable, fruit, milk, starch, protein
/// and warns `below_minimum: <group> ...` for each group left under its
/// minimum.
///
/// Appends `calorie_gap: <n> kcal short` when the result is under 80% of the
/// target, or when every filler group is saturated at its max and some
/// allowance is left unused.
ResidualResult fill_residual(const Servings& servings, int target_kcal, const KnowledgeBase& kb);
ResidualResult fill_residual(const Prescription& rx, const KnowledgeBase& kb);

using SlotCounts = std::array<int, 5>;

/// Largest-remainder split of `count` by kSlotPercent; equal remainders go
/// to the earlier slot.
SlotCounts apportion(int count);

std::array<Servings, 5> distribute_servings(const Servings& servings);

class PlanError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unknown preferred ids raise PlanError ("unknown item <id>").
MealPlan compose_meals(const Prescription& rx, const KnowledgeBase& kb, const std::set<int>& preferred,
                       const std::string& patient_id = "");

/// Sum of servings x effective kcal over all entries. Throws PlanError on a
/// dangling item reference.
int plan_calories(const MealPlan& plan, const KnowledgeBase& kb);

/// Fixed field order: patient_id, target_kcal, total_kcal, warnings, meals.
nlohmann::ordered_json plan_to_json(const MealPlan& plan, const KnowledgeBase& kb);

}  // namespace dietks
