#include "dietks/planner.hpp"

#include <algorithm>
#include <map>

namespace dietks {

namespace {

constexpr std::array<std::string_view, 5> kSlotNames = {"breakfast", "snack1", "lunch", "snack2", "dinner"};

constexpr std::array<GroupId, 5> kTrimOrder = {GroupId::fat, GroupId::vegetable, GroupId::fruit, GroupId::milk,
                                               GroupId::starch};
constexpr std::array<GroupId, 7> kDeepTrimOrder = {GroupId::sugar, GroupId::fat,    GroupId::vegetable,
                                                   GroupId::fruit, GroupId::milk,   GroupId::starch,
                                                   GroupId::protein};

const FoodGroup& group_of(const KnowledgeBase& kb, GroupId g) {
    const FoodGroup* fg = kb.find_group(g);
    if (fg == nullptr) throw PlanError("knowledge base lacks group " + std::string(to_string(g)));
    return *fg;
}

int servings_kcal(const Servings& s, const KnowledgeBase& kb) {
    int total = 0;
    for (const auto& [g, n] : s) total += n * group_of(kb, g).kcal_per_serving;
    return total;
}

}  // namespace

std::string_view to_string(MealSlot s) { return kSlotNames[static_cast<std::size_t>(s)]; }

ResidualResult fill_residual(const Servings& servings, int target_kcal, const KnowledgeBase& kb) {
    ResidualResult out{servings, {}};
    Servings& s = out.servings;
    for (GroupId g : kAllGroups) s.try_emplace(g, 0);
    int total = servings_kcal(s, kb);

    if (total <= target_kcal) {
        for (bool added = true; added;) {
            added = false;
            for (GroupId g : kFillerOrder) {
                const FoodGroup& fg = group_of(kb, g);
                if (s[g] < fg.max_servings && total + fg.kcal_per_serving <= target_kcal) {
                    ++s[g];
                    total += fg.kcal_per_serving;
                    added = true;
                }
            }
        }
    } else {
        for (bool removed = true; removed && total > target_kcal;) {
            removed = false;
            for (GroupId g : kTrimOrder) {
                if (total <= target_kcal) break;
                const FoodGroup& fg = group_of(kb, g);
                if (s[g] > fg.min_servings) {
                    --s[g];
                    total -= fg.kcal_per_serving;
                    removed = true;
                }
            }
        }
        for (bool removed = true; removed && total > target_kcal;) {
            removed = false;
            for (GroupId g : kDeepTrimOrder) {
                if (total <= target_kcal) break;
                if (s[g] > 0) {
                    --s[g];
                    total -= group_of(kb, g).kcal_per_serving;
                    removed = true;
                }
            }
        }
        for (GroupId g : kAllGroups) {
            const FoodGroup& fg = group_of(kb, g);
            if (s[g] < fg.min_servings)
                out.warnings.push_back("below_minimum: " + std::string(to_string(g)) + " " + std::to_string(s[g]) +
                                       " of " + std::to_string(fg.min_servings) + " servings");
        }
    }

    const bool saturated = std::all_of(kFillerOrder.begin(), kFillerOrder.end(),
                                       [&](GroupId g) { return s[g] >= group_of(kb, g).max_servings; });
    const int gap = target_kcal - total;
    if (gap > 0 && (10LL * total < 8LL * target_kcal || saturated))
        out.warnings.push_back("calorie_gap: " + std::to_string(gap) + " kcal short");
    return out;
}

ResidualResult fill_residual(const Prescription& rx, const KnowledgeBase& kb) {
    return fill_residual(rx.servings, rx.total_kcal, kb);
}

SlotCounts apportion(int count) {
    SlotCounts out{};
    if (count <= 0) return out;
    std::array<int, 5> remainder{};
    int assigned = 0;
    for (std::size_t i = 0; i < 5; ++i) {
        const int scaled = kSlotPercent[i] * count;
        out[i] = scaled / 100;
        remainder[i] = scaled % 100;
        assigned += out[i];
    }
    std::array<std::size_t, 5> order = {0, 1, 2, 3, 4};
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (int k = 0; k < count - assigned; ++k) ++out[order[static_cast<std::size_t>(k)]];
    return out;
}

std::array<Servings, 5> distribute_servings(const Servings& servings) {
    std::array<Servings, 5> out;
    for (const auto& [g, n] : servings) {
        const SlotCounts split = apportion(n);
        for (std::size_t i = 0; i < 5; ++i) out[i][g] = split[i];
    }
    return out;
}

MealPlan compose_meals(const Prescription& rx, const KnowledgeBase& kb, const std::set<int>& preferred,
                       const std::string& patient_id) {
    for (int id : preferred)
        if (kb.find_item(id) == nullptr) throw PlanError("unknown item " + std::to_string(id));

    MealPlan plan;
    plan.patient_id = patient_id;
    plan.target_kcal = rx.total_kcal;
    plan.warnings = rx.warnings;

    ResidualResult filled = fill_residual(rx.servings, rx.total_kcal, kb);
    const auto per_slot = distribute_servings(filled.servings);

    std::map<GroupId, std::vector<const FoodItem*>> candidates;
    for (GroupId g : kAllGroups) {
        std::vector<const FoodItem*> chosen, all;
        for (const FoodItem& item : kb.items) {
            if (item.group != g) continue;
            all.push_back(&item);
            if (preferred.count(item.id)) chosen.push_back(&item);
        }
        auto& list = chosen.empty() ? all : chosen;
        std::sort(list.begin(), list.end(), [](const FoodItem* a, const FoodItem* b) { return a->id < b->id; });
        candidates[g] = list;
    }

    // One round-robin cursor per group, carried across the day so that
    // successive meals continue through the candidate list.
    std::map<GroupId, std::size_t> cursor;
    for (std::size_t slot = 0; slot < kAllSlots.size(); ++slot) {
        auto& entries = plan.meals[slot];
        for (GroupId g : kAllGroups) {
            auto it = per_slot[slot].find(g);
            const int count = it == per_slot[slot].end() ? 0 : it->second;
            if (count == 0) continue;
            const auto& list = candidates[g];
            if (list.empty())
                throw PlanError("group " + std::string(to_string(g)) + " has servings but no items");
            const std::size_t first_entry = entries.size();
            for (int k = 0; k < count; ++k) {
                const FoodItem* item = list[cursor[g]++ % list.size()];
                auto e = std::find_if(entries.begin() + static_cast<std::ptrdiff_t>(first_entry), entries.end(),
                                      [item](const MealEntry& m) { return m.item_id == item->id; });
                const int kcal = kb.effective_kcal(*item);
                if (e == entries.end()) entries.push_back({item->id, g, 1, kcal});
                else {
                    ++e->servings;
                    e->kcal += kcal;
                }
            }
        }
    }

    plan.total_kcal = plan_calories(plan, kb);
    for (std::string& w : filled.warnings) plan.warnings.push_back(std::move(w));
    const bool has_gap = std::any_of(plan.warnings.begin(), plan.warnings.end(),
                                     [](const std::string& w) { return w.rfind("calorie_gap:", 0) == 0; });
    if (!has_gap && 10LL * plan.total_kcal < 8LL * plan.target_kcal)
        plan.warnings.push_back("calorie_gap: " + std::to_string(plan.target_kcal - plan.total_kcal) + " kcal short");
    if (plan.total_kcal > plan.target_kcal)
        plan.warnings.push_back("calorie_overshoot: " + std::to_string(plan.total_kcal - plan.target_kcal) +
                                " kcal over (item kcal overrides)");
    return plan;
}

int plan_calories(const MealPlan& plan, const KnowledgeBase& kb) {
    int total = 0;
    for (const auto& meal : plan.meals) {
        for (const MealEntry& e : meal) {
            const FoodItem* item = kb.find_item(e.item_id);
            if (item == nullptr) throw PlanError("plan references unknown item " + std::to_string(e.item_id));
            total += e.servings * kb.effective_kcal(*item);
        }
    }
    return total;
}

nlohmann::ordered_json plan_to_json(const MealPlan& plan, const KnowledgeBase& kb) {
    nlohmann::ordered_json j;
    j["patient_id"] = plan.patient_id;
    j["target_kcal"] = plan.target_kcal;
    j["total_kcal"] = plan.total_kcal;
    j["warnings"] = plan.warnings;
    nlohmann::ordered_json meals = nlohmann::ordered_json::object();
    for (MealSlot slot : kAllSlots) {
        nlohmann::ordered_json rows = nlohmann::ordered_json::array();
        for (const MealEntry& e : plan.meal(slot)) {
            const FoodItem* item = kb.find_item(e.item_id);
            nlohmann::ordered_json row;
            row["item_id"] = e.item_id;
            row["name_en"] = item ? item->name_en : "";
            row["name_ar"] = item ? item->name_ar : "";
            row["servings"] = e.servings;
            row["kcal"] = e.kcal;
            rows.push_back(std::move(row));
        }
        meals[std::string(to_string(slot))] = std::move(rows);
    }
    j["meals"] = std::move(meals);
    return j;
}

}  // namespace dietks
