#include <doctest.h>

#include <algorithm>
#include <random>

#include "dietks/planner.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace dietks;
using dietks::test::assessment_rules;
using dietks::test::default_kb;
using dietks::test::make_patient;

namespace {

Servings servings(int starch, int vegetable, int fruit, int protein, int milk, int sugar, int fat) {
    return {{GroupId::starch, starch}, {GroupId::vegetable, vegetable}, {GroupId::fruit, fruit},
            {GroupId::protein, protein}, {GroupId::milk, milk},         {GroupId::sugar, sugar},
            {GroupId::fat, fat}};
}

const Servings kBase = servings(6, 3, 2, 3, 3, 0, 1);  // 1305 kcal under the default KB

Prescription rx_with(Servings s, int target) {
    Prescription rx;
    rx.servings = std::move(s);
    rx.total_kcal = target;
    return rx;
}

int kcal_of(const Servings& s, const KnowledgeBase& kb) {
    int total = 0;
    for (const auto& [g, n] : s) total += n * kb.find_group(g)->kcal_per_serving;
    return total;
}

bool has_prefix(const std::vector<std::string>& ws, std::string_view prefix) {
    return std::any_of(ws.begin(), ws.end(), [&](const std::string& w) { return w.rfind(prefix, 0) == 0; });
}

}  // namespace

TEST_CASE("fill_residual toward 1800 kcal") {
    const KnowledgeBase& kb = default_kb();
    REQUIRE(kcal_of(kBase, kb) == 1305);
    const ResidualResult r = fill_residual(kBase, 1800, kb);
    // starch, milk, fruit, veg, fat in turn: +80 +120 +60 +25 +45 per cycle.
    CHECK(r.servings == servings(8, 5, 4, 3, 3, 0, 3));
    CHECK(kcal_of(r.servings, kb) == 1725);
    CHECK(r.warnings.empty());
}

TEST_CASE("fill_residual leaves an exact target alone") {
    const ResidualResult r = fill_residual(kBase, 1305, default_kb());
    CHECK(r.servings == kBase);
    CHECK(r.warnings.empty());
}

TEST_CASE("fill_residual saturates at the group maxima") {
    const KnowledgeBase& kb = default_kb();
    const Servings all_max = servings(11, 5, 4, 3, 3, 1, 3);
    REQUIRE(kcal_of(all_max, kb) == 2025);
    const ResidualResult r = fill_residual(all_max, 2400, kb);
    CHECK(r.servings == all_max);
    CHECK(r.warnings == std::vector<std::string>{"calorie_gap: 375 kcal short"});

    // Sugar is never raised, so from the base prescription the ceiling is 1965.
    const ResidualResult from_base = fill_residual(kBase, 2400, kb);
    CHECK(from_base.servings == servings(11, 5, 4, 3, 3, 0, 3));
    CHECK(from_base.warnings == std::vector<std::string>{"calorie_gap: 435 kcal short"});
}

TEST_CASE("fill_residual trims a base prescription that exceeds the target") {
    const KnowledgeBase& kb = default_kb();
    const ResidualResult r = fill_residual(kBase, 1200, kb);
    CHECK(kcal_of(r.servings, kb) <= 1200);
    for (const FoodGroup& g : kb.groups) CHECK(r.servings.at(g.id) >= g.min_servings);
    CHECK(r.warnings.empty());

    // 1000 kcal cannot hold every group minimum (1105 kcal with sugar and fat at 0).
    const ResidualResult deep = fill_residual(kBase, 1000, kb);
    CHECK(kcal_of(deep.servings, kb) <= 1000);
    CHECK(has_prefix(deep.warnings, "below_minimum:"));
}

TEST_CASE("apportion matches the brute-force oracle for 0..12") {
    const SlotCounts frozen[13] = {{0, 0, 0, 0, 0}, {0, 0, 1, 0, 0}, {0, 0, 1, 0, 1}, {1, 0, 1, 0, 1},
                                   {1, 1, 1, 0, 1}, {1, 1, 2, 0, 1}, {1, 1, 2, 0, 2}, {1, 1, 2, 1, 2},
                                   {2, 1, 2, 1, 2}, {2, 1, 3, 1, 2}, {2, 1, 3, 1, 3}, {2, 1, 4, 1, 3},
                                   {2, 1, 4, 1, 4}};
    for (int n = 0; n <= 12; ++n) {
        CAPTURE(n);
        CHECK(apportion(n) == oracle::apportion(n, kSlotPercent));
        CHECK(apportion(n) == frozen[n]);
    }
}

TEST_CASE("distribute_servings conserves every group") {
    const auto slots = distribute_servings(servings(11, 5, 4, 3, 3, 1, 3));
    CHECK(slots[2].at(GroupId::starch) == 4);
    for (GroupId g : kAllGroups) {
        int sum = 0;
        for (const Servings& s : slots) sum += s.count(g) ? s.at(g) : 0;
        CHECK(sum == servings(11, 5, 4, 3, 3, 1, 3).at(g));
    }
}

TEST_CASE("compose_meals with a single preferred starch") {
    const KnowledgeBase& kb = default_kb();
    const MealPlan plan = compose_meals(rx_with(kBase, 1305), kb, {42}, "p1");
    const auto& lunch = plan.meal(MealSlot::lunch);
    const auto it = std::find_if(lunch.begin(), lunch.end(), [](const MealEntry& e) { return e.group == GroupId::starch; });
    REQUIRE(it != lunch.end());
    CHECK(*it == MealEntry{42, GroupId::starch, 2, 160});
    for (const auto& meal : plan.meals)
        for (const MealEntry& e : meal)
            if (e.group == GroupId::starch) CHECK(e.item_id == 42);
    CHECK(plan.total_kcal == 1305);
    CHECK(plan.target_kcal == 1305);
    CHECK(plan.patient_id == "p1");
}

TEST_CASE("compose_meals falls back to the whole group and is deterministic") {
    const KnowledgeBase& kb = default_kb();
    const Prescription rx = assess(make_patient(70, 1.70, Activity::moderate), kb, assessment_rules());
    const MealPlan a = compose_meals(rx, kb, {});
    const MealPlan b = compose_meals(rx, kb, {});
    CHECK(a == b);
    CHECK(plan_to_json(a, kb).dump() == plan_to_json(b, kb).dump());
    CHECK(a.total_kcal <= 2100);
    CHECK(a.total_kcal == plan_calories(a, kb));
    // Round-robin over the 8 starch items starting at the lowest id.
    CHECK(a.meal(MealSlot::breakfast).front().item_id == 38);
    CHECK(!a.meal(MealSlot::breakfast).empty());
    CHECK(!a.meal(MealSlot::lunch).empty());
    CHECK(!a.meal(MealSlot::dinner).empty());
}

TEST_CASE("compose_meals rejects unknown preferred ids") {
    try {
        compose_meals(rx_with(kBase, 1305), default_kb(), {42, 999});
        FAIL("expected PlanError");
    } catch (const PlanError& e) {
        CHECK(std::string(e.what()).find("999") != std::string::npos);
    }
}

TEST_CASE("kcal overrides count and an overshoot is reported") {
    KnowledgeBase kb = default_kb();
    for (FoodItem& it : kb.items)
        if (it.id == 42) it.kcal_override = 100;
    const MealPlan plan = compose_meals(rx_with(kBase, 1305), kb, {42});
    CHECK(plan.total_kcal == 1305 + 6 * 20);
    CHECK(plan.total_kcal == plan_calories(plan, kb));
    CHECK(has_prefix(plan.warnings, "calorie_overshoot"));
}

TEST_CASE("plan_calories") {
    const KnowledgeBase& kb = default_kb();
    CHECK(plan_calories(MealPlan{}, kb) == 0);
    MealPlan one;
    one.meals[0].push_back({42, GroupId::starch, 2, 160});
    CHECK(plan_calories(one, kb) == 160);
    one.meals[1].push_back({999, GroupId::starch, 1, 80});
    CHECK_THROWS_AS(plan_calories(one, kb), PlanError);
}

TEST_CASE("plan JSON layout") {
    const KnowledgeBase& kb = default_kb();
    const MealPlan plan = compose_meals(rx_with(kBase, 1305), kb, {42}, "p1");
    const auto j = plan_to_json(plan, kb);
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    CHECK(keys == std::vector<std::string>{"patient_id", "target_kcal", "total_kcal", "warnings", "meals"});
    std::vector<std::string> slots;
    for (const auto& [k, v] : j["meals"].items()) slots.push_back(k);
    CHECK(slots == std::vector<std::string>{"breakfast", "snack1", "lunch", "snack2", "dinner"});
    const auto& e = j["meals"]["lunch"][0];
    std::vector<std::string> entry_keys;
    for (const auto& [k, v] : e.items()) entry_keys.push_back(k);
    CHECK(entry_keys == std::vector<std::string>{"item_id", "name_en", "name_ar", "servings", "kcal"});
}

TEST_CASE("randomized plan invariants") {
    const KnowledgeBase& kb = default_kb();
    std::mt19937_64 rng(99);
    for (int i = 0; i < 300; ++i) {
        const Patient p = test::random_patient(rng);
        const std::set<int> sel = test::random_selection(rng, kb);
        const Prescription rx = assess(p, kb, assessment_rules());
        const MealPlan plan = compose_meals(rx, kb, sel);
        const ResidualResult filled = fill_residual(rx, kb);
        CAPTURE(i);

        Servings used;
        for (const auto& meal : plan.meals)
            for (const MealEntry& e : meal) {
                used[e.group] += e.servings;
                CHECK(e.servings > 0);
                const bool group_selected = std::any_of(sel.begin(), sel.end(), [&](int id) {
                    return kb.find_item(id)->group == e.group;
                });
                if (group_selected) CHECK(sel.count(e.item_id) == 1);
            }
        for (GroupId g : kAllGroups) CHECK((used.count(g) ? used.at(g) : 0) == filled.servings.at(g));
        CHECK(plan.total_kcal == plan_calories(plan, kb));
        CHECK(plan.total_kcal <= rx.total_kcal);
        CHECK((plan.total_kcal * 10 >= rx.total_kcal * 8 || has_prefix(plan.warnings, "calorie_gap:")));
    }
}
