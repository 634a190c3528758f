#include "dietks/assessment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <sstream>

namespace dietks {

namespace {

constexpr std::array<std::string_view, 4> kCategoryNames = {"slim", "normal", "overweight", "obese"};

// Rows: slim, normal, overweight, obese. Columns: very_active, moderate, little.
// The overweight row repeats the obese multipliers.
constexpr int kMultipliers[4][3] = {{40, 35, 30}, {35, 30, 25}, {30, 25, 20}, {30, 25, 20}};

constexpr Comorbidity kRestricting[] = {Comorbidity::gout,  Comorbidity::heart_disease, Comorbidity::gallbladder,
                                        Comorbidity::liver, Comorbidity::hypertension,  Comorbidity::typhoid};

int scale_calories(double weight_kg, long long multiplier) {
    const long long tenths = std::llround(weight_kg * 10.0);
    return static_cast<int>((tenths * multiplier + 5) / 10);
}

const rules::Value& required(const rules::WorkingMemory& wm, const std::string& fact) {
    const rules::Value* v = wm.get(fact);
    if (v == nullptr || !wm.is_derived(fact)) throw IncompleteAssessment(fact);
    return *v;
}

double required_number(const rules::WorkingMemory& wm, const std::string& fact) {
    const auto* d = std::get_if<double>(&required(wm, fact));
    if (d == nullptr) throw std::runtime_error("assessment fact '" + fact + "' must be numeric");
    return *d;
}

}  // namespace

std::string_view to_string(BmiCategory c) { return kCategoryNames[static_cast<std::size_t>(c)]; }

std::optional<BmiCategory> bmi_category_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kCategoryNames.size(); ++i)
        if (kCategoryNames[i] == s) return static_cast<BmiCategory>(i);
    return std::nullopt;
}

double bmi(double weight_kg, double height_m) {
    if (!(weight_kg > 0) || !(height_m > 0)) throw std::invalid_argument("bmi requires positive weight and height");
    return weight_kg / (height_m * height_m);
}

BmiCategory classify_bmi(double value) {
    if (value <= 18.5) return BmiCategory::slim;
    if (value <= 25.0) return BmiCategory::normal;
    if (value < 30.0) return BmiCategory::overweight;
    return BmiCategory::obese;
}

int calorie_multiplier(BmiCategory category, Activity activity) {
    return kMultipliers[static_cast<int>(category)][static_cast<int>(activity)];
}

int total_calories(double weight_kg, BmiCategory category, Activity activity) {
    if (!(weight_kg > 0)) throw std::invalid_argument("total_calories requires positive weight");
    return scale_calories(weight_kg, calorie_multiplier(category, activity));
}

Servings base_servings(const Patient& p) {
    Servings s;
    const bool fruit_boost = p.has(Comorbidity::anorexia) || p.has(Comorbidity::surgery) || p.age > 65;
    s[GroupId::fruit] = fruit_boost ? 4 : 2;

    switch (p.activity) {
        case Activity::moderate: s[GroupId::starch] = 6; break;
        case Activity::very_active: s[GroupId::starch] = 8; break;
        case Activity::little: s[GroupId::starch] = bmi(p.weight, p.height) < 18.5 ? 10 : 6; break;
    }

    bool restricted = false;
    for (Comorbidity c : kRestricting) restricted = restricted || p.has(c);
    s[GroupId::protein] = restricted ? 2 : 3;
    s[GroupId::milk] = restricted ? 2 : 3;

    s[GroupId::vegetable] = 3;
    s[GroupId::sugar] = 0;
    s[GroupId::fat] = 1;
    return s;
}

Servings prescribed_servings(const Patient& patient, const KnowledgeBase& kb) {
    Servings s = base_servings(patient);
    for (auto& [g, n] : s) {
        const FoodGroup* fg = kb.find_group(g);
        if (fg == nullptr) throw std::invalid_argument("kb lacks group " + std::string(to_string(g)));
        n = std::clamp(n, fg->min_servings, fg->max_servings);
    }
    return s;
}

IncompleteAssessment::IncompleteAssessment(std::string fact)
    : std::runtime_error("incomplete assessment: rule set did not derive '" + fact + "'"), fact_(std::move(fact)) {}

std::string servings_fact(GroupId g) { return std::string(to_string(g)) + "_servings"; }

rules::WorkingMemory patient_facts(const Patient& p) {
    rules::WorkingMemory wm;
    wm.assert_fact("age", static_cast<double>(p.age));
    wm.assert_fact("weight", p.weight);
    wm.assert_fact("bmi", bmi(p.weight, p.height));
    wm.assert_fact("activity", rules::EnumToken{std::string(to_string(p.activity))});
    for (Comorbidity c : kAllComorbidities) wm.assert_fact(std::string(to_string(c)), p.has(c));
    return wm;
}

std::vector<std::string> bgl_warnings(const Patient& p) {
    if (!p.bgl || (*p.bgl >= 50 && *p.bgl <= 400)) return {};
    std::ostringstream os;
    os << "bgl_out_of_range: " << *p.bgl << " mg/dL is outside 50-400; consult a physician";
    return {os.str()};
}

Prescription assess(const Patient& patient, const KnowledgeBase& kb, const rules::RuleSet& ruleset) {
    const rules::WorkingMemory wm = rules::infer(ruleset, patient_facts(patient));

    Prescription rx;
    rx.bmi = std::get<double>(*wm.get("bmi"));

    const auto* category = std::get_if<rules::EnumToken>(&required(wm, "category"));
    const auto parsed = category ? bmi_category_from_string(category->name) : std::nullopt;
    if (!parsed) throw std::runtime_error("assessment fact 'category' must be one of slim, normal, overweight, obese");
    rx.category = *parsed;

    const double multiplier = required_number(wm, "kcal_multiplier");
    if (!(multiplier > 0) || multiplier != std::floor(multiplier) || multiplier > 1000)
        throw std::runtime_error("assessment fact 'kcal_multiplier' must be a positive integer");
    rx.total_kcal = scale_calories(patient.weight, static_cast<long long>(multiplier));

    for (GroupId g : kAllGroups) {
        const std::string fact = servings_fact(g);
        const double raw = required_number(wm, fact);
        if (raw < 0 || raw != std::floor(raw) || raw > 1000)
            throw std::runtime_error("assessment fact '" + fact + "' must be a non-negative integer");
        const FoodGroup* fg = kb.find_group(g);
        if (fg == nullptr) throw std::invalid_argument("kb lacks group " + std::string(to_string(g)));
        const int n = static_cast<int>(raw);
        const int clamped = std::clamp(n, fg->min_servings, fg->max_servings);
        if (clamped != n)
            rx.notes.push_back("clamped " + fact + " from " + std::to_string(n) + " to " + std::to_string(clamped));
        rx.servings[g] = clamped;
    }

    for (const rules::Firing& f : wm.trace) rx.trace.push_back(f.rule);
    rx.warnings = bgl_warnings(patient);
    return rx;
}

}  // namespace dietks
