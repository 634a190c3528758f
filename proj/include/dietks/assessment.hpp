#pragma once

// Patient assessment: body mass index, daily calorie allowance and the
// per-group serving prescription. The rule-driven path (assess) runs the
// shipped assessment.rules through the inference engine; the direct
// functions below compute the same tables in plain code.

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dietks/kb.hpp"
#include "dietks/patient.hpp"
#include "dietks/rules.hpp"

namespace dietks {

enum class BmiCategory { slim, normal, overweight, obese };

std::string_view to_string(BmiCategory c);
std::optional<BmiCategory> bmi_category_from_string(std::string_view s);

/// weight / height^2. Throws std::invalid_argument on non-positive input.
double bmi(double weight_kg, double height_m);

/// slim <= 18.5 < normal <= 25 < overweight < 30 <= obese.
BmiCategory classify_bmi(double bmi);

/// Multiplier in kcal per kg of body weight.
int calorie_multiplier(BmiCategory category, Activity activity);

/// weight x multiplier, with weight taken to 0.1 kg and the product rounded
/// half-up to whole kilocalories.
int total_calories(double weight_kg, BmiCategory category, Activity activity);

using Servings = std::map<GroupId, int>;

/// Serving counts before clamping to the KB group ranges.
Servings base_servings(const Patient& patient);

/// base_servings clamped into each group's [min, max].
Servings prescribed_servings(const Patient& patient, const KnowledgeBase& kb);

struct Prescription {
    int total_kcal = 0;
    Servings servings;
    BmiCategory category = BmiCategory::normal;
    double bmi = 0;
    std::vector<std::string> trace;     // fired rule names, in firing order
    std::vector<std::string> notes;     // clamp events
    std::vector<std::string> warnings;  // advisory only (e.g. BGL out of range)
};

/// The rule set did not derive a fact the prescription needs.
class IncompleteAssessment : public std::runtime_error {
public:
    explicit IncompleteAssessment(std::string fact);
    const std::string& fact() const noexcept { return fact_; }

private:
    std::string fact_;
};

/// Fact name carrying the serving count for a group, e.g. "milk_servings".
std::string servings_fact(GroupId g);

/// Initial working memory for a patient: age, weight, bmi, activity and one
/// boolean per comorbidity.
rules::WorkingMemory patient_facts(const Patient& patient);

Prescription assess(const Patient& patient, const KnowledgeBase& kb, const rules::RuleSet& ruleset);

/// Advisory BGL warning when outside [50, 400] mg/dL; empty otherwise.
std::vector<std::string> bgl_warnings(const Patient& patient);

}  // namespace dietks
