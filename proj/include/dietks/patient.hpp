#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace dietks {

enum class Gender { male, female };
enum class Activity { very_active, moderate, little };
enum class Comorbidity { anorexia, surgery, gout, heart_disease, gallbladder, liver, hypertension, typhoid };

inline constexpr Comorbidity kAllComorbidities[] = {
    Comorbidity::anorexia,    Comorbidity::surgery, Comorbidity::gout,         Comorbidity::heart_disease,
    Comorbidity::gallbladder, Comorbidity::liver,   Comorbidity::hypertension, Comorbidity::typhoid};

std::string_view to_string(Gender g);
std::string_view to_string(Activity a);
std::string_view to_string(Comorbidity c);
std::optional<Gender> gender_from_string(std::string_view s);
std::optional<Activity> activity_from_string(std::string_view s);
std::optional<Comorbidity> comorbidity_from_string(std::string_view s);

struct Patient {
    std::string id;
    std::string name;
    Gender gender = Gender::male;
    int age = 0;
    double weight = 0;  // kg
    double height = 0;  // m
    Activity activity = Activity::moderate;
    std::optional<double> bgl;  // mg/dL
    std::set<Comorbidity> comorbidities;
    std::set<int> preferred_items;

    bool has(Comorbidity c) const { return comorbidities.count(c) != 0; }

    friend bool operator==(const Patient&, const Patient&) = default;
};

struct FieldError {
    std::string field;
    std::string message;
    friend bool operator==(const FieldError&, const FieldError&) = default;
};

/// Patient input rejected; carries one entry per offending field.
class PatientError : public std::runtime_error {
public:
    explicit PatientError(std::vector<FieldError> fields);
    const std::vector<FieldError>& fields() const noexcept { return fields_; }

private:
    std::vector<FieldError> fields_;
};

/// Range and sanity checks: weight in (0, 500], height in (0.3, 2.5],
/// age in [1, 130], bgl >= 0.
std::vector<FieldError> validate_patient(const Patient& p);

/// Decodes the JSON intake document and validates it. `id` is optional in
/// the document. Throws PatientError listing every bad field.
Patient patient_from_json(const nlohmann::json& j);

nlohmann::ordered_json patient_to_json(const Patient& p);

}  // namespace dietks
