#include "dietks/patient.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace dietks {

namespace {

constexpr std::array<std::string_view, 2> kGenders = {"male", "female"};
constexpr std::array<std::string_view, 3> kActivities = {"very_active", "moderate", "little"};
constexpr std::array<std::string_view, 8> kComorbidities = {
    "anorexia", "surgery", "gout", "heart_disease", "gallbladder", "liver", "hypertension", "typhoid"};

template <typename E, std::size_t N>
std::optional<E> lookup(const std::array<std::string_view, N>& names, std::string_view s) {
    for (std::size_t i = 0; i < N; ++i)
        if (names[i] == s) return static_cast<E>(i);
    return std::nullopt;
}

std::string joined(const auto& names) {
    std::string out;
    for (std::string_view n : names) {
        if (!out.empty()) out += ", ";
        out += n;
    }
    return out;
}

std::string summarize(const std::vector<FieldError>& fields) {
    std::string out = "invalid patient:";
    for (const FieldError& f : fields) out += " " + f.field + ": " + f.message + ";";
    out.pop_back();
    return out;
}

}  // namespace

std::string_view to_string(Gender g) { return kGenders[static_cast<std::size_t>(g)]; }
std::string_view to_string(Activity a) { return kActivities[static_cast<std::size_t>(a)]; }
std::string_view to_string(Comorbidity c) { return kComorbidities[static_cast<std::size_t>(c)]; }

std::optional<Gender> gender_from_string(std::string_view s) { return lookup<Gender>(kGenders, s); }
std::optional<Activity> activity_from_string(std::string_view s) { return lookup<Activity>(kActivities, s); }
std::optional<Comorbidity> comorbidity_from_string(std::string_view s) {
    return lookup<Comorbidity>(kComorbidities, s);
}

PatientError::PatientError(std::vector<FieldError> fields)
    : std::runtime_error(summarize(fields)), fields_(std::move(fields)) {}

std::vector<FieldError> validate_patient(const Patient& p) {
    std::vector<FieldError> out;
    if (!(p.age >= 1 && p.age <= 130)) out.push_back({"age", "must be an integer in [1, 130]"});
    if (!(std::isfinite(p.weight) && p.weight > 0 && p.weight <= 500))
        out.push_back({"weight", "must be in (0, 500] kg"});
    if (!(std::isfinite(p.height) && p.height > 0.3 && p.height <= 2.5))
        out.push_back({"height", "must be in (0.3, 2.5] m"});
    if (p.bgl && !(std::isfinite(*p.bgl) && *p.bgl >= 0)) out.push_back({"bgl", "must be >= 0 mg/dL"});
    for (int id : p.preferred_items)
        if (id < 1) {
            out.push_back({"preferred_items", "item ids must be positive"});
            break;
        }
    return out;
}

Patient patient_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw PatientError(std::vector<FieldError>{{"body", "must be a JSON object"}});

    Patient p;
    std::vector<FieldError> errors;
    auto require = [&](const char* key) -> const nlohmann::json* {
        auto it = j.find(key);
        if (it == j.end() || it->is_null()) {
            errors.push_back({key, "is required"});
            return nullptr;
        }
        return &*it;
    };

    static constexpr std::array<std::string_view, 10> kKnown = {
        "id", "name", "gender", "age", "weight", "height", "activity", "bgl", "comorbidities", "preferred_items"};
    for (const auto& [key, value] : j.items())
        if (std::find(kKnown.begin(), kKnown.end(), key) == kKnown.end()) errors.push_back({key, "unknown field"});

    if (auto it = j.find("id"); it != j.end() && !it->is_null()) {
        if (it->is_string()) p.id = it->get<std::string>();
        else errors.push_back({"id", "must be a string"});
    }
    if (auto it = j.find("name"); it != j.end() && !it->is_null()) {
        if (it->is_string()) p.name = it->get<std::string>();
        else errors.push_back({"name", "must be a string"});
    }
    if (const auto* v = require("gender")) {
        auto g = v->is_string() ? gender_from_string(v->get<std::string>()) : std::nullopt;
        if (g) p.gender = *g;
        else errors.push_back({"gender", "must be one of " + joined(kGenders)});
    }
    if (const auto* v = require("age")) {
        if (v->is_number_integer()) {
            const auto age = v->get<long long>();
            p.age = age < 0 || age > 1000 ? -1 : static_cast<int>(age);
        } else {
            errors.push_back({"age", "must be an integer in [1, 130]"});
            p.age = 1;
        }
    } else {
        p.age = 1;
    }
    bool weight_ok = true, height_ok = true;
    if (const auto* v = require("weight"); v && v->is_number()) p.weight = v->get<double>();
    else {
        if (v) errors.push_back({"weight", "must be a number in (0, 500] kg"});
        weight_ok = false;
    }
    if (const auto* v = require("height"); v && v->is_number()) p.height = v->get<double>();
    else {
        if (v) errors.push_back({"height", "must be a number in (0.3, 2.5] m"});
        height_ok = false;
    }
    if (const auto* v = require("activity")) {
        auto a = v->is_string() ? activity_from_string(v->get<std::string>()) : std::nullopt;
        if (a) p.activity = *a;
        else errors.push_back({"activity", "must be one of " + joined(kActivities)});
    }
    if (auto it = j.find("bgl"); it != j.end() && !it->is_null()) {
        if (it->is_number()) p.bgl = it->get<double>();
        else errors.push_back({"bgl", "must be a number >= 0"});
    }
    if (auto it = j.find("comorbidities"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) errors.push_back({"comorbidities", "must be an array"});
        else
            for (const auto& c : *it) {
                auto cm = c.is_string() ? comorbidity_from_string(c.get<std::string>()) : std::nullopt;
                if (cm) p.comorbidities.insert(*cm);
                else errors.push_back({"comorbidities", "entries must be among " + joined(kComorbidities)});
            }
    }
    if (auto it = j.find("preferred_items"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) errors.push_back({"preferred_items", "must be an array of item ids"});
        else
            for (const auto& v : *it) {
                if (v.is_number_integer() && v.get<long long>() > 0 && v.get<long long>() < 1'000'000'000)
                    p.preferred_items.insert(static_cast<int>(v.get<long long>()));
                else {
                    errors.push_back({"preferred_items", "must be an array of positive item ids"});
                    break;
                }
            }
    }

    for (FieldError& e : validate_patient(p)) {
        if ((e.field == "weight" && !weight_ok) || (e.field == "height" && !height_ok)) continue;
        bool dup = std::any_of(errors.begin(), errors.end(), [&](const FieldError& x) { return x.field == e.field; });
        if (!dup) errors.push_back(std::move(e));
    }
    if (!errors.empty()) throw PatientError(std::move(errors));
    return p;
}

nlohmann::ordered_json patient_to_json(const Patient& p) {
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["name"] = p.name;
    j["gender"] = to_string(p.gender);
    j["age"] = p.age;
    j["weight"] = p.weight;
    j["height"] = p.height;
    j["activity"] = to_string(p.activity);
    j["bgl"] = p.bgl ? nlohmann::ordered_json(*p.bgl) : nlohmann::ordered_json(nullptr);
    auto& cm = j["comorbidities"] = nlohmann::ordered_json::array();
    for (Comorbidity c : p.comorbidities) cm.push_back(to_string(c));
    auto& pi = j["preferred_items"] = nlohmann::ordered_json::array();
    for (int id : p.preferred_items) pi.push_back(id);
    return j;
}

}  // namespace dietks
