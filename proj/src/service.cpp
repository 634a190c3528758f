#include "dietks/service.hpp"

#include <httplib.h>

#include "dietks/assessment.hpp"
#include "dietks/planner.hpp"

namespace dietks {

namespace {

using ojson = nlohmann::ordered_json;

void send_json(httplib::Response& res, int status, const ojson& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
}

void send_error(httplib::Response& res, int status, const std::string& message,
                const std::vector<FieldError>& fields = {}) {
    ojson body;
    body["error"] = message;
    body["fields"] = ojson::array();
    for (const FieldError& f : fields) body["fields"].push_back({{"field", f.field}, {"message", f.message}});
    send_json(res, status, body);
}

// Returns false (and fills res) unless the request carries a JSON object.
bool read_json_body(const httplib::Request& req, httplib::Response& res, nlohmann::json& out) {
    const std::string type = req.get_header_value("Content-Type");
    if (type.rfind("application/json", 0) != 0) {
        send_error(res, 415, "content type must be application/json");
        return false;
    }
    out = nlohmann::json::parse(req.body, nullptr, false);
    if (out.is_discarded()) {
        send_error(res, 400, "request body is not valid JSON", {{"body", "malformed JSON"}});
        return false;
    }
    if (!out.is_object()) {
        send_error(res, 400, "request body must be a JSON object", {{"body", "must be a JSON object"}});
        return false;
    }
    return true;
}

std::vector<int> unknown_items(const KnowledgeBase& kb, const std::set<int>& ids) {
    std::vector<int> out;
    for (int id : ids)
        if (kb.find_item(id) == nullptr) out.push_back(id);
    return out;
}

void send_unknown_items(httplib::Response& res, const std::string& field, const std::vector<int>& ids) {
    std::string list;
    std::vector<FieldError> fields;
    for (int id : ids) {
        list += (list.empty() ? "" : ", ") + std::to_string(id);
        fields.push_back({field, "unknown item " + std::to_string(id)});
    }
    send_error(res, 400, "unknown item ids: " + list, fields);
}

ojson summary_json(const PatientRecord& r) {
    ojson j;
    j["id"] = r.patient.id;
    j["name"] = r.patient.name;
    j["created_at"] = r.created_at;
    j["updated_at"] = r.updated_at;
    j["has_plan"] = r.last_plan.has_value();
    return j;
}

}  // namespace

Service::Service(KnowledgeBase kb, rules::RuleSet ruleset, Store& store)
    : kb_(std::move(kb)), ruleset_(std::move(ruleset)), store_(store) {}

ojson Service::foods_json(std::optional<GroupId> group) const {
    std::vector<const FoodItem*> items;
    for (const FoodItem& it : kb_.items)
        if (!group || it.group == *group) items.push_back(&it);
    std::sort(items.begin(), items.end(), [](const FoodItem* a, const FoodItem* b) { return a->id < b->id; });
    ojson out = ojson::array();
    for (const FoodItem* it : items) {
        ojson j;
        j["id"] = it->id;
        j["group"] = to_string(it->group);
        j["name_en"] = it->name_en;
        j["name_ar"] = it->name_ar;
        j["serving_desc"] = it->serving_desc;
        j["kcal"] = kb_.effective_kcal(*it);
        out.push_back(std::move(j));
    }
    return out;
}

ojson Service::plan_response(const PatientRecord& record) const {
    const Patient& p = record.patient;
    const Prescription rx = assess(p, kb_, ruleset_);
    const MealPlan plan = compose_meals(rx, kb_, p.preferred_items, p.id);

    ojson prescription;
    prescription["bmi"] = rx.bmi;
    prescription["category"] = to_string(rx.category);
    prescription["total_kcal"] = rx.total_kcal;
    ojson servings = ojson::object();
    for (GroupId g : kAllGroups) servings[std::string(to_string(g))] = rx.servings.at(g);
    prescription["servings"] = std::move(servings);
    prescription["notes"] = rx.notes;
    prescription["warnings"] = rx.warnings;

    ojson body;
    body["patient_id"] = p.id;
    body["prescription"] = std::move(prescription);
    body["plan"] = plan_to_json(plan, kb_);
    body["warnings"] = plan.warnings;
    body["trace"] = rx.trace;
    return body;
}

void Service::mount(httplib::Server& server) const {
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        std::string what = "internal error";
        try {
            if (ep) std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            what = e.what();
        } catch (...) {
        }
        send_error(res, 500, what);
    });
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (!res.body.empty()) return;
        send_error(res, res.status, res.status == 404 ? "not found" : "request failed");
    });
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
        send_json(res, 200, ojson{{"status", "ok"}, {"kb_version", kb_.version}});
    });

    server.Get("/foods", [this](const httplib::Request& req, httplib::Response& res) {
        std::optional<GroupId> group;
        if (req.has_param("group")) {
            const std::string token = req.get_param_value("group");
            group = group_from_string(token);
            if (!group) {
                send_error(res, 400, "unknown group '" + token + "'", {{"group", "unknown group " + token}});
                return;
            }
        }
        send_json(res, 200, foods_json(group));
    });

    server.Post("/patients", [this](const httplib::Request& req, httplib::Response& res) {
        nlohmann::json body;
        if (!read_json_body(req, res, body)) return;
        Patient p;
        try {
            p = patient_from_json(body);
        } catch (const PatientError& e) {
            send_error(res, 400, "invalid patient", e.fields());
            return;
        }
        if (auto bad = unknown_items(kb_, p.preferred_items); !bad.empty()) {
            send_unknown_items(res, "preferred_items", bad);
            return;
        }
        const PatientRecord r = store_.create(std::move(p));
        send_json(res, 201, ojson{{"id", r.patient.id}});
    });

    server.Get("/patients", [this](const httplib::Request&, httplib::Response& res) {
        ojson out = ojson::array();
        for (const PatientRecord& r : store_.list()) out.push_back(summary_json(r));
        send_json(res, 200, out);
    });

    server.Get(R"(/patients/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        const auto r = store_.get(req.matches[1]);
        if (!r) {
            send_error(res, 404, "unknown patient " + std::string(req.matches[1]));
            return;
        }
        send_json(res, 200, record_to_json(*r));
    });

    server.Put(R"(/patients/([^/]+)/selection)", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        if (!store_.get(id)) {
            send_error(res, 404, "unknown patient " + id);
            return;
        }
        nlohmann::json body;
        if (!read_json_body(req, res, body)) return;
        auto it = body.find("item_ids");
        if (it == body.end() || !it->is_array()) {
            send_error(res, 400, "item_ids must be an array", {{"item_ids", "must be an array of item ids"}});
            return;
        }
        std::set<int> ids;
        for (const auto& v : *it) {
            if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 1'000'000'000) {
                send_error(res, 400, "item_ids must contain positive integers",
                           {{"item_ids", "must contain positive integers"}});
                return;
            }
            ids.insert(static_cast<int>(v.get<long long>()));
        }
        if (auto bad = unknown_items(kb_, ids); !bad.empty()) {
            send_unknown_items(res, "item_ids", bad);
            return;
        }
        const auto updated = store_.update(id, [&ids](PatientRecord& r) { r.patient.preferred_items = ids; });
        if (!updated) {
            send_error(res, 404, "unknown patient " + id);
            return;
        }
        ojson out;
        out["id"] = id;
        out["preferred_items"] = updated->patient.preferred_items;
        send_json(res, 200, out);
    });

    server.Post(R"(/patients/([^/]+)/plan)", [this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        const auto record = store_.get(id);
        if (!record) {
            send_error(res, 404, "unknown patient " + id);
            return;
        }
        ojson body;
        try {
            body = plan_response(*record);
        } catch (const IncompleteAssessment& e) {
            send_error(res, 500, e.what(), {{e.fact(), "not derived by the rule set"}});
            return;
        } catch (const PlanError& e) {
            send_error(res, 400, e.what());
            return;
        }
        store_.update(id, [&body](PatientRecord& r) { r.last_plan = body["plan"]; });
        send_json(res, 200, body);
    });
}

}  // namespace dietks
