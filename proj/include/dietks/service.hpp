#pragma once

// HTTP/JSON facade over the knowledge base, assessment and planner.
//
//   POST /patients                 create, 201 {"id"}
//   GET  /patients                 summaries
//   GET  /patients/{id}            full record
//   PUT  /patients/{id}/selection  {"item_ids": [...]}
//   POST /patients/{id}/plan       prescription + meal plan
//   GET  /foods[?group=<id>]
//   GET  /health
//
// Errors are {"error": "...", "fields": [{"field", "message"}]}.

#include <string>

#include <json.hpp>

#include "dietks/kb.hpp"
#include "dietks/rules.hpp"
#include "dietks/store.hpp"

namespace httplib {
class Server;
}

namespace dietks {

class Service {
public:
    Service(KnowledgeBase kb, rules::RuleSet ruleset, Store& store);

    /// Installs all routes and the JSON error handlers on `server`.
    void mount(httplib::Server& server) const;

    const KnowledgeBase& kb() const noexcept { return kb_; }

    /// Runs assessment and planning for a record without touching the store.
    nlohmann::ordered_json plan_response(const PatientRecord& record) const;

    nlohmann::ordered_json foods_json(std::optional<GroupId> group) const;

private:
    KnowledgeBase kb_;
    rules::RuleSet ruleset_;
    Store& store_;
};

}  // namespace dietks
