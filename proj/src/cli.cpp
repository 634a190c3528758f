#include "dietks/cli.hpp"

#include <charconv>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>

#include "dietks/assessment.hpp"
#include "dietks/kb.hpp"
#include "dietks/planner.hpp"
#include "dietks/rules.hpp"
#include "dietks/service.hpp"
#include "dietks/store.hpp"

#ifndef DIETKS_DEFAULT_DATA_DIR
#define DIETKS_DEFAULT_DATA_DIR "data"
#endif

namespace dietks::cli {

namespace {

using ojson = nlohmann::ordered_json;

// Failure that maps straight to an exit code; message goes to stderr.
struct Exit {
    int code;
    std::string message;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Exit{kEnvironmentFailure, "cannot read " + path};
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Exit{kEnvironmentFailure, "error reading " + path};
    return ss.str();
}

KnowledgeBase load_kb(const std::string& path) {
    const std::string text = read_file(path);
    try {
        return parse_kb(text);
    } catch (const KbParseError& e) {
        throw Exit{kDomainFailure, path + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " +
                                       e.detail()};
    }
}

rules::RuleSet load_rules(const std::string& path) {
    const std::string text = read_file(path);
    try {
        return rules::parse_rules(text);
    } catch (const rules::RuleParseError& e) {
        throw Exit{kDomainFailure, path + ":" + std::to_string(e.line()) + ":" + std::to_string(e.column()) + ": " +
                                       e.detail()};
    }
}

Patient load_patient(const std::string& path) {
    const std::string text = read_file(path);
    const nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw Exit{kDomainFailure, path + ": malformed JSON"};
    try {
        return patient_from_json(j);
    } catch (const PatientError& e) {
        std::string msg = path + ": invalid patient";
        for (const FieldError& f : e.fields()) msg += "\n  " + f.field + ": " + f.message;
        throw Exit{kDomainFailure, msg};
    }
}

std::set<int> parse_selection(const std::string& text) {
    std::set<int> ids;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
        const auto b = token.find_first_not_of(" \t");
        if (b == std::string::npos) continue;
        token = token.substr(b, token.find_last_not_of(" \t") - b + 1);
        int id = 0;
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), id);
        if (ec != std::errc() || ptr != token.data() + token.size() || id < 1)
            throw Exit{kDomainFailure, "invalid item id '" + token + "' in --select"};
        ids.insert(id);
    }
    return ids;
}

Prescription run_assessment(const Patient& p, const KnowledgeBase& kb, const rules::RuleSet& rs) {
    try {
        return assess(p, kb, rs);
    } catch (const IncompleteAssessment& e) {
        throw Exit{kDomainFailure, e.what()};
    } catch (const rules::InferenceError& e) {
        throw Exit{kDomainFailure, std::string("inference failed: ") + e.what()};
    } catch (const std::runtime_error& e) {
        throw Exit{kDomainFailure, e.what()};
    }
}

ojson prescription_json(const Prescription& rx) {
    ojson j;
    j["bmi"] = rx.bmi;
    j["category"] = to_string(rx.category);
    j["total_kcal"] = rx.total_kcal;
    ojson servings = ojson::object();
    for (GroupId g : kAllGroups) servings[std::string(to_string(g))] = rx.servings.at(g);
    j["servings"] = std::move(servings);
    j["trace"] = rx.trace;
    j["notes"] = rx.notes;
    j["warnings"] = rx.warnings;
    return j;
}

httplib::Server* g_server = nullptr;

extern "C" void stop_server(int) {
    if (g_server) g_server->stop();
}

int serve(const std::string& host, int port, const std::string& kb_path, const std::string& rules_path,
          const std::string& store_path, std::ostream& err) {
    KnowledgeBase kb = load_kb(kb_path);
    rules::RuleSet rs = load_rules(rules_path);
    std::optional<Store> store;
    try {
        store.emplace(store_path);
    } catch (const StoreError& e) {
        throw Exit{kEnvironmentFailure, e.what()};
    }
    for (const std::string& w : store->load_warnings()) err << "warning: " << w << '\n';

    Service service(std::move(kb), std::move(rs), *store);
    httplib::Server server;
    // httplib's default also sets SO_REUSEPORT, which would let a second
    // instance share an occupied port instead of failing to bind.
    server.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    });
    service.mount(server);

    int bound = port;
    if (port == 0) bound = server.bind_to_any_port(host);
    else if (!server.bind_to_port(host, port)) bound = -1;
    if (bound <= 0) throw Exit{kEnvironmentFailure, "cannot bind " + host + ":" + std::to_string(port)};

    g_server = &server;
    std::signal(SIGINT, stop_server);
    std::signal(SIGTERM, stop_server);
    err << "listening on " << host << ':' << bound << std::endl;
    const bool ok = server.listen_after_bind();
    g_server = nullptr;
    return ok ? kOk : kEnvironmentFailure;
}

}  // namespace

std::filesystem::path data_dir() {
    if (const char* env = std::getenv("DIETKS_DATA_DIR"); env && *env) return env;
    return DIETKS_DEFAULT_DATA_DIR;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Diabetic type-2 diet expert system", "dietks"};
    app.require_subcommand(1);

    const std::string default_kb = (data_dir() / "default.kb").string();
    const std::string default_rules = (data_dir() / "assessment.rules").string();

    std::string kb_path = default_kb, rules_path = default_rules, patient_path, selection, store_path = "dietks-store.jsonl",
                host = "127.0.0.1";
    int port = 8080;
    bool has_selection = false;

    auto* validate = app.add_subcommand("validate", "Check a knowledge base and a rule file");
    validate->add_option("--kb", kb_path, "Knowledge base file");
    validate->add_option("--rules", rules_path, "Rules file");

    auto* assess_cmd = app.add_subcommand("assess", "Print the prescription for a patient file");
    assess_cmd->add_option("--patient", patient_path, "Patient JSON file")->required();
    assess_cmd->add_option("--kb", kb_path, "Knowledge base file");
    assess_cmd->add_option("--rules", rules_path, "Rules file");

    auto* plan_cmd = app.add_subcommand("plan", "Print the five-meal plan for a patient file");
    plan_cmd->add_option("--patient", patient_path, "Patient JSON file")->required();
    plan_cmd->add_option("--kb", kb_path, "Knowledge base file");
    plan_cmd->add_option("--rules", rules_path, "Rules file");
    plan_cmd->add_option("--select", selection, "Comma-separated preferred item ids (overrides the patient file)");

    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
    serve_cmd->add_option("--port", port, "TCP port (0 picks a free port)")->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--host", host, "Bind address");
    serve_cmd->add_option("--kb", kb_path, "Knowledge base file");
    serve_cmd->add_option("--rules", rules_path, "Rules file");
    serve_cmd->add_option("--store", store_path, "Patient store (JSON lines)");

    std::vector<std::string> argv_storage = {"dietks"};
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const std::string& a : argv_storage) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kDomainFailure;
    }
    has_selection = plan_cmd->count("--select") > 0;

    try {
        if (*validate) {
            // Report both files before deciding the exit code.
            int code = kOk;
            try {
                (void)load_kb(kb_path);
            } catch (const Exit& e) {
                err << e.message << '\n';
                code = std::max(code, e.code);
            }
            try {
                (void)load_rules(rules_path);
            } catch (const Exit& e) {
                err << e.message << '\n';
                code = std::max(code, e.code);
            }
            return code;
        }
        if (*assess_cmd) {
            const KnowledgeBase kb = load_kb(kb_path);
            const rules::RuleSet rs = load_rules(rules_path);
            const Patient p = load_patient(patient_path);
            out << prescription_json(run_assessment(p, kb, rs)).dump(2) << '\n';
            return kOk;
        }
        if (*plan_cmd) {
            const KnowledgeBase kb = load_kb(kb_path);
            const rules::RuleSet rs = load_rules(rules_path);
            Patient p = load_patient(patient_path);
            if (has_selection) p.preferred_items = parse_selection(selection);
            const Prescription rx = run_assessment(p, kb, rs);
            MealPlan plan;
            try {
                plan = compose_meals(rx, kb, p.preferred_items, p.id);
            } catch (const PlanError& e) {
                throw Exit{kDomainFailure, e.what()};
            }
            out << plan_to_json(plan, kb).dump(2) << '\n';
            return kOk;
        }
        if (*serve_cmd) return serve(host, port, kb_path, rules_path, store_path, err);
    } catch (const Exit& e) {
        err << "dietks: " << e.message << '\n';
        return e.code;
    }
    return kDomainFailure;
}

}  // namespace dietks::cli
