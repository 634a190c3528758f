#pragma once

// Shared fixtures for the unit and acceptance suites.

#include <array>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fcntl.h>
#include <sys/wait.h>
#include <unistd.h>

#include "dietks/kb.hpp"
#include "dietks/patient.hpp"
#include "dietks/rules.hpp"

namespace dietks::test {

inline std::filesystem::path data_path(const std::string& name) {
    return std::filesystem::path(DIETKS_DATA_DIR) / name;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

inline const KnowledgeBase& default_kb() {
    static const KnowledgeBase kb = parse_kb(read_text(data_path("default.kb")));
    return kb;
}

inline const rules::RuleSet& assessment_rules() {
    static const rules::RuleSet rs = rules::parse_rules(read_text(data_path("assessment.rules")));
    return rs;
}

/// Seven groups with the default kcal values and ranges, one item each.
inline std::string minimal_kb_text() {
    return "group starch kcal=80 min=6 max=11\n"
           "group vegetable kcal=25 min=2 max=5\n"
           "group fruit kcal=60 min=2 max=4\n"
           "group protein kcal=75 min=2 max=3\n"
           "group milk kcal=120 min=2 max=3\n"
           "group sugar kcal=60 min=0 max=1\n"
           "group fat kcal=45 min=0 max=3\n"
           "item id=42 group=starch name_en=\"rice\" name_ar=\"\" serving=\"\"\n"
           "item id=30 group=vegetable name_en=\"salad\" name_ar=\"\" serving=\"\"\n"
           "item id=22 group=fruit name_en=\"banana\" name_ar=\"\" serving=\"\"\n"
           "item id=14 group=protein name_en=\"chicken\" name_ar=\"\" serving=\"\"\n"
           "item id=11 group=milk name_en=\"milk\" name_ar=\"\" serving=\"\"\n"
           "item id=4 group=sugar name_en=\"sugar\" name_ar=\"\" serving=\"\"\n"
           "item id=1 group=fat name_en=\"oil\" name_ar=\"\" serving=\"\"\n";
}

inline Patient make_patient(double weight, double height, Activity activity, int age = 40,
                            std::set<Comorbidity> comorbidities = {}) {
    Patient p;
    p.id = "test";
    p.name = "Test Patient";
    p.gender = Gender::female;
    p.age = age;
    p.weight = weight;
    p.height = height;
    p.activity = activity;
    p.comorbidities = std::move(comorbidities);
    return p;
}

/// Random valid patient. Weight is drawn to 0.1 kg and height to 1 cm.
inline Patient random_patient(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> weight10(300, 1600);
    std::uniform_int_distribution<int> height_cm(135, 205);
    std::uniform_int_distribution<int> age(18, 95);
    std::uniform_int_distribution<int> activity(0, 2);
    std::bernoulli_distribution flag(0.15);
    Patient p = make_patient(weight10(rng) / 10.0, height_cm(rng) / 100.0, static_cast<Activity>(activity(rng)),
                             age(rng));
    for (Comorbidity c : kAllComorbidities)
        if (flag(rng)) p.comorbidities.insert(c);
    return p;
}

/// Random subset of the knowledge base's item ids (possibly empty).
inline std::set<int> random_selection(std::mt19937_64& rng, const KnowledgeBase& kb) {
    std::bernoulli_distribution pick(std::uniform_real_distribution<double>(0.0, 0.4)(rng));
    std::set<int> ids;
    for (const FoodItem& it : kb.items)
        if (pick(rng)) ids.insert(it.id);
    return ids;
}

struct ProcessResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

/// Runs the dietks CLI binary with `args`, capturing stdout and stderr.
inline ProcessResult run_cli_binary(const std::vector<std::string>& args) {
    char out_tpl[] = "/tmp/dietks_outXXXXXX";
    char err_tpl[] = "/tmp/dietks_errXXXXXX";
    const int out_fd = mkstemp(out_tpl);
    const int err_fd = mkstemp(err_tpl);
    ProcessResult r;
    const pid_t pid = fork();
    if (pid == 0) {
        dup2(out_fd, 1);
        dup2(err_fd, 2);
        std::vector<std::string> storage = {DIETKS_CLI_PATH};
        storage.insert(storage.end(), args.begin(), args.end());
        std::vector<char*> argv;
        for (auto& s : storage) argv.push_back(s.data());
        argv.push_back(nullptr);
        execv(argv[0], argv.data());
        _exit(127);
    }
    int status = 0;
    waitpid(pid, &status, 0);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    close(out_fd);
    close(err_fd);
    r.out = read_text(out_tpl);
    r.err = read_text(err_tpl);
    std::filesystem::remove(out_tpl);
    std::filesystem::remove(err_tpl);
    return r;
}

/// `dietks serve` running as a child process. The port is parsed from the
/// "listening on host:port" line the server prints to stderr.
struct ServerProcess {
    pid_t pid = -1;
    int port = -1;
    int exit_code = -1;  // set when the child exited before listening
    std::filesystem::path err_path;

    bool running() const { return port > 0; }

    std::string stderr_text() const { return read_text(err_path); }

    void kill_with(int sig) {
        if (pid <= 0) return;
        ::kill(pid, sig);
        int status = 0;
        waitpid(pid, &status, 0);
        pid = -1;
        port = -1;
    }

    ~ServerProcess() {
        kill_with(SIGKILL);
        if (!err_path.empty()) std::filesystem::remove(err_path);
    }
};

inline std::unique_ptr<ServerProcess> start_server(const std::vector<std::string>& args) {
    auto sp = std::make_unique<ServerProcess>();
    char err_tpl[] = "/tmp/dietks_serveXXXXXX";
    const int err_fd = mkstemp(err_tpl);
    sp->err_path = err_tpl;
    const pid_t pid = fork();
    if (pid == 0) {
        const int null_fd = ::open("/dev/null", O_WRONLY);
        dup2(null_fd, 1);
        dup2(err_fd, 2);
        std::vector<std::string> storage = {DIETKS_CLI_PATH, "serve"};
        storage.insert(storage.end(), args.begin(), args.end());
        std::vector<char*> argv;
        for (auto& s : storage) argv.push_back(s.data());
        argv.push_back(nullptr);
        execv(argv[0], argv.data());
        _exit(127);
    }
    close(err_fd);
    sp->pid = pid;
    for (int i = 0; i < 1000; ++i) {
        const std::string err = read_text(sp->err_path);
        if (auto at = err.find("listening on "); at != std::string::npos && err.find('\n', at) != std::string::npos) {
            const auto colon = err.find(':', at + 13);
            sp->port = std::stoi(err.substr(colon + 1));
            return sp;
        }
        int status = 0;
        if (waitpid(pid, &status, WNOHANG) == pid) {
            sp->exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
            sp->pid = -1;
            return sp;
        }
        usleep(10'000);
    }
    return sp;  // timed out; destructor kills the child
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
    std::random_device rd;
    auto dir = std::filesystem::temp_directory_path() / (tag + "_" + std::to_string(getpid()) + "_" + std::to_string(rd()));
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace dietks::test
