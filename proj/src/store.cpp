#include "dietks/store.hpp"

#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <mutex>
#include <sstream>

#include <fcntl.h>
#include <unistd.h>

namespace dietks {

namespace {

std::string errno_text() { return std::strerror(errno); }

void write_all(int fd, std::string_view data, const std::filesystem::path& path) {
    while (!data.empty()) {
        const ssize_t n = ::write(fd, data.data(), data.size());
        if (n < 0) {
            if (errno == EINTR) continue;
            throw StoreError("write to " + path.string() + " failed: " + errno_text());
        }
        data.remove_prefix(static_cast<std::size_t>(n));
    }
}

// Ids look like "p000042-9f3a1c"; the numeric part restores the counter.
unsigned long long id_counter(const std::string& id) {
    if (id.size() < 2 || id[0] != 'p') return 0;
    unsigned long long n = 0;
    for (std::size_t i = 1; i < id.size() && id[i] >= '0' && id[i] <= '9'; ++i) n = n * 10 + (id[i] - '0');
    return n;
}

}  // namespace

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[40];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

nlohmann::ordered_json record_to_json(const PatientRecord& r) {
    nlohmann::ordered_json j;
    j["id"] = r.patient.id;
    j["patient"] = patient_to_json(r.patient);
    j["created_at"] = r.created_at;
    j["updated_at"] = r.updated_at;
    j["last_plan"] = r.last_plan ? *r.last_plan : nlohmann::ordered_json(nullptr);
    return j;
}

PatientRecord record_from_json(const nlohmann::json& j) {
    PatientRecord r;
    r.patient = patient_from_json(j.at("patient"));
    if (r.patient.id.empty()) throw StoreError("record without id");
    r.created_at = j.at("created_at").get<std::string>();
    r.updated_at = j.at("updated_at").get<std::string>();
    if (auto it = j.find("last_plan"); it != j.end() && !it->is_null())
        r.last_plan = nlohmann::ordered_json::parse(it->dump());
    return r;
}

Store::Store(std::filesystem::path path) : path_(std::move(path)), rng_(std::random_device{}()) {
    std::error_code ec;
    if (std::filesystem::exists(path_, ec)) {
        std::ifstream in(path_, std::ios::binary);
        if (!in) throw StoreError("cannot read store " + path_.string());
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            try {
                PatientRecord r = record_from_json(nlohmann::json::parse(line));
                counter_ = std::max(counter_, id_counter(r.patient.id));
                records_[r.patient.id] = std::move(r);
            } catch (const std::exception& e) {
                load_warnings_.push_back("store line " + std::to_string(line_no) + " skipped: " + e.what());
            }
        }
    }
    compact();
}

Store::~Store() {
    if (fd_ >= 0) ::close(fd_);
}

void Store::compact() {
    const std::filesystem::path tmp = path_.string() + ".tmp";
    const int tfd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (tfd < 0) throw StoreError("cannot write store " + tmp.string() + ": " + errno_text());
    try {
        std::string data;
        for (const auto& [id, r] : records_) data += record_to_json(r).dump() + '\n';
        write_all(tfd, data, tmp);
        if (::fsync(tfd) != 0) throw StoreError("fsync " + tmp.string() + " failed: " + errno_text());
    } catch (...) {
        ::close(tfd);
        throw;
    }
    ::close(tfd);
    if (std::rename(tmp.c_str(), path_.c_str()) != 0)
        throw StoreError("cannot replace store " + path_.string() + ": " + errno_text());
    fd_ = ::open(path_.c_str(), O_WRONLY | O_APPEND | O_CLOEXEC);
    if (fd_ < 0) throw StoreError("cannot open store " + path_.string() + ": " + errno_text());
}

void Store::append(const PatientRecord& r) {
    write_all(fd_, record_to_json(r).dump() + '\n', path_);
    if (::fsync(fd_) != 0) throw StoreError("fsync " + path_.string() + " failed: " + errno_text());
}

std::string Store::next_id() {
    char buf[32];
    std::snprintf(buf, sizeof buf, "p%06llu-%06llx", ++counter_,
                  static_cast<unsigned long long>(rng_() & 0xFFFFFFULL));
    return buf;
}

PatientRecord Store::create(Patient patient) {
    std::unique_lock lock(mutex_);
    patient.id = next_id();
    PatientRecord r{std::move(patient), utc_timestamp(), {}, std::nullopt};
    r.updated_at = r.created_at;
    append(r);
    records_[r.patient.id] = r;
    return r;
}

std::optional<PatientRecord> Store::update(const std::string& id,
                                           const std::function<void(PatientRecord&)>& change) {
    std::unique_lock lock(mutex_);
    auto it = records_.find(id);
    if (it == records_.end()) return std::nullopt;
    PatientRecord next = it->second;
    change(next);
    next.patient.id = id;
    next.created_at = it->second.created_at;
    next.updated_at = std::max(utc_timestamp(), next.created_at);
    append(next);
    it->second = next;
    return next;
}

std::optional<PatientRecord> Store::get(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = records_.find(id);
    if (it == records_.end()) return std::nullopt;
    return it->second;
}

std::vector<PatientRecord> Store::list() const {
    std::shared_lock lock(mutex_);
    std::vector<PatientRecord> out;
    out.reserve(records_.size());
    for (const auto& [id, r] : records_) out.push_back(r);
    return out;
}

std::size_t Store::size() const {
    std::shared_lock lock(mutex_);
    return records_.size();
}

}  // namespace dietks
