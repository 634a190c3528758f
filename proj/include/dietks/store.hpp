#pragma once

// Durable patient records in a JSON-lines file.
//
// Every mutation appends one complete record (one JSON document per line)
// and fsyncs before returning. Loading replays the file with last-write-wins
// per id; unparseable lines, including a torn final line left by a crash, are
// skipped and reported through load_warnings(). After loading, the file is
// rewritten compacted (one line per live record) via write-and-rename.

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dietks/patient.hpp"

namespace dietks {

struct PatientRecord {
    Patient patient;
    std::string created_at;  // UTC, ISO 8601 with milliseconds
    std::string updated_at;
    std::optional<nlohmann::ordered_json> last_plan;
};

nlohmann::ordered_json record_to_json(const PatientRecord& r);
PatientRecord record_from_json(const nlohmann::json& j);

class StoreError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Current UTC time, e.g. "2026-10-15T08:30:00.123Z".
std::string utc_timestamp();

class Store {
public:
    /// Opens (creating if absent) and replays the store file. Throws
    /// StoreError when the file cannot be read or written.
    explicit Store(std::filesystem::path path);
    ~Store();

    Store(const Store&) = delete;
    Store& operator=(const Store&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    const std::vector<std::string>& load_warnings() const noexcept { return load_warnings_; }

    /// Assigns a fresh id and timestamps, persists, returns the stored record.
    PatientRecord create(Patient patient);

    /// Replaces an existing record (matched by patient.id), bumping
    /// updated_at. Returns nullopt when the id is unknown.
    std::optional<PatientRecord> update(const std::string& id, const std::function<void(PatientRecord&)>& change);

    std::optional<PatientRecord> get(const std::string& id) const;

    /// All records ordered by id.
    std::vector<PatientRecord> list() const;

    std::size_t size() const;

private:
    void append(const PatientRecord& r);
    void compact();
    std::string next_id();

    std::filesystem::path path_;
    int fd_ = -1;
    std::map<std::string, PatientRecord> records_;
    std::vector<std::string> load_warnings_;
    unsigned long long counter_ = 0;
    std::mt19937_64 rng_;
    mutable std::shared_mutex mutex_;
};

}  // namespace dietks
