#include <doctest.h>

#include <thread>

#include "dietks/store.hpp"
#include "support.hpp"

using namespace dietks;
using dietks::test::make_patient;
using dietks::test::read_text;
using dietks::test::temp_dir;
using dietks::test::write_text;

namespace {

std::size_t line_count(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST_CASE("create, get, list, update") {
    const auto dir = temp_dir("store_basic");
    Store store(dir / "s.jsonl");
    CHECK(store.size() == 0);

    const PatientRecord a = store.create(make_patient(70, 1.7, Activity::moderate));
    const PatientRecord b = store.create(make_patient(80, 1.8, Activity::little));
    CHECK(a.patient.id != b.patient.id);
    CHECK(a.patient.id.rfind("p000001-", 0) == 0);
    CHECK(b.patient.id.rfind("p000002-", 0) == 0);
    CHECK(a.created_at == a.updated_at);
    CHECK(a.created_at.back() == 'Z');
    CHECK(store.get(a.patient.id)->patient.weight == 70);
    CHECK(!store.get("nope"));
    CHECK(store.list().size() == 2);

    const auto updated = store.update(a.patient.id, [](PatientRecord& r) {
        r.patient.preferred_items = {42};
        r.patient.id = "tampered";
    });
    REQUIRE(updated);
    CHECK(updated->patient.id == a.patient.id);
    CHECK(updated->created_at == a.created_at);
    CHECK(updated->updated_at >= a.updated_at);
    CHECK(store.get(a.patient.id)->patient.preferred_items == std::set<int>{42});
    CHECK(!store.update("nope", [](PatientRecord&) {}));

    // Three appends on disk: two creates and one update.
    CHECK(line_count(read_text(dir / "s.jsonl")) == 3);
    std::filesystem::remove_all(dir);
}

TEST_CASE("restart replays last-write-wins and continues the id sequence") {
    const auto dir = temp_dir("store_restart");
    std::string id;
    {
        Store store(dir / "s.jsonl");
        id = store.create(make_patient(70, 1.7, Activity::moderate)).patient.id;
        store.update(id, [](PatientRecord& r) { r.patient.weight = 71.5; });
        store.update(id, [](PatientRecord& r) {
            r.last_plan = nlohmann::ordered_json{{"total_kcal", 1725}};
        });
    }
    Store again(dir / "s.jsonl");
    CHECK(again.load_warnings().empty());
    REQUIRE(again.size() == 1);
    const PatientRecord r = *again.get(id);
    CHECK(r.patient.weight == 71.5);
    REQUIRE(r.last_plan);
    CHECK((*r.last_plan)["total_kcal"] == 1725);
    // Compacted to one line per record.
    CHECK(line_count(read_text(dir / "s.jsonl")) == 1);
    CHECK(again.create(make_patient(60, 1.6, Activity::little)).patient.id.rfind("p000002-", 0) == 0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("torn and garbage lines are skipped with a warning") {
    const auto dir = temp_dir("store_torn");
    std::string good;
    {
        Store store(dir / "s.jsonl");
        store.create(make_patient(70, 1.7, Activity::moderate));
        good = read_text(dir / "s.jsonl");
    }
    write_text(dir / "s.jsonl", good + "not json\n" + good.substr(0, good.size() / 2));
    Store store(dir / "s.jsonl");
    CHECK(store.size() == 1);
    CHECK(store.load_warnings().size() == 2);
    CHECK(store.load_warnings()[0].find("line 2") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("unwritable location is a StoreError") {
    CHECK_THROWS_AS(Store("/nonexistent-dir/for/sure/s.jsonl"), StoreError);
}

TEST_CASE("concurrent creates get distinct ids and all persist") {
    const auto dir = temp_dir("store_threads");
    {
        Store store(dir / "s.jsonl");
        std::vector<std::thread> threads;
        for (int t = 0; t < 8; ++t)
            threads.emplace_back([&store] {
                for (int i = 0; i < 25; ++i) store.create(make_patient(70, 1.7, Activity::moderate));
            });
        for (auto& t : threads) t.join();
        CHECK(store.size() == 200);
    }
    Store again(dir / "s.jsonl");
    CHECK(again.size() == 200);
    CHECK(again.load_warnings().empty());
    std::filesystem::remove_all(dir);
}
