#include <filesystem>

#include "doctest.h"

#include "ctrlsynth/dataset.hpp"
#include "ctrlsynth/design_loop.hpp"
#include "oracles.hpp"

using namespace ctrlsynth;

namespace {

constexpr SystemClass kFamilies[] = {SystemClass::first_order_stable, SystemClass::second_order_stable,
                                     SystemClass::second_order_unstable, SystemClass::first_order_delay,
                                     SystemClass::first_order_unstable};

}  // namespace

TEST_CASE("generated entries stay inside their sampling ranges") {
    for (SystemClass family : kFamilies) {
        for (std::uint64_t seed : {1u, 2u, 3u}) {
            const auto entries = generate({family, 50, seed});
            REQUIRE(entries.size() == 50);
            for (const auto& e : entries) {
                CAPTURE(to_string(family));
                CHECK(oracle::range_violation(family, e) == "");
                CHECK(classify_system(e.plant()) == family);
            }
        }
    }
}

TEST_CASE("second-order unstable alternates its two structures") {
    const auto entries = generate({SystemClass::second_order_unstable, 10, 4});
    for (const auto& e : entries) {
        const bool two_rhp = e.den[2] > 0.0;
        CHECK(two_rhp == (e.id % 2 == 0));
    }
}

TEST_CASE("regeneration is byte-identical and seeds differ") {
    for (SystemClass family : kFamilies) {
        const auto a = dataset_to_json(generate({family, 50, 7}));
        const auto b = dataset_to_json(generate({family, 50, 7}));
        const auto c = dataset_to_json(generate({family, 50, 8}));
        CHECK(a == b);
        CHECK(a != c);
    }
}

TEST_CASE("mode filter keeps one window per entry") {
    const auto all = generate({SystemClass::first_order_stable, 5, 1});
    const auto fast = generate({SystemClass::first_order_stable, 5, 1, ResponseMode::fast});
    for (size_t i = 0; i < all.size(); ++i) {
        CHECK(all[i].tasks().size() == 3);
        REQUIRE(fast[i].windows.size() == 1);
        CHECK(fast[i].windows[0].first == ResponseMode::fast);
        CHECK(fast[i].num == all[i].num);
        const auto task = fast[i].tasks().front();
        CHECK(task.mode == ResponseMode::fast);
        CHECK(task.settling_time_max == all[i].windows[0].second.max);
    }
    CHECK_THROWS((void)generate({SystemClass::higher_order, 5, 1}));
}

TEST_CASE("dataset JSON round-trips every field") {
    for (SystemClass family : kFamilies) {
        const auto entries = generate({family, 20, 11});
        const auto text = dataset_to_json(entries);
        const auto back = dataset_from_json(text);
        REQUIRE(back.size() == entries.size());
        for (size_t i = 0; i < back.size(); ++i) {
            CHECK(back[i].id == entries[i].id);
            CHECK(back[i].num == entries[i].num);
            CHECK(back[i].den == entries[i].den);
            CHECK(back[i].delay == entries[i].delay);
            CHECK(back[i].phase_margin_min == entries[i].phase_margin_min);
            CHECK(back[i].steadystate_error_max == entries[i].steadystate_error_max);
            CHECK(back[i].metadata == entries[i].metadata);
            REQUIRE(back[i].windows.size() == entries[i].windows.size());
            for (size_t k = 0; k < back[i].windows.size(); ++k) {
                CHECK(back[i].windows[k].first == entries[i].windows[k].first);
                CHECK(back[i].windows[k].second.min == entries[i].windows[k].second.min);
                CHECK(back[i].windows[k].second.max == entries[i].windows[k].second.max);
            }
        }
        CHECK(dataset_to_json(back) == text);
    }
}

TEST_CASE("delay plant round-trips through a file") {
    DatasetEntry e;
    e.id = 3;
    e.num = {8.79};
    e.den = {1.0, 4.0};
    e.delay = 0.14;
    e.phase_margin_min = 50.0;
    e.windows.push_back({ResponseMode::unspecified, {0.5, 5.0}});
    const auto path = std::filesystem::temp_directory_path() / "dataset_delay_roundtrip.json";
    save_dataset({e}, path);
    const auto back = load_dataset(path);
    std::filesystem::remove(path);
    REQUIRE(back.size() == 1);
    CHECK(back[0].plant() == e.plant());
    CHECK(back[0].plant().to_string(3) == "8.79 e^(-0.14 s) / (s + 4)");
}

TEST_CASE("schema errors name the entry and field") {
    const std::string missing = R"([{"id": 4, "num": [1], "den": [1, 2], "settling_time_min": 0.1,
        "settling_time_max": 1, "steadystate_error_max": 0.0001}])";
    try {
        (void)dataset_from_json(missing);
        FAIL("expected a schema error");
    } catch (const DatasetError& e) {
        const std::string what = e.what();
        CHECK(what.find("4") != std::string::npos);
        CHECK(what.find("phase_margin_min") != std::string::npos);
    }
    const std::string reversed = R"([{"id": 1, "num": [1], "den": [1, 2], "phase_margin_min": 50,
        "settling_time_min": 2, "settling_time_max": 1, "steadystate_error_max": 0.0001}])";
    CHECK_THROWS_AS((void)dataset_from_json(reversed), DatasetError);
    CHECK_THROWS_AS((void)dataset_from_json("{"), DatasetError);
    CHECK_THROWS_AS((void)dataset_from_json(R"({"id": 1})"), DatasetError);
    CHECK_THROWS_AS((void)load_dataset("/nonexistent/dataset.json"), DatasetError);
}
