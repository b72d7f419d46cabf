#include <filesystem>

#include "json.hpp"

#include "doctest.h"

#include "ctrlsynth/serialize.hpp"

using namespace ctrlsynth;
using nlohmann::json;

namespace {

TransferFunction tf(std::vector<double> num, std::vector<double> den, double delay = 0.0) {
    return {Polynomial(std::move(num)), Polynomial(std::move(den)), delay};
}

}  // namespace

TEST_CASE("plant JSON round-trip") {
    const auto g = tf({8.79}, {1.0, 4.0}, 0.14);
    CHECK(plant_from_json(plant_to_json(g)) == g);
    const auto h = tf({1.0, 2.0}, {1.0, 3.0, 5.0});
    const auto text = plant_to_json(h);
    CHECK(json::parse(text).contains("delay") == false);
    CHECK(plant_from_json(text) == h);
    CHECK_THROWS_AS((void)plant_from_json(R"({"num": [1]})"), FormatError);
    CHECK_THROWS_AS((void)plant_from_json("not json"), FormatError);
}

TEST_CASE("task JSON round-trip and validation") {
    TaskRequirement req;
    req.plant = tf({19.95}, {1.0, 0.3897});
    req.phase_margin_min = 71.542;
    req.settling_time_min = 0.005;
    req.settling_time_max = 3.726;
    req.ess_max = 1e-4;
    req.mode = ResponseMode::moderate;
    const auto back = task_from_json(task_to_json(req));
    CHECK(back.plant == req.plant);
    CHECK(back.phase_margin_min == req.phase_margin_min);
    CHECK(back.settling_time_min == req.settling_time_min);
    CHECK(back.settling_time_max == req.settling_time_max);
    CHECK(back.ess_max == req.ess_max);
    CHECK(back.mode == ResponseMode::moderate);

    CHECK_THROWS_AS((void)task_from_json(R"({"num":[1],"den":[1,1],"phase_margin_min":45,
        "settling_time_min":2,"settling_time_max":1})"), FormatError);
    CHECK_THROWS_AS((void)task_from_json(R"({"num":[1],"den":[1,1],"phase_margin_min":45,
        "settling_time_min":0,"settling_time_max":1,"mode":"warp"})"), FormatError);
}

TEST_CASE("controller files") {
    const auto plant = tf({7.0}, {1.0, 3.0});
    const auto ls = loopshape_controller(plant, {3.0, 3.1622776601683795, 1});
    const auto text = controller_to_json(ls);
    const auto j = json::parse(text);
    CHECK(j["family"] == "loop_shape");
    CHECK(j["params"].get<std::vector<double>>() == ls.parameter_list());
    CHECK(controller_tf_from_json(text) == ls.tf);

    const PidParams p{1.0, 2.0, 0.5, 0.01};
    CHECK(controller_tf_from_json(R"({"family":"pid","params":[1,2,0.5,0.01]})") == pid_controller(p).tf);
    CHECK_THROWS_AS((void)controller_tf_from_json(R"({"family":"pid","params":[1,2]})"), FormatError);
    CHECK_THROWS_AS((void)controller_tf_from_json(R"({"family":"loop_shape","params":[1,2]})"), FormatError);
}

TEST_CASE("trace JSON carries one object per iteration") {
    MemoryBuffer m;
    DesignRecord ok;
    ok.iteration = 1;
    ok.design = loopshape_controller(tf({1.0}, {1.0, 1.0}), {2.0, 3.0, 1});
    ok.report.margins.phase_margin_deg = 80.0;
    ok.report.step.settling_time_s = std::numeric_limits<double>::infinity();
    ok.feedback.settling_time_error_pct = std::numeric_limits<double>::infinity();
    m.append(ok);
    DesignRecord failed;
    failed.iteration = 2;
    failed.policy_failed = true;
    failed.diagnostic = "unparseable reply";
    m.append(failed);

    const auto arr = json::parse(trace_to_json(m));
    REQUIRE(arr.size() == 2);
    CHECK(arr[0]["iteration"] == 1);
    CHECK(arr[0]["params"].get<std::vector<double>>() == std::vector<double>{2.0, 3.0});
    CHECK(arr[0]["pm_deg"] == 80.0);
    CHECK(arr[0]["ts_s"].is_null());
    CHECK(arr[0]["st_err_pct"].is_null());
    CHECK(arr[0]["success"] == false);
    CHECK(arr[1]["params"].empty());
    CHECK(arr[1]["diagnostic"] == "unparseable reply");
}

TEST_CASE("text files") {
    const auto dir = std::filesystem::temp_directory_path() / "ctrlsynth_serialize_test" / "nested";
    const auto path = dir / "x.txt";
    write_text_file(path, "hello\n");
    CHECK(read_text_file(path) == "hello\n");
    std::filesystem::remove_all(dir.parent_path());
    CHECK_THROWS((void)read_text_file(path));
}
