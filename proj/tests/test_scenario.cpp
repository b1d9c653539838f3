#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gustnav/error.hpp"
#include "gustnav/scenario.hpp"

using namespace gustnav;
using namespace gustnav::domain;

TEST_SUITE_BEGIN("scenario");

TEST_CASE("default generation matches the configured ranges") {
    const GenerationParams params;
    const Scenario s = generate_scenario(7);
    CHECK(s.buildings.size() == 49);
    for (const Building& b : s.buildings) {
        CHECK(b.w >= params.min_footprint);
        CHECK(b.w <= params.max_footprint);
        CHECK(b.l >= params.min_footprint);
        CHECK(b.l <= params.max_footprint);
        CHECK(b.h >= params.min_height);
        CHECK(b.h <= params.max_height);
    }
    CHECK(s.wind.speed >= params.min_wind);
    CHECK(s.wind.speed <= params.max_wind);
    CHECK(s.wind.dir_deg >= 0.0);
    CHECK(s.wind.dir_deg < 360.0);
}

TEST_CASE("zero buildings still yields valid spawn and target") {
    GenerationParams params;
    params.building_count = 0;
    const Scenario s = generate_scenario(3, params);
    CHECK(s.buildings.empty());
    CHECK(s.in_domain(s.spawn));
    CHECK(s.in_domain(s.target));
    CHECK((s.spawn - s.target).norm() > 0.0);
}

TEST_CASE("same seed reproduces the scenario byte for byte") {
    const Scenario a = generate_scenario(1234);
    const Scenario b = generate_scenario(1234);
    CHECK(a == b);
    CHECK(scenario_to_json(a) == scenario_to_json(b));
    CHECK(generate_scenario(1235) != a);
}

TEST_CASE("geometry invariants over many seeds") {
    GenerationParams params;
    params.building_count = 20;  // keep the sweep fast; density matches default
    params.domain.width = params.domain.depth = units::feet(1900.0);
    params.domain.cell = units::feet(10.0);
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const Scenario s = generate_scenario(seed, params);
        const double W = s.domain.width;
        for (std::size_t i = 0; i < s.buildings.size(); ++i) {
            const Building& b = s.buildings[i];
            CHECK(b.cx - b.w * 0.5 >= -1e-9);
            CHECK(b.cx + b.w * 0.5 <= W + 1e-9);
            CHECK(b.cy - b.l * 0.5 >= -1e-9);
            CHECK(b.cy + b.l * 0.5 <= s.domain.depth + 1e-9);
            for (std::size_t k = i + 1; k < s.buildings.size(); ++k) {
                const Building& o = s.buildings[k];
                const bool overlap = std::abs(b.cx - o.cx) < (b.w + o.w) * 0.5 &&
                                     std::abs(b.cy - o.cy) < (b.l + o.l) * 0.5;
                CHECK_FALSE(overlap);
            }
        }
        CHECK((s.spawn - s.target).norm() >= 0.8 * W);
        CHECK(s.building_at(s.spawn) == nullptr);
        CHECK(s.building_at(s.target) == nullptr);
    }
}

TEST_CASE("overcrowded domain reports the seed") {
    GenerationParams params;
    params.domain.width = params.domain.depth = units::feet(500.0);
    params.domain.cell = units::feet(10.0);
    params.building_count = 49;
    params.max_attempts = 500;
    CHECK_THROWS_WITH_AS(generate_scenario(42, params),
                         doctest::Contains("seed 42"), NumericalError);
}

TEST_CASE("city fixture is deterministic and wind-independent") {
    const Scenario a = city_fixture(wind_from_northwest(5.0));
    const Scenario b = city_fixture(wind_from_southeast(10.0));
    CHECK(a.wind.dir_deg == 315.0);
    CHECK(b.wind.dir_deg == 135.0);
    CHECK(a.buildings == b.buildings);
    CHECK(a.spawn == b.spawn);
    CHECK(city_fixture(wind_from_northwest(5.0)) == a);
    CHECK(a.buildings.size() == 40);
}

TEST_CASE("scenario file round-trip is exact") {
    const Scenario s = generate_scenario(99);
    const std::string path = "roundtrip_scenario.json";
    save_scenario(s, path);
    const Scenario loaded = load_scenario(path);
    CHECK(loaded == s);

    const Scenario f = city_fixture(wind_from_northwest(5.0));
    save_scenario(f, path);
    CHECK(load_scenario(path) == f);
    std::filesystem::remove(path);
}

TEST_CASE("missing keys are reported by name") {
    CHECK_THROWS_WITH_AS(scenario_from_json(R"({"domain":{"width_m":1,"depth_m":1,"ceiling_m":1,"cell_m":1},"buildings":[],"spawn":[0,0,0],"target":[1,1,1],"seed":0})"),
                         doctest::Contains("wind"), ParseError);
    CHECK_THROWS_AS(scenario_from_json("{not json"), ParseError);
}

TEST_SUITE_END();
