#include <doctest.h>

#include <cmath>

#include "gustnav/encoding.hpp"
#include "gustnav/solver.hpp"
#include "gustnav/wind.hpp"

using namespace gustnav;
using namespace gustnav::oracle;

namespace {

// A patch whose interior is filled with a constant, easy-to-recognize flow.
VelocityField constant_patch(const encoding::PatchFrame& frame, float u, float v, double speed) {
    VelocityField f;
    f.nx = frame.nx;
    f.ny = frame.ny;
    f.cell = frame.cell;
    f.inlet = {speed, 0.0};
    f.converged = true;
    f.u.assign(f.size(), u);
    f.v.assign(f.size(), v);
    f.p.assign(f.size(), 0.0f);
    return f;
}

}  // namespace

TEST_SUITE_BEGIN("wind");

TEST_CASE("composite: far from all buildings gives the free stream exactly") {
    domain::Scenario s;
    s.domain.width = s.domain.depth = 2000.0;
    s.domain.cell = 10.0;
    s.wind = {8.0, 0.0};
    domain::Building b{1000.0, 1000.0, 50.0, 50.0, 80.0};
    s.buildings.push_back(b);

    encoding::PatchFrame frame;
    std::vector<WindPatch> patches;
    patches.push_back({b, constant_patch(frame, 2.0f, 0.0f, 8.0)});
    auto wind = compose_global(s, std::move(patches));

    const Vec3 far = wind->sample({30.0, 30.0, 10.0});
    CHECK(far.x == s.wind.velocity().x);
    CHECK(far.y == s.wind.velocity().y);
}

TEST_CASE("composite: inside one patch returns that patch's sample") {
    domain::Scenario s;
    s.domain.width = s.domain.depth = 2000.0;
    s.domain.cell = 10.0;
    s.wind = {8.0, 0.0};  // patch frame axis-aligned with the world
    domain::Building b{1000.0, 1000.0, 50.0, 50.0, 80.0};
    s.buildings.push_back(b);

    encoding::PatchFrame frame;
    std::vector<WindPatch> patches;
    patches.push_back({b, constant_patch(frame, 2.0f, 1.0f, 8.0)});
    auto wind = compose_global(s, std::move(patches));

    const Vec3 w = wind->sample({1020.0, 1010.0, 10.0});
    CHECK(w.x == doctest::Approx(2.0));
    CHECK(w.y == doctest::Approx(1.0));
}

TEST_CASE("composite: equidistant overlap of two identical patches averages") {
    domain::Scenario s;
    s.domain.width = s.domain.depth = 2000.0;
    s.domain.cell = 10.0;
    s.wind = {8.0, 0.0};
    domain::Building b1{950.0, 1000.0, 40.0, 40.0, 80.0};
    domain::Building b2{1050.0, 1000.0, 40.0, 40.0, 80.0};
    s.buildings = {b1, b2};

    encoding::PatchFrame frame;
    std::vector<WindPatch> patches;
    patches.push_back({b1, constant_patch(frame, 3.0f, 0.0f, 8.0)});
    patches.push_back({b2, constant_patch(frame, 5.0f, 0.0f, 8.0)});
    auto wind = compose_global(s, std::move(patches));

    const Vec3 w = wind->sample({1000.0, 1000.0, 10.0});  // equidistant
    CHECK(w.x == doctest::Approx(4.0));
    CHECK(w.y == doctest::Approx(0.0));
}

TEST_CASE("composite: blended speed is clamped to 1.5x inlet") {
    domain::Scenario s;
    s.domain.width = s.domain.depth = 2000.0;
    s.domain.cell = 10.0;
    s.wind = {2.0, 0.0};
    domain::Building b{1000.0, 1000.0, 50.0, 50.0, 80.0};
    s.buildings.push_back(b);

    encoding::PatchFrame frame;
    std::vector<WindPatch> patches;
    patches.push_back({b, constant_patch(frame, 40.0f, 0.0f, 2.0)});
    auto wind = compose_global(s, std::move(patches));
    const Vec3 w = wind->sample({1000.0, 990.0, 10.0});
    CHECK(w.norm() == doctest::Approx(3.0));  // 1.5 * 2.0
}

TEST_CASE("composite rotation maps the patch frame onto the wind direction") {
    domain::Scenario s;
    s.domain.width = s.domain.depth = 2000.0;
    s.domain.cell = 10.0;
    s.wind = {8.0, 90.0};  // blowing toward +y
    domain::Building b{1000.0, 1000.0, 50.0, 50.0, 80.0};
    s.buildings.push_back(b);

    encoding::PatchFrame frame;
    std::vector<WindPatch> patches;
    patches.push_back({b, constant_patch(frame, 2.0f, 0.0f, 8.0)});
    auto wind = compose_global(s, std::move(patches));

    // A local +x flow of 2 m/s becomes +y in the world.
    const Vec3 w = wind->sample({1000.0, 1020.0, 10.0});
    CHECK(w.x == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(w.y == doctest::Approx(2.0));

    // The patch extends along the wind axis (+y), not across it: a point
    // 200 m upwind is still inside, 200 m to the side is not.
    const Vec3 upwind = wind->sample({1000.0, 840.0, 10.0});
    CHECK(upwind.y == doctest::Approx(2.0));
    const Vec3 side = wind->sample({1200.0, 1000.0, 10.0});
    CHECK(side.x == doctest::Approx(s.wind.velocity().x).epsilon(1e-9));
    CHECK(side.y == doctest::Approx(s.wind.velocity().y));
}

TEST_CASE("strong zone scan") {
    domain::Scenario s;
    s.domain.width = s.domain.depth = 100.0;
    s.domain.cell = 5.0;
    s.wind = {5.0, 0.0};
    CHECK_FALSE(has_strong_zone(UniformWind{{5.0, 0.0}}, s, 13.4112));
    CHECK(has_strong_zone(UniformWind{{13.5, 0.0}}, s, 13.4112));
    CHECK(has_strong_zone(UniformWind{{13.4112, 0.0}}, s, 13.4112));  // boundary counts
}

TEST_SUITE_END();
