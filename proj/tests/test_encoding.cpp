#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "gustnav/encoding.hpp"
#include "gustnav/error.hpp"
#include "gustnav/rng.hpp"
#include "oracles.hpp"

using namespace gustnav;
using namespace gustnav::encoding;
using testoracle::sampled_rect_sdf;

TEST_SUITE_BEGIN("encoding");

TEST_CASE("sdf1 basics") {
    const Rect r{0.0, 0.0, 20.0, 10.0};
    CHECK(sdf1({10.0, 0.0}, r) == 0.0);       // mid right edge
    CHECK(sdf1({3.0, 5.0}, r) == 0.0);        // on top edge
    CHECK(sdf1({0.0, 0.0}, r) == -5.0);       // center, short half-extent
    CHECK(sdf1({13.0, 0.0}, r) == 3.0);       // 3 m beyond the mid edge
    CHECK(sdf1({13.0, 9.0}, r) == doctest::Approx(5.0));  // corner diagonal 3-4-5
}

TEST_CASE("sdf1 agrees with the boundary-sampling oracle") {
    Rng rng(2024);
    for (int k = 0; k < 200; ++k) {
        Rect r;
        r.cx = rng.uniform(-50.0, 50.0);
        r.cy = rng.uniform(-50.0, 50.0);
        r.w = rng.uniform(1.0, 80.0);
        r.l = rng.uniform(1.0, 80.0);
        const Vec2 p{rng.uniform(-120.0, 120.0), rng.uniform(-120.0, 120.0)};
        CHECK(std::abs(sdf1(p, r) - sampled_rect_sdf(p, r)) < 1e-4);
    }
}

TEST_CASE("sdf1 sign and Lipschitz properties") {
    Rng rng(5);
    for (int k = 0; k < 500; ++k) {
        Rect r;
        r.cx = rng.uniform(-10.0, 10.0);
        r.cy = rng.uniform(-10.0, 10.0);
        r.w = rng.uniform(0.5, 30.0);
        r.l = rng.uniform(0.5, 30.0);
        const Vec2 a{rng.uniform(-40.0, 40.0), rng.uniform(-40.0, 40.0)};
        const Vec2 b{rng.uniform(-40.0, 40.0), rng.uniform(-40.0, 40.0)};
        const double da = sdf1(a, r);
        const double db = sdf1(b, r);
        const bool strictly_inside =
            std::abs(a.x - r.cx) < r.w * 0.5 && std::abs(a.y - r.cy) < r.l * 0.5;
        if (strictly_inside) CHECK(da < 0.0);
        if (!r.contains(a)) CHECK(da > 0.0);
        CHECK(std::abs(da - db) <= (a - b).norm() + 1e-12);
    }
}

TEST_CASE("sdf2 sign convention") {
    CHECK(sdf2({4.0, 9.0}, {4.0, 0.0}, true) == 0.0);
    CHECK(sdf2({11.0, 2.0}, {4.0, 0.0}, false) == 7.0);
    CHECK(sdf2({2.0, 0.0}, {4.0, 0.0}, true) == -2.0);
}

TEST_CASE("label grid layout and census") {
    const PatchFrame frame;
    const GeometryGrid g = encode_empty(frame);
    g.validate_patch();
    int counts[5] = {0, 0, 0, 0, 0};
    for (auto l : g.labels) counts[l]++;
    CHECK(counts[kWall] == 2 * (frame.nx - 2));
    CHECK(counts[kInlet] == frame.ny);
    CHECK(counts[kOutlet] == frame.ny);
    CHECK(counts[kObstacle] == 0);
    CHECK(counts[kFree] == (frame.nx - 2) * (frame.ny - 2));
}

TEST_CASE("footprint rasterization covers exactly the contained centers") {
    const PatchFrame frame;
    // Cell centers (i + 0.5) * 3: covering i in [80, 91] and j in [35, 43]
    // needs x in [241.5, 274.5] and y in [106.5, 130.5].
    LocalRect r;
    r.cx = 258.0;
    r.cy = 118.5;
    r.w = 34.0;
    r.l = 25.0;
    const GeometryGrid g = encode_labels(r, frame);
    g.validate_patch();
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            const bool inside = i >= 80 && i <= 91 && j >= 35 && j <= 43;
            CHECK((g.at(i, j) == kObstacle) == inside);
        }
    }
}

TEST_CASE("building reaching the boundary band is rejected") {
    const PatchFrame frame;
    LocalRect r{10.0, 118.5, 30.0, 30.0};  // overlaps the inlet column
    CHECK_THROWS_AS(encode_labels(r, frame), ConfigError);
}

TEST_CASE("input tensor channels") {
    const PatchFrame frame;
    LocalRect r{181.5, 118.5, 45.0, 60.0};
    const InputTensor t = build_input(&r, frame);
    int obstacle_cells = 0;
    for (int j = 0; j < t.ny; ++j) {
        for (int i = 0; i < t.nx; ++i) {
            const Vec2 c = frame.cell_center(i, j);
            if (t.obstacle(i, j)) {
                obstacle_cells++;
                CHECK(t.at(1, i, j) < 0.0f);
            }
            const double want1 = sdf1(c, r.rect());
            const double want2 = sdf2(c, {r.cx, r.cy}, want1 < 0.0);
            CHECK(std::abs(t.at(1, i, j) - want1) < 1e-4);
            CHECK(std::abs(t.at(2, i, j) - want2) < 1e-4);
        }
    }
    CHECK(obstacle_cells > 0);

    const InputTensor empty = build_input(nullptr, frame);
    const float sentinel = empty.at(1, 50, 40);
    CHECK(sentinel == doctest::Approx(std::hypot(frame.length(), frame.width())));
    for (int j = 0; j < empty.ny; ++j) {
        for (int i = 0; i < empty.nx; ++i) {
            CHECK(empty.at(1, i, j) == sentinel);
            CHECK(empty.at(2, i, j) == sentinel);
        }
    }
}

TEST_CASE("tensor file round-trip") {
    const PatchFrame frame;
    LocalRect r{181.5, 118.5, 50.0, 40.0};
    const InputTensor t = build_input(&r, frame);
    save_tensor(t, "roundtrip_tensor.bin");
    const InputTensor back = load_tensor("roundtrip_tensor.bin");
    CHECK(back == t);
    std::filesystem::remove("roundtrip_tensor.bin");
}

TEST_SUITE_END();
