#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gustnav/geometry.hpp"
#include "gustnav/units.hpp"

namespace gustnav::domain {

// Extent of the simulated district and the cell size of the global wind grid.
// Defaults follow the 3,000 x 3,000 x 200 ft district with 10 ft cells.
struct DomainSpec {
    double width = units::feet(3000.0);    // x extent, m
    double depth = units::feet(3000.0);    // y extent, m
    double ceiling = units::feet(200.0);   // z extent, m
    double cell = units::feet(10.0);       // global grid cell size, m

    int nx() const { return static_cast<int>(width / cell + 0.5); }
    int ny() const { return static_cast<int>(depth / cell + 0.5); }
    void validate() const;

    bool operator==(const DomainSpec&) const = default;
};

// Axis-aligned rectangular prism standing on the ground plane.
struct Building {
    double cx = 0.0;  // footprint center, m
    double cy = 0.0;
    double w = 0.0;  // footprint extent along x, m
    double l = 0.0;  // footprint extent along y, m
    double h = 0.0;  // height, m

    Rect footprint() const { return {cx, cy, w, l}; }
    bool contains(Vec3 p) const { return p.z <= h && footprint().contains(p.xy()); }

    bool operator==(const Building&) const = default;
};

// Free-stream inlet wind. The direction is stored in degrees, exactly as it
// appears in scenario files, so save/load round-trips bit-exactly; all flow
// code consumes direction_rad(). 0 deg points along +x, counterclockwise.
struct WindSpec {
    double speed = units::mph(20.0);  // m/s
    double dir_deg = 0.0;             // [0, 360)

    double direction_rad() const { return dir_deg * units::deg_to_rad; }
    Vec2 velocity() const {
        const double a = direction_rad();
        return {speed * std::cos(a), speed * std::sin(a)};
    }

    bool operator==(const WindSpec&) const = default;
};

// One training episode's world.
struct Scenario {
    DomainSpec domain;
    std::vector<Building> buildings;
    WindSpec wind;
    Vec3 spawn;
    Vec3 target;
    std::uint64_t seed = 0;

    bool in_domain(Vec3 p) const {
        return p.x >= 0.0 && p.x <= domain.width && p.y >= 0.0 && p.y <= domain.depth &&
               p.z >= 0.0 && p.z <= domain.ceiling;
    }
    const Building* building_at(Vec3 p) const;

    bool operator==(const Scenario&) const = default;
};

struct GenerationParams {
    DomainSpec domain;
    int building_count = 49;
    double min_footprint = units::feet(130.0);  // m
    double max_footprint = units::feet(260.0);  // m
    double min_height = units::feet(200.0);     // m
    double max_height = units::feet(400.0);     // m
    double min_gap = 10.0;                      // m between footprints
    double min_wind = units::mph(3.0);          // m/s
    double max_wind = units::mph(45.0);         // m/s
    double edge_band = 0.1;      // spawn/target band as a fraction of the crossing axis
    double spawn_clearance = 5.0;  // m kept clear of footprints around spawn/target
    int max_attempts = 20000;

    void validate() const;
};

// Deterministic scenario from (seed, params). Buildings are placed by
// rejection sampling with the minimum gap; spawn and target land in bands on
// opposite domain edges. Throws NumericalError naming the seed if the domain
// is too crowded to place all buildings.
Scenario generate_scenario(std::uint64_t seed, const GenerationParams& params = {});

// Fixed street-grid layout standing in for a dense city district. Identical
// across runs; only the wind varies.
Scenario city_fixture(const WindSpec& wind);

// Wind presets for the validation study (directions name where the wind
// blows FROM, so "from NW" travels toward SE, i.e. 315 deg).
WindSpec wind_from_northwest(double speed_mps);
WindSpec wind_from_southeast(double speed_mps);

// Scenario file round-trip (JSON). load(save(s)) == s exactly.
void save_scenario(const Scenario& s, const std::string& path);
Scenario load_scenario(const std::string& path);
std::string scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const std::string& text);

}  // namespace gustnav::domain
