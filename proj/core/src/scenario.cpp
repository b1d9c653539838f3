#include "gustnav/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gustnav/error.hpp"
#include "gustnav/rng.hpp"

namespace gustnav::domain {

void DomainSpec::validate() const {
    if (width <= 0 || depth <= 0 || ceiling <= 0 || cell <= 0) {
        throw ConfigError("domain extents and cell size must be positive");
    }
    const double rx = width / cell;
    const double ry = depth / cell;
    if (std::abs(rx - std::round(rx)) > 1e-9 || std::abs(ry - std::round(ry)) > 1e-9) {
        throw ConfigError("domain width and depth must be integer multiples of the cell size");
    }
}

void GenerationParams::validate() const {
    domain.validate();
    if (building_count < 0) throw ConfigError("building_count must be >= 0");
    if (min_footprint <= 0 || max_footprint < min_footprint) {
        throw ConfigError("invalid footprint range");
    }
    if (min_height <= 0 || max_height < min_height) throw ConfigError("invalid height range");
    if (min_wind < 0 || max_wind < min_wind) throw ConfigError("invalid wind range");
    if (edge_band <= 0 || edge_band >= 0.5) throw ConfigError("edge_band must be in (0, 0.5)");
}

const Building* Scenario::building_at(Vec3 p) const {
    for (const Building& b : buildings) {
        if (b.contains(p)) return &b;
    }
    return nullptr;
}

namespace {

bool overlaps_with_gap(const Building& a, const Building& b, double gap) {
    return std::abs(a.cx - b.cx) < (a.w + b.w) * 0.5 + gap &&
           std::abs(a.cy - b.cy) < (a.l + b.l) * 0.5 + gap;
}

bool clear_of_footprints(const std::vector<Building>& buildings, Vec2 p, double clearance) {
    for (const Building& b : buildings) {
        if (std::abs(p.x - b.cx) <= b.w * 0.5 + clearance &&
            std::abs(p.y - b.cy) <= b.l * 0.5 + clearance) {
            return false;
        }
    }
    return true;
}

}  // namespace

Scenario generate_scenario(std::uint64_t seed, const GenerationParams& params) {
    params.validate();
    Rng rng(derive_seed(seed, 0x5ce7a110));

    Scenario s;
    s.seed = seed;
    s.domain = params.domain;

    const double W = params.domain.width;
    const double D = params.domain.depth;

    int attempts = 0;
    while (static_cast<int>(s.buildings.size()) < params.building_count) {
        if (++attempts > params.max_attempts) {
            throw NumericalError("scenario generation failed for seed " + std::to_string(seed) +
                                 ": could not place " + std::to_string(params.building_count) +
                                 " buildings in " + std::to_string(params.max_attempts) +
                                 " attempts (domain too crowded)");
        }
        Building b;
        b.w = rng.uniform(params.min_footprint, params.max_footprint);
        b.l = rng.uniform(params.min_footprint, params.max_footprint);
        b.h = rng.uniform(params.min_height, params.max_height);
        b.cx = rng.uniform(b.w * 0.5, W - b.w * 0.5);
        b.cy = rng.uniform(b.l * 0.5, D - b.l * 0.5);

        bool ok = true;
        for (const Building& other : s.buildings) {
            if (overlaps_with_gap(b, other, params.min_gap)) {
                ok = false;
                break;
            }
        }
        if (ok) s.buildings.push_back(b);
    }

    s.wind.speed = rng.uniform(params.min_wind, params.max_wind);
    s.wind.dir_deg = rng.uniform(0.0, 360.0);

    // Spawn on one edge band, target on the opposite band. Crossing the longer
    // axis keeps the spawn-target distance >= (1 - 2*edge_band) * width.
    const bool cross_x = W > D || (W == D && rng.uniform01() < 0.5);
    const bool flip = rng.uniform01() < 0.5;
    const double band = params.edge_band * (cross_x ? W : D);
    auto draw_point = [&](bool near_side) {
        Vec3 p;
        const double lo = near_side ? 0.0 : (cross_x ? W : D) - band;
        const double along = rng.uniform(lo, lo + band);
        const double across = rng.uniform(0.0, cross_x ? D : W);
        p.x = cross_x ? along : across;
        p.y = cross_x ? across : along;
        p.z = rng.uniform(0.2, 0.8) * params.domain.ceiling;
        return p;
    };
    for (int i = 0;; ++i) {
        if (i >= params.max_attempts) {
            throw NumericalError("scenario generation failed for seed " + std::to_string(seed) +
                                 ": no clear spawn/target positions");
        }
        Vec3 a = draw_point(!flip);
        Vec3 b = draw_point(flip);
        if (clear_of_footprints(s.buildings, a.xy(), params.spawn_clearance) &&
            clear_of_footprints(s.buildings, b.xy(), params.spawn_clearance)) {
            s.spawn = a;
            s.target = b;
            break;
        }
    }
    return s;
}

WindSpec wind_from_northwest(double speed_mps) { return {speed_mps, 315.0}; }
WindSpec wind_from_southeast(double speed_mps) { return {speed_mps, 135.0}; }

Scenario city_fixture(const WindSpec& wind) {
    // 8 x 5 grid of blocks inside a 600 x 600 m district. Streets run both
    // ways; the narrow x-streets channel the flow, which is what produces
    // strong zones under the 10 m/s cases.
    Scenario s;
    s.seed = 0;
    s.domain.width = 600.0;
    s.domain.depth = 600.0;
    s.domain.ceiling = units::feet(200.0);
    s.domain.cell = 5.0;
    s.wind = wind;

    const int cols = 8;
    const int rows = 5;
    const double bw = 36.0;   // block extent along x
    const double bl = 56.0;   // block extent along y
    const double x0 = 72.0;   // first block center
    const double y0 = 96.0;
    const double dx = (600.0 - 2.0 * x0) / (cols - 1);  // 65.1 m pitch
    const double dy = (600.0 - 2.0 * y0) / (rows - 1);  // 102 m pitch

    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            Building b;
            b.cx = x0 + c * dx;
            b.cy = y0 + r * dy;
            b.w = bw;
            b.l = bl;
            b.h = units::feet(220.0 + 60.0 * ((r + 2 * c) % 4));
            s.buildings.push_back(b);
        }
    }

    // Travel runs SE -> NW, so wind from the northwest opposes the crossing
    // and wind from the southeast assists it.
    s.spawn = {570.0, 30.0, 30.0};
    s.target = {30.0, 570.0, 30.0};
    return s;
}

namespace {

using nlohmann::json;

const json& require_key(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw ParseError(std::string("scenario file: missing key \"") + key + "\"");
    }
    return *it;
}

double require_number(const json& j, const char* key) {
    const json& v = require_key(j, key);
    if (!v.is_number()) {
        throw ParseError(std::string("scenario file: key \"") + key + "\" is not a number");
    }
    return v.get<double>();
}

}  // namespace

std::string scenario_to_json(const Scenario& s) {
    json j;
    j["domain"] = {{"width_m", s.domain.width},
                   {"depth_m", s.domain.depth},
                   {"ceiling_m", s.domain.ceiling},
                   {"cell_m", s.domain.cell}};
    j["buildings"] = json::array();
    for (const Building& b : s.buildings) {
        j["buildings"].push_back(
            {{"cx", b.cx}, {"cy", b.cy}, {"w", b.w}, {"l", b.l}, {"h", b.h}});
    }
    j["wind"] = {{"speed_mps", s.wind.speed}, {"dir_deg", s.wind.dir_deg}};
    j["spawn"] = {s.spawn.x, s.spawn.y, s.spawn.z};
    j["target"] = {s.target.x, s.target.y, s.target.z};
    j["seed"] = s.seed;
    return j.dump(2);
}

Scenario scenario_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("scenario file: ") + e.what());
    }

    Scenario s;
    const json& dom = require_key(j, "domain");
    s.domain.width = require_number(dom, "width_m");
    s.domain.depth = require_number(dom, "depth_m");
    s.domain.ceiling = require_number(dom, "ceiling_m");
    s.domain.cell = require_number(dom, "cell_m");

    const json& bs = require_key(j, "buildings");
    if (!bs.is_array()) throw ParseError("scenario file: \"buildings\" is not an array");
    for (const json& bj : bs) {
        Building b;
        b.cx = require_number(bj, "cx");
        b.cy = require_number(bj, "cy");
        b.w = require_number(bj, "w");
        b.l = require_number(bj, "l");
        b.h = require_number(bj, "h");
        s.buildings.push_back(b);
    }

    const json& wj = require_key(j, "wind");
    s.wind.speed = require_number(wj, "speed_mps");
    s.wind.dir_deg = require_number(wj, "dir_deg");

    auto read_vec3 = [&](const char* key) {
        const json& v = require_key(j, key);
        if (!v.is_array() || v.size() != 3) {
            throw ParseError(std::string("scenario file: key \"") + key +
                             "\" must be an array of 3 numbers");
        }
        return Vec3{v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
    };
    s.spawn = read_vec3("spawn");
    s.target = read_vec3("target");
    s.seed = require_key(j, "seed").get<std::uint64_t>();
    return s;
}

void save_scenario(const Scenario& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open scenario file for writing: " + path);
    out << scenario_to_json(s) << "\n";
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open scenario file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return scenario_from_json(ss.str());
}

}  // namespace gustnav::domain
