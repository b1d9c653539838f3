#include "gustnav/units.hpp"

#include "gustnav/error.hpp"

namespace gustnav::units {

namespace {

enum class Dim { Length, Speed, Angle };

Dim dimension(Unit u) {
    switch (u) {
        case Unit::Feet:
        case Unit::Meters:
            return Dim::Length;
        case Unit::Mph:
        case Unit::MetersPerSecond:
            return Dim::Speed;
        case Unit::Degrees:
        case Unit::Radians:
            return Dim::Angle;
    }
    throw ConfigError("unknown unit");
}

// Factor that takes a value of `u` to the SI unit of its dimension.
double to_si_factor(Unit u) {
    switch (u) {
        case Unit::Feet: return ft_to_m;
        case Unit::Meters: return 1.0;
        case Unit::Mph: return mph_to_mps;
        case Unit::MetersPerSecond: return 1.0;
        case Unit::Degrees: return deg_to_rad;
        case Unit::Radians: return 1.0;
    }
    throw ConfigError("unknown unit");
}

}  // namespace

double convert(double value, Unit from, Unit to) {
    if (dimension(from) != dimension(to)) {
        throw ConfigError(std::string("unsupported unit conversion: ") + unit_name(from) +
                          " -> " + unit_name(to));
    }
    if (from == to) return value;
    return value * to_si_factor(from) / to_si_factor(to);
}

Unit parse_unit(const std::string& name) {
    if (name == "ft") return Unit::Feet;
    if (name == "m") return Unit::Meters;
    if (name == "mph") return Unit::Mph;
    if (name == "mps" || name == "m/s") return Unit::MetersPerSecond;
    if (name == "deg") return Unit::Degrees;
    if (name == "rad") return Unit::Radians;
    throw ConfigError("unknown unit name: " + name);
}

const char* unit_name(Unit u) {
    switch (u) {
        case Unit::Feet: return "ft";
        case Unit::Meters: return "m";
        case Unit::Mph: return "mph";
        case Unit::MetersPerSecond: return "m/s";
        case Unit::Degrees: return "deg";
        case Unit::Radians: return "rad";
    }
    return "?";
}

}  // namespace gustnav::units
