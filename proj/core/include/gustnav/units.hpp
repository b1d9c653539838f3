#pragma once

#include <string>

namespace gustnav::units {

// Exact definitions of the customary units used at config boundaries.
// Everything internal is SI (m, m/s, rad).
inline constexpr double ft_to_m = 0.3048;
inline constexpr double m_to_ft = 1.0 / ft_to_m;

inline constexpr double mph_to_mps = 0.44704;
inline constexpr double mps_to_mph = 1.0 / mph_to_mps;

inline constexpr double pi = 3.141592653589793238462643383279502884;
inline constexpr double deg_to_rad = pi / 180.0;
inline constexpr double rad_to_deg = 180.0 / pi;

constexpr double feet(double ft) { return ft * ft_to_m; }
constexpr double mph(double v) { return v * mph_to_mps; }
constexpr double degrees(double d) { return d * deg_to_rad; }

enum class Unit { Feet, Meters, Mph, MetersPerSecond, Degrees, Radians };

// Converts between the supported unit pairs (ft<->m, mph<->m/s, deg<->rad).
// Identity conversions are allowed. Throws ConfigError on an unsupported pair.
double convert(double value, Unit from, Unit to);

Unit parse_unit(const std::string& name);
const char* unit_name(Unit u);

}  // namespace gustnav::units
