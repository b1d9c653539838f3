#pragma once

// Independent test oracles. These deliberately avoid the library's own code
// paths; they exist to pin expected values.

#include <algorithm>
#include <cmath>

#include "gustnav/geometry.hpp"

namespace testoracle {

// Signed distance to a rectangle via boundary sampling: `total_samples`
// points evenly spaced along the perimeter, then a ternary refinement of the
// winning segment (pure boundary-parameter search, no closed form). The sign
// comes from rectangle membership.
inline double sampled_rect_sdf(gustnav::Vec2 p, const gustnav::Rect& r,
                               int total_samples = 10000) {
    const double x0 = r.cx - r.w * 0.5, x1 = r.cx + r.w * 0.5;
    const double y0 = r.cy - r.l * 0.5, y1 = r.cy + r.l * 0.5;
    const double per = 2.0 * (r.w + r.l);

    auto boundary_point = [&](double t) -> gustnav::Vec2 {
        double s = t * per;
        if (s < r.w) return {x0 + s, y0};
        s -= r.w;
        if (s < r.l) return {x1, y0 + s};
        s -= r.l;
        if (s < r.w) return {x1 - s, y1};
        s -= r.w;
        return {x0, y1 - std::min(s, r.l)};
    };

    double best = 1e300;
    double best_t = 0.0;
    for (int k = 0; k < total_samples; ++k) {
        const double t = static_cast<double>(k) / total_samples;
        const double d = (p - boundary_point(t)).norm();
        if (d < best) {
            best = d;
            best_t = t;
        }
    }
    // Refine within +-1 sample of the winner.
    double lo = best_t - 1.0 / total_samples;
    double hi = best_t + 1.0 / total_samples;
    for (int it = 0; it < 200; ++it) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        const double w1 = (p - boundary_point(std::fmod(m1 + 1.0, 1.0))).norm();
        const double w2 = (p - boundary_point(std::fmod(m2 + 1.0, 1.0))).norm();
        if (w1 < w2) hi = m2; else lo = m1;
        best = std::min(best, std::min(w1, w2));
    }

    const bool inside = std::abs(p.x - r.cx) < r.w * 0.5 && std::abs(p.y - r.cy) < r.l * 0.5;
    return inside ? -best : best;
}

}  // namespace testoracle
