#include "gustnav/wind.hpp"

#include <cmath>

namespace gustnav::oracle {

CompositeWind::CompositeWind(const domain::WindSpec& free_stream, std::vector<WindPatch> patches,
                             encoding::PatchFrame frame, double clamp_factor)
    : free_stream_(free_stream),
      patches_(std::move(patches)),
      frame_(frame),
      clamp_factor_(clamp_factor),
      cos_dir_(std::cos(free_stream.direction_rad())),
      sin_dir_(std::sin(free_stream.direction_rad())) {}

Vec3 CompositeWind::sample(Vec3 pos) const {
    const Vec2 anchor = frame_.anchor();
    double wsum = 0.0;
    Vec2 acc{0.0, 0.0};
    for (const WindPatch& patch : patches_) {
        // World -> patch frame: translate to the building center, rotate the
        // wind direction onto +x, shift to the anchor.
        const double rx = pos.x - patch.building.cx;
        const double ry = pos.y - patch.building.cy;
        const double lx = cos_dir_ * rx + sin_dir_ * ry + anchor.x;
        const double ly = -sin_dir_ * rx + cos_dir_ * ry + anchor.y;
        if (lx < 0.0 || ly < 0.0 || lx > frame_.length() || ly > frame_.width()) continue;

        const Vec3 local = sample_wind(patch.field, {lx, ly, 0.0});
        const Vec2 world{cos_dir_ * local.x - sin_dir_ * local.y,
                         sin_dir_ * local.x + cos_dir_ * local.y};
        const double dist = std::hypot(rx, ry);
        const double w = 1.0 / std::max(dist, 1.0);
        acc = acc + world * w;
        wsum += w;
    }
    if (wsum == 0.0) {
        const Vec2 fs = free_stream_.velocity();
        return {fs.x, fs.y, 0.0};
    }
    Vec2 blended = acc * (1.0 / wsum);
    const double cap = clamp_factor_ * free_stream_.speed;
    const double speed = blended.norm();
    if (speed > cap && speed > 0.0) blended = blended * (cap / speed);
    return {blended.x, blended.y, 0.0};
}

std::shared_ptr<WindSource> compose_global(const domain::Scenario& scenario,
                                           std::vector<WindPatch> patches) {
    return std::make_shared<CompositeWind>(scenario.wind, std::move(patches));
}

bool has_strong_zone(const WindSource& wind, const domain::Scenario& scenario, double threshold) {
    const double h = scenario.domain.cell;
    const int nx = scenario.domain.nx();
    const int ny = scenario.domain.ny();
    const double z = scenario.spawn.z;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const Vec3 w = wind.sample({(i + 0.5) * h, (j + 0.5) * h, z});
            if (w.norm() >= threshold) return true;
        }
    }
    return false;
}

}  // namespace gustnav::oracle
