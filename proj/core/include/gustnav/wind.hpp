#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "gustnav/encoding.hpp"
#include "gustnav/field.hpp"
#include "gustnav/scenario.hpp"

namespace gustnav::oracle {

// Samplable wind over the whole domain. Implementations are immutable after
// construction and safe to share across environments.
class WindSource {
public:
    virtual ~WindSource() = default;
    virtual Vec3 sample(Vec3 pos) const = 0;
};

class ZeroWind final : public WindSource {
public:
    Vec3 sample(Vec3) const override { return {0.0, 0.0, 0.0}; }
};

class UniformWind final : public WindSource {
public:
    explicit UniformWind(const domain::WindSpec& w) : wind_(w) {}
    Vec3 sample(Vec3) const override {
        const Vec2 v = wind_.velocity();
        return {v.x, v.y, 0.0};
    }

private:
    domain::WindSpec wind_;
};

// Full-domain oracle field (validation path).
class FieldWind final : public WindSource {
public:
    explicit FieldWind(VelocityField field) : field_(std::move(field)) {}
    Vec3 sample(Vec3 pos) const override { return sample_wind(field_, pos); }
    const VelocityField& field() const { return field_; }

private:
    VelocityField field_;
};

// Per-building patch placed in the world: the patch's +x axis is rotated to
// the wind direction and its standard anchor sits on the building center.
struct WindPatch {
    domain::Building building;
    VelocityField field;
};

// Training-time composition of per-building patches (surrogate or oracle).
// Outside every patch the free stream applies; overlapping patches blend by
// inverse distance to the building centers; the blended speed is clamped to
// clamp_factor * inlet speed.
class CompositeWind final : public WindSource {
public:
    CompositeWind(const domain::WindSpec& free_stream, std::vector<WindPatch> patches,
                  encoding::PatchFrame frame = {}, double clamp_factor = 1.5);

    Vec3 sample(Vec3 pos) const override;

private:
    domain::WindSpec free_stream_;
    std::vector<WindPatch> patches_;
    encoding::PatchFrame frame_;
    double clamp_factor_;
    double cos_dir_;
    double sin_dir_;
};

std::shared_ptr<WindSource> compose_global(const domain::Scenario& scenario,
                                           std::vector<WindPatch> patches);

// True if any cell-center sample of `wind` on the scenario's global grid (at
// the spawn altitude) meets or exceeds `threshold`.
bool has_strong_zone(const WindSource& wind, const domain::Scenario& scenario, double threshold);

}  // namespace gustnav::oracle
