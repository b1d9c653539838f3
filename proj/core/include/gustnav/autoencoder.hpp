#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gustnav/encoding.hpp"
#include "gustnav/field.hpp"
#include "gustnav/solver.hpp"

namespace gustnav::surrogate {

enum class LayerKind : std::uint8_t { Conv = 0, Deconv = 1 };

struct LayerSpec {
    LayerKind kind = LayerKind::Conv;
    int k = 3;
    int stride = 1;
    int pad = 0;
    int out_pad_w = 0;  // deconv only; extra zeros on the far edge
    int out_pad_h = 0;
    int in_ch = 0;
    int out_ch = 0;
    int in_w = 0;
    int in_h = 0;
    int out_w = 0;
    int out_h = 0;
    bool relu = false;

    std::size_t weight_count() const {
        return static_cast<std::size_t>(in_ch) * out_ch * k * k + out_ch;
    }
};

struct Architecture {
    std::vector<LayerSpec> layers;

    int input_w() const { return layers.front().in_w; }
    int input_h() const { return layers.front().in_h; }
    int output_w() const { return layers.back().out_w; }
    int output_h() const { return layers.back().out_h; }
    std::size_t param_count() const;
    void validate() const;

    // 3 conv layers (k5 s2, 3->8->16->32, ReLU) mirrored by 3 transposed
    // convs back to 3 channels, linear output.
    static Architecture autoencoder(int nx, int ny);
    // Two tiny layers on a small grid; used by the finite-difference checks.
    static Architecture tiny(int nx, int ny);
};

struct AutoencoderParams {
    Architecture arch;
    std::vector<float> weights;  // all layers concatenated, kernel then bias
    std::uint64_t seed = 0;
};

// Deterministic Glorot-uniform initialization; biases zero.
AutoencoderParams init_params(const Architecture& arch, std::uint64_t seed);

// Dense prediction, 3 channels over the input grid. The network itself works
// in inlet-normalized units (u/U, v/U, (p - gauge)/(rho U^2)): the input
// tensor carries geometry only, and the oracle's solutions are
// Reynolds-similar across inlet speeds, so the normalized field is a pure
// function of geometry. scale_to_physical applies a concrete inlet.
struct FieldPrediction {
    int nx = 0;
    int ny = 0;
    std::vector<double> channels;  // 3 * nx*ny, row-major planes

    std::size_t plane() const { return static_cast<std::size_t>(nx) * ny; }
    double at(int c, int i, int j) const {
        return channels[c * plane() + static_cast<std::size_t>(j) * nx + i];
    }
};

// Forward pass in normalized units. Velocity channels are masked to zero on
// obstacle cells of `input`. Throws on shape mismatch or non-finite output.
FieldPrediction forward(const AutoencoderParams& params, const encoding::InputTensor& input);

// Converts a normalized prediction to physical units for the given inlet.
FieldPrediction scale_to_physical(const FieldPrediction& normalized, double inlet_speed,
                                  double density = 1.196);

// Physical-units forward pass.
FieldPrediction predict_physical(const AutoencoderParams& params,
                                 const encoding::InputTensor& input,
                                 const domain::WindSpec& inlet);

// Forward pass packaged as a VelocityField for the environment/pipeline.
oracle::VelocityField predict_field(const AutoencoderParams& params,
                                    const encoding::InputTensor& input,
                                    const domain::WindSpec& inlet, double cell);

// Mean absolute error over all cells and channels, excluding obstacle cells
// from the velocity channels (they are pinned, not predicted).
double mae_loss(const FieldPrediction& pred, const oracle::VelocityField& target,
                const encoding::InputTensor& input);

struct FlowSample {
    encoding::InputTensor input;
    oracle::VelocityField target;
};

// MAE summed over `samples`, averaged per sample; gradient w.r.t. every
// weight appended into `grad` (must be pre-sized and zeroed).
double loss_and_gradient(const AutoencoderParams& params, const std::vector<FlowSample>& samples,
                         const std::vector<std::size_t>& indices, std::vector<double>& grad);

struct DatasetConfig {
    encoding::PatchFrame frame;
    double min_footprint = units::feet(130.0);
    double max_footprint = units::feet(260.0);
    double min_height = units::feet(200.0);
    double max_height = units::feet(400.0);
    double min_wind = units::mph(3.0);
    double max_wind = units::mph(45.0);
    oracle::SolverConfig solver;
    int max_retries = 5;
};

// n oracle-labeled single-building samples, deterministic from seed. Building
// size and position are randomized within the encoding constraints, inlet
// speed within the wind range. Non-converged solves are regenerated with a
// new sub-seed up to max_retries.
std::vector<FlowSample> generate_dataset(int n, std::uint64_t seed, const DatasetConfig& cfg = {});

void save_dataset(const std::vector<FlowSample>& ds, const std::string& dir);
std::vector<FlowSample> load_dataset(const std::string& dir);

struct TrainConfig {
    int epochs = 200;
    int batch = 8;
    double lr = 1e-3;
    double lr_decay = 1.0;  // multiplicative per epoch
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 0;
    double holdout_frac = 0.2;       // last fraction of the dataset by index
    double stop_holdout_mae = 0.0;   // early stop when reached; 0 disables
};

struct EpochStats {
    double train_mae = 0.0;
    double holdout_mae = 0.0;
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    double final_rel_error = 0.0;  // holdout MAE / mean |target|
    bool aborted = false;          // non-finite loss; params restored to last good state
};

// Adam on MAE. Deterministic given cfg.seed (fixed shuffle and reduction
// order). A non-finite loss aborts and restores the last finite checkpoint.
TrainReport train(AutoencoderParams& params, const std::vector<FlowSample>& dataset,
                  const TrainConfig& cfg);

void save_checkpoint(const AutoencoderParams& params, const std::string& path);
AutoencoderParams load_checkpoint(const std::string& path);

// Comparison arm only: free stream with a rectangular shadow wake behind the
// building whose speed recovers linearly over four footprint lengths.
oracle::VelocityField baseline_wake_field(const encoding::LocalRect& building,
                                          const encoding::PatchFrame& frame, double inlet_speed);

}  // namespace gustnav::surrogate
