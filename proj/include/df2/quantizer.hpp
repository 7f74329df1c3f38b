#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "df2/netspec.hpp"

namespace df2 {

struct QuantError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Per-channel batch norm statistics folded into the firing threshold.
struct BatchNorm {
    double gamma = 1.0;
    double beta = 0.0;
    double mu = 0.0;
    double sigma = 1.0;
};

// Float training artifacts for one layer. Weights are dense per channel:
// conv index (kr*k + kc)*in_ch + ic, FC index (r*in_cols + c)*in_ch + ic.
struct FloatLayer {
    int out_channels = 0;
    long long fan_in = 0;
    std::vector<float> weights;  // [out_channels][fan_in], flattened
    std::vector<BatchNorm> bn;   // [out_channels]
};

struct FloatModel {
    std::vector<FloatLayer> layers;
};

// Hardware-ready layer: weights packed in beat-lane order. Lane l of beat b
// for channel group g holds input channel 8g+l; padding lanes are zero.
struct QuantLayer {
    int out_channels = 0;
    long long beats = 0;  // beats per neuron
    double scale = 0.0;
    std::vector<std::int8_t> weights;       // [out_channels][beats*8], flattened
    std::vector<std::int32_t> thresholds;   // [out_channels]

    const std::int8_t* neuron_weights(int ch) const {
        return weights.data() + static_cast<std::size_t>(ch) * beats * 8;
    }
};

struct QuantModel {
    std::vector<QuantLayer> layers;
};

// Round to nearest, halves away from zero (0.5 -> 1, -0.5 -> -1).
long long round_half_away(double x);

// 127 / max|w|. Throws QuantError when every weight is zero.
double weight_scale(const std::vector<float>& weights);

// round_half_away(w * scale), clamped to [-127, 127].
std::int8_t quantize_weight(double w, double scale);

// round_half_away(scale * (mu - beta * sigma / gamma)) as int32.
// Throws QuantError for gamma == 0, sigma <= 0, or overflow.
std::int32_t fold_threshold(double gamma, double beta, double mu, double sigma,
                            double scale);

// Dense -> beat-lane packing for one layer's quantized weights.
std::vector<std::int8_t> pack_layer_weights(const std::vector<std::int8_t>& dense,
                                            const LayerGeometry& geom);

// Full pipeline: per-layer scale, gamma<0 sign folding (weights, gamma and mu
// all negate), threshold folding, beat-lane packing.
QuantLayer quantize_layer(const FloatLayer& layer, const LayerGeometry& geom);
QuantModel quantize_model(const FloatModel& model,
                          const std::vector<LayerGeometry>& geoms);

// Beat/lane coordinates of a dense weight index (shared with the oracle's
// independent unpacking and the spike byte layout).
struct BeatLane {
    long long beat = 0;
    int lane = 0;
};
BeatLane beat_lane_for_dense(long long dense_index, int in_channels);

// Deterministic pseudo-random training artifacts for seeded runs. Weights are
// uniform in [-1, 1]; batch norm keeps thresholds near the accumulator mean so
// roughly half the neurons fire. About one channel in ten gets gamma < 0 to
// keep the sign-folding path hot.
FloatModel random_float_model(std::uint64_t seed,
                              const std::vector<LayerGeometry>& geoms);

}  // namespace df2
