#include "df2/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace df2 {

long long round_half_away(double x) {
    // std::llround rounds halves away from zero, which is the convention here.
    return std::llround(x);
}

double weight_scale(const std::vector<float>& weights) {
    double max_abs = 0.0;
    for (float w : weights) max_abs = std::max(max_abs, std::fabs(static_cast<double>(w)));
    if (max_abs == 0.0) {
        throw QuantError("cannot scale an all-zero weight set");
    }
    return 127.0 / max_abs;
}

std::int8_t quantize_weight(double w, double scale) {
    long long q = round_half_away(w * scale);
    if (q > 127) q = 127;
    if (q < -127) q = -127;
    return static_cast<std::int8_t>(q);
}

std::int32_t fold_threshold(double gamma, double beta, double mu, double sigma,
                            double scale) {
    if (gamma == 0.0) {
        throw QuantError("batch norm gamma is zero; the firing boundary is undefined");
    }
    if (sigma <= 0.0) {
        throw QuantError("batch norm sigma must be positive");
    }
    double t = scale * (mu - beta * sigma / gamma);
    long long q = round_half_away(t);
    if (q > std::numeric_limits<std::int32_t>::max() ||
        q < std::numeric_limits<std::int32_t>::min()) {
        throw QuantError("folded threshold overflows int32");
    }
    return static_cast<std::int32_t>(q);
}

BeatLane beat_lane_for_dense(long long dense_index, int in_channels) {
    long long position = dense_index / in_channels;
    int ic = static_cast<int>(dense_index % in_channels);
    long long groups = (in_channels + 7) / 8;
    return {position * groups + ic / 8, ic % 8};
}

std::vector<std::int8_t> pack_layer_weights(const std::vector<std::int8_t>& dense,
                                            const LayerGeometry& geom) {
    std::vector<std::int8_t> packed(static_cast<std::size_t>(geom.beats_per_neuron) * 8, 0);
    for (long long i = 0; i < geom.fan_in; ++i) {
        BeatLane bl = beat_lane_for_dense(i, geom.in_ch);
        packed[static_cast<std::size_t>(bl.beat) * 8 + bl.lane] = dense[i];
    }
    return packed;
}

QuantLayer quantize_layer(const FloatLayer& layer, const LayerGeometry& geom) {
    if (layer.out_channels != geom.out_ch ||
        layer.fan_in != geom.fan_in ||
        layer.weights.size() !=
            static_cast<std::size_t>(layer.out_channels) * layer.fan_in ||
        layer.bn.size() != static_cast<std::size_t>(layer.out_channels)) {
        throw QuantError("layer parameter shapes do not match the network geometry");
    }

    QuantLayer out;
    out.out_channels = layer.out_channels;
    out.beats = geom.beats_per_neuron;
    out.scale = weight_scale(layer.weights);
    out.weights.resize(static_cast<std::size_t>(out.out_channels) * out.beats * 8);
    out.thresholds.resize(out.out_channels);

    std::vector<std::int8_t> dense(geom.fan_in);
    for (int ch = 0; ch < out.out_channels; ++ch) {
        BatchNorm bn = layer.bn[ch];
        // A negative gamma flips the comparison direction; negating the
        // channel's weights, gamma and mu restores "fire when above".
        double sign = 1.0;
        if (bn.gamma < 0.0) {
            sign = -1.0;
            bn.gamma = -bn.gamma;
            bn.mu = -bn.mu;
        }
        const float* w = layer.weights.data() + static_cast<std::size_t>(ch) * geom.fan_in;
        for (long long i = 0; i < geom.fan_in; ++i) {
            dense[i] = quantize_weight(sign * w[i], out.scale);
        }
        std::vector<std::int8_t> packed = pack_layer_weights(dense, geom);
        std::copy(packed.begin(), packed.end(),
                  out.weights.begin() + static_cast<std::size_t>(ch) * out.beats * 8);
        out.thresholds[ch] = fold_threshold(bn.gamma, bn.beta, bn.mu, bn.sigma, out.scale);
    }
    return out;
}

QuantModel quantize_model(const FloatModel& model,
                          const std::vector<LayerGeometry>& geoms) {
    if (model.layers.size() != geoms.size()) {
        throw QuantError("model layer count does not match the network");
    }
    QuantModel out;
    out.layers.reserve(model.layers.size());
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        out.layers.push_back(quantize_layer(model.layers[i], geoms[i]));
    }
    return out;
}

FloatModel random_float_model(std::uint64_t seed,
                              const std::vector<LayerGeometry>& geoms) {
    std::mt19937_64 rng(seed);
    auto unit = [&rng]() {  // uniform in [0, 1)
        return (rng() >> 11) * 0x1p-53;
    };
    FloatModel model;
    model.layers.resize(geoms.size());
    for (std::size_t l = 0; l < geoms.size(); ++l) {
        const LayerGeometry& g = geoms[l];
        FloatLayer& layer = model.layers[l];
        layer.out_channels = g.out_ch;
        layer.fan_in = g.fan_in;
        layer.weights.resize(static_cast<std::size_t>(g.out_ch) * g.fan_in);
        for (float& w : layer.weights) {
            w = static_cast<float>(unit() * 2.0 - 1.0);
        }
        layer.bn.resize(g.out_ch);
        for (BatchNorm& bn : layer.bn) {
            bn.gamma = 0.5 + unit();
            if (rng() % 10 == 0) bn.gamma = -bn.gamma;
            bn.beta = unit() - 0.5;
            bn.mu = unit() * 4.0 - 2.0;
            bn.sigma = 0.5 + unit();
        }
    }
    return model;
}

}  // namespace df2
