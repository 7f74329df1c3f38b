#pragma once

#include <cstdint>
#include <vector>

#include "df2/netspec.hpp"
#include "df2/quantizer.hpp"
#include "df2/spike_tensor.hpp"

namespace df2 {

// Dense reference inference. Deliberately shares no arithmetic helpers with
// the streaming pipeline model: plain triple loops, its own beat unpacking.
struct OracleResult {
    std::vector<SpikeTensor> activations;       // output of every layer
    std::vector<std::int32_t> final_potentials; // last layer, pre-threshold
    int predicted_class = 0;                    // argmax, ties to lowest index
};

OracleResult reference_inference(const NetworkSpec& net,
                                 const std::vector<LayerGeometry>& geoms,
                                 const QuantModel& model, const ImageU8& image);

// Multiply-accumulate count of one inference pass (logical channels, no
// padding lanes). ops = 2 * macs.
long long count_macs(const std::vector<LayerGeometry>& geoms);
long long count_ops(const std::vector<LayerGeometry>& geoms);

int argmax_class(const std::vector<std::int32_t>& potentials);

}  // namespace df2
