#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "df2/quantizer.hpp"

namespace df2 {

struct ParamsIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// DF2P container, little-endian.
//   file header: magic "DF2P", u16 version (=1), u16 layer_count
//   per layer:   u16 layer_index, u32 out_channels, u32 beats, u16 omega,
//                f64 scale, then the payload:
//                  weights, unit -> neuron -> beat -> 8 lanes (1 byte each)
//                  thresholds, unit -> neuron, int32
// Unit u owns neurons [u*npu, (u+1)*npu), npu = out_channels / omega.
inline constexpr std::uint16_t kParamsVersion = 1;

std::vector<std::uint8_t> serialize_params(const QuantModel& model,
                                           const std::vector<int>& omegas);

struct LoadedParams {
    QuantModel model;
    std::vector<int> omegas;
};

LoadedParams deserialize_params(const std::vector<std::uint8_t>& bytes);

void write_params_file(const std::string& path, const QuantModel& model,
                       const std::vector<int>& omegas);
LoadedParams read_params_file(const std::string& path);

}  // namespace df2
