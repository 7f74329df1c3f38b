#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "df2/mapper.hpp"
#include "df2/netspec.hpp"
#include "df2/quantizer.hpp"
#include "df2/spike_tensor.hpp"

namespace df2 {

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One 8-spike beat through one core: AND-gate the 8 weight lanes with the
// spike bits and add the survivors.
int core_beat(std::uint8_t spike_byte, const std::int8_t* weights8);

// Integrate-and-fire decision, strictly greater-than.
bool fire(std::int64_t acc, std::int32_t threshold);

// Transduction MAC: n unsigned pixel bytes times n signed weights.
int transduce_mac(const std::uint8_t* pixels, const std::int8_t* weights, int n);

// Final classifier: argmax of membrane potentials, ties to the lowest index.
int classify(const std::vector<std::int32_t>& potentials);

// One source feeding the round-robin column merge. Sources own contiguous,
// ascending, non-overlapping channel ranges that tile [0, channels).
struct MergeSource {
    int ch_lo = 0;  // inclusive
    int ch_hi = 0;  // exclusive
    // Spikes of one output column, channel-major: values[(ch-ch_lo)*rows + r].
    std::vector<std::uint8_t> values;
};

struct MergedColumn {
    std::vector<std::uint8_t> values;  // values[ch*rows + r], full range
    std::vector<int> schedule;         // source index visited per merge slot
};

// The merge MUX visits live sources 0..m-1 in order, moving one channel's
// row vector per slot. Throws SimError on overlap, gap, or size mismatch.
MergedColumn merge_round_robin(const std::vector<MergeSource>& sources, int rows,
                               int channels);

struct SimOptions {
    int handshake_cycles = 2;
    int bridge_cycles = 4;          // SLR crossing; the fabric allows at most 10
    int merge_cycles_per_source = 1;
    int group_size = 8;             // cores per re-timing group
    int limit_images = 0;           // 0 = simulate every image given
    bool keep_activations = false;  // record every layer's spike maps
    std::string trace_path;         // CSV of controller state transitions
};

struct LayerActivity {
    long long busy = 0, stalled = 0, idle = 0;  // whole run
    long long busy_win = 0, stalled_win = 0, idle_win = 0;  // steady window
    long long service = 0;          // cycles per image at the mapped shape
    long long delivery_offset = 0;  // constant pipeline registers + bridge + merge
};

struct SimReport {
    long long total_cycles = 0;
    long long fill_latency_cycles = 0;      // first image, input to classifier
    long long steady_cycles_per_image = 0;  // last inter-completion gap
    double fps = 0.0;
    int bottleneck_layer = 0;
    std::vector<LayerActivity> layers;
    std::vector<long long> completion_cycles;  // per image
    std::vector<int> predicted_class;          // per image
    std::vector<std::vector<std::int32_t>> final_potentials;  // per image
    std::vector<SpikeTensor> final_spikes;                    // per image
    // Only when keep_activations: [image][layer] spike maps.
    std::vector<std::vector<SpikeTensor>> activations;
};

// Cycle-approximate, functionally exact pipeline simulation. Timing is
// data independent; a single input image is replayed once to measure the
// steady-state period.
SimReport simulate(const NetworkSpec& net, const std::vector<LayerGeometry>& geoms,
                   const MappingPlan& plan, const QuantModel& model,
                   const std::vector<ImageU8>& images, const SimOptions& opts = {});

}  // namespace df2
