#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "df2/netspec.hpp"

namespace df2 {

struct MappingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Per-SLR budgets and model coefficients. Defaults describe vu9p-3slr.
struct DeviceProfile {
    std::string name = "vu9p-3slr";
    int slr_count = 3;
    long long bram_blocks = 720;   // per SLR
    long long uram_blocks = 320;   // per SLR
    long long dsp_slices = 2280;   // per SLR
    long long luts = 394000;       // per SLR
    long long bram_block_bytes = 4096;
    long long uram_block_bytes = 32768;
    int dsp_per_core_add = 2;  // adder-tree stage folded into DSP SIMD
    int dsp_per_core_mul = 8;  // transduction multipliers
    double lut_per_core = 35.0;
    double lut_per_column = 120.0;  // per buffered feature column

    long long block_bytes(MemKind kind) const {
        return kind == MemKind::Bram ? bram_block_bytes : uram_block_bytes;
    }
    long long blocks_per_slr(MemKind kind) const {
        return kind == MemKind::Bram ? bram_blocks : uram_blocks;
    }
};

// Resolution order: literal file path, then $DF2_PROFILE_DIR/<name>.json,
// then the built-in vu9p-3slr. Throws MappingError when nothing matches.
DeviceProfile load_device_profile(const std::string& name_or_path);
DeviceProfile device_profile_from_json(const nlohmann::ordered_json& doc);
nlohmann::ordered_json device_profile_to_json(const DeviceProfile& dev);

// Achievable weight-unit counts: 1, 2, 4, then multiples of 8.
bool omega_achievable(int omega);
std::vector<int> valid_omega_set(int limit);
// Achievable omegas that also divide the layer's output channels, ascending.
std::vector<int> achievable_omegas(int out_channels);

struct MemoryAllocation {
    long long bytes_per_unit = 0;  // weights + thresholds of one weight unit
    int cascade = 0;               // blocks chained per unit
    long long blocks = 0;          // omega * cascade
    double utilization = 0.0;      // percent of the cascaded blocks actually filled
};

// Footprint of one neuron's parameters in on-chip memory: one byte per beat
// lane row (8 weights) times beats, plus a 32-bit threshold.
long long neuron_footprint_bytes(long long beats_per_neuron);

MemoryAllocation memory_for_layer(long long beats_per_neuron, int neurons_per_unit,
                                  int omega, MemKind kind, const DeviceProfile& dev);

long long dsp_for_cores(LayerKind kind, long long cores, const DeviceProfile& dev);
long long lut_for_layer(const LayerGeometry& geom, long long cores,
                        const DeviceProfile& dev);

// Per-image cycles a layer needs to serve one full output map.
long long service_cycles(const LayerGeometry& geom, int neurons_per_unit,
                         int handshake_cycles = 2);

struct SlrShare {
    int slr = 0;
    int omega_share = 0;  // weight units resident on this SLR
};

struct LayerMapping {
    int omega = 1;
    int npu = 0;  // neurons per weight unit, out_channels / omega
    MemKind mem_kind = MemKind::Bram;
    MemoryAllocation alloc;  // whole-layer totals
    long long cores = 0;     // kappa * omega
    long long dsp = 0;
    long long lut = 0;
    long long service = 0;            // cycles per image
    std::vector<SlrShare> splits;     // size 1 when unsplit
    int primary_slr = 0;              // carries the feature buffer + merge
};

struct SlrUsage {
    long long bram = 0, uram = 0, dsp = 0, lut = 0;
};

struct MappingPlan {
    std::string device;
    double clock_mhz = 0.0;
    std::vector<LayerMapping> layers;
    std::vector<SlrUsage> usage;  // one entry per SLR actually used
    int slrs_used = 0;
    long long pace_cycles = 0;  // bottleneck service, H
    double fps = 0.0;           // clock / pace
};

struct MapOptions {
    double fps_hint = 0.0;    // >0: pace the pipeline for this throughput
    bool allow_splits = true; // false: a layer must fit one SLR whole
    int handshake_cycles = 2;
    // Accept the first plan whose per-SLR utilization spread is at most this
    // many percentage points; otherwise keep relaxing the pace within the
    // same SLR count and fall back to the tightest pace that packed at all.
    double balance_target_pp = 25.0;
};

// Chooses omega per layer, allocates memory/DSP, and packs layers onto SLRs,
// splitting along weight units when a layer overflows one SLR. Minimizes the
// SLR count first, then utilization imbalance, then the pipeline pace.
// Throws MappingError.
MappingPlan assign_slrs(const NetworkSpec& net, const std::vector<LayerGeometry>& geoms,
                        const DeviceProfile& dev, const MapOptions& opts = {});

struct BalanceReport {
    // Percent of the per-SLR budget used, indexed [slr].
    std::vector<double> bram_pct, uram_pct, dsp_pct, lut_pct;
    // Largest spread (max - min, percentage points) across occupied SLRs
    // over BRAM, URAM and DSP. LUTs are informational only.
    double imbalance_pp = 0.0;
};

BalanceReport balance_report(const MappingPlan& plan, const DeviceProfile& dev);

nlohmann::ordered_json plan_to_json(const MappingPlan& plan);
MappingPlan plan_from_json(const nlohmann::ordered_json& doc);

}  // namespace df2
