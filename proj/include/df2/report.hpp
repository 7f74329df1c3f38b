#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "df2/mapper.hpp"
#include "df2/netspec.hpp"
#include "df2/pipesim.hpp"

namespace df2 {

// Static throughput model read off a mapping plan, no simulation. Per-layer
// service is the raw compute rhythm; effective adds the window-refill
// overhead a striding kernel pays waiting on its upstream through the
// two-stage feature buffer, so the pipeline pace is max effective, not max
// service.
struct AnalyticLayer {
    long long service = 0;
    long long effective = 0;     // service plus upstream refill coupling
    double fps = 0.0;            // clock / service
    bool backpressured = false;  // a slower layer sits downstream
};

struct AnalyticReport {
    std::vector<AnalyticLayer> layers;
    long long pace_cycles = 0;  // max effective period across layers
    double fps = 0.0;
    int bottleneck_layer = 0;
};

AnalyticReport throughput_analytic(const NetworkSpec& net, const MappingPlan& plan);

// Reproducibility stamp embedded in every JSON artifact. No timestamps:
// reruns of the same command on the same inputs are byte-identical.
struct RunManifest {
    std::string command;
    std::string tool_version;
    std::string config_path;  // empty when unused
    std::uint64_t config_hash = 0;
    std::string params_path;
    std::uint64_t params_hash = 0;
    std::string device;
    std::uint64_t seed = 0;
    bool has_seed = false;
};

std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t file_fnv1a64(const std::string& path);  // 0 when unreadable

nlohmann::ordered_json manifest_to_json(const RunManifest& m);

// Writes via a temp file in the same directory plus rename, so readers never
// observe a half-written artifact.
void atomic_write_file(const std::string& path, const std::string& content);

nlohmann::ordered_json plan_report_json(const NetworkSpec& net,
                                        const std::vector<LayerGeometry>& geoms,
                                        const MappingPlan& plan,
                                        const DeviceProfile& dev,
                                        const RunManifest& manifest);
nlohmann::ordered_json sim_report_json(const NetworkSpec& net, const MappingPlan& plan,
                                       const SimReport& sim, const RunManifest& manifest);
nlohmann::ordered_json analytic_report_json(const NetworkSpec& net,
                                            const MappingPlan& plan,
                                            const AnalyticReport& rep,
                                            const RunManifest& manifest);

std::string report_to_csv(const nlohmann::ordered_json& report);
std::string report_to_text(const nlohmann::ordered_json& report);

}  // namespace df2
