#include "df2/mapper.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>

namespace df2 {

namespace {

long long ceil_div_ll(long long a, long long b) { return (a + b - 1) / b; }

}  // namespace

bool omega_achievable(int omega) {
    return omega == 1 || omega == 2 || omega == 4 || (omega >= 8 && omega % 8 == 0);
}

std::vector<int> valid_omega_set(int limit) {
    std::vector<int> out;
    for (int w : {1, 2, 4}) {
        if (w <= limit) out.push_back(w);
    }
    for (int w = 8; w <= limit; w += 8) out.push_back(w);
    return out;
}

std::vector<int> achievable_omegas(int out_channels) {
    std::vector<int> out;
    for (int w : valid_omega_set(out_channels)) {
        if (out_channels % w == 0) out.push_back(w);
    }
    return out;
}

long long neuron_footprint_bytes(long long beats_per_neuron) {
    return beats_per_neuron * 8 + 4;
}

MemoryAllocation memory_for_layer(long long beats_per_neuron, int neurons_per_unit,
                                  int omega, MemKind kind, const DeviceProfile& dev) {
    MemoryAllocation a;
    a.bytes_per_unit = neurons_per_unit * neuron_footprint_bytes(beats_per_neuron);
    long long cap = dev.block_bytes(kind);
    a.cascade = static_cast<int>(ceil_div_ll(a.bytes_per_unit, cap));
    a.blocks = static_cast<long long>(omega) * a.cascade;
    a.utilization = 100.0 * static_cast<double>(a.bytes_per_unit) /
                    static_cast<double>(a.cascade * cap);
    return a;
}

long long dsp_for_cores(LayerKind kind, long long cores, const DeviceProfile& dev) {
    int per_core = kind == LayerKind::TransductionConv ? dev.dsp_per_core_mul
                                                       : dev.dsp_per_core_add;
    return cores * per_core;
}

namespace {

// Feature buffer depth in columns: one landing column plus a three-column
// window for convs; a double full-map buffer for fully connected layers.
long long buffered_columns(const LayerGeometry& geom) {
    if (geom.kernel == 0) return 2LL * geom.in_cols;
    return 4;
}

}  // namespace

long long lut_for_layer(const LayerGeometry& geom, long long cores,
                        const DeviceProfile& dev) {
    return llround(dev.lut_per_core * static_cast<double>(cores) +
                   dev.lut_per_column * static_cast<double>(buffered_columns(geom)));
}

long long service_cycles(const LayerGeometry& geom, int neurons_per_unit,
                         int handshake_cycles) {
    return static_cast<long long>(geom.out_cols) *
           (static_cast<long long>(neurons_per_unit) * geom.beats_per_neuron +
            handshake_cycles);
}

// ---------------------------------------------------------------------------
// Device profiles

nlohmann::ordered_json device_profile_to_json(const DeviceProfile& d) {
    nlohmann::ordered_json j;
    j["name"] = d.name;
    j["slr_count"] = d.slr_count;
    j["bram_blocks_per_slr"] = d.bram_blocks;
    j["uram_blocks_per_slr"] = d.uram_blocks;
    j["dsp_per_slr"] = d.dsp_slices;
    j["luts_per_slr"] = d.luts;
    j["bram_block_bytes"] = d.bram_block_bytes;
    j["uram_block_bytes"] = d.uram_block_bytes;
    j["dsp_per_core_add"] = d.dsp_per_core_add;
    j["dsp_per_core_mul"] = d.dsp_per_core_mul;
    j["lut_per_core"] = d.lut_per_core;
    j["lut_per_column"] = d.lut_per_column;
    return j;
}

DeviceProfile device_profile_from_json(const nlohmann::ordered_json& doc) {
    DeviceProfile d;
    try {
        d.name = doc.value("name", d.name);
        d.slr_count = doc.value("slr_count", d.slr_count);
        d.bram_blocks = doc.value("bram_blocks_per_slr", d.bram_blocks);
        d.uram_blocks = doc.value("uram_blocks_per_slr", d.uram_blocks);
        d.dsp_slices = doc.value("dsp_per_slr", d.dsp_slices);
        d.luts = doc.value("luts_per_slr", d.luts);
        d.bram_block_bytes = doc.value("bram_block_bytes", d.bram_block_bytes);
        d.uram_block_bytes = doc.value("uram_block_bytes", d.uram_block_bytes);
        d.dsp_per_core_add = doc.value("dsp_per_core_add", d.dsp_per_core_add);
        d.dsp_per_core_mul = doc.value("dsp_per_core_mul", d.dsp_per_core_mul);
        d.lut_per_core = doc.value("lut_per_core", d.lut_per_core);
        d.lut_per_column = doc.value("lut_per_column", d.lut_per_column);
    } catch (const nlohmann::json::exception& e) {
        throw MappingError(std::string("bad device profile field: ") + e.what());
    }
    if (d.slr_count < 1 || d.bram_blocks < 0 || d.uram_blocks < 0 || d.dsp_slices < 1 ||
        d.bram_block_bytes < 1 || d.uram_block_bytes < 1) {
        throw MappingError("device profile values must be positive");
    }
    return d;
}

DeviceProfile load_device_profile(const std::string& name_or_path) {
    namespace fs = std::filesystem;
    auto parse_file = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw MappingError("cannot open device profile '" + path + "'");
        nlohmann::ordered_json doc;
        try {
            doc = nlohmann::ordered_json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw MappingError("device profile '" + path + "' is not valid JSON: " +
                               e.what());
        }
        return device_profile_from_json(doc);
    };

    std::error_code ec;
    if (fs::is_regular_file(name_or_path, ec)) return parse_file(name_or_path);
    if (const char* dir = std::getenv("DF2_PROFILE_DIR"); dir && *dir) {
        fs::path p = fs::path(dir) / (name_or_path + ".json");
        if (fs::is_regular_file(p, ec)) return parse_file(p.string());
    }
    if (name_or_path.empty() || name_or_path == "vu9p-3slr") return DeviceProfile{};
    throw MappingError("unknown device profile '" + name_or_path +
                       "' (not a file, not in DF2_PROFILE_DIR, not built in)");
}

// ---------------------------------------------------------------------------
// Omega selection

namespace {

struct LayerDemand {
    int omega = 0, npu = 0, kappa = 0;
    MemKind kind = MemKind::Bram;
    LayerKind layer_kind = LayerKind::Conv;
    MemoryAllocation alloc;
    long long cores = 0;
    long long dsp_per_unit = 0;
    long long dsp = 0;
    long long lut_core_per_unit = 0;  // re-timing groups scale with cores
    long long lut_columns = 0;        // feature buffer, lives on the primary SLR
    long long service = 0;
};

LayerDemand demand_for(const LayerSpec& spec, const LayerGeometry& geom, int omega,
                       const DeviceProfile& dev, int handshake) {
    LayerDemand d;
    d.omega = omega;
    d.npu = geom.out_ch / omega;
    d.kappa = geom.kappa;
    d.kind = spec.mem_kind;
    d.layer_kind = spec.kind;
    d.alloc = memory_for_layer(geom.beats_per_neuron, d.npu, omega, spec.mem_kind, dev);
    d.cores = static_cast<long long>(geom.kappa) * omega;
    d.dsp_per_unit = dsp_for_cores(spec.kind, geom.kappa, dev);
    d.dsp = d.dsp_per_unit * omega;
    d.lut_core_per_unit = llround(dev.lut_per_core * geom.kappa);
    d.lut_columns = llround(dev.lut_per_column *
                            static_cast<double>(buffered_columns(geom)));
    d.service = service_cycles(geom, d.npu, handshake);
    return d;
}

// A weight unit is indivisible: its cascade must fit a single SLR's blocks.
bool unit_mappable(const LayerSpec& spec, const LayerGeometry& geom, int omega,
                   const DeviceProfile& dev) {
    MemoryAllocation a = memory_for_layer(geom.beats_per_neuron, geom.out_ch / omega,
                                          omega, spec.mem_kind, dev);
    return a.cascade <= dev.blocks_per_slr(spec.mem_kind);
}

std::vector<int> layer_omega_choices(const LayerSpec& spec, const LayerGeometry& geom) {
    if (spec.omega_override) return {spec.omega_override};
    return achievable_omegas(geom.out_ch);
}

// Largest neurons-per-unit whose parameters fit the declared memory cascade;
// falls back to the largest unit that fits one SLR when the declaration is
// too small for any achievable shape.
int seeded_omega(const LayerSpec& spec, const LayerGeometry& geom,
                 const DeviceProfile& dev, int layer_index) {
    std::vector<int> choices = layer_omega_choices(spec, geom);
    if (choices.empty()) {
        throw MappingError("layer " + std::to_string(layer_index) +
                           " has no achievable weight-unit count");
    }
    if (spec.omega_override) return spec.omega_override;

    long long fp = neuron_footprint_bytes(geom.beats_per_neuron);
    long long npu_max = spec.cascade * dev.block_bytes(spec.mem_kind) / fp;
    for (int w : choices) {
        if (geom.out_ch / w <= npu_max && unit_mappable(spec, geom, w, dev)) return w;
    }
    for (int w : choices) {
        if (unit_mappable(spec, geom, w, dev)) return w;
    }
    throw MappingError("layer " + std::to_string(layer_index) +
                       " ('" + spec.notation + "') is unmappable: even its smallest "
                       "weight unit overflows one SLR's " +
                       std::to_string(dev.blocks_per_slr(spec.mem_kind)) +
                       " memory blocks");
}

// Smallest omega (fewest cores) that keeps the layer at or under the pace.
std::optional<int> omega_for_pace(const LayerSpec& spec, const LayerGeometry& geom,
                                  long long pace, const DeviceProfile& dev,
                                  int handshake) {
    for (int w : layer_omega_choices(spec, geom)) {
        if (!unit_mappable(spec, geom, w, dev)) continue;
        if (service_cycles(geom, geom.out_ch / w, handshake) <= pace) return w;
    }
    return std::nullopt;
}

std::optional<std::vector<LayerDemand>> profile_for_pace(
    const NetworkSpec& net, const std::vector<LayerGeometry>& geoms, long long pace,
    const DeviceProfile& dev, int handshake) {
    std::vector<LayerDemand> out;
    out.reserve(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        auto w = omega_for_pace(net.layers[i], geoms[i], pace, dev, handshake);
        if (!w) return std::nullopt;
        out.push_back(demand_for(net.layers[i], geoms[i], *w, dev, handshake));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Packing

struct Caps {
    long long bram = 0, uram = 0, dsp = 0;
    long long mem(MemKind k) const { return k == MemKind::Bram ? bram : uram; }
};

long long& mem_of(SlrUsage& u, MemKind k) {
    return k == MemKind::Bram ? u.bram : u.uram;
}

bool fits_units(const SlrUsage& u, const LayerDemand& d, long long units,
                const Caps& caps) {
    long long mem_after =
        (d.kind == MemKind::Bram ? u.bram : u.uram) + units * d.alloc.cascade;
    if (mem_after > caps.mem(d.kind)) return false;
    return u.dsp + units * d.dsp_per_unit <= caps.dsp;
}

void place_units(SlrUsage& u, const LayerDemand& d, long long units) {
    mem_of(u, d.kind) += units * d.alloc.cascade;
    u.dsp += units * d.dsp_per_unit;
}

bool slr_occupied(const SlrUsage& u) { return u.bram || u.uram || u.dsp; }

double usage_imbalance(const std::vector<SlrUsage>& usage, const DeviceProfile& dev) {
    double worst = 0.0;
    auto spread = [&](auto field, long long budget) {
        if (budget <= 0) return;
        double mx = -1.0, mn = 1e18;
        for (const SlrUsage& u : usage) {
            if (!slr_occupied(u)) continue;
            double pct = 100.0 * static_cast<double>(field(u)) / budget;
            mx = std::max(mx, pct);
            mn = std::min(mn, pct);
        }
        if (mx >= 0.0) worst = std::max(worst, mx - mn);
    };
    spread([](const SlrUsage& u) { return u.bram; }, dev.bram_blocks);
    spread([](const SlrUsage& u) { return u.uram; }, dev.uram_blocks);
    spread([](const SlrUsage& u) { return u.dsp; }, dev.dsp_slices);
    return worst;
}

struct PackState {
    std::vector<SlrUsage> usage;
    std::vector<std::vector<SlrShare>> placements;  // per layer
};

// Worst per-resource load of one SLR, as a fraction of the packing caps.
double slr_load(const SlrUsage& u, const Caps& caps) {
    double worst = 0.0;
    if (caps.bram > 0) worst = std::max(worst, static_cast<double>(u.bram) / caps.bram);
    if (caps.uram > 0) worst = std::max(worst, static_cast<double>(u.uram) / caps.uram);
    if (caps.dsp > 0) worst = std::max(worst, static_cast<double>(u.dsp) / caps.dsp);
    return worst;
}

double global_load(const std::vector<SlrUsage>& usage, const Caps& caps) {
    double worst = 0.0;
    for (const SlrUsage& u : usage) worst = std::max(worst, slr_load(u, caps));
    return worst;
}

std::vector<std::vector<int>> split_shapes(int w) {
    int half = (w + 1) / 2;
    int two_thirds = (2 * w + 2) / 3;
    std::vector<std::vector<int>> shapes = {
        {half, w - half},
        {two_thirds, w - two_thirds},
        {w - two_thirds, two_thirds},
    };
    if (w >= 3) {
        int third = w / 3;
        int rem = w - 3 * third;
        shapes.push_back(
            {third + (rem > 0 ? 1 : 0), third + (rem > 1 ? 1 : 0), third});
    }
    return shapes;
}

// A layer's weight units are interchangeable, so shares may live on any SLR;
// memory left behind on an earlier SLR is still reachable. Placement decisions
// are made for the heaviest demands first so that layers with SLR-scale units
// (the late FC layers) claim contiguous block runs before small layers
// fragment them.
enum class PackPolicy {
    Pressure,  // decide heaviest-first, weighting each resource by its scarcity
    MaxNorm,   // decide heaviest-first by raw normalized demand
    Forward,   // decide in pipeline order, preferring the current SLR
};

std::vector<std::size_t> decision_order(const std::vector<LayerDemand>& demands,
                                        int n_slrs, const Caps& caps,
                                        PackPolicy policy) {
    std::vector<std::size_t> order(demands.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (policy == PackPolicy::Forward) return order;

    double pb = 1.0, pu = 1.0, pd = 1.0;
    if (policy == PackPolicy::Pressure) {
        long long tb = 0, tu = 0, td = 0;
        for (const LayerDemand& d : demands) {
            (d.kind == MemKind::Bram ? tb : tu) += d.alloc.blocks;
            td += d.dsp;
        }
        pb = caps.bram > 0 ? static_cast<double>(tb) / (n_slrs * caps.bram) : 0.0;
        pu = caps.uram > 0 ? static_cast<double>(tu) / (n_slrs * caps.uram) : 0.0;
        pd = caps.dsp > 0 ? static_cast<double>(td) / (n_slrs * caps.dsp) : 0.0;
    }
    std::vector<double> key(demands.size());
    for (std::size_t i = 0; i < demands.size(); ++i) {
        const LayerDemand& d = demands[i];
        double mem_cap = static_cast<double>(caps.mem(d.kind));
        double mem = mem_cap > 0 ? d.alloc.blocks / mem_cap : 0.0;
        double dsp = caps.dsp > 0 ? static_cast<double>(d.dsp) / caps.dsp : 0.0;
        key[i] = std::max(mem * (d.kind == MemKind::Bram ? pb : pu), dsp * pd);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });
    return order;
}

// cur, cur+1, ..., n-1, then cur-1, cur-2, ..., 0
std::vector<int> pref_order(int cur, int n) {
    std::vector<int> order;
    order.reserve(n);
    for (int s = cur; s < n; ++s) order.push_back(s);
    for (int s = cur - 1; s >= 0; --s) order.push_back(s);
    return order;
}

std::optional<PackState> pack_layers(const std::vector<LayerDemand>& demands,
                                     int n_slrs, const Caps& caps,
                                     const DeviceProfile& dev, bool allow_splits,
                                     PackPolicy policy) {
    PackState st;
    st.usage.assign(n_slrs, {});
    st.placements.assign(demands.size(), {});
    int cur = 0;  // pipeline head, used by the Forward policy only

    for (std::size_t i : decision_order(demands, n_slrs, caps, policy)) {
        const LayerDemand& d = demands[i];

        // Whole placement. Forward keeps pipeline locality; the heaviest-first
        // policies level the worst-loaded SLR.
        int whole = -1;
        if (policy == PackPolicy::Forward) {
            for (int s : pref_order(cur, n_slrs)) {
                if (fits_units(st.usage[s], d, d.omega, caps)) {
                    whole = s;
                    break;
                }
            }
        } else {
            double best_global = 0.0, best_own = 0.0;
            for (int s = 0; s < n_slrs; ++s) {
                if (!fits_units(st.usage[s], d, d.omega, caps)) continue;
                std::vector<SlrUsage> trial = st.usage;
                place_units(trial[s], d, d.omega);
                double g = global_load(trial, caps);
                double own = slr_load(trial[s], caps);
                bool better = whole < 0 || g < best_global;
                if (policy == PackPolicy::Pressure && !better) {
                    better = g == best_global && own < best_own;
                }
                if (better) {
                    whole = s;
                    best_global = g;
                    best_own = own;
                }
            }
        }
        if (whole >= 0) {
            place_units(st.usage[whole], d, d.omega);
            st.placements[i] = {{whole, d.omega}};
            if (whole > cur) cur = whole;
            continue;
        }
        if (!allow_splits || d.omega < 2) return std::nullopt;

        // Canonical split shapes over every ordered pair/triple of SLRs.
        // Pressure breaks load ties toward the lexicographically smallest SLR
        // tuple; the others keep the first tuple found. Forward scores by the
        // device-relative imbalance instead of the cap-relative load.
        std::vector<SlrShare> best;
        double best_score = 0.0;
        std::vector<int> best_tup;
        for (const auto& shape : split_shapes(d.omega)) {
            if (std::any_of(shape.begin(), shape.end(),
                            [](int s) { return s < 1; })) {
                continue;
            }
            int k = static_cast<int>(shape.size());
            std::vector<int> tup(k);
            std::vector<bool> used(n_slrs, false);
            auto try_tuple = [&]() {
                std::vector<SlrUsage> trial = st.usage;
                for (int j = 0; j < k; ++j) {
                    if (!fits_units(trial[tup[j]], d, shape[j], caps)) return;
                    place_units(trial[tup[j]], d, shape[j]);
                }
                double score = policy == PackPolicy::Forward
                                   ? usage_imbalance(trial, dev)
                                   : global_load(trial, caps);
                bool better = best.empty() || score < best_score;
                if (policy == PackPolicy::Pressure && !better && score == best_score) {
                    better = std::lexicographical_compare(
                        tup.begin(), tup.end(), best_tup.begin(), best_tup.end());
                }
                if (better) {
                    best.clear();
                    for (int j = 0; j < k; ++j) best.push_back({tup[j], shape[j]});
                    best_score = score;
                    best_tup = tup;
                }
            };
            std::function<void(int)> rec = [&](int depth) {
                if (depth == k) {
                    try_tuple();
                    return;
                }
                for (int s = 0; s < n_slrs; ++s) {
                    if (used[s]) continue;
                    used[s] = true;
                    tup[depth] = s;
                    rec(depth + 1);
                    used[s] = false;
                }
            };
            rec(0);
        }
        if (!best.empty()) {
            for (const SlrShare& s : best) place_units(st.usage[s.slr], d, s.omega_share);
            std::sort(best.begin(), best.end(),
                      [](const SlrShare& a, const SlrShare& b) { return a.slr < b.slr; });
            st.placements[i] = best;
            for (const SlrShare& s : best) cur = std::max(cur, s.slr);
            continue;
        }

        // Exact fill: top off SLRs until the units run out, least-loaded first
        // (Forward: pipeline-preferred order).
        std::vector<int> fill_order;
        if (policy == PackPolicy::Forward) {
            fill_order = pref_order(cur, n_slrs);
        } else {
            fill_order.resize(n_slrs);
            for (int s = 0; s < n_slrs; ++s) fill_order[s] = s;
            std::stable_sort(fill_order.begin(), fill_order.end(), [&](int a, int b) {
                return slr_load(st.usage[a], caps) < slr_load(st.usage[b], caps);
            });
        }
        std::vector<SlrShare> shares;
        std::vector<SlrUsage> trial = st.usage;
        long long rem = d.omega;
        for (int s : fill_order) {
            if (rem == 0) break;
            long long fit_mem =
                (caps.mem(d.kind) -
                 (d.kind == MemKind::Bram ? trial[s].bram : trial[s].uram)) /
                d.alloc.cascade;
            long long fit_dsp = d.dsp_per_unit > 0
                                    ? (caps.dsp - trial[s].dsp) / d.dsp_per_unit
                                    : rem;
            long long units = std::min(rem, std::max(0LL, std::min(fit_mem, fit_dsp)));
            if (units > 0) {
                place_units(trial[s], d, units);
                shares.push_back({s, static_cast<int>(units)});
                rem -= units;
            }
        }
        if (rem != 0 || shares.empty()) return std::nullopt;
        std::sort(shares.begin(), shares.end(),
                  [](const SlrShare& a, const SlrShare& b) { return a.slr < b.slr; });
        st.usage = trial;
        st.placements[i] = shares;
        for (const SlrShare& s : shares) cur = std::max(cur, s.slr);
    }
    return st;
}

Caps balanced_caps(int n_slrs, long long total_bram, long long total_uram,
                   long long total_dsp, const DeviceProfile& dev, double slack) {
    auto cap = [&](long long total, long long budget) {
        long long balanced = static_cast<long long>(
            std::ceil(static_cast<double>(total) * slack / n_slrs));
        return std::min(budget, std::max(balanced, 1LL));
    };
    return {cap(total_bram, dev.bram_blocks), cap(total_uram, dev.uram_blocks),
            cap(total_dsp, dev.dsp_slices)};
}

MappingPlan build_plan(const NetworkSpec& net, const std::vector<LayerDemand>& demands,
                       const PackState& packed, const DeviceProfile& dev) {
    MappingPlan plan;
    plan.device = dev.name;
    plan.clock_mhz = net.clock_mhz;
    int max_slr = 0;
    for (std::size_t i = 0; i < demands.size(); ++i) {
        const LayerDemand& d = demands[i];
        LayerMapping m;
        m.omega = d.omega;
        m.npu = d.npu;
        m.mem_kind = d.kind;
        m.alloc = d.alloc;
        m.cores = d.cores;
        m.dsp = d.dsp;
        m.lut = d.lut_core_per_unit * d.omega + d.lut_columns;
        m.service = d.service;
        m.splits = packed.placements[i];
        m.primary_slr = m.splits.front().slr;
        for (const SlrShare& s : m.splits) max_slr = std::max(max_slr, s.slr);
        plan.layers.push_back(std::move(m));
    }
    plan.slrs_used = max_slr + 1;
    plan.usage.assign(plan.slrs_used, {});
    for (std::size_t i = 0; i < demands.size(); ++i) {
        const LayerDemand& d = demands[i];
        for (const SlrShare& s : packed.placements[i]) {
            mem_of(plan.usage[s.slr], d.kind) += s.omega_share * d.alloc.cascade;
            plan.usage[s.slr].dsp += s.omega_share * d.dsp_per_unit;
            plan.usage[s.slr].lut += s.omega_share * d.lut_core_per_unit;
        }
        plan.usage[plan.layers[i].primary_slr].lut += d.lut_columns;
    }
    plan.pace_cycles = 0;
    for (const LayerDemand& d : demands) {
        plan.pace_cycles = std::max(plan.pace_cycles, d.service);
    }
    plan.fps = net.clock_mhz * 1e6 / static_cast<double>(plan.pace_cycles);
    return plan;
}

}  // namespace

MappingPlan assign_slrs(const NetworkSpec& net, const std::vector<LayerGeometry>& geoms,
                        const DeviceProfile& dev, const MapOptions& opts) {
    if (net.layers.empty() || net.layers.size() != geoms.size()) {
        throw MappingError("network and geometry do not line up");
    }
    const int hs = opts.handshake_cycles;
    constexpr double kBalanceSlack = 1.15;

    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        int w = net.layers[i].omega_override;
        if (w == 0) continue;
        if (!omega_achievable(w) || geoms[i].out_ch % w != 0) {
            throw MappingError("layer " + std::to_string(i) + " omega override " +
                               std::to_string(w) + " is not achievable for " +
                               std::to_string(geoms[i].out_ch) + " channels");
        }
        if (!unit_mappable(net.layers[i], geoms[i], w, dev)) {
            throw MappingError("layer " + std::to_string(i) + " omega override " +
                               std::to_string(w) +
                               " leaves a weight unit too large for one SLR");
        }
    }

    long long h0 = 0;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        int w = seeded_omega(net.layers[i], geoms[i], dev, static_cast<int>(i));
        h0 = std::max(h0, service_cycles(geoms[i], geoms[i].out_ch / w, hs));
    }

    std::vector<long long> candidates;
    bool paced_by_hint = opts.fps_hint > 0.0;
    if (paced_by_hint) {
        long long target = static_cast<long long>(
            std::floor(net.clock_mhz * 1e6 / opts.fps_hint));
        if (target < 1) {
            throw MappingError("requested throughput exceeds the clock itself");
        }
        candidates.push_back(target);
    } else {
        std::set<long long> set;
        set.insert(h0);
        for (std::size_t i = 0; i < net.layers.size(); ++i) {
            for (int w : layer_omega_choices(net.layers[i], geoms[i])) {
                if (!unit_mappable(net.layers[i], geoms[i], w, dev)) continue;
                long long s = service_cycles(geoms[i], geoms[i].out_ch / w, hs);
                if (s >= h0) set.insert(s);
            }
        }
        candidates.assign(set.begin(), set.end());
    }

    // For each SLR count, scan paces from tightest to loosest. The first pace
    // that packs is the throughput fallback; the first pace whose pack also
    // meets the balance target wins. Only when no pace packs at all does the
    // SLR count grow.
    constexpr PackPolicy kPolicies[] = {PackPolicy::Pressure, PackPolicy::MaxNorm,
                                        PackPolicy::Forward};
    for (int n = 1; n <= dev.slr_count; ++n) {
        std::optional<MappingPlan> fallback;
        for (long long pace : candidates) {
            auto profile = profile_for_pace(net, geoms, pace, dev, hs);
            if (!profile) {
                if (paced_by_hint) {
                    throw MappingError(
                        "requested throughput is unachievable: some layer cannot "
                        "reach a per-image service of " +
                        std::to_string(pace) + " cycles at any weight-unit count");
                }
                continue;
            }
            long long tb = 0, tu = 0, td = 0;
            for (const LayerDemand& d : *profile) {
                (d.kind == MemKind::Bram ? tb : tu) += d.alloc.blocks;
                td += d.dsp;
            }
            if (tb > n * dev.bram_blocks || tu > n * dev.uram_blocks ||
                td > n * dev.dsp_slices) {
                continue;
            }
            std::optional<PackState> packed;
            for (int attempt = 0; attempt < 2 && !packed; ++attempt) {
                Caps caps =
                    attempt == 0
                        ? balanced_caps(n, tb, tu, td, dev, kBalanceSlack)
                        : Caps{dev.bram_blocks, dev.uram_blocks, dev.dsp_slices};
                for (PackPolicy policy : kPolicies) {
                    packed =
                        pack_layers(*profile, n, caps, dev, opts.allow_splits, policy);
                    if (packed) break;
                }
            }
            if (!packed) continue;
            MappingPlan plan = build_plan(net, *profile, *packed, dev);
            if (usage_imbalance(packed->usage, dev) <= opts.balance_target_pp) {
                return plan;
            }
            if (!fallback) fallback = std::move(plan);
        }
        if (fallback) return *fallback;
    }

    // Report the shortfall at the most relaxed pace that is still derivable.
    std::ostringstream msg;
    msg << "device exhausted: ";
    auto profile = profile_for_pace(net, geoms, candidates.back(), dev, hs);
    if (profile) {
        long long tb = 0, tu = 0, td = 0;
        for (const LayerDemand& d : *profile) {
            (d.kind == MemKind::Bram ? tb : tu) += d.alloc.blocks;
            td += d.dsp;
        }
        const char* sep = "";
        if (tb > dev.slr_count * dev.bram_blocks) {
            msg << sep << "needs " << tb << " BRAM blocks, device has "
                << dev.slr_count * dev.bram_blocks;
            sep = "; ";
        }
        if (tu > dev.slr_count * dev.uram_blocks) {
            msg << sep << "needs " << tu << " URAM blocks, device has "
                << dev.slr_count * dev.uram_blocks;
            sep = "; ";
        }
        if (td > dev.slr_count * dev.dsp_slices) {
            msg << sep << "needs " << td << " DSP slices, device has "
                << dev.slr_count * dev.dsp_slices;
            sep = "; ";
        }
        if (*sep == '\0') {
            msg << "per-SLR packing failed even at the most relaxed pace of "
                << candidates.back() << " cycles";
        }
    } else {
        msg << "no pipeline pace admits every layer";
    }
    throw MappingError(msg.str());
}

BalanceReport balance_report(const MappingPlan& plan, const DeviceProfile& dev) {
    BalanceReport rep;
    double b_mx = -1, b_mn = 1e18, u_mx = -1, u_mn = 1e18, d_mx = -1, d_mn = 1e18;
    for (const SlrUsage& u : plan.usage) {
        double b = dev.bram_blocks ? 100.0 * u.bram / dev.bram_blocks : 0.0;
        double r = dev.uram_blocks ? 100.0 * u.uram / dev.uram_blocks : 0.0;
        double d = dev.dsp_slices ? 100.0 * u.dsp / dev.dsp_slices : 0.0;
        double l = dev.luts ? 100.0 * u.lut / dev.luts : 0.0;
        rep.bram_pct.push_back(b);
        rep.uram_pct.push_back(r);
        rep.dsp_pct.push_back(d);
        rep.lut_pct.push_back(l);
        if (slr_occupied(u)) {
            b_mx = std::max(b_mx, b), b_mn = std::min(b_mn, b);
            u_mx = std::max(u_mx, r), u_mn = std::min(u_mn, r);
            d_mx = std::max(d_mx, d), d_mn = std::min(d_mn, d);
        }
    }
    if (b_mx >= 0) {
        rep.imbalance_pp = std::max({b_mx - b_mn, u_mx - u_mn, d_mx - d_mn});
    }
    return rep;
}

nlohmann::ordered_json plan_to_json(const MappingPlan& plan) {
    nlohmann::ordered_json j;
    j["device"] = plan.device;
    j["clock_mhz"] = plan.clock_mhz;
    j["slrs_used"] = plan.slrs_used;
    j["pace_cycles"] = plan.pace_cycles;
    j["fps"] = plan.fps;
    j["layers"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < plan.layers.size(); ++i) {
        const LayerMapping& m = plan.layers[i];
        nlohmann::ordered_json lj;
        lj["index"] = i;
        lj["omega"] = m.omega;
        lj["neurons_per_unit"] = m.npu;
        lj["memory"] = m.mem_kind == MemKind::Bram ? "bram" : "uram";
        lj["bytes_per_unit"] = m.alloc.bytes_per_unit;
        lj["cascade"] = m.alloc.cascade;
        lj["blocks"] = m.alloc.blocks;
        lj["utilization"] = m.alloc.utilization;
        lj["cores"] = m.cores;
        lj["dsp"] = m.dsp;
        lj["lut"] = m.lut;
        lj["service_cycles"] = m.service;
        lj["primary_slr"] = m.primary_slr;
        lj["splits"] = nlohmann::ordered_json::array();
        for (const SlrShare& s : m.splits) {
            lj["splits"].push_back({{"slr", s.slr}, {"omega_share", s.omega_share}});
        }
        j["layers"].push_back(std::move(lj));
    }
    j["slr_usage"] = nlohmann::ordered_json::array();
    for (std::size_t s = 0; s < plan.usage.size(); ++s) {
        const SlrUsage& u = plan.usage[s];
        j["slr_usage"].push_back({{"slr", s},
                                  {"bram_blocks", u.bram},
                                  {"uram_blocks", u.uram},
                                  {"dsp", u.dsp},
                                  {"lut", u.lut}});
    }
    return j;
}

MappingPlan plan_from_json(const nlohmann::ordered_json& doc) {
    MappingPlan plan;
    try {
        plan.device = doc.at("device").get<std::string>();
        plan.clock_mhz = doc.at("clock_mhz").get<double>();
        plan.slrs_used = doc.at("slrs_used").get<int>();
        plan.pace_cycles = doc.at("pace_cycles").get<long long>();
        plan.fps = doc.at("fps").get<double>();
        for (const auto& lj : doc.at("layers")) {
            LayerMapping m;
            m.omega = lj.at("omega").get<int>();
            m.npu = lj.at("neurons_per_unit").get<int>();
            std::string mem = lj.at("memory").get<std::string>();
            if (mem != "bram" && mem != "uram") {
                throw MappingError("plan memory kind must be 'bram' or 'uram'");
            }
            m.mem_kind = mem == "bram" ? MemKind::Bram : MemKind::Uram;
            m.alloc.bytes_per_unit = lj.at("bytes_per_unit").get<long long>();
            m.alloc.cascade = lj.at("cascade").get<int>();
            m.alloc.blocks = lj.at("blocks").get<long long>();
            m.alloc.utilization = lj.at("utilization").get<double>();
            m.cores = lj.at("cores").get<long long>();
            m.dsp = lj.at("dsp").get<long long>();
            m.lut = lj.at("lut").get<long long>();
            m.service = lj.at("service_cycles").get<long long>();
            m.primary_slr = lj.at("primary_slr").get<int>();
            for (const auto& sj : lj.at("splits")) {
                m.splits.push_back(
                    {sj.at("slr").get<int>(), sj.at("omega_share").get<int>()});
            }
            if (m.splits.empty() || m.omega < 1 ||
                !omega_achievable(m.omega)) {
                throw MappingError("plan layer has an illegal omega or no placement");
            }
            plan.layers.push_back(std::move(m));
        }
        for (const auto& uj : doc.at("slr_usage")) {
            SlrUsage u;
            u.bram = uj.at("bram_blocks").get<long long>();
            u.uram = uj.at("uram_blocks").get<long long>();
            u.dsp = uj.at("dsp").get<long long>();
            u.lut = uj.at("lut").get<long long>();
            plan.usage.push_back(u);
        }
    } catch (const nlohmann::json::exception& e) {
        throw MappingError(std::string("bad mapping plan: ") + e.what());
    }
    if (plan.layers.empty()) throw MappingError("mapping plan has no layers");
    return plan;
}

}  // namespace df2
