#include "df2/report.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace df2 {

namespace {

// Steady image period of one producer/consumer pair through the two-stage
// feature buffer (one landing column plus a three-column FIFO). A consumer
// column may only start once its whole input window sits in the FIFO, and the
// FIFO cannot be topped up past three columns while the consumer computes, so
// a kernel that slides by more than one column leaves a refill gap the
// producer fills serially. That coupling can pace the pipeline above either
// layer's own service; it depends only on window geometry and the two per
// column latencies, so it is replayed here as a two-layer event recurrence
// with the producer never starved and the consumer never blocked downstream.
// g is the consumer's geometry; the producer emits g.in_cols columns per
// image. Returns the late steady gap between image starts, or 0 when the pair
// cannot make progress (then no coupling bound is claimed).
long long pair_period(const LayerGeometry& g, long long prod_cycles,
                      long long cons_cycles) {
    constexpr int kImages = 10;
    struct Col {
        int img, col;
    };
    long long now = 0;
    int pimg = 0, pcol = 0;
    bool prun = false, pdone = false;
    long long pend = 0;
    bool s1_full = false, s1_reserved = false;
    Col s1{0, 0};
    std::deque<Col> s2;
    int cimg = 0, ccol = 0;
    bool crun = false, cdone = false;
    long long cend = 0;
    long long first_start[kImages];
    std::fill(first_start, first_start + kImages, -1);

    auto window = [&g](int j, int& lo, int& hi) {
        lo = std::max(0, j * g.stride - g.pad_left);
        hi = std::min(g.in_cols - 1, j * g.stride - g.pad_left + g.kernel - 1);
    };

    while (!cdone) {
        bool changed = true;
        while (changed) {
            changed = false;
            if (s1_full) {
                bool stale = cdone || s1.img < cimg;
                if (!stale && s1.img == cimg) {
                    int lo, hi;
                    window(ccol, lo, hi);
                    stale = s1.col < lo;
                }
                if (stale) {
                    s1_full = false;
                    changed = true;
                } else if (s2.size() < 3) {
                    s2.push_back(s1);
                    s1_full = false;
                    changed = true;
                }
            }
            if (!prun && !pdone && !s1_full && !s1_reserved) {
                prun = true;
                pend = now + prod_cycles;
                s1_reserved = true;
                changed = true;
            }
            if (!crun && !cdone) {
                int lo, hi;
                window(ccol, lo, hi);
                bool ready = true;
                for (int c = lo; c <= hi && ready; ++c) {
                    bool found = false;
                    for (const Col& b : s2) {
                        if (b.img == cimg && b.col == c) {
                            found = true;
                            break;
                        }
                    }
                    ready = found;
                }
                if (ready) {
                    crun = true;
                    cend = now + cons_cycles;
                    if (ccol == 0) first_start[cimg] = now;
                    changed = true;
                }
            }
        }
        long long next = -1;
        if (prun) next = pend;
        if (crun && (next < 0 || cend < next)) next = cend;
        if (next < 0) return 0;
        now = next;
        if (prun && pend == now) {
            prun = false;
            s1_reserved = false;
            s1_full = true;
            s1 = {pimg, pcol};
            if (++pcol == g.in_cols) {
                pcol = 0;
                if (++pimg == kImages) pdone = true;
            }
        }
        if (crun && cend == now) {
            crun = false;
            if (ccol + 1 == g.out_cols) {
                while (!s2.empty() && s2.front().img == cimg) s2.pop_front();
                ccol = 0;
                if (++cimg == kImages) cdone = true;
            } else {
                int lo, hi;
                window(ccol + 1, lo, hi);
                while (!s2.empty() && s2.front().img == cimg && s2.front().col < lo) {
                    s2.pop_front();
                }
                ++ccol;
            }
        }
    }
    if (first_start[kImages - 1] < 0 || first_start[kImages - 2] < 0) return 0;
    return first_start[kImages - 1] - first_start[kImages - 2];
}

}  // namespace

AnalyticReport throughput_analytic(const NetworkSpec& net, const MappingPlan& plan) {
    AnalyticReport rep;
    rep.layers.resize(plan.layers.size());
    // Per-column latencies for the refill coupling need layer shapes. Unit
    // rigs may pass a bare plan with no matching network; they get the pure
    // service model.
    std::vector<LayerGeometry> geoms;
    if (!net.layers.empty() && net.layers.size() == plan.layers.size()) {
        geoms = infer_geometry(net);
    }
    for (std::size_t i = 0; i < plan.layers.size(); ++i) {
        AnalyticLayer& a = rep.layers[i];
        a.service = plan.layers[i].service;
        a.fps = net.clock_mhz * 1e6 / static_cast<double>(a.service);
        a.effective = a.service;
        if (!geoms.empty() && i > 0 &&
            net.layers[i].kind != LayerKind::FullyConnected) {
            long long prod_service = plan.layers[i - 1].service;
            int prod_cols = geoms[i - 1].out_cols;
            long long cons_service = a.service;
            int cons_cols = geoms[i].out_cols;
            // services are whole columns by construction; a hand-built plan
            // that breaks that gets no coupling bound
            if (prod_cols > 0 && cons_cols > 0 && prod_service % prod_cols == 0 &&
                cons_service % cons_cols == 0) {
                long long coupled = pair_period(geoms[i], prod_service / prod_cols,
                                                cons_service / cons_cols);
                a.effective = std::max(a.effective, coupled);
            }
        }
        rep.pace_cycles = std::max(rep.pace_cycles, a.effective);
    }
    // A layer is backpressured when anything downstream is slower: its spike
    // stream must wait on the consumer regardless of its own service rate.
    long long tail_max = 0;
    for (std::size_t i = plan.layers.size(); i-- > 0;) {
        rep.layers[i].backpressured = tail_max > rep.layers[i].service;
        tail_max = std::max(tail_max, rep.layers[i].service);
    }
    for (std::size_t i = 0; i < rep.layers.size(); ++i) {
        if (rep.layers[i].effective == rep.pace_cycles) {
            rep.bottleneck_layer = static_cast<int>(i);
            break;
        }
    }
    rep.fps = net.clock_mhz * 1e6 / static_cast<double>(rep.pace_cycles);
    return rep;
}

std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ULL;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t file_fnv1a64(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return 0;
    std::vector<char> buf((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
    return fnv1a64(buf.data(), buf.size());
}

namespace {

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

nlohmann::ordered_json manifest_to_json(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["command"] = m.command;
    j["tool_version"] = m.tool_version;
    j["device"] = m.device;
    if (!m.config_path.empty()) {
        j["config_path"] = m.config_path;
        j["config_fnv1a64"] = hex64(m.config_hash);
    }
    if (!m.params_path.empty()) {
        j["params_path"] = m.params_path;
        j["params_fnv1a64"] = hex64(m.params_hash);
    }
    if (m.has_seed) j["seed"] = m.seed;
    return j;
}

void atomic_write_file(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw std::runtime_error("short write to '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("cannot rename '" + tmp + "' to '" + path + "'");
    }
}

namespace {

nlohmann::ordered_json network_json(const NetworkSpec& net) {
    nlohmann::ordered_json j;
    j["name"] = net.name;
    j["input"] = {{"height", net.input.height},
                  {"width", net.input.width},
                  {"channels", net.input.channels}};
    j["clock_mhz"] = net.clock_mhz;
    nlohmann::ordered_json layers = nlohmann::ordered_json::array();
    for (const LayerSpec& l : net.layers) layers.push_back(print_layer_notation(l));
    j["layers"] = layers;
    return j;
}

}  // namespace

nlohmann::ordered_json plan_report_json(const NetworkSpec& net,
                                        const std::vector<LayerGeometry>& geoms,
                                        const MappingPlan& plan,
                                        const DeviceProfile& dev,
                                        const RunManifest& manifest) {
    nlohmann::ordered_json j;
    j["manifest"] = manifest_to_json(manifest);
    j["network"] = network_json(net);

    nlohmann::ordered_json gj = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < geoms.size(); ++i) {
        const LayerGeometry& g = geoms[i];
        nlohmann::ordered_json e;
        e["index"] = i;
        e["in"] = std::to_string(g.in_rows) + "x" + std::to_string(g.in_cols) + "x" +
                  std::to_string(g.in_ch);
        e["out"] = std::to_string(g.out_rows) + "x" + std::to_string(g.out_cols) + "x" +
                   std::to_string(g.out_ch);
        e["fan_in"] = g.fan_in;
        e["beats_per_neuron"] = g.beats_per_neuron;
        gj.push_back(std::move(e));
    }
    j["geometry"] = gj;
    j["plan"] = plan_to_json(plan);

    BalanceReport bal = balance_report(plan, dev);
    nlohmann::ordered_json bj;
    bj["bram_pct"] = bal.bram_pct;
    bj["uram_pct"] = bal.uram_pct;
    bj["dsp_pct"] = bal.dsp_pct;
    bj["lut_pct"] = bal.lut_pct;
    bj["imbalance_pp"] = bal.imbalance_pp;
    j["balance"] = bj;
    return j;
}

nlohmann::ordered_json sim_report_json(const NetworkSpec& net, const MappingPlan& plan,
                                       const SimReport& sim,
                                       const RunManifest& manifest) {
    (void)plan;
    nlohmann::ordered_json j;
    j["manifest"] = manifest_to_json(manifest);
    j["network"] = network_json(net);

    nlohmann::ordered_json s;
    s["images"] = sim.completion_cycles.size();
    s["total_cycles"] = sim.total_cycles;
    s["fill_latency_cycles"] = sim.fill_latency_cycles;
    s["steady_cycles_per_image"] = sim.steady_cycles_per_image;
    s["fps"] = sim.fps;
    s["bottleneck_layer"] = sim.bottleneck_layer;
    s["completion_cycles"] = sim.completion_cycles;
    s["predicted_class"] = sim.predicted_class;

    nlohmann::ordered_json lj = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < sim.layers.size(); ++i) {
        const LayerActivity& a = sim.layers[i];
        nlohmann::ordered_json e;
        e["index"] = i;
        e["service_cycles"] = a.service;
        e["delivery_offset"] = a.delivery_offset;
        e["busy"] = a.busy;
        e["stalled"] = a.stalled;
        e["idle"] = a.idle;
        e["busy_win"] = a.busy_win;
        e["stalled_win"] = a.stalled_win;
        e["idle_win"] = a.idle_win;
        lj.push_back(std::move(e));
    }
    s["layers"] = lj;

    nlohmann::ordered_json pots = nlohmann::ordered_json::array();
    for (const auto& p : sim.final_potentials) pots.push_back(p);
    s["final_potentials"] = pots;
    j["sim"] = s;
    return j;
}

nlohmann::ordered_json analytic_report_json(const NetworkSpec& net,
                                            const MappingPlan& plan,
                                            const AnalyticReport& rep,
                                            const RunManifest& manifest) {
    (void)plan;
    nlohmann::ordered_json j;
    j["manifest"] = manifest_to_json(manifest);
    j["network"] = network_json(net);

    nlohmann::ordered_json a;
    a["pace_cycles"] = rep.pace_cycles;
    a["fps"] = rep.fps;
    a["bottleneck_layer"] = rep.bottleneck_layer;
    nlohmann::ordered_json lj = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < rep.layers.size(); ++i) {
        nlohmann::ordered_json e;
        e["index"] = i;
        e["service_cycles"] = rep.layers[i].service;
        e["effective_cycles"] = rep.layers[i].effective;
        e["fps"] = rep.layers[i].fps;
        e["backpressured"] = rep.layers[i].backpressured;
        lj.push_back(std::move(e));
    }
    a["layers"] = lj;
    j["analytic"] = a;
    return j;
}

namespace {

std::string csv_plan(const nlohmann::ordered_json& plan) {
    std::ostringstream out;
    out << "layer,omega,npu,memory,cascade,blocks,utilization,cores,dsp,lut,"
           "service_cycles,primary_slr\n";
    for (const auto& l : plan.at("layers")) {
        out << l.at("index").get<long long>() << ',' << l.at("omega").get<long long>()
            << ',' << l.at("neurons_per_unit").get<long long>() << ','
            << l.at("memory").get<std::string>() << ','
            << l.at("cascade").get<long long>() << ',' << l.at("blocks").get<long long>()
            << ',' << l.at("utilization").get<double>() << ','
            << l.at("cores").get<long long>() << ',' << l.at("dsp").get<long long>()
            << ',' << l.at("lut").get<long long>() << ','
            << l.at("service_cycles").get<long long>() << ','
            << l.at("primary_slr").get<long long>() << '\n';
    }
    return out.str();
}

std::string csv_sim(const nlohmann::ordered_json& sim) {
    std::ostringstream out;
    out << "layer,service_cycles,delivery_offset,busy,stalled,idle,busy_win,"
           "stalled_win,idle_win\n";
    for (const auto& l : sim.at("layers")) {
        out << l.at("index").get<long long>() << ','
            << l.at("service_cycles").get<long long>() << ','
            << l.at("delivery_offset").get<long long>() << ','
            << l.at("busy").get<long long>() << ',' << l.at("stalled").get<long long>()
            << ',' << l.at("idle").get<long long>() << ','
            << l.at("busy_win").get<long long>() << ','
            << l.at("stalled_win").get<long long>() << ','
            << l.at("idle_win").get<long long>() << '\n';
    }
    return out.str();
}

std::string csv_analytic(const nlohmann::ordered_json& a) {
    std::ostringstream out;
    out << "layer,service_cycles,effective_cycles,fps,backpressured\n";
    for (const auto& l : a.at("layers")) {
        out << l.at("index").get<long long>() << ','
            << l.at("service_cycles").get<long long>() << ','
            << l.at("effective_cycles").get<long long>() << ','
            << l.at("fps").get<double>() << ','
            << (l.at("backpressured").get<bool>() ? 1 : 0) << '\n';
    }
    return out.str();
}

}  // namespace

std::string report_to_csv(const nlohmann::ordered_json& report) {
    if (report.contains("sim")) return csv_sim(report.at("sim"));
    if (report.contains("analytic")) return csv_analytic(report.at("analytic"));
    if (report.contains("plan")) return csv_plan(report.at("plan"));
    throw std::runtime_error("report has no layer table to export");
}

std::string report_to_text(const nlohmann::ordered_json& report) {
    std::ostringstream out;
    out << std::fixed;
    if (report.contains("manifest")) {
        const auto& m = report.at("manifest");
        out << "command: " << m.at("command").get<std::string>() << "  device: "
            << m.at("device").get<std::string>() << "  version: "
            << m.at("tool_version").get<std::string>() << "\n";
    }
    if (report.contains("network")) {
        const auto& n = report.at("network");
        out << "network: " << n.at("name").get<std::string>() << "  clock: "
            << std::setprecision(1) << n.at("clock_mhz").get<double>() << " MHz\n";
    }
    if (report.contains("plan")) {
        const auto& p = report.at("plan");
        out << "slrs_used: " << p.at("slrs_used").get<int>() << "  pace: "
            << p.at("pace_cycles").get<long long>() << " cycles  fps: "
            << std::setprecision(1) << p.at("fps").get<double>() << "\n";
        out << csv_plan(p);
    }
    if (report.contains("sim")) {
        const auto& s = report.at("sim");
        out << "images: " << s.at("images").get<long long>() << "  total: "
            << s.at("total_cycles").get<long long>() << " cycles  fill: "
            << s.at("fill_latency_cycles").get<long long>() << "  steady: "
            << s.at("steady_cycles_per_image").get<long long>() << "  fps: "
            << std::setprecision(1) << s.at("fps").get<double>()
            << "  bottleneck: layer " << s.at("bottleneck_layer").get<int>() << "\n";
        out << csv_sim(s);
    }
    if (report.contains("analytic")) {
        const auto& a = report.at("analytic");
        out << "pace: " << a.at("pace_cycles").get<long long>() << " cycles  fps: "
            << std::setprecision(1) << a.at("fps").get<double>()
            << "  bottleneck: layer " << a.at("bottleneck_layer").get<int>() << "\n";
        out << csv_analytic(a);
    }
    return out.str();
}

}  // namespace df2
