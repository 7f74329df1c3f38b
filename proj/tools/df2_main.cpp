#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "df2/images_io.hpp"
#include "df2/mapper.hpp"
#include "df2/netspec.hpp"
#include "df2/oracle.hpp"
#include "df2/params_io.hpp"
#include "df2/pipesim.hpp"
#include "df2/quantizer.hpp"
#include "df2/report.hpp"
#include "df2/version.hpp"

namespace {

using nlohmann::ordered_json;

struct CommonArgs {
    std::string config_path;
    std::string device;
    double clock_mhz = 0.0;
    std::vector<std::string> omega;  // "LAYER=N"
    std::string format = "json";
    std::string out_path;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_format = true) {
    cmd->add_option("config", args.config_path, "network config JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--device", args.device,
                    "device profile: a name resolved via DF2_PROFILE_DIR, a JSON "
                    "path, or the built-in vu9p-3slr");
    cmd->add_option("--clock-mhz", args.clock_mhz, "override the config clock");
    cmd->add_option("--omega", args.omega,
                    "force a layer's weight unit count, LAYER=N (repeatable)");
    if (with_format) {
        cmd->add_option("--format", args.format, "output format")
            ->check(CLI::IsMember({"json", "csv", "text"}));
        cmd->add_option("--out", args.out_path, "write the report here (atomic)");
    }
}

struct Loaded {
    df2::NetworkSpec net;
    std::vector<df2::LayerGeometry> geoms;
    df2::DeviceProfile dev;
};

Loaded load_all(const CommonArgs& args) {
    Loaded l;
    l.net = df2::load_network_json(args.config_path);
    if (args.clock_mhz > 0.0) l.net.clock_mhz = args.clock_mhz;

    if (!args.device.empty()) {
        l.dev = df2::load_device_profile(args.device);
    } else if (!l.net.device_json.empty()) {
        l.dev = df2::device_profile_from_json(
            ordered_json::parse(l.net.device_json));
    } else if (!l.net.device_name.empty()) {
        l.dev = df2::load_device_profile(l.net.device_name);
    }  // else: built-in default profile

    for (const std::string& ov : args.omega) {
        std::size_t eq = ov.find('=');
        if (eq == std::string::npos) {
            throw df2::ValidationError("--omega expects LAYER=N, got '" + ov + "'");
        }
        int layer = std::stoi(ov.substr(0, eq));
        int value = std::stoi(ov.substr(eq + 1));
        if (layer < 0 || layer >= static_cast<int>(l.net.layers.size())) {
            throw df2::ValidationError("--omega layer " + std::to_string(layer) +
                                       " is out of range");
        }
        l.net.layers[layer].omega_override = value;
    }

    std::vector<df2::Diagnostic> diags = df2::validate_network(l.net);
    for (const df2::Diagnostic& d : diags) {
        if (d.is_error) {
            std::string where =
                d.layer >= 0 ? "layer " + std::to_string(d.layer) + ": " : "";
            throw df2::ValidationError(where + d.message);
        }
    }
    l.geoms = df2::infer_geometry(l.net);
    return l;
}

df2::RunManifest make_manifest(const std::string& command, const CommonArgs& args,
                               const df2::DeviceProfile& dev) {
    df2::RunManifest m;
    m.command = command;
    m.tool_version = df2::kToolVersion;
    m.config_path = args.config_path;
    m.config_hash = df2::file_fnv1a64(args.config_path);
    m.device = dev.name;
    return m;
}

void emit(const CommonArgs& args, const ordered_json& doc) {
    std::string text;
    if (args.format == "json") {
        text = doc.dump(2) + "\n";
    } else if (args.format == "csv") {
        text = df2::report_to_csv(doc);
    } else {
        text = df2::report_to_text(doc);
    }
    if (args.out_path.empty()) {
        std::cout << text;
    } else {
        df2::atomic_write_file(args.out_path, text);
    }
}

// --float-params JSON: {"layers": [{"weights": [...], "bn": [{...}]}]}.
// "bn" may be one object applied to every channel.
df2::FloatModel load_float_model(const std::string& path,
                                 const std::vector<df2::LayerGeometry>& geoms) {
    std::ifstream in(path);
    if (!in) throw df2::QuantError("cannot open float params '" + path + "'");
    ordered_json doc = ordered_json::parse(in);
    const auto& layers = doc.at("layers");
    if (layers.size() != geoms.size()) {
        throw df2::QuantError("float params hold " + std::to_string(layers.size()) +
                              " layers, network has " + std::to_string(geoms.size()));
    }
    df2::FloatModel model;
    model.layers.resize(geoms.size());
    for (std::size_t i = 0; i < geoms.size(); ++i) {
        const auto& lj = layers.at(i);
        df2::FloatLayer& fl = model.layers[i];
        fl.out_channels = geoms[i].out_ch;
        fl.fan_in = geoms[i].fan_in;
        fl.weights = lj.at("weights").get<std::vector<float>>();
        auto read_bn = [](const ordered_json& bj) {
            df2::BatchNorm bn;
            bn.gamma = bj.value("gamma", 1.0);
            bn.beta = bj.value("beta", 0.0);
            bn.mu = bj.value("mu", 0.0);
            bn.sigma = bj.value("sigma", 1.0);
            return bn;
        };
        fl.bn.assign(geoms[i].out_ch, df2::BatchNorm{});
        if (lj.contains("bn")) {
            const auto& bj = lj.at("bn");
            if (bj.is_array()) {
                if (bj.size() != static_cast<std::size_t>(geoms[i].out_ch)) {
                    throw df2::QuantError("layer " + std::to_string(i) +
                                          " bn array does not match out_channels");
                }
                for (int ch = 0; ch < geoms[i].out_ch; ++ch) {
                    fl.bn[ch] = read_bn(bj.at(ch));
                }
            } else {
                std::fill(fl.bn.begin(), fl.bn.end(), read_bn(bj));
            }
        }
    }
    return model;
}

df2::MappingPlan plan_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw df2::MappingError("cannot open plan '" + path + "'");
    ordered_json doc = ordered_json::parse(in);
    // accept either a bare plan or a full map report
    if (doc.contains("plan")) return df2::plan_from_json(doc.at("plan"));
    return df2::plan_from_json(doc);
}

int cmd_check(const CommonArgs& args) {
    df2::NetworkSpec net = df2::load_network_json(args.config_path);
    if (args.clock_mhz > 0.0) net.clock_mhz = args.clock_mhz;
    std::vector<df2::Diagnostic> diags = df2::validate_network(net);
    bool bad = false;
    for (const df2::Diagnostic& d : diags) {
        std::string where = d.layer >= 0 ? "layer " + std::to_string(d.layer) + ": " : "";
        std::cerr << (d.is_error ? "error: " : "warning: ") << where << d.message << "\n";
        bad = bad || d.is_error;
    }
    if (bad) return 1;

    std::vector<df2::LayerGeometry> geoms = df2::infer_geometry(net);
    ordered_json doc;
    doc["name"] = net.name;
    doc["clock_mhz"] = net.clock_mhz;
    doc["layers"] = ordered_json::array();
    long long params = 0;
    for (std::size_t i = 0; i < geoms.size(); ++i) {
        const df2::LayerGeometry& g = geoms[i];
        ordered_json e;
        e["index"] = i;
        e["notation"] = net.layers[i].notation.empty()
                            ? df2::print_layer_notation(net.layers[i])
                            : net.layers[i].notation;
        e["in"] = std::to_string(g.in_rows) + "x" + std::to_string(g.in_cols) + "x" +
                  std::to_string(g.in_ch);
        e["out"] = std::to_string(g.out_rows) + "x" + std::to_string(g.out_cols) + "x" +
                   std::to_string(g.out_ch);
        e["fan_in"] = g.fan_in;
        e["beats_per_neuron"] = g.beats_per_neuron;
        doc["layers"].push_back(e);
        params += static_cast<long long>(g.out_ch) * g.fan_in;
    }
    doc["parameters"] = params;
    doc["macs_per_image"] = df2::count_macs(geoms);
    std::cout << doc.dump(2) << "\n";
    return 0;
}

int cmd_map(const CommonArgs& args, double fps_hint, bool no_splits) {
    Loaded l = load_all(args);
    df2::MapOptions opts;
    opts.fps_hint = fps_hint;
    opts.allow_splits = !no_splits;
    df2::MappingPlan plan = df2::assign_slrs(l.net, l.geoms, l.dev, opts);
    ordered_json doc = df2::plan_report_json(l.net, l.geoms, plan, l.dev,
                                             make_manifest("map", args, l.dev));
    emit(args, doc);
    return 0;
}

int cmd_quantize(const CommonArgs& args, const std::string& float_params,
                 std::optional<std::uint64_t> seed, const std::string& plan_path,
                 const std::string& params_out) {
    Loaded l = load_all(args);
    df2::FloatModel fm;
    if (!float_params.empty()) {
        fm = load_float_model(float_params, l.geoms);
    } else if (seed) {
        fm = df2::random_float_model(*seed, l.geoms);
    } else {
        throw df2::QuantError("quantize needs --float-params or --seed");
    }
    df2::QuantModel qm = df2::quantize_model(fm, l.geoms);

    df2::MappingPlan plan = plan_path.empty() ? df2::assign_slrs(l.net, l.geoms, l.dev)
                                              : plan_from_file(plan_path);
    std::vector<int> omegas;
    for (const df2::LayerMapping& m : plan.layers) omegas.push_back(m.omega);
    df2::write_params_file(params_out, qm, omegas);

    df2::RunManifest man = make_manifest("quantize", args, l.dev);
    if (!float_params.empty()) {
        man.params_path = float_params;
        man.params_hash = df2::file_fnv1a64(float_params);
    }
    if (seed) {
        man.seed = *seed;
        man.has_seed = true;
    }
    ordered_json doc;
    doc["manifest"] = df2::manifest_to_json(man);
    doc["params"] = ordered_json::object();
    doc["params"]["path"] = params_out;
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(df2::file_fnv1a64(params_out)));
    doc["params"]["fnv1a64"] = hex;
    doc["params"]["layers"] = ordered_json::array();
    for (std::size_t i = 0; i < qm.layers.size(); ++i) {
        ordered_json e;
        e["index"] = i;
        e["omega"] = omegas[i];
        e["beats"] = qm.layers[i].beats;
        e["scale"] = qm.layers[i].scale;
        doc["params"]["layers"].push_back(e);
    }
    std::cout << doc.dump(2) << "\n";
    return 0;
}

struct SimArgs {
    std::string params_path;
    std::optional<std::uint64_t> seed;
    std::string images_path;
    std::string plan_path;
    int limit = 0;
    std::string trace_path;
};

struct SimBundle {
    df2::MappingPlan plan;
    df2::QuantModel model;
    std::vector<df2::ImageU8> images;
    df2::RunManifest manifest;
};

SimBundle prepare_sim(const std::string& command, const CommonArgs& args,
                      const SimArgs& sim, Loaded& l) {
    SimBundle b;
    if (!sim.plan_path.empty() && !args.omega.empty()) {
        throw df2::MappingError("--omega changes the plan; drop --plan to recompute");
    }
    b.plan = sim.plan_path.empty() ? df2::assign_slrs(l.net, l.geoms, l.dev)
                                   : plan_from_file(sim.plan_path);

    if (!sim.params_path.empty()) {
        df2::LoadedParams lp = df2::read_params_file(sim.params_path);
        if (lp.model.layers.size() != l.net.layers.size()) {
            throw df2::ParamsIoError("parameter file holds " +
                                     std::to_string(lp.model.layers.size()) +
                                     " layers, network has " +
                                     std::to_string(l.net.layers.size()));
        }
        for (std::size_t i = 0; i < lp.omegas.size(); ++i) {
            if (lp.omegas[i] != b.plan.layers[i].omega) {
                throw df2::ParamsIoError(
                    "parameter file was packed for omega " +
                    std::to_string(lp.omegas[i]) + " at layer " + std::to_string(i) +
                    ", the plan says " + std::to_string(b.plan.layers[i].omega) +
                    "; re-run quantize against this plan");
            }
        }
        b.model = std::move(lp.model);
    } else if (sim.seed) {
        b.model = df2::quantize_model(df2::random_float_model(*sim.seed, l.geoms),
                                      l.geoms);
    } else {
        throw df2::QuantError(command + " needs --params or --seed");
    }

    if (!sim.images_path.empty()) {
        b.images = df2::load_images(sim.images_path, l.net.input);
    } else {
        int count = sim.limit > 0 ? sim.limit : 1;
        b.images = df2::random_images(sim.seed.value_or(0), l.net.input, count);
    }

    b.manifest = make_manifest(command, args, l.dev);
    if (!sim.params_path.empty()) {
        b.manifest.params_path = sim.params_path;
        b.manifest.params_hash = df2::file_fnv1a64(sim.params_path);
    }
    if (sim.seed) {
        b.manifest.seed = *sim.seed;
        b.manifest.has_seed = true;
    }
    return b;
}

int cmd_sim(const CommonArgs& args, const SimArgs& sim) {
    Loaded l = load_all(args);
    SimBundle b = prepare_sim("sim", args, sim, l);
    df2::SimOptions opts;
    opts.limit_images = sim.limit;
    opts.trace_path = sim.trace_path;
    df2::SimReport rep = df2::simulate(l.net, l.geoms, b.plan, b.model, b.images, opts);
    emit(args, df2::sim_report_json(l.net, b.plan, rep, b.manifest));
    return 0;
}

int cmd_report(const CommonArgs& args, const SimArgs& sim) {
    Loaded l = load_all(args);
    bool with_sim = !sim.params_path.empty() || sim.seed || !sim.images_path.empty();

    df2::MappingPlan plan;
    df2::RunManifest man;
    ordered_json doc;
    if (with_sim) {
        SimBundle b = prepare_sim("report", args, sim, l);
        df2::SimOptions opts;
        opts.limit_images = sim.limit;
        opts.trace_path = sim.trace_path;
        df2::SimReport rep =
            df2::simulate(l.net, l.geoms, b.plan, b.model, b.images, opts);
        df2::AnalyticReport ana = df2::throughput_analytic(l.net, b.plan);
        doc = df2::analytic_report_json(l.net, b.plan, ana, b.manifest);
        doc["sim"] = df2::sim_report_json(l.net, b.plan, rep, b.manifest).at("sim");
    } else {
        plan = sim.plan_path.empty() ? df2::assign_slrs(l.net, l.geoms, l.dev)
                                     : plan_from_file(sim.plan_path);
        man = make_manifest("report", args, l.dev);
        df2::AnalyticReport ana = df2::throughput_analytic(l.net, plan);
        doc = df2::analytic_report_json(l.net, plan, ana, man);
    }
    emit(args, doc);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"DeepFire2 mapping compiler and pipeline simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", df2::kToolVersion);

    CommonArgs check_args, map_args, quant_args, sim_args_c, rep_args_c;

    CLI::App* check = app.add_subcommand("check", "validate a network config");
    add_common(check, check_args, false);

    CLI::App* map = app.add_subcommand("map", "map a network onto the device");
    add_common(map, map_args);
    double fps_hint = 0.0;
    bool no_splits = false;
    map->add_option("--fps-hint", fps_hint, "pace the pipeline for this throughput");
    map->add_flag("--no-splits", no_splits, "forbid splitting a layer across SLRs");

    CLI::App* quant = app.add_subcommand("quantize", "fold and pack parameters");
    add_common(quant, quant_args, false);
    std::string float_params, quant_plan, params_out = "params.df2p";
    std::optional<std::uint64_t> quant_seed;
    std::uint64_t quant_seed_raw = 0;
    quant->add_option("--float-params", float_params, "float training artifacts JSON")
        ->check(CLI::ExistingFile);
    auto* qs = quant->add_option("--seed", quant_seed_raw, "random float params");
    quant->add_option("--plan", quant_plan, "reuse a mapping plan JSON")
        ->check(CLI::ExistingFile);
    quant->add_option("--out", params_out, "output parameter file (DF2P)");

    auto add_sim_args = [](CLI::App* cmd, SimArgs& s, std::uint64_t& seed_raw) {
        cmd->add_option("--params", s.params_path, "DF2P parameter file")
            ->check(CLI::ExistingFile);
        auto* opt = cmd->add_option("--seed", seed_raw,
                                    "derive params (and images when --images is "
                                    "absent) from this seed");
        cmd->add_option("--images", s.images_path, "input images, .npy or raw")
            ->check(CLI::ExistingFile);
        cmd->add_option("--plan", s.plan_path, "reuse a mapping plan JSON")
            ->check(CLI::ExistingFile);
        cmd->add_option("--limit", s.limit, "simulate at most this many images");
        cmd->add_option("--trace", s.trace_path, "write a state transition CSV");
        return opt;
    };

    CLI::App* simc = app.add_subcommand("sim", "simulate the mapped pipeline");
    add_common(simc, sim_args_c);
    SimArgs sim_args;
    std::uint64_t sim_seed_raw = 0;
    auto* ss = add_sim_args(simc, sim_args, sim_seed_raw);

    CLI::App* repc = app.add_subcommand("report", "throughput report from the "
                                                  "analytic model, plus a sim "
                                                  "section when params are given");
    add_common(repc, rep_args_c);
    SimArgs rep_sim_args;
    std::uint64_t rep_seed_raw = 0;
    auto* rs = add_sim_args(repc, rep_sim_args, rep_seed_raw);

    CLI11_PARSE(app, argc, argv);

    if (qs->count() > 0) quant_seed = quant_seed_raw;
    if (ss->count() > 0) sim_args.seed = sim_seed_raw;
    if (rs->count() > 0) rep_sim_args.seed = rep_seed_raw;

    try {
        if (check->parsed()) return cmd_check(check_args);
        if (map->parsed()) return cmd_map(map_args, fps_hint, no_splits);
        if (quant->parsed()) {
            return cmd_quantize(quant_args, float_params, quant_seed, quant_plan,
                                params_out);
        }
        if (simc->parsed()) return cmd_sim(sim_args_c, sim_args);
        if (repc->parsed()) return cmd_report(rep_args_c, rep_sim_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
