#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "df2/images_io.hpp"
#include "df2/mapper.hpp"
#include "df2/netspec.hpp"
#include "df2/oracle.hpp"
#include "df2/params_io.hpp"
#include "df2/pipesim.hpp"
#include "df2/quantizer.hpp"
#include "df2/report.hpp"
#include "df2/version.hpp"

namespace py = pybind11;
using nlohmann::ordered_json;

namespace {

struct Ctx {
    df2::NetworkSpec net;
    std::vector<df2::LayerGeometry> geoms;
    df2::DeviceProfile dev;
};

Ctx make_ctx(const std::string& config_text, const std::string& device,
             double clock_mhz) {
    Ctx c;
    c.net = df2::parse_network_json_text(config_text);
    if (clock_mhz > 0.0) c.net.clock_mhz = clock_mhz;
    if (!device.empty()) {
        c.dev = df2::load_device_profile(device);
    } else if (!c.net.device_json.empty()) {
        c.dev = df2::device_profile_from_json(ordered_json::parse(c.net.device_json));
    } else if (!c.net.device_name.empty()) {
        c.dev = df2::load_device_profile(c.net.device_name);
    }
    for (const df2::Diagnostic& d : df2::validate_network(c.net)) {
        if (d.is_error) {
            std::string where =
                d.layer >= 0 ? "layer " + std::to_string(d.layer) + ": " : "";
            throw df2::ValidationError(where + d.message);
        }
    }
    c.geoms = df2::infer_geometry(c.net);
    return c;
}

df2::RunManifest py_manifest(const std::string& command, const Ctx& c) {
    df2::RunManifest m;
    m.command = command;
    m.tool_version = df2::kToolVersion;
    m.device = c.dev.name;
    return m;
}

std::string py_check(const std::string& config_text) {
    df2::NetworkSpec net = df2::parse_network_json_text(config_text);
    ordered_json doc;
    doc["diagnostics"] = ordered_json::array();
    bool bad = false;
    for (const df2::Diagnostic& d : df2::validate_network(net)) {
        doc["diagnostics"].push_back({{"error", d.is_error},
                                      {"layer", d.layer},
                                      {"message", d.message}});
        bad = bad || d.is_error;
    }
    doc["valid"] = !bad;
    if (!bad) {
        std::vector<df2::LayerGeometry> geoms = df2::infer_geometry(net);
        doc["macs_per_image"] = df2::count_macs(geoms);
        doc["layers"] = ordered_json::array();
        for (std::size_t i = 0; i < geoms.size(); ++i) {
            const df2::LayerGeometry& g = geoms[i];
            doc["layers"].push_back(
                {{"index", i},
                 {"out", {g.out_rows, g.out_cols, g.out_ch}},
                 {"fan_in", g.fan_in},
                 {"beats_per_neuron", g.beats_per_neuron}});
        }
    }
    return doc.dump();
}

std::string py_map(const std::string& config_text, const std::string& device,
                   double clock_mhz, double fps_hint, bool allow_splits) {
    Ctx c = make_ctx(config_text, device, clock_mhz);
    df2::MapOptions opts;
    opts.fps_hint = fps_hint;
    opts.allow_splits = allow_splits;
    df2::MappingPlan plan = df2::assign_slrs(c.net, c.geoms, c.dev, opts);
    return df2::plan_report_json(c.net, c.geoms, plan, c.dev, py_manifest("map", c))
        .dump();
}

py::bytes py_quantize(const std::string& config_text, std::uint64_t seed,
                      const std::string& device, double clock_mhz) {
    Ctx c = make_ctx(config_text, device, clock_mhz);
    df2::QuantModel qm =
        df2::quantize_model(df2::random_float_model(seed, c.geoms), c.geoms);
    df2::MappingPlan plan = df2::assign_slrs(c.net, c.geoms, c.dev);
    std::vector<int> omegas;
    for (const df2::LayerMapping& m : plan.layers) omegas.push_back(m.omega);
    std::vector<std::uint8_t> bytes = df2::serialize_params(qm, omegas);
    return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

std::vector<df2::ImageU8> images_from_bytes(const py::bytes& raw,
                                            const df2::InputShape& shape) {
    std::string buf = raw;
    std::size_t per =
        static_cast<std::size_t>(shape.height) * shape.width * shape.channels;
    if (buf.empty() || buf.size() % per != 0) {
        throw df2::ImagesIoError("image bytes must hold whole frames of " +
                                 std::to_string(per) + " bytes");
    }
    std::vector<df2::ImageU8> out;
    for (std::size_t off = 0; off < buf.size(); off += per) {
        df2::ImageU8 im;
        im.rows = shape.height;
        im.cols = shape.width;
        im.channels = shape.channels;
        im.data.assign(buf.begin() + off, buf.begin() + off + per);
        out.push_back(std::move(im));
    }
    return out;
}

std::string py_simulate(const std::string& config_text, std::uint64_t seed,
                        const py::object& images, int limit,
                        const std::string& device, double clock_mhz) {
    Ctx c = make_ctx(config_text, device, clock_mhz);
    df2::MappingPlan plan = df2::assign_slrs(c.net, c.geoms, c.dev);
    df2::QuantModel qm =
        df2::quantize_model(df2::random_float_model(seed, c.geoms), c.geoms);
    std::vector<df2::ImageU8> imgs;
    if (images.is_none()) {
        imgs = df2::random_images(seed, c.net.input, limit > 0 ? limit : 1);
    } else {
        imgs = images_from_bytes(images.cast<py::bytes>(), c.net.input);
    }
    df2::SimOptions opts;
    opts.limit_images = limit;
    df2::SimReport rep = df2::simulate(c.net, c.geoms, plan, qm, imgs, opts);
    df2::RunManifest man = py_manifest("sim", c);
    man.seed = seed;
    man.has_seed = true;
    return df2::sim_report_json(c.net, plan, rep, man).dump();
}

std::string py_reference(const std::string& config_text, std::uint64_t seed,
                         const py::object& image, const std::string& device,
                         double clock_mhz) {
    Ctx c = make_ctx(config_text, device, clock_mhz);
    df2::QuantModel qm =
        df2::quantize_model(df2::random_float_model(seed, c.geoms), c.geoms);
    df2::ImageU8 im;
    if (image.is_none()) {
        im = df2::random_images(seed, c.net.input, 1).front();
    } else {
        im = images_from_bytes(image.cast<py::bytes>(), c.net.input).front();
    }
    df2::OracleResult r = df2::reference_inference(c.net, c.geoms, qm, im);
    ordered_json doc;
    doc["predicted_class"] = r.predicted_class;
    doc["final_potentials"] = r.final_potentials;
    return doc.dump();
}

std::string py_analytic(const std::string& config_text, const std::string& device,
                        double clock_mhz) {
    Ctx c = make_ctx(config_text, device, clock_mhz);
    df2::MappingPlan plan = df2::assign_slrs(c.net, c.geoms, c.dev);
    df2::AnalyticReport rep = df2::throughput_analytic(c.net, plan);
    return df2::analytic_report_json(c.net, plan, rep, py_manifest("report", c)).dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "DeepFire2 mapping compiler and pipeline simulator";
    m.attr("__version__") = df2::kToolVersion;

    m.def("check", &py_check, py::arg("config"),
          "Validate a network config; returns a JSON string.");
    m.def("map", &py_map, py::arg("config"), py::arg("device") = "",
          py::arg("clock_mhz") = 0.0, py::arg("fps_hint") = 0.0,
          py::arg("allow_splits") = true,
          "Map the network onto the device; returns a plan report JSON string.");
    m.def("quantize", &py_quantize, py::arg("config"), py::arg("seed"),
          py::arg("device") = "", py::arg("clock_mhz") = 0.0,
          "Quantize a seeded random float model; returns DF2P bytes.");
    m.def("simulate", &py_simulate, py::arg("config"), py::arg("seed"),
          py::arg("images") = py::none(), py::arg("limit") = 0,
          py::arg("device") = "", py::arg("clock_mhz") = 0.0,
          "Simulate the mapped pipeline; returns a sim report JSON string.");
    m.def("reference", &py_reference, py::arg("config"), py::arg("seed"),
          py::arg("image") = py::none(), py::arg("device") = "",
          py::arg("clock_mhz") = 0.0,
          "Dense reference inference; returns a JSON string.");
    m.def("analytic", &py_analytic, py::arg("config"), py::arg("device") = "",
          py::arg("clock_mhz") = 0.0,
          "Static throughput report; returns a JSON string.");

    py::register_exception<df2::ParseError>(m, "ParseError");
    py::register_exception<df2::ValidationError>(m, "ValidationError");
    py::register_exception<df2::MappingError>(m, "MappingError");
    py::register_exception<df2::SimError>(m, "SimError");
}
