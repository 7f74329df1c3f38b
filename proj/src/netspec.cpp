#include "df2/netspec.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace df2 {

namespace {

int parse_int(std::string_view text, std::string_view what, const std::string& full) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || value <= 0) {
        throw ParseError("bad " + std::string(what) + " in layer notation '" + full + "'");
    }
    return value;
}

// Splits "body/mem" and fills mem_kind + cascade from the "b3"/"u2" suffix.
std::string_view split_memory_suffix(std::string_view text, LayerSpec& layer,
                                     const std::string& full) {
    auto slash = text.rfind('/');
    if (slash == std::string_view::npos || slash + 2 > text.size()) {
        throw ParseError("missing memory suffix in layer notation '" + full + "'");
    }
    std::string_view mem = text.substr(slash + 1);
    char kind = mem.front();
    if (kind == 'b') {
        layer.mem_kind = MemKind::Bram;
    } else if (kind == 'u') {
        layer.mem_kind = MemKind::Uram;
    } else {
        throw ParseError("memory kind must be 'b' or 'u' in layer notation '" + full + "'");
    }
    layer.cascade = parse_int(mem.substr(1), "cascade depth", full);
    return text.substr(0, slash);
}

}  // namespace

LayerSpec parse_layer_notation(const std::string& text) {
    LayerSpec layer;
    layer.notation = text;
    std::string_view rest = text;

    rest = split_memory_suffix(rest, layer, text);

    if (rest.substr(0, 3) == "Fc-") {
        layer.kind = LayerKind::FullyConnected;
        layer.kernel = 0;
        layer.stride = 1;
        layer.padding = Padding::Valid;
        layer.out_channels = parse_int(rest.substr(3), "channel count", text);
        return layer;
    }

    if (!rest.empty() && rest.front() == 'p') {
        layer.padding = Padding::Same;
        rest.remove_prefix(1);
    }
    if (rest.substr(0, 4) != "Conv") {
        throw ParseError("unrecognized layer notation '" + text + "'");
    }
    rest.remove_prefix(4);

    auto dash1 = rest.find('-');
    auto dash2 = dash1 == std::string_view::npos ? std::string_view::npos
                                                 : rest.find('-', dash1 + 1);
    if (dash1 == std::string_view::npos || dash2 == std::string_view::npos) {
        throw ParseError("conv notation needs kernel-stride-channels in '" + text + "'");
    }
    layer.kind = LayerKind::Conv;
    layer.kernel = parse_int(rest.substr(0, dash1), "kernel", text);
    layer.stride = parse_int(rest.substr(dash1 + 1, dash2 - dash1 - 1), "stride", text);
    layer.out_channels = parse_int(rest.substr(dash2 + 1), "channel count", text);

    if (layer.kernel != 2 && layer.kernel != 3) {
        throw ValidationError("illegal kernel " + std::to_string(layer.kernel) +
                              " in layer '" + text + "' (supported: 2, 3)");
    }
    if (layer.stride != 1 && layer.stride != 2) {
        throw ValidationError("illegal stride " + std::to_string(layer.stride) +
                              " in layer '" + text + "' (supported: 1, 2)");
    }
    return layer;
}

std::string print_layer_notation(const LayerSpec& layer) {
    std::ostringstream out;
    if (layer.kind == LayerKind::FullyConnected) {
        out << "Fc-" << layer.out_channels;
    } else {
        if (layer.padding == Padding::Same) out << 'p';
        out << "Conv" << layer.kernel << '-' << layer.stride << '-' << layer.out_channels;
    }
    out << '/' << (layer.mem_kind == MemKind::Bram ? 'b' : 'u') << layer.cascade;
    return out.str();
}

namespace {

long long ceil_div(long long a, long long b) { return (a + b - 1) / b; }

LayerGeometry conv_geometry(const LayerSpec& layer, int in_rows, int in_cols, int in_ch,
                            int index) {
    LayerGeometry g;
    g.in_rows = in_rows;
    g.in_cols = in_cols;
    g.in_ch = in_ch;
    g.kernel = layer.kernel;
    g.stride = layer.stride;
    g.out_ch = layer.out_channels;

    if (layer.padding == Padding::Same) {
        g.out_rows = static_cast<int>(ceil_div(in_rows, layer.stride));
        g.out_cols = static_cast<int>(ceil_div(in_cols, layer.stride));
        int pad_h = std::max((g.out_rows - 1) * layer.stride + layer.kernel - in_rows, 0);
        int pad_w = std::max((g.out_cols - 1) * layer.stride + layer.kernel - in_cols, 0);
        g.pad_top = pad_h / 2;
        g.pad_left = pad_w / 2;
    } else {
        g.out_rows = (in_rows - layer.kernel) / layer.stride + 1;
        g.out_cols = (in_cols - layer.kernel) / layer.stride + 1;
    }
    if (in_rows < 1 || in_cols < 1 || g.out_rows < 1 || g.out_cols < 1) {
        throw GeometryError("layer " + std::to_string(index) + " ('" + layer.notation +
                            "') collapses the feature map to zero size");
    }
    g.fan_in = static_cast<long long>(layer.kernel) * layer.kernel * in_ch;
    g.beats_per_neuron = static_cast<long long>(layer.kernel) * layer.kernel * ceil_div(in_ch, 8);
    g.kappa = g.out_rows;
    return g;
}

LayerGeometry fc_geometry(const LayerSpec& layer, int in_rows, int in_cols, int in_ch) {
    LayerGeometry g;
    g.in_rows = in_rows;
    g.in_cols = in_cols;
    g.in_ch = in_ch;
    g.kernel = 0;
    g.stride = 1;
    g.out_rows = 1;
    g.out_cols = 1;
    g.out_ch = layer.out_channels;
    g.fan_in = static_cast<long long>(in_rows) * in_cols * in_ch;
    g.beats_per_neuron = static_cast<long long>(in_rows) * in_cols * ceil_div(in_ch, 8);
    g.kappa = 1;
    return g;
}

}  // namespace

std::vector<LayerGeometry> infer_geometry(const NetworkSpec& net) {
    std::vector<LayerGeometry> geoms;
    geoms.reserve(net.layers.size());
    int rows = net.input.height;
    int cols = net.input.width;
    int ch = net.input.channels;
    if (rows < 1 || cols < 1 || ch < 1) {
        throw GeometryError("input shape must be positive");
    }
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& layer = net.layers[i];
        LayerGeometry g = layer.kind == LayerKind::FullyConnected
                              ? fc_geometry(layer, rows, cols, ch)
                              : conv_geometry(layer, rows, cols, ch, static_cast<int>(i));
        geoms.push_back(g);
        rows = g.out_rows;
        cols = g.out_cols;
        ch = g.out_ch;
    }
    return geoms;
}

std::vector<Diagnostic> validate_network(const NetworkSpec& net) {
    std::vector<Diagnostic> diags;
    auto error = [&](int layer, std::string msg) {
        diags.push_back({true, layer, std::move(msg)});
    };
    auto warn = [&](int layer, std::string msg) {
        diags.push_back({false, layer, std::move(msg)});
    };

    if (net.layers.empty()) {
        error(-1, "network has no layers");
        return diags;
    }
    if (net.input.height < 1 || net.input.width < 1 || net.input.channels < 1) {
        error(-1, "input shape must be positive in all dimensions");
    }
    if (net.clock_mhz <= 0.0) {
        error(-1, "clock_mhz must be positive");
    }
    if (net.layers.front().kind != LayerKind::TransductionConv) {
        error(0, "first layer must be a convolution (it becomes the transduction layer)");
    }
    if (net.layers.back().kind != LayerKind::FullyConnected) {
        error(static_cast<int>(net.layers.size()) - 1,
              "last layer must be fully connected (classifier)");
    }

    bool seen_fc = false;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const LayerSpec& layer = net.layers[i];
        int li = static_cast<int>(i);
        if (layer.kind == LayerKind::FullyConnected) {
            seen_fc = true;
        } else {
            if (seen_fc) {
                error(li, "convolution after a fully connected layer is not supported");
            }
            if (layer.kernel == 2 && (layer.stride != 2 || layer.padding != Padding::Valid)) {
                warn(li,
                     "kernel-2 convolutions are the pooling form and are expected to use "
                     "stride 2 with valid padding");
            }
        }
        if (layer.out_channels < 1) {
            error(li, "layer must have at least one output channel");
        }
        if (layer.cascade < 1) {
            error(li, "cascade depth must be at least 1");
        }
        if (layer.omega_override != 0) {
            int w = layer.omega_override;
            bool in_set = w == 1 || w == 2 || w == 4 || (w >= 8 && w % 8 == 0);
            if (!in_set) {
                error(li, "omega override " + std::to_string(w) +
                              " is not an achievable weight-unit count (1, 2, 4, or a "
                              "multiple of 8)");
            } else if (layer.out_channels % w != 0) {
                error(li, "omega override " + std::to_string(w) +
                              " does not divide the layer's " +
                              std::to_string(layer.out_channels) + " output channels");
            }
        }
    }

    if (diags.empty() || std::none_of(diags.begin(), diags.end(),
                                      [](const Diagnostic& d) { return d.is_error; })) {
        try {
            infer_geometry(net);
        } catch (const GeometryError& e) {
            error(-1, e.what());
        }
    }
    return diags;
}

NetworkSpec parse_network_json_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("config root must be a JSON object");

    NetworkSpec net;
    try {
        net.name = doc.at("name").get<std::string>();
        const auto& in = doc.at("input");
        net.input.height = in.at("height").get<int>();
        net.input.width = in.at("width").get<int>();
        net.input.channels = in.at("channels").get<int>();
        net.clock_mhz = doc.at("clock_mhz").get<double>();
        if (doc.contains("device")) {
            const auto& dev = doc.at("device");
            if (dev.is_string()) {
                net.device_name = dev.get<std::string>();
            } else if (dev.is_object()) {
                net.device_json = dev.dump();
            } else {
                throw ParseError("config 'device' must be a profile name or an object");
            }
        }
        const auto& layers = doc.at("layers");
        if (!layers.is_array() || layers.empty()) {
            throw ValidationError("config 'layers' must be a non-empty array");
        }
        for (const auto& entry : layers) {
            LayerSpec layer;
            if (entry.is_string()) {
                layer = parse_layer_notation(entry.get<std::string>());
            } else if (entry.is_object()) {
                layer = parse_layer_notation(entry.at("notation").get<std::string>());
                if (entry.contains("omega")) {
                    layer.omega_override = entry.at("omega").get<int>();
                    if (layer.omega_override < 1) {
                        throw ValidationError("layer omega override must be positive");
                    }
                }
            } else {
                throw ParseError("each layer must be a notation string or an object");
            }
            net.layers.push_back(std::move(layer));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("config is missing or mistypes a field: ") + e.what());
    }

    // The first layer consumes pixels, not spikes: promote it.
    if (net.layers.front().kind == LayerKind::Conv) {
        net.layers.front().kind = LayerKind::TransductionConv;
    }
    return net;
}

NetworkSpec load_network_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_network_json_text(buf.str());
}

}  // namespace df2
