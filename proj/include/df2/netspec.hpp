#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace df2 {

// Thrown when layer notation or a config file cannot be parsed at all.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when a parsed network violates a structural rule.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when geometry inference produces an impossible shape.
struct GeometryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class LayerKind : std::uint8_t {
    TransductionConv,  // first conv layer, consumes pixel bytes and multiplies
    Conv,              // spike-domain conv, AND-gated adder tree
    FullyConnected,
};

enum class MemKind : std::uint8_t { Bram, Uram };

enum class Padding : std::uint8_t { Same, Valid };

struct LayerSpec {
    LayerKind kind = LayerKind::Conv;
    int kernel = 0;       // 0 for fully connected (kernel spans the whole input map)
    int stride = 1;       // 1 for fully connected
    Padding padding = Padding::Valid;
    int out_channels = 0;
    MemKind mem_kind = MemKind::Bram;
    int cascade = 1;         // declared memory cascade depth (bN / uN suffix)
    int omega_override = 0;  // 0 = mapper chooses
    std::string notation;    // original text, kept for reporting
};

struct InputShape {
    int height = 0;
    int width = 0;
    int channels = 0;
};

struct NetworkSpec {
    std::string name;
    InputShape input;
    double clock_mhz = 0.0;
    std::string device_name;  // empty when the config embeds a full device object
    std::string device_json;  // raw JSON text of an embedded device object, else empty
    std::vector<LayerSpec> layers;
};

// Resolved per-layer shapes. Row/col/channel counts are post-padding logical
// sizes; fan_in counts logical (unpadded) input channels.
struct LayerGeometry {
    int in_rows = 0, in_cols = 0, in_ch = 0;
    int out_rows = 0, out_cols = 0, out_ch = 0;
    int kernel = 0;  // 0 for FC
    int stride = 1;
    int pad_top = 0, pad_left = 0;
    long long fan_in = 0;           // kernel*kernel*in_ch, or full map for FC
    long long beats_per_neuron = 0; // 8-spike beats streamed per output neuron
    int kappa = 0;                  // cores per weight unit: out_rows (conv) or 1 (FC)
};

// Parses one layer in compact notation: "pConv3-1-16/b1", "Conv2-2-32/u2",
// "Fc-128/u2". Leading 'p' selects same padding. Throws ParseError.
LayerSpec parse_layer_notation(const std::string& text);

// Inverse of parse_layer_notation (canonical form, no omega override).
std::string print_layer_notation(const LayerSpec& layer);

// Shape inference along the chain. Throws GeometryError on collapse to zero.
std::vector<LayerGeometry> infer_geometry(const NetworkSpec& net);

struct Diagnostic {
    bool is_error = false;
    int layer = -1;  // -1 = network level
    std::string message;
};

// Structural checks: non-empty, first layer transduction conv, last layer FC,
// kernel/stride legality, pooling convention, omega override sanity.
std::vector<Diagnostic> validate_network(const NetworkSpec& net);

// Loads a config JSON file: {name, input{height,width,channels}, clock_mhz,
// device, layers:[{notation, omega?}]}. The first layer is promoted to a
// transduction conv. Throws ParseError / ValidationError.
NetworkSpec load_network_json(const std::string& path);
NetworkSpec parse_network_json_text(const std::string& text);

}  // namespace df2
