#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "df2/netspec.hpp"
#include "test_util.hpp"

using namespace df2;

TEST_CASE("layer notation parses every field") {
    LayerSpec l = parse_layer_notation("pConv3-1-16/b1");
    CHECK(l.kind == LayerKind::Conv);
    CHECK(l.kernel == 3);
    CHECK(l.stride == 1);
    CHECK(l.padding == Padding::Same);
    CHECK(l.out_channels == 16);
    CHECK(l.mem_kind == MemKind::Bram);
    CHECK(l.cascade == 1);

    l = parse_layer_notation("Conv2-2-72/u2");
    CHECK(l.padding == Padding::Valid);
    CHECK(l.kernel == 2);
    CHECK(l.stride == 2);
    CHECK(l.out_channels == 72);
    CHECK(l.mem_kind == MemKind::Uram);
    CHECK(l.cascade == 2);

    l = parse_layer_notation("Fc-128/u2");
    CHECK(l.kind == LayerKind::FullyConnected);
    CHECK(l.kernel == 0);
    CHECK(l.stride == 1);
    CHECK(l.out_channels == 128);
}

TEST_CASE("layer notation round-trips") {
    for (const char* s : {"pConv3-1-16/b1", "Conv2-2-72/u2", "Fc-128/u2",
                          "Conv3-2-64/b2", "pConv3-1-560/u1"}) {
        CHECK(print_layer_notation(parse_layer_notation(s)) == s);
    }
}

TEST_CASE("layer notation rejects bad grammar and illegal shapes") {
    CHECK_THROWS_AS(parse_layer_notation("Conv"), ParseError);
    CHECK_THROWS_AS(parse_layer_notation("Conv3-16/b1"), ParseError);
    CHECK_THROWS_AS(parse_layer_notation("pFc-10/b1"), ParseError);
    CHECK_THROWS_AS(parse_layer_notation("Conv3-1-16"), ParseError);
    CHECK_THROWS_AS(parse_layer_notation("Conv3-1-16/x1"), ParseError);
    CHECK_THROWS_AS(parse_layer_notation("Conv4-1-16/b1"), ValidationError);
    CHECK_THROWS_AS(parse_layer_notation("Conv3-3-16/b1"), ValidationError);
    CHECK_THROWS_AS(parse_layer_notation("Conv3-1-0/b1"), ParseError);
}

TEST_CASE("geometry follows the whole chain") {
    NetworkSpec net = testutil::make_net(
        "mnist", 28, 28, 1, 600.0,
        {"pConv3-1-16/b1", "Conv2-2-16/b1", "pConv3-1-32/b1", "Conv2-2-32/b1",
         "pConv3-1-64/b2", "Conv3-2-64/b2", "Fc-128/u2", "Fc-10/b1"});
    std::vector<LayerGeometry> g = infer_geometry(net);
    REQUIRE(g.size() == 8);

    CHECK(g[0].out_rows == 28);
    CHECK(g[0].out_ch == 16);
    CHECK(g[0].beats_per_neuron == 9);  // 3x3 kernel, one channel group
    CHECK(g[0].kappa == 28);
    CHECK(g[1].out_rows == 14);
    CHECK(g[2].out_rows == 14);
    CHECK(g[2].beats_per_neuron == 18);  // 3x3 over 16 channels = 9 * 2 groups
    CHECK(g[3].out_rows == 7);
    CHECK(g[4].out_rows == 7);
    CHECK(g[5].out_rows == 3);  // valid 3x3 stride 2 on 7: (7-3)/2+1
    CHECK(g[5].out_cols == 3);
    CHECK(g[6].in_rows == 3);
    CHECK(g[6].out_rows == 1);
    CHECK(g[6].out_ch == 128);
    CHECK(g[6].fan_in == 3 * 3 * 64);
    CHECK(g[6].beats_per_neuron == 3 * 3 * 8);  // per-position channel groups
    CHECK(g[6].kappa == 1);
    CHECK(g[7].fan_in == 128);
    CHECK(g[7].beats_per_neuron == 16);
}

TEST_CASE("same padding splits asymmetric pad low-first") {
    // in 7, kernel 3, stride 2: out ceil(7/2)=4, total pad (4-1)*2+3-7=2.
    NetworkSpec net = testutil::make_net("p", 7, 7, 1, 100.0,
                                         {"pConv3-2-8/b1", "Fc-4/b1"});
    std::vector<LayerGeometry> g = infer_geometry(net);
    CHECK(g[0].out_rows == 4);
    CHECK(g[0].pad_top == 1);
    CHECK(g[0].pad_left == 1);

    // in 6, kernel 2, stride 2: out 3, no pad needed.
    net = testutil::make_net("p2", 6, 6, 1, 100.0, {"pConv3-1-8/b1",
                                                    "Conv2-2-8/b1", "Fc-4/b1"});
    g = infer_geometry(net);
    CHECK(g[1].out_rows == 3);
    CHECK(g[1].pad_top == 0);
}

TEST_CASE("geometry collapse raises") {
    NetworkSpec net = testutil::make_net("tiny", 2, 2, 1, 100.0,
                                         {"Conv3-1-8/b1", "Fc-4/b1"});
    CHECK_THROWS_AS(infer_geometry(net), GeometryError);
}

TEST_CASE("validation catches structural breaks") {
    NetworkSpec empty;
    empty.input = {8, 8, 1};
    empty.clock_mhz = 100.0;
    bool has_error = false;
    for (const Diagnostic& d : validate_network(empty)) has_error |= d.is_error;
    CHECK(has_error);

    // conv after FC
    NetworkSpec net = testutil::make_net("bad", 8, 8, 1, 100.0,
                                         {"pConv3-1-8/b1", "Fc-4/b1",
                                          "pConv3-1-8/b1"});
    has_error = false;
    for (const Diagnostic& d : validate_network(net)) has_error |= d.is_error;
    CHECK(has_error);

    // last layer must classify
    net = testutil::make_net("bad2", 8, 8, 1, 100.0, {"pConv3-1-8/b1"});
    has_error = false;
    for (const Diagnostic& d : validate_network(net)) has_error |= d.is_error;
    CHECK(has_error);
}

TEST_CASE("kernel-2 outside the pooling form gets a note, not an error") {
    // Conv2-2 valid is the pooling convention: clean.
    NetworkSpec net = testutil::make_net("pool", 8, 8, 1, 100.0,
                                         {"pConv3-1-8/b1", "Conv2-2-8/b1",
                                          "Fc-4/b1"});
    for (const Diagnostic& d : validate_network(net)) CHECK(!d.is_error);
    CHECK(validate_network(net).empty());

    // Conv2-1 departs from it: warn but keep going.
    net = testutil::make_net("odd", 8, 8, 1, 100.0,
                             {"pConv3-1-8/b1", "Conv2-1-8/b1", "Fc-4/b1"});
    bool has_error = false, has_warning = false;
    for (const Diagnostic& d : validate_network(net)) {
        has_error |= d.is_error;
        has_warning |= !d.is_error;
    }
    CHECK(!has_error);
    CHECK(has_warning);
}

TEST_CASE("omega override must be achievable and divide the channels") {
    NetworkSpec net = testutil::make_net("ov", 8, 8, 1, 100.0,
                                         {"pConv3-1-16/b1", "Fc-10/b1"});
    net.layers[0].omega_override = 3;  // not in the valid set
    bool has_error = false;
    for (const Diagnostic& d : validate_network(net)) has_error |= d.is_error;
    CHECK(has_error);

    net.layers[0].omega_override = 8;  // valid and divides 16
    has_error = false;
    for (const Diagnostic& d : validate_network(net)) has_error |= d.is_error;
    CHECK(!has_error);

    net.layers[1].omega_override = 4;  // 4 does not divide 10
    has_error = false;
    for (const Diagnostic& d : validate_network(net)) has_error |= d.is_error;
    CHECK(has_error);
}

TEST_CASE("config JSON parses strings and objects") {
    const char* text = R"({
      "name": "t",
      "input": {"height": 8, "width": 8, "channels": 3},
      "clock_mhz": 150,
      "device": "vu9p-3slr",
      "layers": [
        "pConv3-1-8/b1",
        {"notation": "Conv2-2-8/b1", "omega": 2},
        "Fc-10/b1"
      ]
    })";
    NetworkSpec net = parse_network_json_text(text);
    CHECK(net.name == "t");
    CHECK(net.input.channels == 3);
    CHECK(net.clock_mhz == 150.0);
    CHECK(net.device_name == "vu9p-3slr");
    REQUIRE(net.layers.size() == 3);
    CHECK(net.layers[0].kind == LayerKind::TransductionConv);
    CHECK(net.layers[1].omega_override == 2);
    CHECK(net.layers[2].kind == LayerKind::FullyConnected);

    CHECK_THROWS_AS(parse_network_json_text("{not json"), ParseError);
    CHECK_THROWS_AS(parse_network_json_text("{}"), ParseError);
}

TEST_CASE("config JSON can embed a device object") {
    const char* text = R"({
      "name": "t",
      "input": {"height": 8, "width": 8, "channels": 1},
      "clock_mhz": 100,
      "device": {"name": "custom", "slr_count": 1},
      "layers": ["pConv3-1-8/b1", "Fc-10/b1"]
    })";
    NetworkSpec net = parse_network_json_text(text);
    CHECK(net.device_name.empty());
    CHECK(!net.device_json.empty());
}

TEST_CASE("config file loads from disk") {
    const char* path = "netspec_test_config.json";
    {
        std::ofstream out(path);
        out << R"({"name":"f","input":{"height":6,"width":6,"channels":1},
                   "clock_mhz":100,"layers":["pConv3-1-8/b1","Fc-4/b1"]})";
    }
    NetworkSpec net = load_network_json(path);
    CHECK(net.name == "f");
    CHECK(net.layers.size() == 2);
    std::remove(path);
    CHECK_THROWS_AS(load_network_json("does_not_exist.json"), ParseError);
}
