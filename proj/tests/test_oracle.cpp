#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "df2/oracle.hpp"
#include "test_util.hpp"

using namespace df2;

namespace {

// 2x2x1 input, one 2x2 valid transduction conv to 1x1x1, then Fc-2.
struct TinyNet {
    NetworkSpec net;
    std::vector<LayerGeometry> geoms;
    QuantModel model;

    TinyNet() {
        net = testutil::make_net("tiny", 2, 2, 1, 100.0,
                                 {"Conv2-1-1/b1", "Fc-2/b1"});
        geoms = infer_geometry(net);

        QuantLayer conv;
        conv.out_channels = 1;
        conv.beats = 4;  // 2x2 kernel, one channel group
        conv.scale = 1.0;
        conv.weights.assign(32, 0);
        // dense (kr*2+kc): w = 1, 2, 3, 4 on lane 0 of each beat
        for (int b = 0; b < 4; ++b) conv.weights[b * 8] = static_cast<std::int8_t>(b + 1);
        conv.thresholds = {299};

        QuantLayer fc;
        fc.out_channels = 2;
        fc.beats = 1;
        fc.scale = 1.0;
        fc.weights.assign(16, 0);
        fc.weights[0] = 5;   // neuron 0 reads lane 0
        fc.weights[8] = -3;  // neuron 1 reads lane 0
        fc.thresholds = {4, -10};

        model.layers = {conv, fc};
    }
};

}  // namespace

TEST_CASE("hand-computed network: pixels through transduction to classifier") {
    TinyNet t;
    ImageU8 img;
    img.rows = img.cols = 2;
    img.channels = 1;
    img.data = {10, 20, 30, 40};

    // acc = 10*1 + 20*2 + 30*3 + 40*4 = 300 > 299: spike.
    OracleResult r = reference_inference(t.net, t.geoms, t.model, img);
    REQUIRE(r.activations.size() == 2);
    CHECK(r.activations[0].get(0, 0, 0));
    // fc: neuron0 acc 5 > 4 spike, neuron1 acc -3 > -10 spike
    CHECK(r.final_potentials == std::vector<std::int32_t>{5, -3});
    CHECK(r.activations[1].get(0, 0, 0));
    CHECK(r.activations[1].get(0, 0, 1));
    CHECK(r.predicted_class == 0);

    // Exactly at threshold: no spike (strict greater-than).
    t.model.layers[0].thresholds = {300};
    r = reference_inference(t.net, t.geoms, t.model, img);
    CHECK(!r.activations[0].get(0, 0, 0));
    CHECK(r.final_potentials == std::vector<std::int32_t>{0, 0});
    CHECK(r.predicted_class == 0);  // tie goes to the lowest index
}

TEST_CASE("argmax breaks ties toward the lowest index") {
    CHECK(argmax_class({1, 3, 3, 2}) == 1);
    CHECK(argmax_class({-5}) == 0);
    CHECK(argmax_class({0, 0}) == 0);
}

TEST_CASE("mac count matches the hand total for the mnist stack") {
    NetworkSpec net = testutil::make_net(
        "mnist", 28, 28, 1, 600.0,
        {"pConv3-1-16/b1", "Conv2-2-16/b1", "pConv3-1-32/b1", "Conv2-2-32/b1",
         "pConv3-1-64/b2", "Conv3-2-64/b2", "Fc-128/u2", "Fc-10/b1"});
    std::vector<LayerGeometry> geoms = infer_geometry(net);
    CHECK(count_macs(geoms) == 2727424);
    CHECK(count_ops(geoms) == 2 * 2727424);
}

TEST_CASE("padding contributes nothing") {
    // Same-padded conv on a 2x2 input: corners see only part of the kernel.
    NetworkSpec net = testutil::make_net("pad", 2, 2, 1, 100.0,
                                         {"pConv3-1-1/b1", "Fc-1/b1"});
    std::vector<LayerGeometry> geoms = infer_geometry(net);

    QuantModel model;
    QuantLayer conv;
    conv.out_channels = 1;
    conv.beats = 9;
    conv.scale = 1.0;
    conv.weights.assign(72, 0);
    for (int b = 0; b < 9; ++b) conv.weights[b * 8] = 1;  // all-ones kernel
    conv.thresholds = {0};
    QuantLayer fc;
    fc.out_channels = 1;
    fc.beats = 4;
    fc.scale = 1.0;
    fc.weights.assign(32, 0);
    fc.thresholds = {0};
    model.layers = {conv, fc};

    ImageU8 img;
    img.rows = img.cols = 2;
    img.channels = 1;
    img.data = {1, 1, 1, 1};

    // pad 1 top/left: every 3x3 window clips to the whole 2x2 input, so each
    // output accumulates exactly 4. Padded taps must contribute nothing.
    OracleResult r = reference_inference(net, geoms, model, img);
    for (int rr = 0; rr < 2; ++rr) {
        for (int cc = 0; cc < 2; ++cc) CHECK(r.activations[0].get(rr, cc, 0));
    }
}
