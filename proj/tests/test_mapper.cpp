#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <set>

#include "df2/mapper.hpp"
#include "test_util.hpp"

using namespace df2;

TEST_CASE("achievable weight-unit counts are 1, 2, 4 and multiples of 8") {
    CHECK(valid_omega_set(20) == std::vector<int>{1, 2, 4, 8, 16});
    for (int w : {1, 2, 4, 8, 16, 24, 32, 40}) CHECK(omega_achievable(w));
    for (int w : {0, 3, 5, 6, 7, 12, 20, 36}) CHECK(!omega_achievable(w));
}

TEST_CASE("achievable omegas divide the channel count") {
    CHECK(achievable_omegas(64) == std::vector<int>{1, 2, 4, 8, 16, 32, 64});
    CHECK(achievable_omegas(72) == std::vector<int>{1, 2, 4, 8, 24, 72});
    CHECK(achievable_omegas(10) == std::vector<int>{1, 2});
    CHECK(achievable_omegas(7) == std::vector<int>{1});
}

TEST_CASE("neuron footprint is beat bytes plus a 32-bit threshold") {
    CHECK(neuron_footprint_bytes(1) == 12);
    CHECK(neuron_footprint_bytes(32) == 260);
    CHECK(neuron_footprint_bytes(16) == 132);
}

TEST_CASE("memory allocation reproduces the published utilization points") {
    DeviceProfile dev;
    // 32 beats (2x2 kernel over 64 channels), 112 neurons per unit, BRAM:
    // 112 * 260 = 29120 bytes -> 8 blocks of 4096 -> 88.867%.
    MemoryAllocation a = memory_for_layer(32, 112, 8, MemKind::Bram, dev);
    CHECK(a.bytes_per_unit == 29120);
    CHECK(a.cascade == 8);
    CHECK(a.blocks == 64);
    CHECK(a.utilization == doctest::Approx(88.867).epsilon(0.001));

    // Same layer at 8 neurons per unit: 2080 bytes -> one block -> 50.78%.
    a = memory_for_layer(32, 8, 16, MemKind::Bram, dev);
    CHECK(a.bytes_per_unit == 2080);
    CHECK(a.cascade == 1);
    CHECK(a.blocks == 16);
    CHECK(a.utilization == doctest::Approx(50.781).epsilon(0.001));

    // URAM block size changes the cascade break points.
    a = memory_for_layer(32, 112, 8, MemKind::Uram, dev);
    CHECK(a.cascade == 1);
    CHECK(a.utilization == doctest::Approx(100.0 * 29120.0 / 32768.0).epsilon(1e-6));
}

TEST_CASE("dsp cost: two per spike core, eight per transduction core") {
    DeviceProfile dev;
    CHECK(dsp_for_cores(LayerKind::Conv, 6, dev) == 12);
    CHECK(dsp_for_cores(LayerKind::FullyConnected, 1, dev) == 2);
    CHECK(dsp_for_cores(LayerKind::TransductionConv, 28, dev) == 224);
}

TEST_CASE("service cycles count beats per neuron column plus handshake") {
    NetworkSpec net = testutil::make_net("svc", 14, 14, 16, 100.0,
                                         {"pConv3-1-16/b1", "Fc-10/b1"});
    std::vector<LayerGeometry> g = infer_geometry(net);
    // out 14 columns, 8 neurons per unit, 18 beats: 14 * (8*18 + 2) = 2044.
    CHECK(service_cycles(g[0], 8) == 2044);
    CHECK(service_cycles(g[0], 8, 0) == 14 * 144);
}

TEST_CASE("mnist maps onto one SLR at the published pace") {
    NetworkSpec net = testutil::make_net(
        "mnist", 28, 28, 1, 600.0,
        {"pConv3-1-16/b1", "Conv2-2-16/b1", "pConv3-1-32/b1", "Conv2-2-32/b1",
         "pConv3-1-64/b2", "Conv3-2-64/b2", "Fc-128/u2", "Fc-10/b1"});
    std::vector<LayerGeometry> geoms = infer_geometry(net);
    DeviceProfile dev;
    MappingPlan plan = assign_slrs(net, geoms, dev);

    CHECK(plan.slrs_used == 1);
    CHECK(plan.pace_cycles == 4610);
    CHECK(plan.fps == doctest::Approx(600e6 / 4610.0).epsilon(1e-9));
    REQUIRE(plan.layers.size() == 8);
    for (const LayerMapping& m : plan.layers) {
        CHECK(omega_achievable(m.omega));
        CHECK(m.service <= plan.pace_cycles);
        CHECK(m.splits.size() == 1);
    }
    // usage within one SLR's budget
    REQUIRE(plan.usage.size() == 1);
    CHECK(plan.usage[0].bram <= dev.bram_blocks);
    CHECK(plan.usage[0].uram <= dev.uram_blocks);
    CHECK(plan.usage[0].dsp <= dev.dsp_slices);
}

TEST_CASE("omega override pins the layer and slows the pipeline") {
    NetworkSpec net = testutil::make_net(
        "mnist", 28, 28, 1, 600.0,
        {"pConv3-1-16/b1", "Conv2-2-16/b1", "pConv3-1-32/b1", "Conv2-2-32/b1",
         "pConv3-1-64/b2", "Conv3-2-64/b2", "Fc-128/u2", "Fc-10/b1"});
    std::vector<LayerGeometry> geoms = infer_geometry(net);
    DeviceProfile dev;
    MappingPlan base = assign_slrs(net, geoms, dev);

    net.layers[4].omega_override = 1;  // pConv3-1-64: one unit serves all 64
    MappingPlan forced = assign_slrs(net, geoms, dev);
    CHECK(forced.layers[4].omega == 1);
    CHECK(forced.pace_cycles > base.pace_cycles);
    CHECK(forced.fps < base.fps);
}

TEST_CASE("fps hint paces the pipeline or refuses honestly") {
    NetworkSpec net = testutil::make_net(
        "mnist", 28, 28, 1, 600.0,
        {"pConv3-1-16/b1", "Conv2-2-16/b1", "pConv3-1-32/b1", "Conv2-2-32/b1",
         "pConv3-1-64/b2", "Conv3-2-64/b2", "Fc-128/u2", "Fc-10/b1"});
    std::vector<LayerGeometry> geoms = infer_geometry(net);
    DeviceProfile dev;

    MapOptions opts;
    opts.fps_hint = 50e3;  // easier than the natural pace: larger H allowed
    MappingPlan relaxed = assign_slrs(net, geoms, dev, opts);
    CHECK(relaxed.fps >= 50e3);
    CHECK(relaxed.pace_cycles <= static_cast<long long>(600e6 / 50e3));

    opts.fps_hint = 1e9;  // faster than the clock can possibly serve
    CHECK_THROWS_AS(assign_slrs(net, geoms, dev, opts), MappingError);
}

TEST_CASE("an impossible unit is rejected with a mapping error") {
    // 32x32x32 input: FC beats = 32*32*4 = 4096, footprint 32772 bytes.
    // omega 1 forces every neuron into one unit: 2048 * 32772 bytes needs a
    // cascade of 16387 BRAM blocks, far past one SLR.
    NetworkSpec net = testutil::make_net("big", 32, 32, 32, 100.0,
                                         {"pConv3-1-32/b1", "Fc-2048/b1"});
    net.layers[1].omega_override = 1;
    std::vector<LayerGeometry> geoms = infer_geometry(net);
    DeviceProfile dev;
    CHECK_THROWS_AS(assign_slrs(net, geoms, dev), MappingError);
}

TEST_CASE("plan JSON round-trips byte for byte") {
    NetworkSpec net = testutil::make_net("rt", 12, 12, 3, 250.0,
                                         {"pConv3-1-24/b1", "Conv2-2-24/b1",
                                          "Fc-16/u1"});
    std::vector<LayerGeometry> geoms = infer_geometry(net);
    DeviceProfile dev;
    MappingPlan plan = assign_slrs(net, geoms, dev);
    nlohmann::ordered_json j1 = plan_to_json(plan);
    MappingPlan back = plan_from_json(j1);
    nlohmann::ordered_json j2 = plan_to_json(back);
    CHECK(j1.dump() == j2.dump());
}

TEST_CASE("single-SLR plans are perfectly balanced by definition") {
    NetworkSpec net = testutil::make_net("bal", 10, 10, 1, 100.0,
                                         {"pConv3-1-8/b1", "Fc-10/b1"});
    std::vector<LayerGeometry> geoms = infer_geometry(net);
    DeviceProfile dev;
    MappingPlan plan = assign_slrs(net, geoms, dev);
    BalanceReport bal = balance_report(plan, dev);
    CHECK(plan.slrs_used == 1);
    CHECK(bal.imbalance_pp == 0.0);
    REQUIRE(bal.bram_pct.size() == 1);
    CHECK(bal.dsp_pct[0] > 0.0);
}

TEST_CASE("device profiles resolve by path, by search dir, then built-in") {
    DeviceProfile builtin = load_device_profile("vu9p-3slr");
    CHECK(builtin.slr_count == 3);
    CHECK(builtin.bram_blocks == 720);
    CHECK(builtin.uram_blocks == 320);
    CHECK(builtin.dsp_slices == 2280);

    const char* path = "mapper_test_profile.json";
    {
        std::ofstream out(path);
        out << R"({"name":"small","slr_count":1,"bram_blocks_per_slr":10,
                   "uram_blocks_per_slr":4,"dsp_per_slr":100,"luts_per_slr":5000})";
    }
    DeviceProfile small = load_device_profile(path);
    CHECK(small.name == "small");
    CHECK(small.bram_blocks == 10);

    setenv("DF2_PROFILE_DIR", ".", 1);
    DeviceProfile byname = load_device_profile("mapper_test_profile");
    CHECK(byname.name == "small");
    unsetenv("DF2_PROFILE_DIR");
    std::remove(path);

    CHECK_THROWS_AS(load_device_profile("no-such-device"), MappingError);
}

TEST_CASE("mapped omegas always come from the valid set and divide channels") {
    std::mt19937_64 rng(20240817);
    DeviceProfile dev;
    for (int i = 0; i < 50; ++i) {
        NetworkSpec net = testutil::random_network(rng);
        std::vector<LayerGeometry> geoms = infer_geometry(net);
        MappingPlan plan = assign_slrs(net, geoms, dev);
        REQUIRE(plan.layers.size() == geoms.size());
        for (std::size_t l = 0; l < plan.layers.size(); ++l) {
            CHECK(omega_achievable(plan.layers[l].omega));
            CHECK(geoms[l].out_ch % plan.layers[l].omega == 0);
            CHECK(plan.layers[l].npu * plan.layers[l].omega == geoms[l].out_ch);
        }
    }
}
