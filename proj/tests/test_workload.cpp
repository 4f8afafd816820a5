#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "rmcnoc/config.hpp"
#include "rmcnoc/network.hpp"
#include "rmcnoc/workload.hpp"

using namespace rmcnoc;

namespace {

const MeshShape k8{8, 8};

WorkloadSpec uniform(double rate, std::uint64_t seed = 1) {
    WorkloadSpec w;
    w.kind = WorkloadKind::UniformRandom;
    w.injection_rate = rate;
    w.seed = seed;
    return w;
}

std::filesystem::path temp_file(const std::string& name, const std::string& contents) {
    const auto path = std::filesystem::temp_directory_path() / ("rmcnoc_test_" + name);
    std::ofstream(path) << contents;
    return path;
}

std::vector<Packet> run_generator(TrafficGenerator& g, std::uint64_t cycles) {
    std::vector<Packet> all, step;
    for (std::uint64_t c = 0; c < cycles; ++c) {
        step.clear();
        g.generate(c, step);
        all.insert(all.end(), step.begin(), step.end());
    }
    return all;
}

}  // namespace

TEST(Generator, ZeroRateNeverInjects) {
    TrafficGenerator g(uniform(0.0), k8);
    EXPECT_TRUE(run_generator(g, 10000).empty());
    EXPECT_EQ(g.offered_flits(), 0u);
}

TEST(Generator, TransposeDestination) {
    WorkloadSpec w = uniform(0.5);
    w.kind = WorkloadKind::Transpose;
    TrafficGenerator g(w, k8);
    bool saw = false;
    for (const Packet& p : run_generator(g, 2000)) {
        EXPECT_EQ(p.dst, (Coord{p.src.y, p.src.x}));
        if (p.src == Coord{1, 3}) saw = true;
    }
    EXPECT_TRUE(saw);
}

TEST(Generator, UniformRateWithinFivePercent) {
    WorkloadSpec w = uniform(0.1, 42);
    w.packet_length = 1;
    TrafficGenerator g(w, k8);
    std::vector<std::uint64_t> flits(64, 0);
    for (const Packet& p : run_generator(g, 100000)) {
        EXPECT_NE(p.src, p.dst);
        flits[static_cast<std::size_t>(k8.node_id(p.src))] += static_cast<std::uint64_t>(p.length);
    }
    for (std::uint64_t f : flits) EXPECT_NEAR(static_cast<double>(f) / 100000.0, 0.1, 0.005);
}

TEST(Generator, HotspotConcentratesDestinations) {
    WorkloadSpec w = uniform(0.2, 5);
    w.kind = WorkloadKind::Hotspot;
    w.hotspot.nodes = {27};
    w.hotspot.weight = 0.5;
    TrafficGenerator g(w, k8);
    std::size_t hot = 0, total = 0;
    for (const Packet& p : run_generator(g, 20000)) {
        ++total;
        if (k8.node_id(p.dst) == 27) ++hot;
    }
    EXPECT_NEAR(static_cast<double>(hot) / total, 0.5 + 0.5 / 63, 0.02);
}

TEST(Generator, SeedReproducible) {
    TrafficGenerator a(uniform(0.2, 9), k8), b(uniform(0.2, 9), k8), c(uniform(0.2, 10), k8);
    const auto pa = run_generator(a, 3000), pb = run_generator(b, 3000), pc = run_generator(c, 3000);
    ASSERT_EQ(pa.size(), pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
        EXPECT_EQ(pa[i].src, pb[i].src);
        EXPECT_EQ(pa[i].dst, pb[i].dst);
        EXPECT_EQ(pa[i].creation_cycle, pb[i].creation_cycle);
    }
    EXPECT_NE(pa.size(), pc.size());
}

TEST(Generator, PhaseBoundariesSwitchExactly) {
    WorkloadSpec w;
    w.kind = WorkloadKind::MultiApp;
    w.packet_length = 1;
    RegionProfile all;
    all.region = {0, 0, 4, 4};
    all.locality = 1.0;
    PhaseSpec quiet{100, {all}};
    all.injection_rate = 1.0;
    PhaseSpec busy{50, {all}};
    w.phases = {quiet, busy};
    TrafficGenerator g(w, {4, 4});
    EXPECT_EQ(g.phase_index(0), 0u);
    EXPECT_EQ(g.phase_index(99), 0u);
    EXPECT_EQ(g.phase_index(100), 1u);
    EXPECT_EQ(g.phase_index(149), 1u);
    EXPECT_EQ(g.phase_index(150), 0u);
    std::vector<Packet> out;
    for (std::uint64_t c = 0; c < 300; ++c) {
        out.clear();
        g.generate(c, out);
        const bool busy_phase = (c % 150) >= 100;
        EXPECT_EQ(out.size(), busy_phase ? 16u : 0u) << "cycle " << c;
    }
}

TEST(Generator, RegionsMustPartitionMesh) {
    WorkloadSpec w;
    w.kind = WorkloadKind::MultiApp;
    RegionProfile half;
    half.region = {0, 0, 2, 4};
    w.phases = {PhaseSpec{10, {half}}};
    EXPECT_THROW(validate(w, {4, 4}), std::invalid_argument);
}

TEST(Generator, OfferedMatchesInjected) {
    WorkloadSpec w = make_preset("w3", k8, 0.15, 4);
    TrafficGenerator g(w, k8);
    NetworkParams p;
    p.shape = k8;
    MeshNetwork net(p);
    net.set_injection_source(&g);
    net.run(20000);
    EXPECT_EQ(g.offered_flits(), net.counters().flits_injected);
    EXPECT_EQ(net.counters().self_delivered_packets, 0u);
}

TEST(Presets, AllNamesBuildAndValidate) {
    ASSERT_EQ(preset_names().size(), 8u);
    for (const std::string& name : preset_names()) {
        const WorkloadSpec w = make_preset(name, k8, 0.2, 1);
        EXPECT_NO_THROW(validate(w, k8)) << name;
        EXPECT_EQ(w.preset, name);
    }
    EXPECT_EQ(training_presets(), (std::vector<std::string>{"w1", "w2", "w3", "w4", "w5"}));
    EXPECT_EQ(heldout_presets(), (std::vector<std::string>{"w6", "w7", "w8"}));
    EXPECT_THROW(make_preset("w9", k8, 0.2, 1), std::invalid_argument);
}

TEST(Presets, MeanRateMatchesTarget) {
    for (const std::string& name : {"w1", "w6"}) {
        TrafficGenerator g(make_preset(name, k8, 0.2, 3), k8);
        run_generator(g, 200000);
        EXPECT_NEAR(static_cast<double>(g.offered_flits()) / (64.0 * 200000), 0.2, 0.02) << name;
    }
}

TEST(Presets, DemandVariesAcrossSpaceAndTime) {
    const WorkloadSpec w = make_preset("w6", k8, 0.2, 1);
    std::set<double> rates;
    for (const PhaseSpec& ph : w.phases)
        for (const RegionProfile& rp : ph.regions) rates.insert(rp.injection_rate);
    EXPECT_GT(rates.size(), 2u);
    EXPECT_GT(w.phases.size(), 1u);
}

TEST(Trace, WellFormedFile) {
    const auto path = temp_file("ok.trace", "# cycle src dst len\n0 0 5 4\n3 1 2 1\n3 7 0 2  # same cycle\n");
    const auto recs = parse_trace(path.string(), 64);
    ASSERT_EQ(recs.size(), 3u);
    EXPECT_EQ(recs[0], (TraceRecord{0, 0, 5, 4}));
    EXPECT_EQ(recs[2], (TraceRecord{3, 7, 0, 2}));
}

TEST(Trace, OutOfRangeDestinationNamesLine) {
    const auto path = temp_file("bad.trace", "0 0 5 4\n1 0 64 4\n");
    try {
        parse_trace(path.string(), 64);
        FAIL() << "expected TraceError";
    } catch (const TraceError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(Trace, CycleGoingBackward) {
    const auto path = temp_file("back.trace", "5 0 1 1\n4 0 1 1\n");
    try {
        parse_trace(path.string(), 64);
        FAIL() << "expected TraceError";
    } catch (const TraceError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
}

TEST(Trace, MalformedAndEmpty) {
    EXPECT_THROW(parse_trace(temp_file("short.trace", "0 1 2\n").string(), 64), TraceError);
    EXPECT_THROW(parse_trace(temp_file("neg.trace", "-1 1 2 1\n").string(), 64), TraceError);
    EXPECT_TRUE(parse_trace(temp_file("empty.trace", "").string(), 64).empty());
}

TEST(Trace, GeneratorReplaysRecords) {
    const auto path = temp_file("replay.trace", "2 0 3 2\n2 1 2 1\n10 3 0 4\n");
    WorkloadSpec w;
    w.kind = WorkloadKind::Trace;
    w.trace_path = path.string();
    TrafficGenerator g(w, {2, 2});
    std::vector<Packet> out;
    for (std::uint64_t c = 0; c < 12; ++c) {
        out.clear();
        g.generate(c, out);
        if (c == 2) {
            EXPECT_EQ(out.size(), 2u);
        } else if (c == 10) {
            ASSERT_EQ(out.size(), 1u);
            EXPECT_EQ(out[0].length, 4);
        } else {
            EXPECT_TRUE(out.empty());
        }
    }
    EXPECT_EQ(g.offered_flits(), 7u);
}

TEST(ResolveWorkload, HotspotDefaultsToCentre) {
    WorkloadSpec w = uniform(0.1);
    w.kind = WorkloadKind::Hotspot;
    const WorkloadSpec r = resolve_workload(w, k8, 1);
    EXPECT_EQ(r.hotspot.nodes, (std::vector<int>{27, 28, 35, 36}));
    EXPECT_GT(r.hotspot.weight, 0.0);
}
