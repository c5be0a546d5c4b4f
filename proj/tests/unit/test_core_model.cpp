#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "veritas/core_model.hpp"
#include "veritas/error.hpp"

using namespace veritas;

TEST_SUITE("core_model") {

TEST_CASE("grid state space") {
    QuantGrid g;
    CHECK(g.state_count() == 21);
    CHECK(g.state_mbps(20) == doctest::Approx(10.0));
    QuantGrid bad{5.0, 0.5, 10.2};
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    CHECK_THROWS_AS((QuantGrid{0.0, 0.5, 10.0}.validate()), InvalidArgument);
    CHECK_THROWS_AS((QuantGrid{5.0, -1.0, 10.0}.validate()), InvalidArgument);
}

TEST_CASE("window_index boundaries") {
    const QuantGrid g;
    CHECK(window_index(0.0, g) == 1);
    CHECK(window_index(5.0, g) == 1);
    CHECK(window_index(5.001, g) == 2);
    CHECK(window_index(12.3, g) == 3);
    CHECK(window_index(15.000000000000002, g) == 3);
    CHECK_THROWS_AS(window_index(-1.0, g), InvalidArgument);
}

TEST_CASE("quantize_capacity") {
    const QuantGrid g;
    CHECK(quantize_capacity(1.0, g) == 2);
    CHECK(quantize_capacity(1.24, g) == 2);
    CHECK(quantize_capacity(1.25, g) == 3);
    CHECK(quantize_capacity(99.0, g) == 20);
    CHECK(quantize_capacity(0.0, g) == 0);
    CHECK_THROWS_AS(quantize_capacity(-0.1, g), InvalidArgument);
}

TEST_CASE("quantization is a left inverse on grid points") {
    for (QuantGrid g : {QuantGrid{}, QuantGrid{5.0, 0.1, 10.0}, QuantGrid{2.0, 0.25, 7.5}})
        for (std::size_t i = 0; i < g.state_count(); ++i) CHECK(quantize_capacity(g.state_mbps(i), g) == i);
}

TEST_CASE("delta_n") {
    const QuantGrid g;
    using testing::chunk;
    // Windows 1, 2, 2, 3, 5 for chunks 1..5.
    const SessionLog log = testing::log_of({chunk(1, 1000, 1.0, 2.0), chunk(2, 1000, 6.0, 7.0),
                                            chunk(3, 1000, 8.0, 9.0), chunk(4, 1000, 12.0, 13.0),
                                            chunk(5, 1000, 22.0, 23.0)});
    CHECK(delta_n(log, g, 3) == 0);
    CHECK(delta_n(log, g, 5) == 2);
    CHECK(delta_n(log, g, 2) == 1);
    CHECK_THROWS_AS(delta_n(log, g, 1), InvalidArgument);
    CHECK_THROWS_AS(delta_n(log, g, 6), InvalidArgument);

    const SessionLog two = testing::log_of({chunk(1, 1000, 2.0, 3.0), chunk(2, 1000, 12.3, 13.0)});
    CHECK(delta_n(two, g, 2) == 2);
}

TEST_CASE("delta_n is invariant to whole-window shifts") {
    const QuantGrid g;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> gap(0.0, 9.0), dur(0.1, 4.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<ChunkRecord> chunks;
        double t = gap(rng) + 0.01;
        for (std::size_t n = 1; n <= 8; ++n) {
            const double d = dur(rng);
            chunks.push_back(testing::chunk(n, 1000, t, t + d));
            t += d + gap(rng);
        }
        const SessionLog log = testing::log_of(chunks);
        SessionLog shifted = log;
        const double k = 3.0 * g.delta_s;
        for (ChunkRecord& c : shifted.chunks) c.start_s += k, c.end_s += k;
        for (std::size_t n = 2; n <= log.size(); ++n) CHECK(delta_n(log, g, n) == delta_n(shifted, g, n));
    }
}

TEST_CASE("capacity trace holds the last window") {
    const CapacityTrace tr(QuantGrid{}, {1.0, 2.0, 3.0});
    CHECK(tr.value_at(0.0) == 1.0);
    CHECK(tr.value_at(5.0) == 1.0);
    CHECK(tr.value_at(5.5) == 2.0);
    CHECK(tr.value_at(100.0) == 3.0);
    CHECK_THROWS_AS(CapacityTrace(QuantGrid{}, {}), InvalidArgument);
    CHECK_THROWS_AS(CapacityTrace(QuantGrid{}, {1.0, -2.0}), InvalidArgument);
}

TEST_CASE("generate_trace") {
    const QuantGrid g;
    TraceParams p;
    p.kind = TraceKind::constant;
    p.c_mbps = 5.0;
    p.windows = 10;
    const CapacityTrace flat = generate_trace(p, g, 1);
    CHECK(std::vector<double>(flat.values().begin(), flat.values().end()) == std::vector<double>(10, 5.0));

    p.kind = TraceKind::square_wave;
    p.lo_mbps = 2.0;
    p.hi_mbps = 8.0;
    p.period = 4;
    p.windows = 8;
    const CapacityTrace sq = generate_trace(p, g, 1);
    CHECK(std::vector<double>(sq.values().begin(), sq.values().end()) ==
          std::vector<double>{2, 2, 2, 2, 8, 8, 8, 8});

    p.kind = TraceKind::markov_walk;
    p.windows = 300;
    const CapacityTrace m1 = generate_trace(p, g, 7);
    const CapacityTrace m2 = generate_trace(p, g, 7);
    CHECK(m1 == m2);
    CHECK_FALSE(m1 == generate_trace(p, g, 8));
    for (std::size_t t = 0; t < m1.windows(); ++t) {
        CHECK(m1.values()[t] >= 2.0);
        CHECK(m1.values()[t] <= 8.0);
        if (t > 0) CHECK(std::abs(m1.values()[t] - m1.values()[t - 1]) <= g.eps_mbps + 1e-12);
    }

    p.lo_mbps = 9.0;
    CHECK_THROWS_AS(generate_trace(p, g, 1), InvalidArgument);
    CHECK_THROWS_AS(parse_trace_kind("sine"), InvalidArgument);
}

TEST_CASE("log invariants name the chunk") {
    using testing::chunk;
    SessionLog log = testing::log_of({chunk(1, 1000, 0.0, 1.0), chunk(2, 1000, 2.0, 2.0)});
    try {
        log.validate();
        FAIL("expected an invariant error");
    } catch (const InvariantError& e) {
        CHECK(std::string(e.what()).find("chunk 2") != std::string::npos);
    }
    log = testing::log_of({chunk(1, 1000, 0.0, 3.0), chunk(2, 1000, 2.0, 4.0)});
    CHECK_THROWS_AS(log.validate(), InvariantError);
    log = testing::log_of({chunk(1, 1000, 0.0, 1.0), chunk(3, 1000, 2.0, 4.0)});
    CHECK_THROWS_AS(log.validate(), InvariantError);
}

TEST_CASE("chunk record throughput identity") {
    const ChunkRecord c = testing::chunk(1, 250000, 1.0, 1.5);
    CHECK(c.download_s() == doctest::Approx(0.5));
    CHECK(c.throughput_mbps() * c.download_s() == doctest::Approx(8.0 * 250000 / 1e6).epsilon(1e-12));
}

TEST_CASE("video model") {
    VideoModel v;
    v.ladder = VideoModel::default_ladder();
    CHECK_NOTHROW(v.validate());
    CHECK(v.ladder.front().ssim == 0.908);
    CHECK(v.ladder.back().ssim == 0.986);
    CHECK(v.ladder.front().bitrate_mbps == 0.1);
    CHECK(v.ladder.back().bitrate_mbps == 4.0);

    CHECK(v.chunk_size(3, 2, 9) == v.chunk_size(3, 2, 9));
    CHECK(v.chunk_size(3, 2, 9) != v.chunk_size(3, 2, 10));
    v.vbr_sigma = 0.0;
    CHECK(v.chunk_size(1, 4, 1) == 1'000'000);  // 4 Mbps * 2 s / 8

    VideoModel bad = v;
    std::swap(bad.ladder[0], bad.ladder[1]);
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = v;
    bad.ladder[2].ssim = 0.9;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("ladder edits keep a rung's sizes") {
    VideoModel full;
    full.ladder = VideoModel::default_ladder();
    VideoModel capped = full;
    capped.ladder.resize(2);
    for (std::size_t n = 1; n <= 20; ++n)
        for (std::size_t q = 0; q < 2; ++q) CHECK(full.chunk_size(n, q, 4) == capped.chunk_size(n, q, 4));
}

}  // TEST_SUITE
