#include <cmath>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "veritas/ehmm.hpp"
#include "veritas/error.hpp"
#include "veritas/player_sim.hpp"

using namespace veritas;

namespace {

SessionLog simulated_log(std::size_t chunks, std::uint64_t seed, Backend backend = Backend::model_f) {
    TraceParams p;
    p.kind = TraceKind::markov_walk;
    p.windows = 400;
    p.lo_mbps = 1.0;
    p.hi_mbps = 6.0;
    const CapacityTrace truth = generate_trace(p, QuantGrid{}, seed);
    VideoModel v;
    v.ladder = VideoModel::default_ladder();
    v.total_chunks = chunks;
    PlayerConfig cfg;
    cfg.backend = backend;
    return run_session(truth, v, cfg, seed).log;
}

}  // namespace

TEST_SUITE("ehmm") {

TEST_CASE("matrix power matches hand arithmetic") {
    Matrix a(2, 2);
    a(0, 0) = 0.9, a(0, 1) = 0.1, a(1, 0) = 0.2, a(1, 1) = 0.8;
    const Matrix a2 = power(a, 2);
    CHECK(a2(0, 0) == doctest::Approx(0.83).epsilon(1e-14));
    CHECK(a2(0, 1) == doctest::Approx(0.17).epsilon(1e-14));
    CHECK(a2(1, 0) == doctest::Approx(0.34).epsilon(1e-14));
    CHECK(a2(1, 1) == doctest::Approx(0.66).epsilon(1e-14));
    CHECK(power(a, 0) == Matrix::identity(2));
    CHECK(power(a, 1) == a);
}

TEST_CASE("tridiagonal transition") {
    const QuantGrid g;
    const TransitionMatrix t = tridiagonal_matrix(g, 0.9);
    CHECK_NOTHROW(t.validate());
    CHECK(t.a(0, 0) == doctest::Approx(0.95));
    CHECK(t.a(0, 1) == doctest::Approx(0.05));
    CHECK(t.a(10, 9) == doctest::Approx(0.05));
    CHECK(t.a(10, 10) == doctest::Approx(0.9));
    CHECK(t.a(10, 12) == 0.0);
    CHECK(t.a(20, 20) == doctest::Approx(0.95));
    const Matrix a3 = transition_power(t, 3);
    for (std::size_t i = 0; i < g.state_count(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < g.state_count(); ++j) sum += a3(i, j);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(tridiagonal_matrix(g, 1.0), InvalidArgument);
}

TEST_CASE("model validation") {
    EhmmModel m = EhmmModel::make(QuantGrid{});
    CHECK(m.states() == 21);
    m.initial[0] += 0.1;
    CHECK_THROWS_AS(m.validate(), InvalidArgument);
    CHECK_THROWS_AS(EhmmModel::make(QuantGrid{}, 0.9, 0.0), InvalidArgument);
}

TEST_CASE("emission at the exact estimate is the Gaussian peak") {
    const EhmmModel m = EhmmModel::make(QuantGrid{});
    // f(8, cwnd 64, 240000 B) = 8 and the chunk took 0.24 s, so Y = 8.
    const ChunkRecord c = testing::chunk(1, 240000, 0.0, 0.24, testing::tcp(64));
    const double peak = -std::log(0.5 * std::sqrt(2.0 * std::numbers::pi));
    CHECK(emission_logprob(m, 16, c) == doctest::Approx(peak).epsilon(1e-12));
    // One state down f drops to 6 Mbps (bdp 50 segments, 4 rounds).
    CHECK(emission_logprob(m, 15, c) < peak);
}

TEST_CASE("saturated estimates give equal emissions") {
    const EhmmModel m = EhmmModel::make(QuantGrid{});
    // 20 segments fit in one round for every c >= 3, so f = 3 there.
    const ChunkRecord c = testing::chunk(1, 30000, 0.0, 0.1, testing::tcp(64));
    const double ref = emission_logprob(m, 6, c);
    for (std::size_t i = 7; i < m.states(); ++i) CHECK(emission_logprob(m, i, c) == ref);
}

TEST_CASE("viterbi ties go to the lowest index") {
    Lattice lat;
    lat.log_emission = Matrix(3, 2, -1.0);
    lat.deltas = {0, 1, 1};
    Matrix a(2, 2, 0.5);
    lat.powers.emplace(1, a);
    const ViterbiResult r = viterbi_map(lat, {0.5, 0.5}, Exec::serial);
    CHECK(r.states == std::vector<std::size_t>{0, 0, 0});
    CHECK(r.log_score == doctest::Approx(3 * std::log(0.5) - 3.0));
}

TEST_CASE("viterbi follows a clean constant log") {
    const EhmmModel m = EhmmModel::make(QuantGrid{}, 0.9, 0.5);
    std::vector<ChunkRecord> chunks;
    // Every chunk observed at f(4 Mbps) with a warm window: 1 MB at 4 Mbps from
    // cwnd 100 > bdp saturates, so Y = 4.
    double t = 0.0;
    for (std::size_t n = 1; n <= 6; ++n) {
        chunks.push_back(testing::chunk_at(n, 1'000'000, t, 4.0, testing::tcp(100)));
        t = chunks.back().end_s + 1.0;
    }
    const ViterbiResult r = viterbi_map(m, testing::log_of(chunks));
    for (std::size_t s : r.states) CHECK(s == 8);
}

TEST_CASE("pair posterior consistency on a simulated session") {
    const EhmmModel m = EhmmModel::make(QuantGrid{});
    const SessionLog log = simulated_log(60, 11);
    const PairPosterior g = forward_backward(m, log);
    const std::size_t s = g.states();
    for (std::size_t n = 1; n <= g.pairs(); ++n) {
        double total = 0.0;
        for (std::size_t i = 0; i < s; ++i)
            for (std::size_t j = 0; j < s; ++j) {
                CHECK(g(i, j, n) >= 0.0);
                total += g(i, j, n);
            }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
        if (n == 1) continue;
        // Σ_j Γ[i, j, n] = Σ_k Γ[k, i, n-1]
        for (std::size_t i = 0; i < s; ++i) {
            double out = 0.0, in = 0.0;
            for (std::size_t j = 0; j < s; ++j) out += g(i, j, n), in += g(j, i, n - 1);
            CHECK(out == doctest::Approx(in).epsilon(1e-9).scale(1.0));
        }
    }
}

TEST_CASE("long sessions stay finite") {
    const EhmmModel m = EhmmModel::make(QuantGrid{});
    const SessionLog log = simulated_log(5000, 5);
    const PairPosterior g = forward_backward(m, log);
    const ViterbiResult v = viterbi_map(m, log);
    CHECK(std::isfinite(v.log_score));
    bool ok = true;
    for (std::size_t n = 1; n <= g.pairs(); n += 97) {
        double total = 0.0;
        for (std::size_t i = 0; i < g.states() * g.states(); ++i) {
            const double x = g.slice(n)[i];
            if (!std::isfinite(x)) ok = false;
            total += x;
        }
        if (std::abs(total - 1.0) > 1e-9) ok = false;
    }
    CHECK(ok);
}

TEST_CASE("sampler pins the last state and is reproducible") {
    const EhmmModel m = EhmmModel::make(QuantGrid{});
    const SessionLog log = simulated_log(40, 2);
    const ViterbiResult v = viterbi_map(m, log);
    const auto a = sample_paths(m, log, 16, 99, Exec::parallel);
    const auto b = sample_paths(m, log, 16, 99, Exec::serial);
    CHECK(a == b);
    for (const auto& p : a) {
        CHECK(p.size() == log.size());
        CHECK(p.back() == v.states.back());
    }
    CHECK_FALSE(a == sample_paths(m, log, 16, 100));
    // The first paths do not depend on how many are drawn.
    const auto fewer = sample_paths(m, log, 4, 99);
    for (std::size_t k = 0; k < 4; ++k) CHECK(fewer[k] == a[k]);
}

TEST_CASE("reconstruct_trace anchors, interpolates and holds") {
    const QuantGrid g;
    using testing::chunk;
    // Chunks start in windows 2 and 5 with states 2 (1 Mbps) and 8 (4 Mbps).
    const SessionLog log = testing::log_of({chunk(1, 1000, 6.0, 7.0), chunk(2, 1000, 21.0, 22.0)});
    const CapacityTrace tr = reconstruct_trace({2, 8}, log, g, 7);
    CHECK(std::vector<double>(tr.values().begin(), tr.values().end()) ==
          std::vector<double>{1.0, 1.0, 2.0, 3.0, 4.0, 4.0, 4.0});

    // Re-quantization of the interpolated values: 1 -> 2 over three steps.
    const SessionLog log2 = testing::log_of({chunk(1, 1000, 1.0, 2.0), chunk(2, 1000, 16.0, 17.0)});
    const CapacityTrace tr2 = reconstruct_trace({2, 4}, log2, g, 4);
    // 1 + 1/3 -> 1.5 and 1 + 2/3 -> 1.5
    CHECK(std::vector<double>(tr2.values().begin(), tr2.values().end()) == std::vector<double>{1.0, 1.5, 1.5, 2.0});

    // Two chunks in one window: the later one wins.
    const SessionLog log3 = testing::log_of({chunk(1, 1000, 1.0, 2.0), chunk(2, 1000, 3.0, 4.0)});
    CHECK(reconstruct_trace({2, 6}, log3, g, 1).values()[0] == 3.0);

    CHECK_THROWS_AS(reconstruct_trace({2}, log, g, 7), InvalidArgument);
    CHECK_THROWS_AS(reconstruct_trace({2, 8}, log, g, 4), InvalidArgument);
}

TEST_CASE("abduction shapes") {
    const EhmmModel m = EhmmModel::make(QuantGrid{});
    const SessionLog log = simulated_log(30, 3);
    const AbductionResult r = abduct(m, log, 5, 1, 50);
    CHECK(r.sample_states.size() == 5);
    CHECK(r.samples.size() == 5);
    CHECK(r.map_trace.windows() == 50);
    for (const CapacityTrace& t : r.samples) CHECK(t.windows() == 50);
    CHECK(r.map_states == viterbi_map(m, log).states);

    const SessionLog one = log.prefix(1);
    const AbductionResult single = abduct(m, one, 3, 1, 5);
    for (const auto& p : single.sample_states) CHECK(p == single.map_states);
}

}  // TEST_SUITE
