#include <algorithm>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "veritas/error.hpp"
#include "veritas/pipelines.hpp"

using namespace veritas;

namespace {

// Y = 2 Mbps over [0, 1], Y = 4 Mbps over [3, 4].
SessionLog two_chunk_log() {
    return testing::log_of({testing::chunk(1, 250000, 0.0, 1.0), testing::chunk(2, 500000, 3.0, 4.0)});
}

// Six warm chunks observed at exactly f(4 Mbps) = 4, one every 3 s.
SessionLog clean_log() {
    std::vector<ChunkRecord> chunks;
    double t = 0.0;
    for (std::size_t n = 1; n <= 6; ++n) {
        chunks.push_back(testing::chunk_at(n, 1'000'000, t, 4.0, testing::tcp(100)));
        t = chunks.back().end_s + 1.0;
    }
    return testing::log_of(chunks);
}

Setting small_setting(std::size_t chunks) {
    Setting s = default_run_config().setting;
    s.video.total_chunks = chunks;
    return s;
}

}  // namespace

TEST_SUITE("pipelines") {

TEST_CASE("baseline curve") {
    const SessionLog log = two_chunk_log();
    CHECK(baseline_value_at(log, 0.0) == doctest::Approx(2.0));
    CHECK(baseline_value_at(log, 0.5) == doctest::Approx(2.0));
    CHECK(baseline_value_at(log, 2.0) == doctest::Approx(3.0));
    CHECK(baseline_value_at(log, 3.5) == doctest::Approx(4.0));
    CHECK(baseline_value_at(log, 50.0) == doctest::Approx(4.0));
    CHECK_THROWS_AS(baseline_value_at(SessionLog{}, 1.0), InvalidArgument);
}

TEST_CASE("baseline window means") {
    const SessionLog log = two_chunk_log();
    // [0,1]: 2, [1,3]: ramp 2 -> 4 (area 6), [3,5]: 4 -> 16 / 5.
    const CapacityTrace tr = baseline_reconstruct(log, QuantGrid{}, 2);
    CHECK(tr.values()[0] == doctest::Approx(3.2).epsilon(1e-12));
    CHECK(tr.values()[1] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(log_horizon(log, QuantGrid{}) == 1);
}

TEST_CASE("metric order statistics") {
    std::vector<MetricSet> v;
    for (double x : {0.5, 0.1, 0.4, 0.2, 0.3}) v.push_back({x, 1.0 - x, 10.0 * x, x / 2.0});
    const MetricSet low = metric_rank(v, 2, false);
    const MetricSet high = metric_rank(v, 2, true);
    CHECK(low.rebuffer_ratio == 0.2);
    CHECK(high.rebuffer_ratio == 0.4);
    CHECK(low.avg_ssim == doctest::Approx(0.6));
    CHECK(high.avg_ssim == doctest::Approx(0.8));

    const std::vector<MetricSet> two{{0.1, 0.9, 1.0, 0.0}, {0.3, 0.8, 2.0, 0.1}};
    CHECK(metric_rank(two, 2, false).rebuffer_ratio == 0.1);
    CHECK(metric_rank(two, 2, true).rebuffer_ratio == 0.3);
    CHECK_THROWS_AS(metric_rank(two, 0, false), InvalidArgument);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t k = 1; k <= 9; ++k) {
        std::vector<MetricSet> s(k);
        for (MetricSet& m : s) m = {u(rng), u(rng), u(rng), u(rng)};
        const MetricSet lo = metric_rank(s, 2, false), hi = metric_rank(s, 2, true);
        std::vector<double> r;
        for (const MetricSet& m : s) r.push_back(m.rebuffer_ratio);
        std::sort(r.begin(), r.end());
        const double median = r[(k - 1) / 2];
        CHECK(lo.rebuffer_ratio <= median);
        CHECK(median <= hi.rebuffer_ratio);
    }
}

TEST_CASE("counterfactual report") {
    TraceParams p;
    p.kind = TraceKind::markov_walk;
    p.windows = 80;
    const CapacityTrace truth = generate_trace(p, QuantGrid{}, 8);
    const Setting a = small_setting(40);
    const SessionLog log = run_session(truth, a.video, a.player, 8).log;
    const Setting b = apply_change(a, "abr=bba");
    const EhmmModel model = EhmmModel::make(QuantGrid{});

    WhatIfOptions opt;
    opt.samples = 6;
    opt.seed = 3;
    opt.session_seed = 8;
    opt.gtbw = truth;
    const WhatIfReport par = whatif_counterfactual(log, a, b, model, opt);
    opt.exec = Exec::serial;
    const WhatIfReport ser = whatif_counterfactual(log, a, b, model, opt);
    CHECK(par.veritas == ser.veritas);
    CHECK(par.baseline == ser.baseline);
    REQUIRE(par.gtbw);
    CHECK(*par.gtbw == compute_metrics(run_session(truth, b.video, b.player, 8)));
    CHECK(par.veritas.size() == 6);
    CHECK(par.veritas_low.rebuffer_ratio <= par.veritas_high.rebuffer_ratio);
    CHECK(par.veritas_low.avg_ssim <= par.veritas_high.avg_ssim);

    const auto j = to_json(par);
    CHECK(j.at("schemes").at("veritas").size() == 6);
    CHECK(j.at("schemes").contains("gtbw"));
    CHECK(j.at("setting_b").at("player").at("abr").at("kind") == "bba");

    opt.samples = 1;
    CHECK_THROWS_AS(whatif_counterfactual(log, a, b, model, opt), InvalidArgument);
}

TEST_CASE("replaying setting A on its own trace reproduces the log") {
    TraceParams p;
    p.kind = TraceKind::markov_walk;
    p.windows = 80;
    const CapacityTrace truth = generate_trace(p, QuantGrid{}, 9);
    const Setting a = small_setting(30);
    const SessionResult first = run_session(truth, a.video, a.player, 9);
    CHECK(run_session(truth, a.video, a.player, 9).log == first.log);
}

TEST_CASE("next-download prediction") {
    const EhmmModel model = EhmmModel::make(QuantGrid{});
    const SessionLog prefix = clean_log();
    const double end = prefix.chunks.back().end_s;
    const std::vector<std::int64_t> sizes{1'000'000, 2'000'000};

    // State 8 sits far from the grid edges, so A^Δ spreads it symmetrically
    // and the expected capacity stays at 4 Mbps.
    const double soon = end + 0.1;
    const auto p0 = predict_next_download(model, prefix, soon, sizes);
    REQUIRE(p0.size() == 2);
    CHECK(p0[0].expected_capacity_mbps == doctest::Approx(4.0).epsilon(1e-12));
    const TcpState w = next_tcp_state(prefix, 4.0, soon, model.estimator);
    CHECK(w.last_send_s == doctest::Approx(0.1));
    for (const DownloadPrediction& d : p0) {
        CHECK(d.y_hat_mbps == estimate_throughput(4.0, w, d.size_bytes, model.estimator));
        CHECK(d.d_hat_s * d.y_hat_mbps == doctest::Approx(8.0 * static_cast<double>(d.size_bytes) / 1e6));
    }

    const auto p1 = predict_next_download(model, prefix, end + 5.0, sizes);
    CHECK(p1[0].expected_capacity_mbps == doctest::Approx(4.0).epsilon(1e-12));

    // Candidate order does not matter.
    const std::vector<std::int64_t> reversed{2'000'000, 1'000'000};
    const auto pr = predict_next_download(model, prefix, soon, reversed);
    CHECK(pr[0].y_hat_mbps == p0[1].y_hat_mbps);
    CHECK(pr[1].y_hat_mbps == p0[0].y_hat_mbps);

    CHECK_THROWS_AS(predict_next_download(model, SessionLog{}, 1.0, sizes), InvalidArgument);
    CHECK_THROWS_AS(next_tcp_state(prefix, 4.0, end - 1.0, model.estimator), InvalidArgument);
    const std::vector<std::int64_t> bad{0};
    CHECK_THROWS_AS(predict_next_download(model, prefix, soon, bad), InvalidArgument);
}

TEST_CASE("associational predictor") {
    const SessionLog log = two_chunk_log();
    const std::vector<std::int64_t> sizes{300000};
    const auto p = associational_predictor(log, sizes);
    const double hm = 2.0 / (1.0 / 2.0 + 1.0 / 4.0);
    CHECK(p[0].y_hat_mbps == doctest::Approx(hm));
    CHECK(p[0].d_hat_s == doctest::Approx(300000 * 8.0 / hm / 1e6));
}

}  // TEST_SUITE
