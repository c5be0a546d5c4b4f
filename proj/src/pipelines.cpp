#include "veritas/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "veritas/abr.hpp"
#include "veritas/error.hpp"
#include "veritas/io.hpp"

namespace veritas {

using nlohmann::json;

namespace {

// Integral of the observed-throughput curve over [a, b].
double baseline_integral(const SessionLog& log, double a, double b) {
    const auto& ch = log.chunks;
    double total = 0.0;
    auto add_const = [&](double lo, double hi, double v) {
        lo = std::max(lo, a);
        hi = std::min(hi, b);
        if (hi > lo) total += v * (hi - lo);
    };
    auto add_linear = [&](double t0, double v0, double t1, double v1) {
        const double lo = std::max(t0, a);
        const double hi = std::min(t1, b);
        if (!(hi > lo)) return;
        const auto at = [&](double t) { return v0 + (v1 - v0) * (t - t0) / (t1 - t0); };
        total += 0.5 * (at(lo) + at(hi)) * (hi - lo);
    };
    const double inf = std::numeric_limits<double>::infinity();
    add_const(-inf, ch.front().start_s, ch.front().throughput_mbps());
    for (std::size_t n = 0; n < ch.size(); ++n) {
        add_const(ch[n].start_s, ch[n].end_s, ch[n].throughput_mbps());
        if (n + 1 < ch.size() && ch[n + 1].start_s > ch[n].end_s)
            add_linear(ch[n].end_s, ch[n].throughput_mbps(), ch[n + 1].start_s, ch[n + 1].throughput_mbps());
    }
    add_const(ch.back().end_s, inf, ch.back().throughput_mbps());
    return total;
}

}  // namespace

double baseline_value_at(const SessionLog& log, double t) {
    if (log.empty()) throw InvalidArgument("baseline: log has no chunks");
    const auto& ch = log.chunks;
    if (t <= ch.front().start_s) return ch.front().throughput_mbps();
    for (std::size_t n = 0; n < ch.size(); ++n) {
        if (t <= ch[n].end_s) {
            if (t >= ch[n].start_s) return ch[n].throughput_mbps();
            // Gap before chunk n.
            const ChunkRecord& p = ch[n - 1];
            const double x = (t - p.end_s) / (ch[n].start_s - p.end_s);
            return p.throughput_mbps() + (ch[n].throughput_mbps() - p.throughput_mbps()) * x;
        }
        if (n + 1 < ch.size() && t < ch[n + 1].start_s) {
            const double x = (t - ch[n].end_s) / (ch[n + 1].start_s - ch[n].end_s);
            return ch[n].throughput_mbps() + (ch[n + 1].throughput_mbps() - ch[n].throughput_mbps()) * x;
        }
    }
    return ch.back().throughput_mbps();
}

CapacityTrace baseline_reconstruct(const SessionLog& log, const QuantGrid& grid, std::size_t windows) {
    if (log.empty()) throw InvalidArgument("baseline: log has no chunks");
    if (windows == 0) throw InvalidArgument("baseline: horizon must be >= 1 window");
    grid.validate();
    std::vector<double> values(windows);
    for (std::size_t t = 0; t < windows; ++t) {
        const double a = static_cast<double>(t) * grid.delta_s;
        values[t] = baseline_integral(log, a, a + grid.delta_s) / grid.delta_s;
    }
    return CapacityTrace(grid, std::move(values));
}

std::size_t log_horizon(const SessionLog& log, const QuantGrid& grid) {
    if (log.empty()) throw InvalidArgument("log has no chunks");
    return window_index(log.chunks.back().end_s, grid);
}

MetricSet metric_rank(std::span<const MetricSet> values, std::size_t rank, bool from_top) {
    if (values.empty()) throw InvalidArgument("metric_rank: no values");
    if (rank == 0) throw InvalidArgument("metric_rank: rank must be >= 1");
    const std::size_t r = std::min(rank, (values.size() + 1) / 2);
    auto pick = [&](double MetricSet::*field) {
        std::vector<double> v;
        v.reserve(values.size());
        for (const MetricSet& m : values) v.push_back(m.*field);
        std::sort(v.begin(), v.end());
        return from_top ? v[v.size() - r] : v[r - 1];
    };
    MetricSet out;
    out.rebuffer_ratio = pick(&MetricSet::rebuffer_ratio);
    out.avg_ssim = pick(&MetricSet::avg_ssim);
    out.avg_bitrate_mbps = pick(&MetricSet::avg_bitrate_mbps);
    out.ssim_change = pick(&MetricSet::ssim_change);
    return out;
}

WhatIfReport whatif_counterfactual(const SessionLog& log_a, const Setting& setting_a, const Setting& setting_b,
                                   const EhmmModel& model, const WhatIfOptions& options) {
    log_a.validate();
    if (log_a.empty()) throw InvalidArgument("whatif: log A has no chunks");
    if (options.samples < 2) throw InvalidArgument("whatif: need at least 2 samples for low/high");
    setting_b.video.validate();
    setting_b.player.validate(setting_b.video);

    const std::size_t windows = options.windows ? options.windows : log_horizon(log_a, model.grid);
    const AbductionResult ab = abduct(model, log_a, options.samples, options.seed, windows, options.exec);
    const CapacityTrace base = baseline_reconstruct(log_a, model.grid, windows);

    auto replay = [&](const CapacityTrace& trace) {
        return compute_metrics(run_session(trace, setting_b.video, setting_b.player, options.session_seed));
    };

    WhatIfReport report;
    report.setting_a = setting_a;
    report.setting_b = setting_b;
    report.trim_rank = options.trim_rank;
    if (options.gtbw) report.gtbw = replay(*options.gtbw);
    report.baseline = replay(base);

    report.veritas.resize(ab.samples.size());
    const auto k_total = static_cast<std::ptrdiff_t>(ab.samples.size());
    std::string failure;
#pragma omp parallel for schedule(dynamic) if (options.exec == Exec::parallel)
    for (std::ptrdiff_t k = 0; k < k_total; ++k) {
        try {
            report.veritas[static_cast<std::size_t>(k)] = replay(ab.samples[static_cast<std::size_t>(k)]);
        } catch (const std::exception& e) {
#pragma omp critical(veritas_replay_failure)
            if (failure.empty()) failure = e.what();
        }
    }
    if (!failure.empty()) throw SimulationError("whatif replay: " + failure);

    report.veritas_low = metric_rank(report.veritas, options.trim_rank, false);
    report.veritas_high = metric_rank(report.veritas, options.trim_rank, true);
    return report;
}

TcpState next_tcp_state(const SessionLog& log, double c_mbps, double next_start_s, const EstimatorConfig& config) {
    if (log.empty()) throw InvalidArgument("predict: prefix has no chunks");
    const ChunkRecord& last = log.chunks.back();
    if (next_start_s < last.end_s) throw InvalidArgument("predict: next chunk starts before the prefix ends");
    TcpState w = run_rounds(c_mbps, last.tcp_at_start, last.size_bytes, config).after;
    w.last_send_s = next_start_s - last.end_s;
    return w;
}

std::vector<DownloadPrediction> predict_next_download(const EhmmModel& model, const SessionLog& prefix,
                                                      double next_start_s, std::span<const std::int64_t> candidates,
                                                      Exec exec) {
    if (prefix.empty()) throw InvalidArgument("predict: prefix has no chunks");
    model.validate();
    const ViterbiResult map = viterbi_map(model, prefix, exec);
    const std::size_t last = map.states.back();
    const std::size_t w_last = window_index(prefix.chunks.back().start_s, model.grid);
    const std::size_t w_next = window_index(next_start_s, model.grid);
    const Matrix step = transition_power(model.transition, w_next - w_last);

    double c_exp = 0.0;
    for (std::size_t j = 0; j < model.states(); ++j) c_exp += step(last, j) * model.grid.state_mbps(j);
    const TcpState w = next_tcp_state(prefix, model.grid.state_mbps(last), next_start_s, model.estimator);

    std::vector<DownloadPrediction> out;
    out.reserve(candidates.size());
    for (std::int64_t size : candidates) {
        if (size <= 0) throw InvalidArgument("predict: candidate sizes must be > 0");
        DownloadPrediction p;
        p.size_bytes = size;
        p.expected_capacity_mbps = c_exp;
        p.y_hat_mbps = estimate_throughput(c_exp, w, size, model.estimator);
        p.d_hat_s = p.y_hat_mbps > 0.0 ? static_cast<double>(size) * 8.0 / p.y_hat_mbps / 1e6
                                       : std::numeric_limits<double>::infinity();
        out.push_back(p);
    }
    return out;
}

std::vector<DownloadPrediction> associational_predictor(const SessionLog& prefix,
                                                        std::span<const std::int64_t> candidates) {
    if (prefix.empty()) throw InvalidArgument("predict: prefix has no chunks");
    std::vector<double> y;
    y.reserve(prefix.size());
    for (const ChunkRecord& c : prefix.chunks) y.push_back(c.throughput_mbps());
    const double hm = harmonic_mean_last(y, 5);
    std::vector<DownloadPrediction> out;
    out.reserve(candidates.size());
    for (std::int64_t size : candidates) {
        if (size <= 0) throw InvalidArgument("predict: candidate sizes must be > 0");
        out.push_back({size, hm, static_cast<double>(size) * 8.0 / hm / 1e6, hm});
    }
    return out;
}

json to_json(const MetricSet& m) {
    return {{"rebuffer_ratio", io::round_sig9(m.rebuffer_ratio)},
            {"avg_ssim", io::round_sig9(m.avg_ssim)},
            {"avg_bitrate_mbps", io::round_sig9(m.avg_bitrate_mbps)},
            {"ssim_change", io::round_sig9(m.ssim_change)}};
}

json to_json(const WhatIfReport& r) {
    json schemes;
    if (r.gtbw) schemes["gtbw"] = to_json(*r.gtbw);
    schemes["baseline"] = to_json(r.baseline);
    json samples = json::array();
    for (const MetricSet& m : r.veritas) samples.push_back(to_json(m));
    schemes["veritas"] = samples;
    return {{"setting_a", to_json(r.setting_a)},
            {"setting_b", to_json(r.setting_b)},
            {"schemes", schemes},
            {"trim_rank", r.trim_rank},
            {"veritas_low", to_json(r.veritas_low)},
            {"veritas_high", to_json(r.veritas_high)}};
}

json to_json(const DownloadPrediction& p) {
    return {{"size_bytes", p.size_bytes},
            {"y_hat_mbps", io::round_sig9(p.y_hat_mbps)},
            {"d_hat_s", io::round_sig9(p.d_hat_s)},
            {"expected_capacity_mbps", io::round_sig9(p.expected_capacity_mbps)}};
}

}  // namespace veritas
