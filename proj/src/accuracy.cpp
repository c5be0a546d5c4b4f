#include "veritas/accuracy.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "veritas/error.hpp"
#include "veritas/player_sim.hpp"

namespace veritas {

void AccuracySweep::validate() const {
    if (connections == 0 || downloads == 0) throw InvalidArgument("accuracy: empty sweep");
    if (!(c_lo_mbps > 0.0 && c_lo_mbps <= c_hi_mbps)) throw InvalidArgument("accuracy: bad capacity range");
    if (!(delay_lo_s > 0.0 && delay_lo_s <= delay_hi_s)) throw InvalidArgument("accuracy: bad delay range");
    if (!(payload_lo_bytes >= 1.0 && payload_lo_bytes <= payload_hi_bytes))
        throw InvalidArgument("accuracy: bad payload range");
    if (!(gap_lo_s >= 0.0 && gap_lo_s <= gap_hi_s)) throw InvalidArgument("accuracy: bad gap range");
}

double AccuracySample::abs_error() const { return std::abs(predicted_mbps - observed_mbps); }
double AccuracySample::rel_error() const { return (predicted_mbps - observed_mbps) / observed_mbps; }

namespace {

std::vector<AccuracySample> run_connection(const AccuracySweep& sw, std::uint64_t seed, std::size_t index,
                                           const EstimatorConfig& config) {
    std::seed_seq seq{seed, static_cast<std::uint64_t>(index)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> cap(sw.c_lo_mbps, sw.c_hi_mbps);
    std::uniform_real_distribution<double> delay(sw.delay_lo_s, sw.delay_hi_s);
    std::uniform_real_distribution<double> log_payload(std::log(sw.payload_lo_bytes), std::log(sw.payload_hi_bytes));
    std::uniform_real_distribution<double> gap(sw.gap_lo_s, sw.gap_hi_s);

    const double c = cap(rng);
    const double d = delay(rng);
    // A one-window trace with δ large enough to hold the whole connection.
    const CapacityTrace trace(QuantGrid{1e6, 0.5, 10.0}, {c});

    TcpState w;
    w.cwnd = config.init_cwnd;
    w.min_rtt_s = d;
    w.srtt_s = d;
    w.rto_s = std::max(config.rto_floor_s, 2.0 * d);

    std::vector<AccuracySample> out;
    out.reserve(sw.downloads);
    double t = 0.0;
    for (std::size_t k = 0; k < sw.downloads; ++k) {
        AccuracySample s;
        s.c_mbps = c;
        s.delay_s = d;
        s.payload_bytes = std::max<std::int64_t>(1, std::llround(std::exp(log_payload(rng))));
        s.gap_s = k == 0 ? 0.0 : gap(rng);
        t += s.gap_s;
        w.last_send_s = s.gap_s;
        const DownloadOutcome dl = backend_round_sim(trace, w, s.payload_bytes, t, config);
        s.observed_mbps = static_cast<double>(s.payload_bytes) * 8.0 / dl.download_s / 1e6;
        s.predicted_mbps = estimate_throughput(c, w, s.payload_bytes, config);
        out.push_back(s);
        t += dl.download_s;
        w = dl.after;
    }
    return out;
}

}  // namespace

std::vector<AccuracySample> run_accuracy(const AccuracySweep& sweep, std::uint64_t seed,
                                         const EstimatorConfig& config, Exec exec) {
    sweep.validate();
    config.validate();
    std::vector<std::vector<AccuracySample>> per(sweep.connections);
    const auto total = static_cast<std::ptrdiff_t>(sweep.connections);
#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
    for (std::ptrdiff_t i = 0; i < total; ++i)
        per[static_cast<std::size_t>(i)] = run_connection(sweep, seed, static_cast<std::size_t>(i), config);

    std::vector<AccuracySample> out;
    out.reserve(sweep.connections * sweep.downloads);
    for (auto& v : per) out.insert(out.end(), v.begin(), v.end());
    return out;
}

double fraction_within(const std::vector<AccuracySample>& samples, double tolerance_mbps) {
    if (samples.empty()) return 0.0;
    const auto hits = std::count_if(samples.begin(), samples.end(),
                                    [&](const AccuracySample& s) { return s.abs_error() <= tolerance_mbps; });
    return static_cast<double>(hits) / static_cast<double>(samples.size());
}

std::vector<std::pair<double, double>> relative_error_cdf(const std::vector<AccuracySample>& samples) {
    std::vector<double> err;
    err.reserve(samples.size());
    for (const AccuracySample& s : samples) err.push_back(std::abs(s.rel_error()));
    std::sort(err.begin(), err.end());
    std::vector<std::pair<double, double>> out;
    out.reserve(err.size());
    const auto n = static_cast<double>(err.size());
    for (std::size_t i = 0; i < err.size(); ++i) out.emplace_back(err[i], static_cast<double>(i + 1) / n);
    return out;
}

}  // namespace veritas
