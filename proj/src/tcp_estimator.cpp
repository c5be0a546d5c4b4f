#include "veritas/tcp_estimator.hpp"

#include <algorithm>
#include <cmath>

#include "veritas/error.hpp"

namespace veritas {

void EstimatorConfig::validate() const {
    if (mss_bytes <= 0) throw InvalidArgument("estimator: mss_bytes must be > 0");
    if (init_cwnd < 1) throw InvalidArgument("estimator: init_cwnd must be >= 1");
    if (!(rto_floor_s > 0.0)) throw InvalidArgument("estimator: rto_floor_s must be > 0");
}

std::int64_t get_segments(double bytes, const EstimatorConfig& config) {
    if (!(bytes > 0.0)) return 0;
    // 1e-9 keeps exact multiples (e.g. 30000 / 1500) from rounding up.
    return static_cast<std::int64_t>(std::ceil(bytes / static_cast<double>(config.mss_bytes) - 1e-9));
}

std::int64_t bdp_segments(double c_mbps, double rtt_s, const EstimatorConfig& config) {
    return get_segments(c_mbps * rtt_s * 1e6 / 8.0, config);
}

TcpState apply_ssr(const TcpState& w, const EstimatorConfig& config) {
    TcpState out = w;
    const double rto = std::max(w.rto_s, config.rto_floor_s);
    if (!(w.last_send_s > rto)) return out;

    const double elapsed = std::floor(w.last_send_s / rto + 1e-9);
    const std::int64_t before = w.cwnd;
    for (double k = 0; k < elapsed && out.cwnd > config.init_cwnd; k += 1.0)
        out.cwnd = std::max(out.cwnd >> 1, config.init_cwnd);
    out.ssthresh = std::max(w.ssthresh, (before >> 1) + (before >> 2));
    return out;
}

RoundOutcome run_rounds(double c_mbps, const TcpState& w, std::int64_t size_bytes,
                        const EstimatorConfig& config) {
    RoundOutcome out;
    out.after = apply_ssr(w, config);
    out.after.last_send_s = 0.0;
    if (!(c_mbps > 0.0) || size_bytes <= 0) return out;

    const double rtt = w.min_rtt_s;
    const std::int64_t data = get_segments(static_cast<double>(size_bytes), config);
    const std::int64_t bdp = bdp_segments(c_mbps, rtt, config);

    std::int64_t cwnd = out.after.cwnd;
    const std::int64_t ssthresh = out.after.ssthresh;
    std::int64_t sent = 0;
    std::int64_t rounds = 0;
    while (sent < data) {
        if (cwnd > bdp) {
            // Pipe-limited from here on: every remaining round carries bdp.
            rounds += (data - sent + bdp - 1) / bdp;
            break;
        }
        sent += cwnd;
        cwnd = cwnd < ssthresh ? 2 * cwnd : cwnd + 1;
        ++rounds;
    }
    out.after.cwnd = cwnd;
    out.rounds = rounds;

    const double bytes = static_cast<double>(size_bytes);
    out.throughput_mbps = std::min(bytes * 8.0 / (static_cast<double>(rounds) * rtt) / 1e6, c_mbps);
    return out;
}

double estimate_throughput(double c_mbps, const TcpState& w, std::int64_t size_bytes,
                           const EstimatorConfig& config) {
    if (!(c_mbps > 0.0)) return 0.0;
    return run_rounds(c_mbps, w, size_bytes, config).throughput_mbps;
}

}  // namespace veritas
