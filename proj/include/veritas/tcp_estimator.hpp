#pragma once

#include <cstdint>

#include "veritas/core_model.hpp"

namespace veritas {

struct EstimatorConfig {
    std::int64_t mss_bytes = 1500;
    std::int64_t init_cwnd = 10;
    double rto_floor_s = 0.2;

    void validate() const;
    bool operator==(const EstimatorConfig&) const = default;
};

std::int64_t get_segments(double bytes, const EstimatorConfig& config);

// Segments that fit in the bandwidth-delay product c * rtt.
std::int64_t bdp_segments(double c_mbps, double rtt_s, const EstimatorConfig& config);

// Slow start restart after an idle period longer than the RTO: cwnd halves
// once per elapsed RTO, floored at init_cwnd, and ssthresh keeps 3/4 of the
// pre-idle cwnd. Returns a modified copy.
TcpState apply_ssr(const TcpState& w, const EstimatorConfig& config);

// Result of playing a download through the round model.
struct RoundOutcome {
    double throughput_mbps = 0.0;
    std::int64_t rounds = 0;
    TcpState after;  // state at the end of the transfer, last_send reset to 0
};

// Round model behind estimate_throughput. Each round sends
// min(cwnd, bdp_segments) segments; cwnd doubles below ssthresh and grows by
// one above it. The window only grows in rounds where it was the binding
// limit, which bounds cwnd for the reported end state without changing the
// round count.
RoundOutcome run_rounds(double c_mbps, const TcpState& w, std::int64_t size_bytes,
                        const EstimatorConfig& config);

// Predicted observed throughput (Mbps) of a `size_bytes` download at constant
// capacity `c_mbps` starting from TCP state `w`. Never exceeds c.
double estimate_throughput(double c_mbps, const TcpState& w, std::int64_t size_bytes,
                           const EstimatorConfig& config);

}  // namespace veritas
