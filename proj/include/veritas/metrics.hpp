#pragma once

#include "veritas/player_sim.hpp"

namespace veritas {

struct MetricSet {
    double rebuffer_ratio = 0.0;  // stall / (play + stall); startup excluded
    double avg_ssim = 0.0;
    double avg_bitrate_mbps = 0.0;
    double ssim_change = 0.0;  // mean |ssim_n - ssim_{n-1}|

    bool operator==(const MetricSet&) const = default;
};

MetricSet compute_metrics(const SessionResult& result);

}  // namespace veritas
