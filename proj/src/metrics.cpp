#include "veritas/metrics.hpp"

#include <cmath>

#include "veritas/error.hpp"

namespace veritas {

MetricSet compute_metrics(const SessionResult& result) {
    if (result.ssim.empty()) throw InvalidArgument("compute_metrics: session has no chunks");
    if (result.ssim.size() != result.bitrate_mbps.size())
        throw InvariantError("compute_metrics: per-chunk lists differ in length");

    MetricSet m;
    const double watched = result.play_time_s + result.rebuffer_time_s;
    m.rebuffer_ratio = watched > 0.0 ? result.rebuffer_time_s / watched : 0.0;

    const auto n = static_cast<double>(result.ssim.size());
    double ssim = 0.0;
    double bitrate = 0.0;
    double change = 0.0;
    for (std::size_t k = 0; k < result.ssim.size(); ++k) {
        ssim += result.ssim[k];
        bitrate += result.bitrate_mbps[k];
        if (k > 0) change += std::abs(result.ssim[k] - result.ssim[k - 1]);
    }
    m.avg_ssim = ssim / n;
    m.avg_bitrate_mbps = bitrate / n;
    m.ssim_change = result.ssim.size() > 1 ? change / (n - 1.0) : 0.0;
    return m;
}

}  // namespace veritas
