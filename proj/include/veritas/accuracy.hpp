#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "veritas/ehmm.hpp"
#include "veritas/tcp_estimator.hpp"

namespace veritas {

// Sweep of the estimator against the round-level backend. Each connection has
// a constant capacity and delay and downloads `downloads` payloads separated
// by idle gaps, so later downloads start from a warm, possibly decayed state.
struct AccuracySweep {
    std::size_t connections = 400;
    std::size_t downloads = 10;
    double c_lo_mbps = 0.5, c_hi_mbps = 10.0;
    double delay_lo_s = 0.005, delay_hi_s = 0.040;
    double payload_lo_bytes = 2e3, payload_hi_bytes = 4e6;  // log-uniform
    double gap_lo_s = 0.12, gap_hi_s = 8.0;

    void validate() const;
};

struct AccuracySample {
    double c_mbps = 0.0;
    double delay_s = 0.0;
    std::int64_t payload_bytes = 0;
    double gap_s = 0.0;
    double observed_mbps = 0.0;   // round-level backend
    double predicted_mbps = 0.0;  // estimator

    double abs_error() const;
    double rel_error() const;  // (predicted - observed) / observed
};

std::vector<AccuracySample> run_accuracy(const AccuracySweep& sweep, std::uint64_t seed,
                                         const EstimatorConfig& config = {}, Exec exec = Exec::parallel);

double fraction_within(const std::vector<AccuracySample>& samples, double tolerance_mbps);

// Sorted |relative error| with its empirical CDF.
std::vector<std::pair<double, double>> relative_error_cdf(const std::vector<AccuracySample>& samples);

}  // namespace veritas
