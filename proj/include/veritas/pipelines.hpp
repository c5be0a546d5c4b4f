#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "veritas/config.hpp"
#include "veritas/ehmm.hpp"
#include "veritas/metrics.hpp"

namespace veritas {

// Observed-throughput curve: Y_n over [s_n, e_n], linear between e_n and
// s_{n+1}, holding Y_1 before the first chunk and Y_N after the last.
double baseline_value_at(const SessionLog& log, double wall_time_s);

// Exact per-window mean of the curve above. Not quantized.
CapacityTrace baseline_reconstruct(const SessionLog& log, const QuantGrid& grid, std::size_t windows);

// Windows needed to cover the log up to its last download.
std::size_t log_horizon(const SessionLog& log, const QuantGrid& grid);

struct WhatIfOptions {
    std::size_t samples = 5;
    std::size_t trim_rank = 2;  // low/high = trim_rank-th smallest/largest
    std::uint64_t seed = 0;     // sampler seed
    std::uint64_t session_seed = 0;  // chunk sizes in the replays
    std::size_t windows = 0;    // 0: cover log A
    std::optional<CapacityTrace> gtbw;
    Exec exec = Exec::parallel;
};

struct WhatIfReport {
    Setting setting_a;
    Setting setting_b;
    std::optional<MetricSet> gtbw;
    MetricSet baseline;
    std::vector<MetricSet> veritas;
    MetricSet veritas_low;
    MetricSet veritas_high;
    std::size_t trim_rank = 2;
};

// Per-metric order statistic: rank-th smallest (low) or largest (high). The
// rank shrinks to (K+1)/2 for small K so low <= high always holds.
MetricSet metric_rank(std::span<const MetricSet> values, std::size_t rank, bool from_top);

WhatIfReport whatif_counterfactual(const SessionLog& log_a, const Setting& setting_a, const Setting& setting_b,
                                   const EhmmModel& model, const WhatIfOptions& options);

struct DownloadPrediction {
    std::int64_t size_bytes = 0;
    double y_hat_mbps = 0.0;
    double d_hat_s = 0.0;
    double expected_capacity_mbps = 0.0;
};

// TCP state at the start of the next chunk: chunk N's logged state pushed
// through its rounds at capacity `c_mbps`, then idle until `next_start_s`.
TcpState next_tcp_state(const SessionLog& log, double c_mbps, double next_start_s, const EstimatorConfig& config);

// Viterbi on the prefix, expected capacity Δ windows ahead, then f.
std::vector<DownloadPrediction> predict_next_download(const EhmmModel& model, const SessionLog& prefix,
                                                      double next_start_s, std::span<const std::int64_t> candidates,
                                                      Exec exec = Exec::parallel);

// size * 8 / harmonic mean of the last five observed throughputs.
std::vector<DownloadPrediction> associational_predictor(const SessionLog& prefix,
                                                        std::span<const std::int64_t> candidates);

nlohmann::json to_json(const MetricSet& m);
nlohmann::json to_json(const WhatIfReport& report);
nlohmann::json to_json(const DownloadPrediction& p);

}  // namespace veritas
