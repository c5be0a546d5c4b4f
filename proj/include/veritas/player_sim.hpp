#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "veritas/abr.hpp"
#include "veritas/core_model.hpp"
#include "veritas/tcp_estimator.hpp"

namespace veritas {

// How a download's duration is derived from the capacity trace.
//  model_f:   the estimator evaluated at the capacity of the start window,
//             which makes abduction exactly invertible.
//  round_sim: per-round transfer that re-reads capacity every round.
enum class Backend { model_f, round_sim };

Backend parse_backend(const std::string& name);
std::string to_string(Backend backend);

struct PlayerConfig {
    double buffer_cap_s = 5.0;
    AbrParams abr;
    double delay_s = 0.08;  // end-to-end RTT
    Backend backend = Backend::round_sim;
    EstimatorConfig estimator;
    std::int64_t initial_ssthresh = kInfiniteSsthresh;
    bool hold_trace = true;  // past the horizon, hold the last window

    void validate(const VideoModel& video) const;
    bool operator==(const PlayerConfig&) const = default;
};

struct DownloadOutcome {
    double download_s = 0.0;
    std::int64_t rounds = 0;
    TcpState after;  // end-of-transfer state, last_send = 0
};

DownloadOutcome backend_model_f(const CapacityTrace& trace, const TcpState& w, std::int64_t size_bytes,
                                double t_start, const EstimatorConfig& config, bool hold = true);

DownloadOutcome backend_round_sim(const CapacityTrace& trace, const TcpState& w, std::int64_t size_bytes,
                                  double t_start, const EstimatorConfig& config, bool hold = true);

DownloadOutcome download(Backend backend, const CapacityTrace& trace, const TcpState& w, std::int64_t size_bytes,
                         double t_start, const EstimatorConfig& config, bool hold = true);

struct SessionResult {
    SessionLog log;
    double play_time_s = 0.0;
    double rebuffer_time_s = 0.0;
    double startup_time_s = 0.0;
    double wall_time_s = 0.0;
    std::vector<double> ssim;
    std::vector<double> bitrate_mbps;  // S_n * 8 / L per chunk
    std::vector<double> buffer_after_s;  // buffer right after each chunk lands
};

// One streaming session over the whole video. Pure function of its inputs;
// `seed` selects the VBR chunk sizes.
SessionResult run_session(const CapacityTrace& trace, const VideoModel& video, const PlayerConfig& config,
                          std::uint64_t seed);

// TCP state a fresh session starts with.
TcpState initial_tcp_state(const PlayerConfig& config);

}  // namespace veritas
