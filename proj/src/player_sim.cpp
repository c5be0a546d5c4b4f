#include "veritas/player_sim.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "veritas/error.hpp"

namespace veritas {

Backend parse_backend(const std::string& name) {
    if (name == "model_f" || name == "modelf" || name == "f") return Backend::model_f;
    if (name == "round_sim" || name == "roundsim" || name == "rounds") return Backend::round_sim;
    throw InvalidArgument("unknown backend '" + name + "' (expected model_f or round_sim)");
}

std::string to_string(Backend backend) {
    return backend == Backend::model_f ? "model_f" : "round_sim";
}

void PlayerConfig::validate(const VideoModel& video) const {
    abr.validate();
    estimator.validate();
    if (!(delay_s > 0.0)) throw InvalidArgument("player: delay_s must be > 0");
    if (!(buffer_cap_s >= video.chunk_duration_s))
        throw InvalidArgument("player: buffer_cap_s must be at least one chunk duration");
    if (initial_ssthresh < 2) throw InvalidArgument("player: initial_ssthresh must be >= 2");
}

namespace {

// Earliest time >= t with positive capacity, and that capacity. A time on a
// window boundary that is still blocked moves on to the next window.
std::pair<double, double> next_positive(const CapacityTrace& trace, double t, bool hold) {
    std::size_t idx = window_index(t, trace.grid());
    double time = t;
    while (true) {
        if (!hold && idx > trace.windows())
            throw SimulationError("capacity trace exhausted at t=" + std::to_string(time) + " s");
        const double c = trace.window_value(idx);
        if (c > 0.0) return {c, time};
        if (idx >= trace.windows())
            throw SimulationError("capacity trace exhausted: capacity stays at zero after t=" + std::to_string(time) + " s");
        time = static_cast<double>(idx) * trace.grid().delta_s;
        ++idx;
    }
}

std::int64_t grow(std::int64_t cwnd, std::int64_t ssthresh) { return cwnd < ssthresh ? 2 * cwnd : cwnd + 1; }

}  // namespace

DownloadOutcome backend_model_f(const CapacityTrace& trace, const TcpState& w, std::int64_t size_bytes,
                                double t_start, const EstimatorConfig& config, bool hold) {
    if (size_bytes <= 0) throw InvalidArgument("download: chunk size must be > 0");
    const auto [c, t0] = next_positive(trace, t_start, hold);
    const RoundOutcome r = run_rounds(c, w, size_bytes, config);
    DownloadOutcome out;
    out.download_s = (t0 - t_start) + static_cast<double>(size_bytes) * 8.0 / r.throughput_mbps / 1e6;
    out.rounds = r.rounds;
    out.after = r.after;
    return out;
}

DownloadOutcome backend_round_sim(const CapacityTrace& trace, const TcpState& w, std::int64_t size_bytes,
                                  double t_start, const EstimatorConfig& config, bool hold) {
    if (size_bytes <= 0) throw InvalidArgument("download: chunk size must be > 0");
    TcpState state = apply_ssr(w, config);
    const double rtt = w.srtt_s;
    const double mss = static_cast<double>(config.mss_bytes);
    double remaining = static_cast<double>(size_bytes);
    double t = t_start;
    std::int64_t rounds = 0;

    while (true) {
        const auto [c, t0] = next_positive(trace, t, hold);
        t = t0;
        const double pipe_bytes = c * rtt * 1e6 / 8.0;
        const double window_bytes = static_cast<double>(state.cwnd) * mss;
        const bool window_limited = window_bytes < pipe_bytes;
        const bool cwnd_binding = state.cwnd <= bdp_segments(c, rtt, config);
        const double carried = std::min(window_bytes, pipe_bytes);
        const bool last = remaining <= carried;

        // A round is latency bound (one RTT) unless the pipe is full, in which
        // case the final partial round only needs its serialization time.
        double dt = rtt;
        if (last && rounds > 0 && !window_limited) dt = rtt * remaining / pipe_bytes;
        t += dt;
        ++rounds;
        if (cwnd_binding) state.cwnd = grow(state.cwnd, state.ssthresh);
        if (last) break;
        remaining -= carried;
    }

    state.last_send_s = 0.0;
    return {t - t_start, rounds, state};
}

DownloadOutcome download(Backend backend, const CapacityTrace& trace, const TcpState& w, std::int64_t size_bytes,
                         double t_start, const EstimatorConfig& config, bool hold) {
    return backend == Backend::model_f ? backend_model_f(trace, w, size_bytes, t_start, config, hold)
                                       : backend_round_sim(trace, w, size_bytes, t_start, config, hold);
}

TcpState initial_tcp_state(const PlayerConfig& config) {
    TcpState w;
    w.cwnd = config.estimator.init_cwnd;
    w.ssthresh = config.initial_ssthresh;
    w.min_rtt_s = config.delay_s;
    w.srtt_s = config.delay_s;
    w.rto_s = std::max(config.estimator.rto_floor_s, 2.0 * config.delay_s);
    w.last_send_s = 0.0;
    return w;
}

SessionResult run_session(const CapacityTrace& trace, const VideoModel& video, const PlayerConfig& config,
                          std::uint64_t seed) {
    video.validate();
    config.validate(video);

    const double chunk_s = video.chunk_duration_s;
    const double gate = config.buffer_cap_s - chunk_s;
    const std::size_t levels = video.levels();

    SessionResult res;
    res.log.delay_s = config.delay_s;
    res.log.chunk_duration_s = chunk_s;
    res.log.chunks.reserve(video.total_chunks);

    TcpState tcp = initial_tcp_state(config);
    std::vector<double> observed;
    std::optional<std::size_t> last_quality;
    double t = 0.0;
    double buffer = 0.0;
    double prev_end = 0.0;
    bool playing = false;

    for (std::size_t n = 1; n <= video.total_chunks; ++n) {
        // Full buffer: stay idle until there is room for one more chunk.
        if (buffer > gate) {
            const double idle = buffer - gate;
            t += idle;
            res.play_time_s += idle;
            buffer = gate;
        }

        Observables obs;
        obs.buffer_s = buffer;
        obs.buffer_cap_s = config.buffer_cap_s;
        obs.chunk_duration_s = chunk_s;
        obs.past_throughput_mbps = observed;
        obs.last_quality = last_quality;
        obs.ladder = video.ladder;
        const std::size_t ahead = std::min(config.abr.horizon, video.total_chunks - n + 1);
        for (std::size_t k = 0; k < ahead; ++k) {
            std::vector<std::int64_t> sizes(levels);
            for (std::size_t q = 0; q < levels; ++q) sizes[q] = video.chunk_size(n + k, q, seed);
            obs.sizes_ahead.push_back(std::move(sizes));
        }
        const std::size_t q = choose_quality(obs, config.abr);
        const std::int64_t size = obs.sizes_ahead.front()[q];

        TcpState w = tcp;
        w.last_send_s = n == 1 ? 0.0 : t - prev_end;
        const DownloadOutcome dl = download(config.backend, trace, w, size, t, config.estimator, config.hold_trace);
        const double d = dl.download_s;

        ChunkRecord rec;
        rec.index = n;
        rec.size_bytes = size;
        rec.start_s = t;
        rec.end_s = t + d;
        rec.tcp_at_start = w;
        rec.quality = q;
        rec.buffer_at_start_s = buffer;

        if (!playing) {
            res.startup_time_s += d;
        } else if (buffer >= d) {
            buffer -= d;
            res.play_time_s += d;
        } else {
            res.play_time_s += buffer;
            res.rebuffer_time_s += d - buffer;
            buffer = 0.0;
        }
        t = rec.end_s;
        buffer += chunk_s;
        playing = true;

        res.log.chunks.push_back(rec);
        res.ssim.push_back(video.ladder[q].ssim);
        res.bitrate_mbps.push_back(static_cast<double>(size) * 8.0 / chunk_s / 1e6);
        res.buffer_after_s.push_back(buffer);
        observed.push_back(rec.throughput_mbps());
        last_quality = q;
        tcp = dl.after;
        prev_end = t;
    }

    // Play out what is left in the buffer.
    res.play_time_s += buffer;
    t += buffer;
    res.wall_time_s = t;
    return res;
}

}  // namespace veritas
