#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace veritas {

// Discretization of time into capacity windows of `delta_s` seconds and of
// capacity into multiples of `eps_mbps` up to `c_max_mbps`.
struct QuantGrid {
    double delta_s = 5.0;
    double eps_mbps = 0.5;
    double c_max_mbps = 10.0;

    // Throws InvalidArgument if the invariants do not hold.
    void validate() const;

    std::size_t state_count() const;
    double state_mbps(std::size_t i) const { return static_cast<double>(i) * eps_mbps; }

    bool operator==(const QuantGrid&) const = default;
};

// Window t (1-based) covers ((t-1)δ, tδ]; t = 0 belongs to window 1.
std::size_t window_index(double wall_time_s, const QuantGrid& grid);

// Nearest grid state, ties rounding up, clamped to the top state.
std::size_t quantize_capacity(double c_mbps, const QuantGrid& grid);

// Piecewise-constant capacity, one value per window. Queries past the last
// window hold the last value.
class CapacityTrace {
public:
    CapacityTrace(QuantGrid grid, std::vector<double> values_mbps);

    const QuantGrid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    std::size_t windows() const { return values_.size(); }

    // 1-based window value, holding the last window beyond the horizon.
    double window_value(std::size_t t) const;
    double value_at(double wall_time_s) const { return window_value(window_index(wall_time_s, grid_)); }

    bool operator==(const CapacityTrace&) const = default;

private:
    QuantGrid grid_;
    std::vector<double> values_;
};

inline constexpr std::int64_t kInfiniteSsthresh = 0x7fffffff;

struct TcpState {
    std::int64_t cwnd = 10;                  // segments
    std::int64_t ssthresh = kInfiniteSsthresh;  // segments
    double rto_s = 0.2;
    double min_rtt_s = 0.08;
    double last_send_s = 0.0;  // idle time since the last data send
    double srtt_s = 0.08;

    void validate() const;
    bool operator==(const TcpState&) const = default;
};

struct ChunkRecord {
    std::size_t index = 1;  // 1-based position in the session
    std::int64_t size_bytes = 0;
    double start_s = 0.0;
    double end_s = 0.0;
    TcpState tcp_at_start;
    std::size_t quality = 0;  // index into the ladder
    double buffer_at_start_s = 0.0;

    double download_s() const { return end_s - start_s; }
    double throughput_mbps() const {
        return static_cast<double>(size_bytes) * 8.0 / download_s() / 1e6;
    }

    bool operator==(const ChunkRecord&) const = default;
};

struct SessionLog {
    double delay_s = 0.08;
    double chunk_duration_s = 2.0;
    std::vector<ChunkRecord> chunks;

    std::size_t size() const { return chunks.size(); }
    bool empty() const { return chunks.empty(); }

    // Checks per-chunk invariants and ordering; names the offending chunk.
    void validate() const;

    // First `n` chunks.
    SessionLog prefix(std::size_t n) const;

    bool operator==(const SessionLog&) const = default;
};

// Δ_n = window(s_n) - window(s_{n-1}) for 2 <= n <= N.
std::size_t delta_n(const SessionLog& log, const QuantGrid& grid, std::size_t n);

struct Rung {
    double bitrate_mbps = 0.0;
    double ssim = 0.0;
    bool operator==(const Rung&) const = default;
};

// Encoded video: a quality ladder plus deterministic VBR chunk sizes.
struct VideoModel {
    double chunk_duration_s = 2.0;
    std::vector<Rung> ladder;
    double vbr_sigma = 0.15;
    std::size_t total_chunks = 300;

    void validate() const;

    std::size_t levels() const { return ladder.size(); }

    // Size of chunk n (1-based) at ladder level q. The jitter depends only on
    // (seed, n, bitrate) so a rung keeps its sizes across ladder edits.
    std::int64_t chunk_size(std::size_t n, std::size_t q, std::uint64_t seed) const;

    static std::vector<Rung> default_ladder();
    bool operator==(const VideoModel&) const = default;
};

enum class TraceKind { constant, square_wave, markov_walk };

struct TraceParams {
    TraceKind kind = TraceKind::constant;
    std::size_t windows = 120;
    double c_mbps = 5.0;    // constant
    double lo_mbps = 2.0;   // square_wave, markov_walk
    double hi_mbps = 8.0;   // square_wave, markov_walk
    std::size_t period = 4;  // square_wave: windows spent at each level
    double p_stay = 0.8;    // markov_walk
};

TraceKind parse_trace_kind(const std::string& name);
std::string to_string(TraceKind kind);

// Synthetic ground-truth capacity. Pure function of its arguments.
CapacityTrace generate_trace(const TraceParams& params, const QuantGrid& grid, std::uint64_t seed);

}  // namespace veritas
