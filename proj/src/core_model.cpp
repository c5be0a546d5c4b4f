#include "veritas/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "veritas/error.hpp"

namespace veritas {

namespace {
// Absorbs floating-point noise in quotients such as 15.000000000000002 / 5.
constexpr double kSnap = 1e-9;
}  // namespace

void QuantGrid::validate() const {
    if (!(delta_s > 0.0)) throw InvalidArgument("grid: delta_s must be > 0");
    if (!(eps_mbps > 0.0)) throw InvalidArgument("grid: eps_mbps must be > 0");
    if (!(c_max_mbps >= 0.0)) throw InvalidArgument("grid: c_max_mbps must be >= 0");
    const double ratio = c_max_mbps / eps_mbps;
    if (std::abs(ratio - std::round(ratio)) > 1e-6)
        throw InvalidArgument("grid: c_max_mbps must be a multiple of eps_mbps");
}

std::size_t QuantGrid::state_count() const {
    return static_cast<std::size_t>(std::llround(c_max_mbps / eps_mbps)) + 1;
}

std::size_t window_index(double wall_time_s, const QuantGrid& grid) {
    if (wall_time_s < 0.0) throw InvalidArgument("window_index: negative wall time");
    const double w = std::ceil(wall_time_s / grid.delta_s - kSnap);
    return std::max<std::size_t>(1, static_cast<std::size_t>(w));
}

std::size_t quantize_capacity(double c_mbps, const QuantGrid& grid) {
    if (c_mbps < 0.0) throw InvalidArgument("quantize_capacity: negative capacity");
    const double i = std::floor(c_mbps / grid.eps_mbps + 0.5 + kSnap);
    const std::size_t top = grid.state_count() - 1;
    if (i >= static_cast<double>(top)) return top;
    return static_cast<std::size_t>(i);
}

CapacityTrace::CapacityTrace(QuantGrid grid, std::vector<double> values_mbps)
    : grid_(grid), values_(std::move(values_mbps)) {
    grid_.validate();
    if (values_.empty()) throw InvalidArgument("capacity trace must have at least one window");
    for (double v : values_)
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("capacity trace values must be finite and >= 0");
}

double CapacityTrace::window_value(std::size_t t) const {
    if (t == 0) t = 1;
    return values_[std::min(t, values_.size()) - 1];
}

void TcpState::validate() const {
    if (cwnd < 1) throw InvariantError("tcp: cwnd must be >= 1");
    if (ssthresh < 2) throw InvariantError("tcp: ssthresh must be >= 2");
    if (!(rto_s > 0.0)) throw InvariantError("tcp: rto must be > 0");
    if (!(min_rtt_s > 0.0)) throw InvariantError("tcp: min_rtt must be > 0");
    if (!(srtt_s >= min_rtt_s)) throw InvariantError("tcp: srtt must be >= min_rtt");
    if (!(last_send_s >= 0.0)) throw InvariantError("tcp: last_send must be >= 0");
}

void SessionLog::validate() const {
    if (!(delay_s > 0.0)) throw InvariantError("log: delay_s must be > 0");
    if (!(chunk_duration_s > 0.0)) throw InvariantError("log: chunk_duration_s must be > 0");
    for (std::size_t k = 0; k < chunks.size(); ++k) {
        const ChunkRecord& c = chunks[k];
        const std::string who = "chunk " + std::to_string(k + 1);
        if (c.index != k + 1) throw InvariantError(who + ": index must be " + std::to_string(k + 1));
        if (c.size_bytes <= 0) throw InvariantError(who + ": size_bytes must be > 0");
        if (!(c.start_s >= 0.0)) throw InvariantError(who + ": start_s must be >= 0");
        if (!(c.end_s > c.start_s)) throw InvariantError(who + ": end_s must be > start_s");
        if (k > 0 && c.start_s < chunks[k - 1].end_s)
            throw InvariantError(who + ": starts before the previous chunk ends");
        if (!(c.buffer_at_start_s >= 0.0)) throw InvariantError(who + ": buffer_s must be >= 0");
        try {
            c.tcp_at_start.validate();
        } catch (const InvariantError& e) {
            throw InvariantError(who + ": " + e.what());
        }
    }
}

SessionLog SessionLog::prefix(std::size_t n) const {
    SessionLog out = *this;
    out.chunks.resize(std::min(n, chunks.size()));
    return out;
}

std::size_t delta_n(const SessionLog& log, const QuantGrid& grid, std::size_t n) {
    if (n < 2 || n > log.size())
        throw InvalidArgument("delta_n: n=" + std::to_string(n) + " outside [2, " + std::to_string(log.size()) + "]");
    const std::size_t cur = window_index(log.chunks[n - 1].start_s, grid);
    const std::size_t prev = window_index(log.chunks[n - 2].start_s, grid);
    if (cur < prev) throw InvariantError("delta_n: chunk starts out of order");
    return cur - prev;
}

void VideoModel::validate() const {
    if (!(chunk_duration_s > 0.0)) throw InvalidArgument("video: chunk_duration_s must be > 0");
    if (ladder.empty()) throw InvalidArgument("video: ladder is empty");
    if (total_chunks == 0) throw InvalidArgument("video: total_chunks must be >= 1");
    if (!(vbr_sigma >= 0.0)) throw InvalidArgument("video: vbr_sigma must be >= 0");
    for (std::size_t q = 0; q < ladder.size(); ++q) {
        const Rung& r = ladder[q];
        if (!(r.bitrate_mbps > 0.0)) throw InvalidArgument("video: bitrates must be > 0");
        if (!(r.ssim > 0.0 && r.ssim < 1.0)) throw InvalidArgument("video: ssim must lie in (0,1)");
        if (q > 0) {
            if (!(r.bitrate_mbps > ladder[q - 1].bitrate_mbps))
                throw InvalidArgument("video: ladder must be sorted by ascending bitrate");
            if (!(r.ssim > ladder[q - 1].ssim))
                throw InvalidArgument("video: ssim must increase with bitrate");
        }
    }
}

std::int64_t VideoModel::chunk_size(std::size_t n, std::size_t q, std::uint64_t seed) const {
    const double bitrate = ladder.at(q).bitrate_mbps;
    const double nominal = bitrate * chunk_duration_s * 1e6 / 8.0;
    double jitter = 1.0;
    if (vbr_sigma > 0.0) {
        const auto kbps = static_cast<std::uint64_t>(std::llround(bitrate * 1000.0));
        std::seed_seq seq{seed, static_cast<std::uint64_t>(n), kbps};
        std::mt19937_64 rng(seq);
        std::lognormal_distribution<double> dist(0.0, vbr_sigma);
        jitter = dist(rng);
    }
    return std::max<std::int64_t>(1, std::llround(nominal * jitter));
}

std::vector<Rung> VideoModel::default_ladder() {
    return {{0.1, 0.908}, {0.5, 0.935}, {1.2, 0.958}, {2.4, 0.975}, {4.0, 0.986}};
}

TraceKind parse_trace_kind(const std::string& name) {
    if (name == "constant") return TraceKind::constant;
    if (name == "square" || name == "square_wave") return TraceKind::square_wave;
    if (name == "markov" || name == "markov_walk") return TraceKind::markov_walk;
    throw InvalidArgument("unknown trace kind '" + name + "' (expected constant, square, markov)");
}

std::string to_string(TraceKind kind) {
    switch (kind) {
        case TraceKind::constant: return "constant";
        case TraceKind::square_wave: return "square_wave";
        case TraceKind::markov_walk: return "markov_walk";
    }
    return "unknown";
}

CapacityTrace generate_trace(const TraceParams& p, const QuantGrid& grid, std::uint64_t seed) {
    grid.validate();
    if (p.windows == 0) throw InvalidArgument("generate_trace: windows must be >= 1");
    std::vector<double> values;
    values.reserve(p.windows);

    switch (p.kind) {
        case TraceKind::constant:
            if (!(p.c_mbps >= 0.0)) throw InvalidArgument("generate_trace: c must be >= 0");
            values.assign(p.windows, p.c_mbps);
            break;

        case TraceKind::square_wave:
            if (!(p.lo_mbps >= 0.0) || p.lo_mbps > p.hi_mbps)
                throw InvalidArgument("generate_trace: need 0 <= lo <= hi");
            if (p.period == 0) throw InvalidArgument("generate_trace: period must be >= 1");
            for (std::size_t t = 0; t < p.windows; ++t)
                values.push_back((t / p.period) % 2 == 0 ? p.lo_mbps : p.hi_mbps);
            break;

        case TraceKind::markov_walk: {
            if (!(p.lo_mbps >= 0.0) || p.lo_mbps > p.hi_mbps)
                throw InvalidArgument("generate_trace: need 0 <= lo <= hi");
            if (!(p.p_stay > 0.0 && p.p_stay < 1.0))
                throw InvalidArgument("generate_trace: p_stay must lie in (0,1)");
            // Walk on the ε-grid restricted to [lo, hi].
            const auto lo = static_cast<std::int64_t>(std::ceil(p.lo_mbps / grid.eps_mbps - kSnap));
            const auto hi = static_cast<std::int64_t>(std::floor(p.hi_mbps / grid.eps_mbps + kSnap));
            if (lo > hi) throw InvalidArgument("generate_trace: [lo, hi] contains no grid point");
            std::mt19937_64 rng(seed);
            std::uniform_int_distribution<std::int64_t> start(lo, hi);
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            std::int64_t state = start(rng);
            for (std::size_t t = 0; t < p.windows; ++t) {
                values.push_back(static_cast<double>(state) * grid.eps_mbps);
                const double u = unit(rng);
                if (u >= p.p_stay) {
                    std::int64_t step = u < p.p_stay + (1.0 - p.p_stay) / 2.0 ? -1 : 1;
                    if (state + step < lo || state + step > hi) step = -step;
                    state = std::clamp(state + step, lo, hi);
                }
            }
            break;
        }
    }
    return CapacityTrace(grid, std::move(values));
}

}  // namespace veritas
