#pragma once

#include <cstdint>
#include <vector>

#include "veritas/core_model.hpp"

namespace testing {

inline veritas::TcpState tcp(std::int64_t cwnd = 10, double rtt = 0.08, double last_send = 0.0,
                             std::int64_t ssthresh = veritas::kInfiniteSsthresh) {
    veritas::TcpState w;
    w.cwnd = cwnd;
    w.ssthresh = ssthresh;
    w.min_rtt_s = rtt;
    w.srtt_s = rtt;
    w.rto_s = 0.2;
    w.last_send_s = last_send;
    return w;
}

inline veritas::ChunkRecord chunk(std::size_t n, std::int64_t size, double start, double end,
                                  const veritas::TcpState& w = tcp()) {
    veritas::ChunkRecord c;
    c.index = n;
    c.size_bytes = size;
    c.start_s = start;
    c.end_s = end;
    c.tcp_at_start = w;
    return c;
}

// Chunk whose observed throughput is `mbps`.
inline veritas::ChunkRecord chunk_at(std::size_t n, std::int64_t size, double start, double mbps,
                                     const veritas::TcpState& w = tcp()) {
    return chunk(n, size, start, start + static_cast<double>(size) * 8.0 / mbps / 1e6, w);
}

inline veritas::SessionLog log_of(std::vector<veritas::ChunkRecord> chunks) {
    veritas::SessionLog log;
    log.chunks = std::move(chunks);
    return log;
}

}  // namespace testing
