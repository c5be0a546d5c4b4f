#include "veritas/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "veritas/error.hpp"

namespace veritas::io {

using nlohmann::json;

double round_sig9(double x) {
    if (x == 0.0 || !std::isfinite(x)) return x;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return std::strtod(buf, nullptr);
}

namespace {

std::string format9(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

json tcp_to_json(const TcpState& w) {
    return json{{"cwnd", w.cwnd},
                {"ssthresh", w.ssthresh},
                {"rto_s", round_sig9(w.rto_s)},
                {"min_rtt_s", round_sig9(w.min_rtt_s)},
                {"last_send_s", round_sig9(w.last_send_s)},
                {"srtt_s", round_sig9(w.srtt_s)}};
}

template <typename T>
T field(const json& obj, const char* name, std::size_t line) {
    const auto it = obj.find(name);
    if (it == obj.end()) throw ParseError(line, std::string("missing field '") + name + "'");
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ParseError(line, std::string("field '") + name + "' has the wrong type");
    }
}

TcpState tcp_from_json(const json& obj, std::size_t line) {
    const auto it = obj.find("tcp");
    if (it == obj.end() || !it->is_object())
        throw ParseError(line, "missing field 'tcp' (per-chunk TCP state cwnd, ssthresh, rto, min_rtt, last_send is required)");
    const json& t = *it;
    TcpState w;
    w.cwnd = field<std::int64_t>(t, "cwnd", line);
    w.ssthresh = field<std::int64_t>(t, "ssthresh", line);
    w.rto_s = field<double>(t, "rto_s", line);
    w.min_rtt_s = field<double>(t, "min_rtt_s", line);
    w.last_send_s = field<double>(t, "last_send_s", line);
    w.srtt_s = field<double>(t, "srtt_s", line);
    return w;
}

}  // namespace

void write_log(std::ostream& out, const SessionLog& log) {
    json header{{"format", kLogFormat},
                {"delay_s", round_sig9(log.delay_s)},
                {"chunk_duration_s", round_sig9(log.chunk_duration_s)}};
    out << header.dump() << '\n';
    for (const ChunkRecord& c : log.chunks) {
        json row{{"n", c.index},
                 {"size_bytes", c.size_bytes},
                 {"start_s", round_sig9(c.start_s)},
                 {"end_s", round_sig9(c.end_s)},
                 {"quality", c.quality},
                 {"buffer_s", round_sig9(c.buffer_at_start_s)},
                 {"tcp", tcp_to_json(c.tcp_at_start)}};
        out << row.dump() << '\n';
    }
}

SessionLog read_log(std::istream& in) {
    SessionLog log;
    std::string text;
    std::size_t line = 0;
    bool have_header = false;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ParseError(line, std::string("invalid JSON: ") + e.what());
        }
        if (!obj.is_object()) throw ParseError(line, "expected a JSON object");
        if (!have_header) {
            const auto fmt = field<std::string>(obj, "format", line);
            if (fmt != kLogFormat) throw ParseError(line, "unsupported log format '" + fmt + "'");
            log.delay_s = field<double>(obj, "delay_s", line);
            log.chunk_duration_s = field<double>(obj, "chunk_duration_s", line);
            have_header = true;
            continue;
        }
        ChunkRecord c;
        c.index = field<std::size_t>(obj, "n", line);
        c.size_bytes = field<std::int64_t>(obj, "size_bytes", line);
        c.start_s = field<double>(obj, "start_s", line);
        c.end_s = field<double>(obj, "end_s", line);
        c.quality = field<std::size_t>(obj, "quality", line);
        c.buffer_at_start_s = field<double>(obj, "buffer_s", line);
        c.tcp_at_start = tcp_from_json(obj, line);
        log.chunks.push_back(c);
    }
    if (!have_header) throw ParseError(0, "empty log: missing header line");
    log.validate();
    return log;
}

void write_log(const std::filesystem::path& path, const SessionLog& log) {
    std::ostringstream out;
    write_log(out, log);
    write_text(path, out.str());
}

SessionLog read_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("io_error", "cannot open " + path.string());
    return read_log(in);
}

void write_trace_csv(std::ostream& out, const CapacityTrace& trace) {
    out << "window_start_s,mbps\n";
    const double delta = trace.grid().delta_s;
    for (std::size_t t = 0; t < trace.windows(); ++t)
        out << format9(static_cast<double>(t) * delta) << ',' << format9(trace.values()[t]) << '\n';
}

CapacityTrace read_trace_csv(std::istream& in, const QuantGrid& grid) {
    std::string text;
    std::size_t line = 0;
    if (!std::getline(in, text)) throw ParseError(0, "empty trace file");
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text != "window_start_s,mbps") throw ParseError(line, "expected header 'window_start_s,mbps'");

    std::vector<double> starts;
    std::vector<double> values;
    while (std::getline(in, text)) {
        ++line;
        if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
        const auto comma = text.find(',');
        if (comma == std::string::npos) throw ParseError(line, "expected two comma-separated columns");
        char* end = nullptr;
        const std::string a = text.substr(0, comma);
        const std::string b = text.substr(comma + 1);
        const double start = std::strtod(a.c_str(), &end);
        if (end == a.c_str()) throw ParseError(line, "bad window_start_s");
        const double mbps = std::strtod(b.c_str(), &end);
        if (end == b.c_str()) throw ParseError(line, "bad mbps");
        if (mbps < 0.0) throw ParseError(line, "negative capacity");
        starts.push_back(start);
        values.push_back(mbps);
    }
    if (values.empty()) throw ParseError(0, "trace has no rows");
    QuantGrid g = grid;
    if (starts.size() >= 2) g.delta_s = round_sig9(starts[1] - starts[0]);
    for (std::size_t k = 0; k < starts.size(); ++k) {
        const double expected = static_cast<double>(k) * g.delta_s;
        if (std::abs(starts[k] - expected) > 1e-6 * std::max(1.0, expected))
            throw ParseError(k + 2, "window_start_s is not a multiple of the window length");
    }
    return CapacityTrace(g, std::move(values));
}

void write_trace_csv(const std::filesystem::path& path, const CapacityTrace& trace) {
    std::ostringstream out;
    write_trace_csv(out, trace);
    write_text(path, out.str());
}

CapacityTrace read_trace_csv(const std::filesystem::path& path, const QuantGrid& grid) {
    std::ifstream in(path);
    if (!in) throw Error("io_error", "cannot open " + path.string());
    return read_trace_csv(in, grid);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io_error", "cannot write " + path.string());
    out << text;
    if (!out) throw Error("io_error", "write failed for " + path.string());
}

}  // namespace veritas::io
