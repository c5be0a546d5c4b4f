#include "veritas/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "veritas/error.hpp"
#include "veritas/io.hpp"

namespace veritas {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
    if (!j.is_object()) throw InvalidArgument("config: '" + where + "' must be an object");
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) throw InvalidArgument("config: unknown key '" + where + "." + key + "'");
}

template <typename T>
void read_into(const json& j, const char* key, T& out, const std::string& where) {
    const auto it = j.find(key);
    if (it == j.end()) return;
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw InvalidArgument("config: '" + where + "." + key + "' has the wrong type");
    }
}

double parse_number(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw InvalidArgument("change '" + key + "': '" + text + "' is not a number");
    }
}

}  // namespace

EhmmModel RunConfig::model() const {
    return EhmmModel::make(grid, ehmm.p_stay, ehmm.sigma_mbps, setting.player.estimator);
}

void RunConfig::validate() const {
    grid.validate();
    setting.video.validate();
    setting.player.validate(setting.video);
    model();
}

std::vector<Rung> capped_ladder(double max_mbps) {
    std::vector<Rung> out;
    for (const Rung& r : VideoModel::default_ladder())
        if (r.bitrate_mbps <= max_mbps + 1e-12) out.push_back(r);
    if (out.empty()) throw InvalidArgument("ladder_max " + std::to_string(max_mbps) + " removes every rung");
    return out;
}

RunConfig default_run_config() {
    RunConfig c;
    c.setting.video.ladder = VideoModel::default_ladder();
    return c;
}

RunConfig merge_config(const RunConfig& base, const json& j) {
    RunConfig c = base;
    reject_unknown(j, {"grid", "video", "player", "ehmm", "seed", "tool_version"}, "config");
    if (j.contains("seed")) {
        std::uint64_t seed = 0;
        read_into(j, "seed", seed, "config");
        c.seed = seed;
    }
    if (const auto it = j.find("grid"); it != j.end()) {
        reject_unknown(*it, {"delta_s", "eps_mbps", "c_max_mbps"}, "grid");
        read_into(*it, "delta_s", c.grid.delta_s, "grid");
        read_into(*it, "eps_mbps", c.grid.eps_mbps, "grid");
        read_into(*it, "c_max_mbps", c.grid.c_max_mbps, "grid");
    }
    if (const auto it = j.find("video"); it != j.end()) {
        reject_unknown(*it, {"chunk_duration_s", "ladder", "ladder_max_mbps", "vbr_sigma", "total_chunks"}, "video");
        VideoModel& v = c.setting.video;
        read_into(*it, "chunk_duration_s", v.chunk_duration_s, "video");
        read_into(*it, "vbr_sigma", v.vbr_sigma, "video");
        read_into(*it, "total_chunks", v.total_chunks, "video");
        if (const auto lad = it->find("ladder"); lad != it->end()) {
            if (!lad->is_array()) throw InvalidArgument("config: 'video.ladder' must be an array");
            v.ladder.clear();
            for (const json& r : *lad) {
                reject_unknown(r, {"bitrate_mbps", "ssim"}, "video.ladder[]");
                Rung rung;
                read_into(r, "bitrate_mbps", rung.bitrate_mbps, "video.ladder[]");
                read_into(r, "ssim", rung.ssim, "video.ladder[]");
                v.ladder.push_back(rung);
            }
        }
        if (it->contains("ladder_max_mbps")) {
            double cap = 0.0;
            read_into(*it, "ladder_max_mbps", cap, "video");
            v.ladder = capped_ladder(cap);
        }
    }
    if (const auto it = j.find("player"); it != j.end()) {
        reject_unknown(*it, {"buffer_cap_s", "delay_s", "backend", "abr", "estimator", "initial_ssthresh", "hold_trace"},
                       "player");
        PlayerConfig& p = c.setting.player;
        read_into(*it, "buffer_cap_s", p.buffer_cap_s, "player");
        read_into(*it, "delay_s", p.delay_s, "player");
        read_into(*it, "initial_ssthresh", p.initial_ssthresh, "player");
        read_into(*it, "hold_trace", p.hold_trace, "player");
        if (it->contains("backend")) {
            std::string name;
            read_into(*it, "backend", name, "player");
            p.backend = parse_backend(name);
        }
        if (const auto abr = it->find("abr"); abr != it->end()) {
            reject_unknown(*abr, {"kind", "horizon", "rebuffer_penalty", "history", "bba_reservoir", "bba_upper", "bola_gamma"},
                           "player.abr");
            if (abr->contains("kind")) {
                std::string name;
                read_into(*abr, "kind", name, "player.abr");
                p.abr.kind = parse_abr_kind(name);
            }
            read_into(*abr, "horizon", p.abr.horizon, "player.abr");
            read_into(*abr, "rebuffer_penalty", p.abr.rebuffer_penalty, "player.abr");
            read_into(*abr, "history", p.abr.history, "player.abr");
            read_into(*abr, "bba_reservoir", p.abr.bba_reservoir, "player.abr");
            read_into(*abr, "bba_upper", p.abr.bba_upper, "player.abr");
            read_into(*abr, "bola_gamma", p.abr.bola_gamma, "player.abr");
        }
        if (const auto est = it->find("estimator"); est != it->end()) {
            reject_unknown(*est, {"mss_bytes", "init_cwnd", "rto_floor_s"}, "player.estimator");
            read_into(*est, "mss_bytes", p.estimator.mss_bytes, "player.estimator");
            read_into(*est, "init_cwnd", p.estimator.init_cwnd, "player.estimator");
            read_into(*est, "rto_floor_s", p.estimator.rto_floor_s, "player.estimator");
        }
    }
    if (const auto it = j.find("ehmm"); it != j.end()) {
        reject_unknown(*it, {"p_stay", "sigma_mbps"}, "ehmm");
        read_into(*it, "p_stay", c.ehmm.p_stay, "ehmm");
        read_into(*it, "sigma_mbps", c.ehmm.sigma_mbps, "ehmm");
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path, const RunConfig& base) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(0, "config " + path.string() + ": " + e.what());
    }
    return merge_config(base, j);
}

Setting apply_change(const Setting& setting, const std::string& change) {
    const auto eq = change.find('=');
    if (eq == std::string::npos || eq == 0)
        throw InvalidArgument("change '" + change + "' is not of the form key=value");
    const std::string key = change.substr(0, eq);
    const std::string value = change.substr(eq + 1);
    Setting out = setting;
    if (key == "abr") {
        out.player.abr.kind = parse_abr_kind(value);
    } else if (key == "buffer") {
        out.player.buffer_cap_s = parse_number(key, value);
    } else if (key == "ladder_max") {
        out.video.ladder = value == "none" ? VideoModel::default_ladder() : capped_ladder(parse_number(key, value));
    } else if (key == "horizon") {
        out.player.abr.horizon = static_cast<std::size_t>(parse_number(key, value));
    } else if (key == "rebuffer_penalty") {
        out.player.abr.rebuffer_penalty = parse_number(key, value);
    } else if (key == "backend") {
        out.player.backend = parse_backend(value);
    } else {
        throw InvalidArgument("unknown change key '" + key +
                              "' (expected abr, buffer, ladder_max, horizon, rebuffer_penalty, backend)");
    }
    out.video.validate();
    out.player.validate(out.video);
    return out;
}

json to_json(const QuantGrid& g) {
    return {{"delta_s", g.delta_s}, {"eps_mbps", g.eps_mbps}, {"c_max_mbps", g.c_max_mbps}};
}

json to_json(const VideoModel& v) {
    json ladder = json::array();
    for (const Rung& r : v.ladder) ladder.push_back({{"bitrate_mbps", r.bitrate_mbps}, {"ssim", r.ssim}});
    return {{"chunk_duration_s", v.chunk_duration_s},
            {"ladder", ladder},
            {"vbr_sigma", v.vbr_sigma},
            {"total_chunks", v.total_chunks}};
}

json to_json(const PlayerConfig& p) {
    return {{"buffer_cap_s", p.buffer_cap_s},
            {"delay_s", p.delay_s},
            {"backend", to_string(p.backend)},
            {"initial_ssthresh", p.initial_ssthresh},
            {"hold_trace", p.hold_trace},
            {"abr",
             {{"kind", to_string(p.abr.kind)},
              {"horizon", p.abr.horizon},
              {"rebuffer_penalty", p.abr.rebuffer_penalty},
              {"history", p.abr.history},
              {"bba_reservoir", p.abr.bba_reservoir},
              {"bba_upper", p.abr.bba_upper},
              {"bola_gamma", p.abr.bola_gamma}}},
            {"estimator",
             {{"mss_bytes", p.estimator.mss_bytes},
              {"init_cwnd", p.estimator.init_cwnd},
              {"rto_floor_s", p.estimator.rto_floor_s}}}};
}

json to_json(const Setting& s) { return {{"video", to_json(s.video)}, {"player", to_json(s.player)}}; }

json to_json(const RunConfig& c) {
    json j{{"grid", to_json(c.grid)},
           {"video", to_json(c.setting.video)},
           {"player", to_json(c.setting.player)},
           {"ehmm", {{"p_stay", c.ehmm.p_stay}, {"sigma_mbps", c.ehmm.sigma_mbps}}}};
    if (c.seed) j["seed"] = *c.seed;
    return j;
}

}  // namespace veritas
