// veritas: trace generation, session emulation, abduction, what-if and
// interventional queries from the command line.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "veritas/accuracy.hpp"
#include "veritas/config.hpp"
#include "veritas/error.hpp"
#include "veritas/io.hpp"
#include "veritas/kernels.hpp"
#include "veritas/pipelines.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace veritas;

namespace {

// Flags shared by the commands that build a RunConfig. Unset flags leave the
// config file (or defaults) alone.
struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> abr;
    std::optional<double> buffer;
    std::optional<std::string> backend;
    std::optional<double> ladder_max;
    std::optional<double> delay;
    std::optional<std::size_t> chunks;
    std::optional<double> vbr_sigma;
    std::optional<double> sigma;
    std::optional<double> p_stay;
    std::optional<double> delta;
    std::optional<double> eps;
    std::optional<double> c_max;

    void add_setting(CLI::App* app) {
        app->add_option("--abr", abr, "ABR policy: mpc, bba, bola");
        app->add_option("--buffer", buffer, "buffer cap in seconds");
        app->add_option("--backend", backend, "download model: model_f, round_sim");
        app->add_option("--ladder-max", ladder_max, "drop ladder rungs above this bitrate (Mbps)");
        app->add_option("--delay", delay, "end-to-end RTT in seconds");
        app->add_option("--chunks", chunks, "chunks in the video");
        app->add_option("--vbr-sigma", vbr_sigma, "lognormal chunk-size jitter");
    }
    void add_model(CLI::App* app) {
        app->add_option("--sigma", sigma, "emission noise in Mbps");
        app->add_option("--p-stay", p_stay, "transition stay probability");
    }
    void add_base(CLI::App* app) {
        app->add_option("--config", config_path, "run config JSON");
        app->add_option("--seed", seed, "random seed");
        app->add_option("--delta", delta, "seconds per capacity window");
        app->add_option("--eps", eps, "capacity quantum in Mbps");
        app->add_option("--c-max", c_max, "top capacity state in Mbps");
    }

    RunConfig resolve(bool need_seed) const {
        RunConfig c = default_run_config();
        if (!config_path.empty()) c = load_config(config_path, c);
        if (seed) c.seed = seed;
        if (need_seed && !c.seed) throw InvalidArgument("--seed is required (no implicit seeds)");
        if (delta) c.grid.delta_s = *delta;
        if (eps) c.grid.eps_mbps = *eps;
        if (c_max) c.grid.c_max_mbps = *c_max;
        Setting& s = c.setting;
        if (abr) s.player.abr.kind = parse_abr_kind(*abr);
        if (buffer) s.player.buffer_cap_s = *buffer;
        if (backend) s.player.backend = parse_backend(*backend);
        if (ladder_max) s.video.ladder = capped_ladder(*ladder_max);
        if (delay) s.player.delay_s = *delay;
        if (chunks) s.video.total_chunks = *chunks;
        if (vbr_sigma) s.video.vbr_sigma = *vbr_sigma;
        if (sigma) c.ehmm.sigma_mbps = *sigma;
        if (p_stay) c.ehmm.p_stay = *p_stay;
        c.validate();
        return c;
    }
};

json envelope(const RunConfig& config) {
    return {{"tool_version", kToolVersion}, {"config", to_json(config)}};
}

void emit(const std::string& path, const json& doc) {
    const std::string text = doc.dump(2) + "\n";
    if (path.empty() || path == "-")
        std::cout << text;
    else
        io::write_text(path, text);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::seed_seq seq{seed, index};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

std::vector<std::int64_t> parse_sizes(const std::string& text) {
    std::vector<std::int64_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(item, &used);
            if (used != item.size() || v <= 0) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw InvalidArgument("--candidates: '" + item + "' is not a positive byte count");
        }
    }
    if (out.empty()) throw InvalidArgument("--candidates: no sizes given");
    return out;
}

std::string trace_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "trace_%03zu.csv", i);
    return buf;
}

}  // namespace

int main(int argc, char** argv) {
    kernels::configure_threads_from_env();

    CLI::App app{"Causal inference for ABR video streaming logs"};
    app.require_subcommand(1);
    CommonFlags flags;

    // gen-traces
    auto* gen = app.add_subcommand("gen-traces", "generate synthetic capacity traces");
    flags.add_base(gen);
    std::string kind = "markov";
    TraceParams tp;
    std::size_t count = 1;
    std::string out_dir = "traces";
    gen->add_option("--kind", kind, "constant, square, markov");
    gen->add_option("--c", tp.c_mbps, "constant capacity (Mbps)");
    gen->add_option("--lo", tp.lo_mbps, "low capacity (Mbps)");
    gen->add_option("--hi", tp.hi_mbps, "high capacity (Mbps)");
    gen->add_option("--period", tp.period, "square wave: windows per level");
    gen->add_option("--markov-stay", tp.p_stay, "markov walk: stay probability");
    gen->add_option("--windows", tp.windows, "windows per trace");
    gen->add_option("--n", count, "number of traces");
    gen->add_option("--out", out_dir, "output directory");

    // emulate
    auto* emu = app.add_subcommand("emulate", "run one streaming session over a capacity trace");
    flags.add_base(emu);
    flags.add_setting(emu);
    std::string trace_path, log_out, metrics_out;
    emu->add_option("--trace", trace_path, "capacity trace CSV")->required();
    emu->add_option("--log", log_out, "session log output (JSON lines)")->required();
    emu->add_option("--metrics", metrics_out, "metrics JSON output (default stdout)");

    // abduct
    auto* abd = app.add_subcommand("abduct", "infer capacity traces from a session log");
    flags.add_base(abd);
    flags.add_model(abd);
    std::string log_in;
    std::size_t samples = 5;
    std::size_t windows = 0;
    std::string abd_out = "abduction";
    abd->add_option("--log", log_in, "session log")->required();
    abd->add_option("--samples", samples, "number of sampled traces");
    abd->add_option("--windows", windows, "trace horizon in windows (default: cover the log)");
    abd->add_option("--out", abd_out, "output directory");

    // whatif
    auto* wi = app.add_subcommand("whatif", "counterfactual replay of a session under another setting");
    flags.add_base(wi);
    flags.add_setting(wi);
    flags.add_model(wi);
    std::vector<std::string> changes;
    std::string gtbw_path, report_out;
    std::size_t trim_rank = 2;
    std::optional<std::uint64_t> session_seed;
    wi->add_option("--log", log_in, "session log of setting A")->required();
    wi->add_option("--change", changes, "design change key=value (repeatable)");
    wi->add_option("--samples", samples, "number of sampled traces");
    wi->add_option("--trim-rank", trim_rank, "order statistic for low/high");
    wi->add_option("--windows", windows, "trace horizon in windows (default: cover the log)");
    wi->add_option("--with-gtbw", gtbw_path, "true capacity trace for an oracle row");
    wi->add_option("--session-seed", session_seed, "chunk-size seed for replays (default --seed)");
    wi->add_option("--out", report_out, "report JSON output (default stdout)");

    // predict
    auto* pr = app.add_subcommand("predict", "predict the next chunk's download time");
    flags.add_base(pr);
    flags.add_model(pr);
    std::string candidates, predictor = "veritas", pred_out;
    std::optional<std::size_t> prefix_len;
    std::optional<double> next_start;
    pr->add_option("--log", log_in, "session log")->required();
    pr->add_option("--prefix", prefix_len, "use the first N chunks (default: all)");
    pr->add_option("--next-start", next_start, "start of the next download (default: logged or end of prefix)");
    pr->add_option("--candidates", candidates, "comma-separated candidate sizes in bytes")->required();
    pr->add_option("--predictor", predictor, "veritas or associational");
    pr->add_option("--out", pred_out, "output JSON (default stdout)");

    // f-accuracy
    auto* fa = app.add_subcommand("f-accuracy", "estimator accuracy against the round-level backend");
    flags.add_base(fa);
    AccuracySweep sweep;
    std::string cdf_out, summary_out;
    fa->add_option("--connections", sweep.connections, "connections in the sweep");
    fa->add_option("--downloads", sweep.downloads, "downloads per connection");
    fa->add_option("--out", cdf_out, "CDF CSV output")->required();
    fa->add_option("--summary", summary_out, "summary JSON output (default stdout)");

    // estimate
    auto* est = app.add_subcommand("estimate", "evaluate the throughput estimator once");
    flags.add_base(est);
    double c_mbps = 0.0, rtt = 0.08, rto = 0.2, last_send = 0.0;
    std::int64_t cwnd = 10, ssthresh = kInfiniteSsthresh, size = 0;
    est->add_option("--c", c_mbps, "capacity (Mbps)")->required();
    est->add_option("--size", size, "payload in bytes")->required();
    est->add_option("--cwnd", cwnd, "congestion window (segments)");
    est->add_option("--ssthresh", ssthresh, "slow start threshold (segments)");
    est->add_option("--rtt", rtt, "min RTT (s)");
    est->add_option("--rto", rto, "retransmission timeout (s)");
    est->add_option("--last-send", last_send, "idle time before the download (s)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 64;
    }

    try {
        if (gen->parsed()) {
            const RunConfig cfg = flags.resolve(true);
            tp.kind = parse_trace_kind(kind);
            if (count == 0) throw InvalidArgument("--n must be >= 1");
            json files = json::array();
            for (std::size_t i = 0; i < count; ++i) {
                const CapacityTrace trace = generate_trace(tp, cfg.grid, derive_seed(*cfg.seed, i));
                const fs::path path = fs::path(out_dir) / trace_name(i);
                io::write_trace_csv(path, trace);
                files.push_back(path.filename().string());
            }
            json doc = envelope(cfg);
            doc["traces"] = files;
            doc["kind"] = to_string(tp.kind);
            io::write_text(fs::path(out_dir) / "manifest.json", doc.dump(2) + "\n");
        } else if (emu->parsed()) {
            const RunConfig cfg = flags.resolve(true);
            const CapacityTrace trace = io::read_trace_csv(trace_path, cfg.grid);
            const SessionResult res = run_session(trace, cfg.setting.video, cfg.setting.player, *cfg.seed);
            io::write_log(log_out, res.log);
            json doc = envelope(cfg);
            doc["metrics"] = to_json(compute_metrics(res));
            doc["chunks"] = res.log.size();
            doc["rebuffer_time_s"] = io::round_sig9(res.rebuffer_time_s);
            doc["startup_time_s"] = io::round_sig9(res.startup_time_s);
            doc["wall_time_s"] = io::round_sig9(res.wall_time_s);
            emit(metrics_out, doc);
        } else if (abd->parsed()) {
            const RunConfig cfg = flags.resolve(true);
            const SessionLog log = io::read_log(log_in);
            if (log.empty()) throw InvalidArgument("log has no chunks");
            if (samples == 0) throw InvalidArgument("--samples must be >= 1");
            const std::size_t horizon = windows ? windows : log_horizon(log, cfg.grid);
            const AbductionResult ab = abduct(cfg.model(), log, samples, *cfg.seed, horizon);
            const fs::path dir(abd_out);
            io::write_trace_csv(dir / "map.csv", ab.map_trace);
            io::write_trace_csv(dir / "baseline.csv", baseline_reconstruct(log, cfg.grid, horizon));
            json files = json::array();
            for (std::size_t k = 0; k < ab.samples.size(); ++k) {
                const std::string name = "sample_" + std::to_string(k + 1) + ".csv";
                io::write_trace_csv(dir / name, ab.samples[k]);
                files.push_back(name);
            }
            json doc = envelope(cfg);
            doc["map_states"] = ab.map_states;
            doc["map_log_likelihood"] = io::round_sig9(ab.map_log_likelihood);
            doc["map_trace"] = "map.csv";
            doc["baseline_trace"] = "baseline.csv";
            doc["samples"] = files;
            doc["windows"] = horizon;
            io::write_text(dir / "abduction.json", doc.dump(2) + "\n");
        } else if (wi->parsed()) {
            const RunConfig cfg = flags.resolve(true);
            const SessionLog log = io::read_log(log_in);
            Setting b = cfg.setting;
            for (const std::string& ch : changes) b = apply_change(b, ch);
            WhatIfOptions opt;
            opt.samples = samples;
            opt.trim_rank = trim_rank;
            opt.seed = *cfg.seed;
            opt.session_seed = session_seed.value_or(*cfg.seed);
            opt.windows = windows;
            if (!gtbw_path.empty()) opt.gtbw = io::read_trace_csv(gtbw_path, cfg.grid);
            const WhatIfReport report = whatif_counterfactual(log, cfg.setting, b, cfg.model(), opt);
            json doc = envelope(cfg);
            doc.update(to_json(report));
            doc["changes"] = changes;
            emit(report_out, doc);
        } else if (pr->parsed()) {
            const RunConfig cfg = flags.resolve(false);
            const SessionLog full = io::read_log(log_in);
            const std::size_t n = prefix_len.value_or(full.size());
            if (n == 0 || full.empty()) throw InvalidArgument("predict: prefix has no chunks");
            if (n > full.size()) throw InvalidArgument("--prefix exceeds the log length");
            const SessionLog prefix = full.prefix(n);
            const double start =
                next_start.value_or(n < full.size() ? full.chunks[n].start_s : prefix.chunks.back().end_s);
            const std::vector<std::int64_t> sizes = parse_sizes(candidates);
            std::vector<DownloadPrediction> preds;
            if (predictor == "veritas")
                preds = predict_next_download(cfg.model(), prefix, start, sizes);
            else if (predictor == "associational")
                preds = associational_predictor(prefix, sizes);
            else
                throw InvalidArgument("unknown predictor '" + predictor + "' (expected veritas or associational)");
            json doc = envelope(cfg);
            doc["predictor"] = predictor;
            doc["prefix_chunks"] = n;
            doc["next_start_s"] = io::round_sig9(start);
            json arr = json::array();
            for (const DownloadPrediction& p : preds) arr.push_back(to_json(p));
            doc["predictions"] = arr;
            emit(pred_out, doc);
        } else if (fa->parsed()) {
            const RunConfig cfg = flags.resolve(true);
            const std::vector<AccuracySample> s = run_accuracy(sweep, *cfg.seed, cfg.setting.player.estimator);
            std::ostringstream csv;
            csv << "rel_error,cdf\n";
            char buf[64];
            for (const auto& [err, cdf] : relative_error_cdf(s)) {
                std::snprintf(buf, sizeof buf, "%.9g,%.9g\n", err, cdf);
                csv << buf;
            }
            io::write_text(cdf_out, csv.str());
            json doc = envelope(cfg);
            doc["samples"] = s.size();
            doc["fraction_within_1mbps"] = io::round_sig9(fraction_within(s, 1.0));
            doc["sweep"] = {{"connections", sweep.connections},
                            {"downloads", sweep.downloads},
                            {"capacity_mbps", {sweep.c_lo_mbps, sweep.c_hi_mbps}},
                            {"delay_s", {sweep.delay_lo_s, sweep.delay_hi_s}},
                            {"payload_bytes", {sweep.payload_lo_bytes, sweep.payload_hi_bytes}},
                            {"gap_s", {sweep.gap_lo_s, sweep.gap_hi_s}}};
            emit(summary_out, doc);
        } else if (est->parsed()) {
            const RunConfig cfg = flags.resolve(false);
            TcpState w;
            w.cwnd = cwnd;
            w.ssthresh = ssthresh;
            w.min_rtt_s = rtt;
            w.srtt_s = rtt;
            w.rto_s = rto;
            w.last_send_s = last_send;
            w.validate();
            if (size <= 0) throw InvalidArgument("--size must be > 0");
            if (c_mbps < 0.0) throw InvalidArgument("--c must be >= 0");
            const EstimatorConfig& ec = cfg.setting.player.estimator;
            const RoundOutcome r = run_rounds(c_mbps, w, size, ec);
            json doc = envelope(cfg);
            doc["throughput_mbps"] = io::round_sig9(estimate_throughput(c_mbps, w, size, ec));
            doc["rounds"] = r.rounds;
            doc["cwnd_after"] = r.after.cwnd;
            doc["ssthresh_after"] = r.after.ssthresh;
            emit("", doc);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
