#include "veritas/abr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "veritas/error.hpp"

namespace veritas {

AbrKind parse_abr_kind(const std::string& name) {
    if (name == "mpc") return AbrKind::mpc;
    if (name == "bba") return AbrKind::bba;
    if (name == "bola") return AbrKind::bola;
    throw InvalidArgument("unknown abr '" + name + "' (expected one of: mpc, bba, bola)");
}

std::string to_string(AbrKind kind) {
    switch (kind) {
        case AbrKind::mpc: return "mpc";
        case AbrKind::bba: return "bba";
        case AbrKind::bola: return "bola";
    }
    return "unknown";
}

void AbrParams::validate() const {
    if (horizon == 0) throw InvalidArgument("abr: horizon must be >= 1");
    if (history == 0) throw InvalidArgument("abr: history must be >= 1");
    if (!(rebuffer_penalty >= 0.0)) throw InvalidArgument("abr: rebuffer_penalty must be >= 0");
    if (!(bba_reservoir >= 0.0 && bba_reservoir < bba_upper && bba_upper <= 1.0))
        throw InvalidArgument("abr: need 0 <= bba_reservoir < bba_upper <= 1");
    if (!(bola_gamma > 0.0)) throw InvalidArgument("abr: bola_gamma must be > 0");
}

double harmonic_mean_last(std::span<const double> values, std::size_t count) {
    const std::size_t k = std::min(count, values.size());
    if (k == 0) return 0.0;
    double inv = 0.0;
    for (std::size_t i = values.size() - k; i < values.size(); ++i) {
        if (!(values[i] > 0.0)) return 0.0;
        inv += 1.0 / values[i];
    }
    return static_cast<double>(k) / inv;
}

double ssim_db(double ssim) { return 10.0 * std::log10(1.0 / (1.0 - ssim)); }

std::size_t abr_mpc(const Observables& obs, const AbrParams& params) {
    const std::size_t levels = obs.ladder.size();
    const double predicted = harmonic_mean_last(obs.past_throughput_mbps, params.history);
    if (!(predicted > 0.0) || obs.sizes_ahead.empty()) return 0;

    const std::size_t horizon = std::min(params.horizon, obs.sizes_ahead.size());
    const double gate = obs.buffer_cap_s - obs.chunk_duration_s;

    std::vector<std::size_t> seq(horizon, 0);
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_first = 0;
    // Lexicographic enumeration with a strict comparison keeps the lowest
    // first quality among ties.
    while (true) {
        double buffer = obs.buffer_s;
        double score = 0.0;
        std::optional<std::size_t> prev = obs.last_quality;
        for (std::size_t k = 0; k < horizon; ++k) {
            buffer = std::min(buffer, gate);
            const std::size_t q = seq[k];
            const double download = static_cast<double>(obs.sizes_ahead[k][q]) * 8.0 / (predicted * 1e6);
            const double stall = std::max(download - buffer, 0.0);
            buffer = std::max(buffer - download, 0.0) + obs.chunk_duration_s;
            const double quality = ssim_db(obs.ladder[q].ssim);
            score += quality - params.rebuffer_penalty * stall;
            if (prev) score -= std::abs(quality - ssim_db(obs.ladder[*prev].ssim));
            prev = q;
        }
        if (score > best) {
            best = score;
            best_first = seq[0];
        }
        std::size_t k = horizon;
        while (k > 0 && seq[k - 1] + 1 == levels) seq[--k] = 0;
        if (k == 0) break;
        ++seq[k - 1];
    }
    return best_first;
}

std::size_t abr_bba(const Observables& obs, const AbrParams& params) {
    const std::size_t top = obs.ladder.size() - 1;
    const double fraction = obs.buffer_s / obs.buffer_cap_s;
    if (fraction <= params.bba_reservoir) return 0;
    if (fraction >= params.bba_upper) return top;
    const double x = (fraction - params.bba_reservoir) / (params.bba_upper - params.bba_reservoir);
    return std::min(top, static_cast<std::size_t>(std::floor(x * static_cast<double>(top) + 1e-9)));
}

std::size_t abr_bola_basic(const Observables& obs, const AbrParams& params) {
    if (obs.sizes_ahead.empty()) return 0;
    const std::vector<std::int64_t>& sizes = obs.sizes_ahead.front();
    const double smallest = static_cast<double>(*std::min_element(sizes.begin(), sizes.end()));
    std::vector<double> utility(sizes.size());
    for (std::size_t q = 0; q < sizes.size(); ++q) utility[q] = std::log(static_cast<double>(sizes[q]) / smallest);
    const double top_utility = *std::max_element(utility.begin(), utility.end());
    const double v = (obs.buffer_cap_s - obs.chunk_duration_s) / (top_utility + params.bola_gamma);

    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t q = 0; q < sizes.size(); ++q) {
        const double score = (v * (utility[q] + params.bola_gamma) - obs.buffer_s) / static_cast<double>(sizes[q]);
        const bool tie = std::abs(score - best_score) <= 1e-12 * std::max(1.0, std::abs(best_score));
        // Equal objective at equal size: the higher rung is free quality.
        if ((!tie && score > best_score) || (tie && sizes[q] == sizes[best])) {
            best = q;
            best_score = score;
        }
    }
    return best;
}

std::size_t choose_quality(const Observables& obs, const AbrParams& params) {
    switch (params.kind) {
        case AbrKind::mpc: return abr_mpc(obs, params);
        case AbrKind::bba: return abr_bba(obs, params);
        case AbrKind::bola: return abr_bola_basic(obs, params);
    }
    return 0;
}

}  // namespace veritas
