#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "veritas/core_model.hpp"

namespace veritas {

enum class AbrKind { mpc, bba, bola };

AbrKind parse_abr_kind(const std::string& name);
std::string to_string(AbrKind kind);

struct AbrParams {
    AbrKind kind = AbrKind::mpc;
    // MPC
    std::size_t horizon = 3;
    double rebuffer_penalty = 100.0;
    std::size_t history = 5;
    // BBA, as fractions of the buffer cap
    double bba_reservoir = 0.2;
    double bba_upper = 0.95;
    // BOLA-basic
    double bola_gamma = 1.0;

    void validate() const;
    bool operator==(const AbrParams&) const = default;
};

// Everything an ABR may look at. The true capacity is deliberately absent.
struct Observables {
    double buffer_s = 0.0;
    double buffer_cap_s = 5.0;
    double chunk_duration_s = 2.0;
    std::span<const double> past_throughput_mbps;
    std::optional<std::size_t> last_quality;
    std::span<const Rung> ladder;
    // sizes_ahead[k][q]: size in bytes of the k-th upcoming chunk at level q.
    std::vector<std::vector<std::int64_t>> sizes_ahead;
};

// Harmonic mean of the last `count` samples; 0 if there are none.
double harmonic_mean_last(std::span<const double> values, std::size_t count);

// SSIM mapped to 10·log10(1/(1-ssim)) for the MPC objective.
double ssim_db(double ssim);

std::size_t abr_mpc(const Observables& obs, const AbrParams& params);
std::size_t abr_bba(const Observables& obs, const AbrParams& params);
std::size_t abr_bola_basic(const Observables& obs, const AbrParams& params);

std::size_t choose_quality(const Observables& obs, const AbrParams& params);

}  // namespace veritas
