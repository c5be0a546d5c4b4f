#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "veritas/core_model.hpp"
#include "veritas/matrix.hpp"
#include "veritas/tcp_estimator.hpp"

namespace veritas {

// Selects between the serial reference kernels and their OpenMP versions.
enum class Exec { serial, parallel };

struct TransitionMatrix {
    QuantGrid grid;
    Matrix a;

    // Row-stochastic within 1e-12, entries non-negative, shape matches grid.
    void validate() const;
};

// Stay with probability p_stay, otherwise step to a neighbouring state. Edge
// rows fold the missing neighbour's mass into the stay probability.
TransitionMatrix tridiagonal_matrix(const QuantGrid& grid, double p_stay);

Matrix transition_power(const TransitionMatrix& a, std::size_t delta);

struct EhmmModel {
    QuantGrid grid;
    TransitionMatrix transition;
    std::vector<double> initial;  // u
    double sigma_mbps = 0.5;
    EstimatorConfig estimator;

    void validate() const;
    std::size_t states() const { return grid.state_count(); }

    // Uniform u and a tridiagonal transition matrix.
    static EhmmModel make(const QuantGrid& grid, double p_stay = 0.9, double sigma_mbps = 0.5,
                          const EstimatorConfig& estimator = {});
};

// log Normal(Y_n; f(iε, W_{s_n}, S_n), σ²).
double emission_logprob(const EhmmModel& model, std::size_t state, const ChunkRecord& chunk);

// Per-log quantities shared by every inference routine.
struct Lattice {
    Matrix log_emission;                   // N x states
    std::vector<std::size_t> deltas;       // deltas[n] = Δ_{n+1} for n >= 1; deltas[0] = 0
    std::map<std::size_t, Matrix> powers;  // Δ -> A^Δ

    const Matrix& step(std::size_t n) const { return powers.at(deltas[n]); }  // 0-based n >= 1
};

Lattice build_lattice(const EhmmModel& model, const SessionLog& log, Exec exec = Exec::parallel);

struct ViterbiResult {
    std::vector<std::size_t> states;  // I*_{1:N}, 0-based state indices
    double log_score = 0.0;           // log of the maximized joint score
};

ViterbiResult viterbi_map(const EhmmModel& model, const SessionLog& log, Exec exec = Exec::parallel);
ViterbiResult viterbi_map(const Lattice& lattice, const std::vector<double>& initial,
                          Exec exec = Exec::parallel);

// Γ[i, j, n] = P(C_{s_n} = iε, C_{s_{n+1}} = jε | observations), n = 1..N-1.
class PairPosterior {
public:
    PairPosterior(std::size_t states, std::size_t pairs)
        : states_(states), pairs_(pairs), gamma_(states * states * pairs, 0.0) {}

    std::size_t states() const { return states_; }
    std::size_t pairs() const { return pairs_; }

    // n is 1-based, 1 <= n <= N-1.
    double operator()(std::size_t i, std::size_t j, std::size_t n) const { return gamma_[offset(i, j, n)]; }
    double& operator()(std::size_t i, std::size_t j, std::size_t n) { return gamma_[offset(i, j, n)]; }

    double* slice(std::size_t n) { return gamma_.data() + (n - 1) * states_ * states_; }
    const double* slice(std::size_t n) const { return gamma_.data() + (n - 1) * states_ * states_; }

private:
    std::size_t offset(std::size_t i, std::size_t j, std::size_t n) const {
        return ((n - 1) * states_ + i) * states_ + j;
    }
    std::size_t states_;
    std::size_t pairs_;
    std::vector<double> gamma_;
};

PairPosterior forward_backward(const EhmmModel& model, const SessionLog& log, Exec exec = Exec::parallel);
PairPosterior forward_backward(const Lattice& lattice, const std::vector<double>& initial,
                               Exec exec = Exec::parallel);

// Capacity sampler: the last state is pinned to Viterbi's, earlier states are
// drawn backwards from Γ[·, next, n]. Path k uses its own generator seeded by
// (seed, k), so the output does not depend on thread scheduling.
std::vector<std::vector<std::size_t>> sample_paths(const PairPosterior& gamma, std::size_t last_state,
                                                   std::size_t count, std::uint64_t seed,
                                                   Exec exec = Exec::parallel);
std::vector<std::vector<std::size_t>> sample_paths(const EhmmModel& model, const SessionLog& log,
                                                   std::size_t count, std::uint64_t seed,
                                                   Exec exec = Exec::parallel);

// Window trace from per-chunk states: anchored windows take the chunk's value
// (last chunk wins), gaps interpolate linearly and re-quantize, edges hold.
CapacityTrace reconstruct_trace(const std::vector<std::size_t>& states, const SessionLog& log,
                                const QuantGrid& grid, std::size_t windows);

struct AbductionResult {
    std::vector<std::size_t> map_states;
    double map_log_likelihood = 0.0;
    std::vector<std::vector<std::size_t>> sample_states;
    CapacityTrace map_trace;
    std::vector<CapacityTrace> samples;
};

// Viterbi, forward-backward and K sampled traces over `windows` windows.
AbductionResult abduct(const EhmmModel& model, const SessionLog& log, std::size_t samples,
                       std::uint64_t seed, std::size_t windows, Exec exec = Exec::parallel);

}  // namespace veritas
