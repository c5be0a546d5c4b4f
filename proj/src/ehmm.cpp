#include "veritas/ehmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>

#include "veritas/error.hpp"
#include "veritas/kernels.hpp"

namespace veritas {

void TransitionMatrix::validate() const {
    const std::size_t s = grid.state_count();
    if (a.rows() != s || a.cols() != s) throw InvalidArgument("transition matrix does not match the grid");
    for (std::size_t i = 0; i < s; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < s; ++j) {
            if (!(a(i, j) >= 0.0)) throw InvalidArgument("transition matrix has a negative entry");
            sum += a(i, j);
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw InvalidArgument("transition matrix row " + std::to_string(i) + " does not sum to 1");
    }
}

TransitionMatrix tridiagonal_matrix(const QuantGrid& grid, double p_stay) {
    if (!(p_stay > 0.0 && p_stay < 1.0)) throw InvalidArgument("tridiagonal_matrix: p_stay must lie in (0,1)");
    grid.validate();
    const std::size_t s = grid.state_count();
    const double move = (1.0 - p_stay) / 2.0;
    Matrix a(s, s);
    for (std::size_t i = 0; i < s; ++i) {
        double stay = p_stay;
        if (i > 0) a(i, i - 1) = move; else stay += move;
        if (i + 1 < s) a(i, i + 1) = move; else stay += move;
        a(i, i) = stay;
    }
    return {grid, std::move(a)};
}

Matrix transition_power(const TransitionMatrix& a, std::size_t delta) { return power(a.a, delta); }

void EhmmModel::validate() const {
    grid.validate();
    transition.validate();
    estimator.validate();
    if (!(transition.grid == grid)) throw InvalidArgument("ehmm: transition grid differs from model grid");
    if (initial.size() != grid.state_count()) throw InvalidArgument("ehmm: initial distribution has wrong size");
    double sum = 0.0;
    for (double p : initial) {
        if (!(p >= 0.0)) throw InvalidArgument("ehmm: initial distribution has a negative entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidArgument("ehmm: initial distribution must sum to 1");
    if (!(sigma_mbps > 0.0)) throw InvalidArgument("ehmm: sigma must be > 0");
}

EhmmModel EhmmModel::make(const QuantGrid& grid, double p_stay, double sigma_mbps, const EstimatorConfig& estimator) {
    EhmmModel m{grid, tridiagonal_matrix(grid, p_stay),
                std::vector<double>(grid.state_count(), 1.0 / static_cast<double>(grid.state_count())),
                sigma_mbps, estimator};
    m.validate();
    return m;
}

double emission_logprob(const EhmmModel& model, std::size_t state, const ChunkRecord& chunk) {
    const double f = estimate_throughput(model.grid.state_mbps(state), chunk.tcp_at_start, chunk.size_bytes,
                                         model.estimator);
    const double z = (chunk.throughput_mbps() - f) / model.sigma_mbps;
    return -0.5 * z * z - std::log(model.sigma_mbps * std::sqrt(2.0 * std::numbers::pi));
}

Lattice build_lattice(const EhmmModel& model, const SessionLog& log, Exec exec) {
    if (log.empty()) throw InvalidArgument("ehmm: log has no chunks");
    const kernels::EmissionInputs in{&model.grid, &model.estimator, model.sigma_mbps};
    Lattice lat;
    lat.log_emission = exec == Exec::serial ? kernels::serial::emission_matrix(in, log.chunks)
                                            : kernels::omp::emission_matrix(in, log.chunks);
    lat.deltas.assign(log.size(), 0);
    for (std::size_t n = 2; n <= log.size(); ++n) lat.deltas[n - 1] = delta_n(log, model.grid, n);
    for (std::size_t d : lat.deltas)
        if (!lat.powers.contains(d)) lat.powers.emplace(d, transition_power(model.transition, d));
    return lat;
}

namespace {

kernels::StepMatrices step_pointers(const Lattice& lat) {
    kernels::StepMatrices steps(lat.deltas.size(), nullptr);
    for (std::size_t n = 1; n < lat.deltas.size(); ++n) steps[n] = &lat.step(n);
    return steps;
}

Matrix log_of(const Matrix& m) {
    Matrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            out(i, j) = m(i, j) > 0.0 ? std::log(m(i, j)) : -std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace

ViterbiResult viterbi_map(const Lattice& lat, const std::vector<double>& initial, Exec exec) {
    const std::size_t n_chunks = lat.log_emission.rows();
    const std::size_t s = lat.log_emission.cols();

    std::map<std::size_t, Matrix> log_powers;
    for (const auto& [d, m] : lat.powers) log_powers.emplace(d, log_of(m));
    kernels::StepMatrices log_steps(n_chunks, nullptr);
    for (std::size_t n = 1; n < n_chunks; ++n) log_steps[n] = &log_powers.at(lat.deltas[n]);
    std::vector<double> log_initial(s);
    for (std::size_t i = 0; i < s; ++i)
        log_initial[i] = initial[i] > 0.0 ? std::log(initial[i]) : -std::numeric_limits<double>::infinity();

    const kernels::ViterbiTables t = exec == Exec::serial
                                         ? kernels::serial::viterbi(lat.log_emission, log_steps, log_initial)
                                         : kernels::omp::viterbi(lat.log_emission, log_steps, log_initial);

    ViterbiResult out;
    out.states.assign(n_chunks, 0);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < s; ++i)
        if (t.score(n_chunks - 1, i) > best) {
            best = t.score(n_chunks - 1, i);
            out.states[n_chunks - 1] = i;
        }
    if (!std::isfinite(best)) throw InvariantError("viterbi: every state sequence has zero probability");
    for (std::size_t n = n_chunks - 1; n > 0; --n) out.states[n - 1] = t.back[n][out.states[n]];
    out.log_score = best;
    return out;
}

ViterbiResult viterbi_map(const EhmmModel& model, const SessionLog& log, Exec exec) {
    return viterbi_map(build_lattice(model, log, exec), model.initial, exec);
}

PairPosterior forward_backward(const Lattice& lat, const std::vector<double>& initial, Exec exec) {
    const std::size_t n_chunks = lat.log_emission.rows();
    if (n_chunks < 2) throw InvalidArgument("forward_backward: need at least two chunks");
    const std::size_t s = lat.log_emission.cols();
    const Matrix emission = kernels::scaled_likelihood(lat.log_emission);
    const kernels::StepMatrices steps = step_pointers(lat);

    std::vector<double> gamma;
    if (exec == Exec::serial) {
        const Matrix alpha = kernels::serial::forward(emission, steps, initial);
        const Matrix beta = kernels::serial::backward(emission, steps);
        gamma = kernels::serial::pair_posterior(alpha, beta, emission, steps);
    } else {
        const Matrix alpha = kernels::omp::forward(emission, steps, initial);
        const Matrix beta = kernels::omp::backward(emission, steps);
        gamma = kernels::omp::pair_posterior(alpha, beta, emission, steps);
    }
    PairPosterior out(s, n_chunks - 1);
    std::copy(gamma.begin(), gamma.end(), out.slice(1));
    return out;
}

PairPosterior forward_backward(const EhmmModel& model, const SessionLog& log, Exec exec) {
    return forward_backward(build_lattice(model, log, exec), model.initial, exec);
}

namespace {

std::vector<std::size_t> sample_one(const PairPosterior& gamma, std::size_t last_state, std::uint64_t seed,
                                    std::size_t k) {
    const std::size_t s = gamma.states();
    const std::size_t n_chunks = gamma.pairs() + 1;
    std::seed_seq seq{seed, static_cast<std::uint64_t>(k)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<std::size_t> path(n_chunks);
    path[n_chunks - 1] = last_state;
    std::vector<double> weights(s);
    for (std::size_t n = n_chunks - 1; n-- > 0;) {
        const std::size_t next = path[n + 1];
        double z = 0.0;
        for (std::size_t i = 0; i < s; ++i) {
            weights[i] = gamma(i, next, n + 1);
            z += weights[i];
        }
        if (!(z > 0.0)) throw InvariantError("sampler: pinned state has zero posterior mass");
        const double u = unit(rng) * z;
        double acc = 0.0;
        std::size_t pick = s - 1;
        for (std::size_t i = 0; i < s; ++i) {
            acc += weights[i];
            if (u < acc && weights[i] > 0.0) {
                pick = i;
                break;
            }
        }
        while (weights[pick] == 0.0 && pick > 0) --pick;  // u landed on the rounding tail
        path[n] = pick;
    }
    return path;
}

}  // namespace

std::vector<std::vector<std::size_t>> sample_paths(const PairPosterior& gamma, std::size_t last_state,
                                                   std::size_t count, std::uint64_t seed, Exec exec) {
    if (count == 0) throw InvalidArgument("sample_paths: need at least one sample");
    if (last_state >= gamma.states()) throw InvalidArgument("sample_paths: last state out of range");
    std::vector<std::vector<std::size_t>> out(count);
    const auto total = static_cast<std::ptrdiff_t>(count);
    std::string failure;
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
    for (std::ptrdiff_t k = 0; k < total; ++k) {
        try {
            out[static_cast<std::size_t>(k)] = sample_one(gamma, last_state, seed, static_cast<std::size_t>(k));
        } catch (const std::exception& e) {
#pragma omp critical(veritas_sample_failure)
            if (failure.empty()) failure = e.what();
        }
    }
    if (!failure.empty()) throw InvariantError(failure);
    return out;
}

std::vector<std::vector<std::size_t>> sample_paths(const EhmmModel& model, const SessionLog& log,
                                                   std::size_t count, std::uint64_t seed, Exec exec) {
    const Lattice lat = build_lattice(model, log, exec);
    const ViterbiResult map = viterbi_map(lat, model.initial, exec);
    if (log.size() == 1) return std::vector<std::vector<std::size_t>>(count, map.states);
    return sample_paths(forward_backward(lat, model.initial, exec), map.states.back(), count, seed, exec);
}

CapacityTrace reconstruct_trace(const std::vector<std::size_t>& states, const SessionLog& log,
                                const QuantGrid& grid, std::size_t windows) {
    if (states.size() != log.size() || log.empty())
        throw InvalidArgument("reconstruct_trace: need one state per chunk");
    if (windows < window_index(log.chunks.back().start_s, grid))
        throw InvalidArgument("reconstruct_trace: horizon ends before the last chunk starts");

    std::vector<std::optional<double>> anchor(windows);
    for (std::size_t n = 0; n < log.size(); ++n)
        anchor[window_index(log.chunks[n].start_s, grid) - 1] = grid.state_mbps(states[n]);

    std::vector<double> values(windows);
    std::optional<std::size_t> prev;
    for (std::size_t t = 0; t < windows; ++t) {
        if (!anchor[t]) continue;
        values[t] = *anchor[t];
        if (!prev) {
            std::fill(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(t), *anchor[t]);
        } else {
            const double v0 = *anchor[*prev];
            const double v1 = *anchor[t];
            const double span = static_cast<double>(t - *prev);
            for (std::size_t g = *prev + 1; g < t; ++g) {
                const double v = v0 + (v1 - v0) * static_cast<double>(g - *prev) / span;
                values[g] = grid.state_mbps(quantize_capacity(v, grid));
            }
        }
        prev = t;
    }
    std::fill(values.begin() + static_cast<std::ptrdiff_t>(*prev) + 1, values.end(), *anchor[*prev]);
    return CapacityTrace(grid, std::move(values));
}

AbductionResult abduct(const EhmmModel& model, const SessionLog& log, std::size_t samples, std::uint64_t seed,
                       std::size_t windows, Exec exec) {
    model.validate();
    const Lattice lat = build_lattice(model, log, exec);
    const ViterbiResult map = viterbi_map(lat, model.initial, exec);
    std::vector<std::vector<std::size_t>> paths;
    if (log.size() == 1)
        paths.assign(samples, map.states);
    else
        paths = sample_paths(forward_backward(lat, model.initial, exec), map.states.back(), samples, seed, exec);

    AbductionResult out{map.states, map.log_score, paths, reconstruct_trace(map.states, log, model.grid, windows), {}};
    out.samples.reserve(paths.size());
    for (const auto& p : paths) out.samples.push_back(reconstruct_trace(p, log, model.grid, windows));
    return out;
}

}  // namespace veritas
