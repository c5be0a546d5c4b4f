#pragma once

// Inner loops of EHMM inference. `serial` is the reference implementation;
// `omp` distributes the same arithmetic with OpenMP and must agree with it
// to rounding (tests/unit/test_kernels.cpp, bench/bench_kernels.cpp).

#include <cstddef>
#include <vector>

#include "veritas/core_model.hpp"
#include "veritas/matrix.hpp"
#include "veritas/tcp_estimator.hpp"

namespace veritas::kernels {

struct EmissionInputs {
    const QuantGrid* grid;
    const EstimatorConfig* estimator;
    double sigma_mbps;
};

// Step transition for chunk n (0-based, n >= 1) is *steps[n]; steps[0] unused.
using StepMatrices = std::vector<const Matrix*>;

struct ViterbiTables {
    Matrix score;                              // N x S log scores
    std::vector<std::vector<std::size_t>> back;  // N x S backpointers
};

namespace serial {
Matrix emission_matrix(const EmissionInputs& in, const std::vector<ChunkRecord>& chunks);
// Scaled forward messages, each row normalized to 1.
Matrix forward(const Matrix& emission, const StepMatrices& steps, const std::vector<double>& initial);
// Scaled backward messages, each row normalized to 1.
Matrix backward(const Matrix& emission, const StepMatrices& steps);
// Γ slices, one normalized S x S block per consecutive pair.
std::vector<double> pair_posterior(const Matrix& alpha, const Matrix& beta, const Matrix& emission,
                                   const StepMatrices& steps);
ViterbiTables viterbi(const Matrix& log_emission, const StepMatrices& log_steps,
                      const std::vector<double>& log_initial);
}  // namespace serial

namespace omp {
Matrix emission_matrix(const EmissionInputs& in, const std::vector<ChunkRecord>& chunks);
Matrix forward(const Matrix& emission, const StepMatrices& steps, const std::vector<double>& initial);
Matrix backward(const Matrix& emission, const StepMatrices& steps);
std::vector<double> pair_posterior(const Matrix& alpha, const Matrix& beta, const Matrix& emission,
                                   const StepMatrices& steps);
ViterbiTables viterbi(const Matrix& log_emission, const StepMatrices& log_steps,
                      const std::vector<double>& log_initial);
}  // namespace omp

// Converts a log-emission matrix to per-row scaled likelihoods
// exp(le - max(le_row)), which keeps long sessions away from underflow.
Matrix scaled_likelihood(const Matrix& log_emission);

// Applies VERITAS_THREADS (if set) as the OpenMP thread cap.
void configure_threads_from_env();

}  // namespace veritas::kernels
