#include "veritas/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <string>

#include <omp.h>

#include "veritas/error.hpp"

namespace veritas::kernels {

namespace {

// Below this many states a per-step parallel region costs more than it saves.
constexpr std::size_t kMinParallelStates = 48;

double gaussian_logpdf(double y, double mean, double sigma) {
    const double z = (y - mean) / sigma;
    return -0.5 * z * z - std::log(sigma * std::sqrt(2.0 * std::numbers::pi));
}

double emission_entry(const EmissionInputs& in, const ChunkRecord& chunk, std::size_t state) {
    const double c = in.grid->state_mbps(state);
    const double f = estimate_throughput(c, chunk.tcp_at_start, chunk.size_bytes, *in.estimator);
    return gaussian_logpdf(chunk.throughput_mbps(), f, in.sigma_mbps);
}

void normalize_row(double* row, std::size_t n, std::size_t chunk) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += row[i];
    if (!(sum > 0.0) || !std::isfinite(sum))
        throw InvariantError("chunk " + std::to_string(chunk + 1) +
                             ": observations have zero likelihood under the model");
    for (std::size_t i = 0; i < n; ++i) row[i] /= sum;
}

void normalize_block(double* block, std::size_t n, std::size_t pair) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) sum += block[k];
    if (!(sum > 0.0) || !std::isfinite(sum))
        throw InvariantError("pair " + std::to_string(pair) + ": posterior mass vanished");
    for (std::size_t k = 0; k < n; ++k) block[k] /= sum;
}

void fill_pair(const Matrix& alpha, const Matrix& beta, const Matrix& emission, const Matrix& step,
               std::size_t n, double* block) {
    const std::size_t s = alpha.cols();
    for (std::size_t i = 0; i < s; ++i) {
        const double a = alpha(n, i);
        for (std::size_t j = 0; j < s; ++j)
            block[i * s + j] = a * step(i, j) * emission(n + 1, j) * beta(n + 1, j);
    }
    normalize_block(block, s * s, n + 1);
}

// Backpointer choice: strictly greater wins, so ties keep the lower index.
void viterbi_cell(const Matrix& score, const Matrix& log_step, const Matrix& log_emission, std::size_t n,
                  std::size_t i, ViterbiTables& t) {
    const std::size_t s = score.cols();
    double best = -std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t j = 0; j < s; ++j) {
        const double v = score(n - 1, j) + log_step(j, i);
        if (v > best) {
            best = v;
            arg = j;
        }
    }
    t.score(n, i) = best + log_emission(n, i);
    t.back[n][i] = arg;
}

}  // namespace

Matrix scaled_likelihood(const Matrix& log_emission) {
    Matrix out(log_emission.rows(), log_emission.cols());
    for (std::size_t n = 0; n < log_emission.rows(); ++n) {
        const double* row = log_emission.row(n);
        const double top = *std::max_element(row, row + log_emission.cols());
        for (std::size_t i = 0; i < log_emission.cols(); ++i) out(n, i) = std::exp(row[i] - top);
    }
    return out;
}

void configure_threads_from_env() {
    if (const char* env = std::getenv("VERITAS_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) omp_set_num_threads(n);
    }
}

namespace serial {

Matrix emission_matrix(const EmissionInputs& in, const std::vector<ChunkRecord>& chunks) {
    const std::size_t s = in.grid->state_count();
    Matrix out(chunks.size(), s);
    for (std::size_t n = 0; n < chunks.size(); ++n)
        for (std::size_t i = 0; i < s; ++i) out(n, i) = emission_entry(in, chunks[n], i);
    return out;
}

Matrix forward(const Matrix& emission, const StepMatrices& steps, const std::vector<double>& initial) {
    const std::size_t n_chunks = emission.rows();
    const std::size_t s = emission.cols();
    Matrix alpha(n_chunks, s);
    for (std::size_t i = 0; i < s; ++i) alpha(0, i) = initial[i] * emission(0, i);
    normalize_row(alpha.row(0), s, 0);
    for (std::size_t n = 1; n < n_chunks; ++n) {
        const Matrix& step = *steps[n];
        for (std::size_t i = 0; i < s; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < s; ++j) acc += alpha(n - 1, j) * step(j, i);
            alpha(n, i) = acc * emission(n, i);
        }
        normalize_row(alpha.row(n), s, n);
    }
    return alpha;
}

Matrix backward(const Matrix& emission, const StepMatrices& steps) {
    const std::size_t n_chunks = emission.rows();
    const std::size_t s = emission.cols();
    Matrix beta(n_chunks, s, 1.0 / static_cast<double>(s));
    for (std::size_t n = n_chunks - 1; n-- > 0;) {
        const Matrix& step = *steps[n + 1];
        for (std::size_t i = 0; i < s; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < s; ++j) acc += step(i, j) * emission(n + 1, j) * beta(n + 1, j);
            beta(n, i) = acc;
        }
        normalize_row(beta.row(n), s, n);
    }
    return beta;
}

std::vector<double> pair_posterior(const Matrix& alpha, const Matrix& beta, const Matrix& emission,
                                   const StepMatrices& steps) {
    const std::size_t s = alpha.cols();
    const std::size_t pairs = alpha.rows() - 1;
    std::vector<double> gamma(pairs * s * s);
    for (std::size_t n = 0; n < pairs; ++n)
        fill_pair(alpha, beta, emission, *steps[n + 1], n, gamma.data() + n * s * s);
    return gamma;
}

ViterbiTables viterbi(const Matrix& log_emission, const StepMatrices& log_steps,
                      const std::vector<double>& log_initial) {
    const std::size_t n_chunks = log_emission.rows();
    const std::size_t s = log_emission.cols();
    ViterbiTables t{Matrix(n_chunks, s), std::vector<std::vector<std::size_t>>(n_chunks, std::vector<std::size_t>(s, 0))};
    for (std::size_t i = 0; i < s; ++i) t.score(0, i) = log_initial[i] + log_emission(0, i);
    for (std::size_t n = 1; n < n_chunks; ++n)
        for (std::size_t i = 0; i < s; ++i) viterbi_cell(t.score, *log_steps[n], log_emission, n, i, t);
    return t;
}

}  // namespace serial

namespace omp {

Matrix emission_matrix(const EmissionInputs& in, const std::vector<ChunkRecord>& chunks) {
    const std::size_t s = in.grid->state_count();
    const auto n_chunks = static_cast<std::ptrdiff_t>(chunks.size());
    Matrix out(chunks.size(), s);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t n = 0; n < n_chunks; ++n)
        for (std::size_t i = 0; i < s; ++i)
            out(static_cast<std::size_t>(n), i) = emission_entry(in, chunks[static_cast<std::size_t>(n)], i);
    return out;
}

Matrix forward(const Matrix& emission, const StepMatrices& steps, const std::vector<double>& initial) {
    const std::size_t n_chunks = emission.rows();
    const std::size_t s = emission.cols();
    const auto width = static_cast<std::ptrdiff_t>(s);
    Matrix alpha(n_chunks, s);
    for (std::size_t i = 0; i < s; ++i) alpha(0, i) = initial[i] * emission(0, i);
    normalize_row(alpha.row(0), s, 0);
    for (std::size_t n = 1; n < n_chunks; ++n) {
        const Matrix& step = *steps[n];
#pragma omp parallel for if (s >= kMinParallelStates)
        for (std::ptrdiff_t ii = 0; ii < width; ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            double acc = 0.0;
            for (std::size_t j = 0; j < s; ++j) acc += alpha(n - 1, j) * step(j, i);
            alpha(n, i) = acc * emission(n, i);
        }
        normalize_row(alpha.row(n), s, n);
    }
    return alpha;
}

Matrix backward(const Matrix& emission, const StepMatrices& steps) {
    const std::size_t n_chunks = emission.rows();
    const std::size_t s = emission.cols();
    const auto width = static_cast<std::ptrdiff_t>(s);
    Matrix beta(n_chunks, s, 1.0 / static_cast<double>(s));
    for (std::size_t n = n_chunks - 1; n-- > 0;) {
        const Matrix& step = *steps[n + 1];
#pragma omp parallel for if (s >= kMinParallelStates)
        for (std::ptrdiff_t ii = 0; ii < width; ++ii) {
            const auto i = static_cast<std::size_t>(ii);
            double acc = 0.0;
            for (std::size_t j = 0; j < s; ++j) acc += step(i, j) * emission(n + 1, j) * beta(n + 1, j);
            beta(n, i) = acc;
        }
        normalize_row(beta.row(n), s, n);
    }
    return beta;
}

std::vector<double> pair_posterior(const Matrix& alpha, const Matrix& beta, const Matrix& emission,
                                   const StepMatrices& steps) {
    const std::size_t s = alpha.cols();
    const auto pairs = static_cast<std::ptrdiff_t>(alpha.rows() - 1);
    std::vector<double> gamma(static_cast<std::size_t>(pairs) * s * s);
    // Exceptions may not cross the parallel region boundary.
    std::string failure;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t n = 0; n < pairs; ++n) {
        const auto k = static_cast<std::size_t>(n);
        try {
            fill_pair(alpha, beta, emission, *steps[k + 1], k, gamma.data() + k * s * s);
        } catch (const std::exception& e) {
#pragma omp critical(veritas_pair_failure)
            if (failure.empty()) failure = e.what();
        }
    }
    if (!failure.empty()) throw InvariantError(failure);
    return gamma;
}

ViterbiTables viterbi(const Matrix& log_emission, const StepMatrices& log_steps,
                      const std::vector<double>& log_initial) {
    const std::size_t n_chunks = log_emission.rows();
    const std::size_t s = log_emission.cols();
    const auto width = static_cast<std::ptrdiff_t>(s);
    ViterbiTables t{Matrix(n_chunks, s), std::vector<std::vector<std::size_t>>(n_chunks, std::vector<std::size_t>(s, 0))};
    for (std::size_t i = 0; i < s; ++i) t.score(0, i) = log_initial[i] + log_emission(0, i);
    for (std::size_t n = 1; n < n_chunks; ++n) {
#pragma omp parallel for if (s >= kMinParallelStates)
        for (std::ptrdiff_t i = 0; i < width; ++i)
            viterbi_cell(t.score, *log_steps[n], log_emission, n, static_cast<std::size_t>(i), t);
    }
    return t;
}

}  // namespace omp

}  // namespace veritas::kernels
