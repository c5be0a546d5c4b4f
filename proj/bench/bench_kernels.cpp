#include <benchmark/benchmark.h>

#include <cmath>

#include "veritas/ehmm.hpp"
#include "veritas/kernels.hpp"
#include "veritas/player_sim.hpp"

using namespace veritas;

namespace {

// One shared lattice: 81 states over a 3000-chunk session.
struct Workload {
    EhmmModel model = EhmmModel::make(QuantGrid{5.0, 0.25, 20.0});
    SessionLog log;
    Lattice lat;
    kernels::StepMatrices steps;
    std::map<std::size_t, Matrix> log_powers;
    kernels::StepMatrices log_steps;
    std::vector<double> log_initial;
    Matrix emission, alpha, beta;

    Workload() {
        TraceParams p;
        p.kind = TraceKind::markov_walk;
        p.windows = 3000;
        const CapacityTrace truth = generate_trace(p, model.grid, 1);
        VideoModel v;
        v.ladder = VideoModel::default_ladder();
        v.total_chunks = 3000;
        log = run_session(truth, v, PlayerConfig{}, 1).log;
        lat = build_lattice(model, log, Exec::serial);
        steps.assign(log.size(), nullptr);
        log_steps.assign(log.size(), nullptr);
        for (const auto& [d, m] : lat.powers) {
            Matrix l(m.rows(), m.cols());
            for (std::size_t i = 0; i < m.rows(); ++i)
                for (std::size_t j = 0; j < m.cols(); ++j) l(i, j) = m(i, j) > 0 ? std::log(m(i, j)) : -1e300;
            log_powers.emplace(d, l);
        }
        for (std::size_t n = 1; n < log.size(); ++n) {
            steps[n] = &lat.step(n);
            log_steps[n] = &log_powers.at(lat.deltas[n]);
        }
        for (double u : model.initial) log_initial.push_back(std::log(u));
        emission = kernels::scaled_likelihood(lat.log_emission);
        alpha = kernels::serial::forward(emission, steps, model.initial);
        beta = kernels::serial::backward(emission, steps);
    }
};

const Workload& work() {
    static const Workload w;
    return w;
}

template <bool Parallel>
void BM_Emission(benchmark::State& state) {
    const Workload& w = work();
    const kernels::EmissionInputs in{&w.model.grid, &w.model.estimator, w.model.sigma_mbps};
    for (auto _ : state)
        benchmark::DoNotOptimize(Parallel ? kernels::omp::emission_matrix(in, w.log.chunks)
                                          : kernels::serial::emission_matrix(in, w.log.chunks));
}

template <bool Parallel>
void BM_Forward(benchmark::State& state) {
    const Workload& w = work();
    for (auto _ : state)
        benchmark::DoNotOptimize(Parallel ? kernels::omp::forward(w.emission, w.steps, w.model.initial)
                                          : kernels::serial::forward(w.emission, w.steps, w.model.initial));
}

template <bool Parallel>
void BM_Backward(benchmark::State& state) {
    const Workload& w = work();
    for (auto _ : state)
        benchmark::DoNotOptimize(Parallel ? kernels::omp::backward(w.emission, w.steps)
                                          : kernels::serial::backward(w.emission, w.steps));
}

template <bool Parallel>
void BM_PairPosterior(benchmark::State& state) {
    const Workload& w = work();
    for (auto _ : state)
        benchmark::DoNotOptimize(Parallel ? kernels::omp::pair_posterior(w.alpha, w.beta, w.emission, w.steps)
                                          : kernels::serial::pair_posterior(w.alpha, w.beta, w.emission, w.steps));
}

template <bool Parallel>
void BM_Viterbi(benchmark::State& state) {
    const Workload& w = work();
    for (auto _ : state)
        benchmark::DoNotOptimize(Parallel ? kernels::omp::viterbi(w.lat.log_emission, w.log_steps, w.log_initial)
                                          : kernels::serial::viterbi(w.lat.log_emission, w.log_steps, w.log_initial));
}

}  // namespace

BENCHMARK(BM_Emission<false>)->Name("emission/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Emission<true>)->Name("emission/omp")->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Forward<false>)->Name("forward/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Forward<true>)->Name("forward/omp")->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Backward<false>)->Name("backward/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Backward<true>)->Name("backward/omp")->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_PairPosterior<false>)->Name("pair_posterior/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PairPosterior<true>)->Name("pair_posterior/omp")->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Viterbi<false>)->Name("viterbi/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Viterbi<true>)->Name("viterbi/omp")->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
