// Copyright 2026 The vidcrf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "../tests/support.hpp"
#include "vidcrf/hoc.hpp"
#include "vidcrf/lattice.hpp"
#include "vidcrf/parallel.hpp"
#include "vidcrf/pipeline.hpp"
#include "vidcrf/solver.hpp"

#include <benchmark/benchmark.h>

using namespace vidcrf;

namespace {

struct Cloud {
    FeatureMatrix features;
    ValueMatrix values;
};

Cloud cloud(std::size_t n, std::size_t d, std::size_t channels) {
    vidcrf::testing::Rng rng(17);
    return {vidcrf::testing::random_box_features(n, d, 4.0, rng), vidcrf::testing::random_values(n, channels, rng)};
}

CrfProblem scene(std::size_t frames) {
    SynthParams p;
    p.frames = frames;
    p.width = 160;
    p.height = 120;
    p.labels = 11;
    const SynthData d = generate_synthetic(p);
    return make_problem(d.volume(), d.unary, d.segments, RunConfig{});
}

// Range arguments: n, then the thread count (0 is the default pool).
void BM_LatticeFilter(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    ScopedThreads threads(static_cast<int>(state.range(1)));
    const Cloud c = cloud(n, 5, 4);
    const PermutohedralLattice lat(c.features);
    for (auto _ : state)
        benchmark::DoNotOptimize(lat.filter(c.values, FilterMode::raw));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_LatticeBuild(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    ScopedThreads threads(static_cast<int>(state.range(1)));
    const Cloud c = cloud(n, 5, 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(PermutohedralLattice(c.features).vertex_count());
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_BruteForce(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const Cloud c = cloud(n, 5, 4);
    for (auto _ : state)
        benchmark::DoNotOptimize(brute_force_gaussian(c.features, c.values));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

void BM_ParallelStep(benchmark::State& state) {
    ScopedThreads threads(static_cast<int>(state.range(1)));
    const CrfProblem p = scene(static_cast<std::size_t>(state.range(0)));
    MeanFieldSolver solver(p);
    const MarginalField q = init_marginals(p.unary);
    MarginalField out;
    for (auto _ : state)
        solver.step(q, out);
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.variable_count()));
}

void BM_SequentialSweep(benchmark::State& state) {
    vidcrf::testing::Rng rng(18);
    const auto side = static_cast<std::size_t>(state.range(0));
    const CrfProblem p = vidcrf::testing::random_problem({1, side, side, 4}, rng, true);
    std::vector<VariableId> order(p.variable_count());
    for (std::size_t k = 0; k < order.size(); ++k)
        order[k] = static_cast<VariableId>(k);
    const MarginalField q = init_marginals(p.unary);
    for (auto _ : state)
        benchmark::DoNotOptimize(mf_step_sequential(p, q, order));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.variable_count()));
}

void BM_HocUpdate(benchmark::State& state) {
    ScopedThreads threads(static_cast<int>(state.range(1)));
    const CrfProblem p = scene(static_cast<std::size_t>(state.range(0)));
    const MarginalField q = init_marginals(p.unary);
    std::vector<double> h(q.data().size());
    for (auto _ : state)
        hoc_update_field(q, p.cliques, h);
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.cliques.total_members()));
}

} // namespace

BENCHMARK(BM_LatticeFilter)->ArgsProduct({{1000, 2000, 100000}, {1, 0}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LatticeBuild)->ArgsProduct({{2000, 100000}, {1, 0}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BruteForce)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ParallelStep)->ArgsProduct({{1, 5}, {1, 0}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SequentialSweep)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HocUpdate)->ArgsProduct({{5}, {1, 0}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
