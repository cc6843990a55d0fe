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


// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include "support.hpp"
#include "vidcrf/io.hpp"
#include "vidcrf/parallel.hpp"
#include "vidcrf/pipeline.hpp"
#include "vidcrf/solver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

using namespace vidcrf;
using vidcrf::testing::Rng;
using vidcrf::testing::TempDir;
using vidcrf::testing::read_bytes;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Labeling flatten(const std::vector<Labeling>& frames) {
    Labeling out;
    for (const auto& f : frames)
        out.insert(out.end(), f.begin(), f.end());
    return out;
}

double accuracy(const Labeling& pred, const Labeling& gt, std::size_t labels) {
    return average_per_class_accuracy(confusion(pred, gt, labels)).average;
}

double max_abs_diff(const MarginalField& a, const MarginalField& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.data().size(); ++k)
        worst = std::max(worst, std::abs(a.data()[k] - b.data()[k]));
    return worst;
}

Outcome accuracy_gain() {
    const auto start = std::chrono::steady_clock::now();
    const SynthData d = generate_synthetic(SynthParams{});
    const Labeling gt = flatten(d.ground_truth);
    const std::size_t L = d.params.labels;
    const double unary = accuracy(decode_argmax(init_marginals(d.unary)), gt, L);

    RunConfig dense;
    dense.mode = RunMode::perframe;
    dense.hoc = false;
    const double perframe =
        accuracy(run_pipeline(make_problem(d.volume(), d.unary, d.segments, dense), dense).labeling, gt, L);

    RunConfig joint;
    const double full =
        accuracy(run_pipeline(make_problem(d.volume(), d.unary, d.segments, joint), joint).labeling, gt, L);
    const double wall = seconds_since(start);
    const bool calibrated = unary >= 0.70 && unary <= 0.80;
    return {calibrated && full >= perframe + 0.02 && full >= unary + 0.05 && wall < 60.0,
            fmt("unary %.4f, per-frame dense %.4f, joint+HOC %.4f (+%.1f / +%.1f points), %.1f s", unary, perframe,
                full, 100 * (full - perframe), 100 * (full - unary), wall)};
}

// The 50-frame 160x120 scene shared by the parity and throughput checks.
struct LargeBatch {
    double joint_wall = 0.0;
    double perframe_sum = 0.0;
    std::size_t cliques = 0;
    std::size_t layers = 0;
};

LargeBatch large_batch() {
    ScopedThreads one(1);
    SynthParams p;
    p.frames = 50;
    p.width = 160;
    p.height = 120;
    p.labels = 11;
    const SynthData d = generate_synthetic(p);
    RunConfig c;
    const CrfProblem problem = make_problem(d.volume(), d.unary, d.segments, c);
    LargeBatch out;
    out.cliques = problem.cliques.size();
    out.layers = problem.cliques.layers().size();
    out.joint_wall = run_pipeline(problem, c, false).wall_seconds;
    c.mode = RunMode::perframe;
    for (const auto& b : run_pipeline(problem, c, false).batches)
        out.perframe_sum += b.report.wall_seconds;
    return out;
}

Outcome cost_parity(const LargeBatch& b) {
    const double ratio = b.joint_wall / b.perframe_sum;
    return {ratio <= 1.3, fmt("joint %.2f s vs %.2f s summed over 50 per-frame runs, ratio %.3f", b.joint_wall,
                              b.perframe_sum, ratio)};
}

Outcome linear_scaling() {
    RunConfig c;
    c.bench.max_variables = 6400000;
    const auto points = run_bench(c, &std::cerr);
    bool ok = points.size() >= 2;
    std::ostringstream d;
    d << "n " << points.front().variables << ".." << points.back().variables << ", ratios";
    for (std::size_t k = 1; k < points.size(); ++k) {
        const double a = *std::min_element(points[k - 1].seconds.begin(), points[k - 1].seconds.end());
        const double b = *std::min_element(points[k].seconds.begin(), points[k].seconds.end());
        d << ' ' << fmt("%.2f", b / a);
        ok = ok && b / a <= 2.6;
    }
    d << fmt(", exponent %.3f", fitted_exponent(points));
    return {ok, d.str()};
}

Outcome lattice_oracle() {
    Rng rng(4);
    double worst = 0.0, total = 0.0, worst_lin = 0.0, worst_adj = 0.0;
    std::size_t worst_d = 0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t d = rng.range(2, 6);
        const std::size_t n = rng.range(1000, 2000);
        const double density = std::exp(rng.uniform(std::log(2.0), std::log(20.0)));
        const FeatureMatrix f = vidcrf::testing::random_box_features(n, d, density, rng);
        const PermutohedralLattice lat(f);
        const ValueMatrix v = vidcrf::testing::random_values(n, 1, rng);
        const double err =
            vidcrf::testing::relative_rms(lat.filter(v, FilterMode::raw).data(), brute_force_gaussian(f, v).data());
        total += err;
        if (err > worst) {
            worst = err;
            worst_d = d;
        }
        if (t % 10 == 0) {
            const ValueMatrix a = vidcrf::testing::random_values(n, 1, rng, -1, 1);
            const ValueMatrix b = vidcrf::testing::random_values(n, 1, rng, -1, 1);
            ValueMatrix mix(n, 1);
            for (std::size_t i = 0; i < n; ++i)
                mix(i, 0) = 2.5 * a(i, 0) - 0.75 * b(i, 0);
            const ValueMatrix fa = lat.filter(a, FilterMode::raw), fb = lat.filter(b, FilterMode::raw);
            const ValueMatrix fm = lat.filter(mix, FilterMode::raw);
            std::vector<double> want(n);
            for (std::size_t i = 0; i < n; ++i)
                want[i] = 2.5 * fa(i, 0) - 0.75 * fb(i, 0);
            worst_lin = std::max(worst_lin, vidcrf::testing::relative_rms(fm.data(), want));
            const double ab = vidcrf::testing::dot(fa.data(), b.data());
            const double ba = vidcrf::testing::dot(a.data(), fb.data());
            worst_adj = std::max(worst_adj, std::abs(ab - ba) / std::max(std::abs(ab), 1e-300));
        }
    }
    return {worst <= 0.08 && worst_lin <= 1e-6 && worst_adj <= 1e-6,
            fmt("relative RMS max %.4f (d=%zu) mean %.4f over 100 instances; linearity %.1e, adjointness %.1e", worst,
                worst_d, total / 100, worst_lin, worst_adj)};
}

Outcome hoc_oracle() {
    Rng rng(5);
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t L = rng.range(2, 4);
        const std::size_t m = rng.range(1, 10);
        const MarginalField q = vidcrf::testing::random_marginals(m, L, rng, 0.15);
        std::vector<VariableId> c(m);
        for (std::size_t k = 0; k < m; ++k)
            c[k] = static_cast<VariableId>(k);
        const VariableId i = c[rng.index(m)];
        const double gmax = rng.uniform(0.5, 3.0);
        for (std::size_t l = 0; l < L; ++l) {
            const double gl = rng.uniform(0.0, 0.5);
            const double want = vidcrf::testing::exhaustive_clique_cost(q, c, i, l, gl, gmax);
            worst = std::max(worst, std::abs(expected_clique_cost(q, c, i, l, gl, gmax) - want));
        }
    }
    return {worst <= 1e-9, fmt("max deviation %.2e on 200 cliques", worst)};
}

Outcome monotonicity() {
    Rng rng(6);
    double worst = -1e300;
    std::size_t steps = 0;
    for (int t = 0; t < 50; ++t) {
        const std::size_t w = rng.range(3, 10), h = rng.range(3, 10);
        const std::size_t frames = w * h * 2 <= 200 ? rng.range(1, 2) : 1;
        const CrfProblem p =
            vidcrf::testing::random_problem({frames, w, h, rng.range(2, 4)}, rng, true, rng.uniform(0.5, 3.0));
        std::vector<VariableId> order(p.variable_count());
        for (std::size_t k = 0; k < order.size(); ++k)
            order[k] = static_cast<VariableId>(k);
        for (std::size_t k = order.size(); k > 1; --k)
            std::swap(order[k - 1], order[rng.index(k)]);
        MarginalField q = init_marginals(p.unary);
        double previous = free_energy(p, q);
        for (int sweep = 0; sweep < 2; ++sweep) {
            q = mf_step_sequential(p, q, order, [&](VariableId, const MarginalField& cur) {
                const double f = free_energy(p, cur);
                worst = std::max(worst, f - previous);
                previous = f;
                ++steps;
            });
        }
    }
    return {worst <= 1e-9, fmt("largest single-update change %+.2e over %zu updates", worst, steps)};
}

Outcome decoupling() {
    SynthParams p;
    p.frames = 3;
    p.width = 64;
    p.height = 48;
    const SynthData d = generate_synthetic(p);
    RunConfig c;
    c.smoothness.sigma_time = 1e-3;
    c.appearance.sigma_time = 1e-3;
    const CrfProblem problem = make_problem(d.volume(), d.unary, d.segments, c);
    const InferenceResult joint = run_inference(problem);
    const InferenceResult split = run_windows(problem, 1);
    const double diff = max_abs_diff(joint.marginals, split.marginals);
    return {diff <= 1e-3, fmt("max marginal difference %.2e", diff)};
}

Outcome invariants() {
    std::vector<std::string> failed;
    auto expect = [&](bool ok, const std::string& what) {
        if (!ok)
            failed.push_back(what);
    };

    SynthParams sp;
    sp.frames = 3;
    sp.width = 64;
    sp.height = 48;
    const SynthData d = generate_synthetic(sp);
    RunConfig c;
    const CrfProblem problem = make_problem(d.volume(), d.unary, d.segments, c);

    double norm = 0.0;
    SolverOptions o;
    o.on_iteration = [&](int, const MarginalField& q) { norm = std::max(norm, q.max_normalization_error()); };
    run_inference(problem, o);
    expect(norm <= 1e-6, "normalization");

    CrfProblem zero = problem;
    for (auto& k : zero.kernels)
        k.weight = 0.0;
    zero.cliques = CliqueSet(problem.cliques.params());
    const InferenceResult z = run_inference(zero);
    const MarginalField init = init_marginals(zero.unary);
    expect(max_abs_diff(z.marginals, init) == 0.0 && z.labeling == decode_argmax(init), "zero-pairwise reduction");

    SolverOptions expl;
    expl.message_form = MessageForm::explicit_sum;
    MeanFieldSolver folded(problem), full(problem, expl);
    MarginalField q = init_marginals(problem.unary);
    double msg = 0.0;
    for (int it = 0; it < 3; ++it) {
        const MarginalField a = folded.step(q), b = full.step(q);
        msg = std::max(msg, max_abs_diff(a, b));
        q = a;
    }
    expect(msg <= 1e-10, "folded vs explicit Potts message");

    TempDir dir("accept");
    bool exact = true;
    auto twice = [&](const std::string& name, const std::function<void(const fs::path&)>& save,
                     const std::function<void(const fs::path&, const fs::path&)>& reload) {
        save(dir / (name + ".a"));
        reload(dir / (name + ".a"), dir / (name + ".b"));
        exact = exact && read_bytes(dir / (name + ".a")) == read_bytes(dir / (name + ".b"));
    };
    twice("ppm", [&](const fs::path& p) { save_image(p, d.images[0]); },
          [](const fs::path& a, const fs::path& b) { save_image(b, load_image(a)); });
    twice("pgm", [&](const fs::path& p) { save_labelmap(p, d.ground_truth[1], sp.width, sp.height); },
          [](const fs::path& a, const fs::path& b) { save_pgm(b, load_pgm(a)); });
    twice("unr", [&](const fs::path& p) { save_unary(p, d.unary, 2); },
          [](const fs::path& a, const fs::path& b) { save_unary(b, load_unary(a)); });
    twice("seg", [&](const fs::path& p) { save_segments(p, d.segments[1]); },
          [](const fs::path& a, const fs::path& b) { save_segments(b, load_segments(a)); });
    expect(exact && load_image(dir / "ppm.a").rgb == d.images[0].rgb &&
               load_pgm(dir / "pgm.a").pixels == d.ground_truth[1] && load_segments(dir / "seg.a").ids == d.segments[1].ids,
           "binary round trips");

    write_synthetic(dir / "data", d);
    bool same = true;
    for (const char* run : {"run1", "run2"}) {
        RunConfig r;
        r.images = dir / "data/images";
        r.unaries = dir / "data/unaries";
        r.segments = {dir / "data/segments"};
        r.out = dir / run;
        std::ostringstream log;
        cmd_infer(r, log);
    }
    for (std::size_t t = 0; t < sp.frames; ++t) {
        const std::string f = "labels/" + frame_stem(t) + ".pgm";
        same = same && read_bytes(dir / "run1" / f) == read_bytes(dir / "run2" / f);
    }
    expect(same, "pipeline determinism");

    std::string detail = fmt("normalization %.1e, folded-vs-explicit %.1e, round trips %s, determinism %s", norm, msg,
                             exact ? "exact" : "differ", same ? "identical" : "differ");
    for (const auto& f : failed)
        detail += "; failed: " + f;
    return {failed.empty(), detail};
}

Outcome throughput(const LargeBatch& b) {
    return {b.joint_wall < 10.0 && b.layers == 3,
            fmt("50 frames 160x120, 11 labels, %zu layers (%zu cliques), 5 iterations: %.2f s", b.layers, b.cliques,
                b.joint_wall)};
}

} // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const char* name, const Outcome& o) {
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << o.detail
                  << std::endl;
        failures += o.pass ? 0 : 1;
    };
    report(1, "accuracy gain", accuracy_gain());
    const LargeBatch batch = large_batch();
    report(2, "cost parity", cost_parity(batch));
    report(3, "linear scaling", linear_scaling());
    report(4, "lattice oracle", lattice_oracle());
    report(5, "higher-order oracle", hoc_oracle());
    report(6, "free-energy monotonicity", monotonicity());
    report(7, "decoupling", decoupling());
    report(8, "invariants", invariants());
    report(9, "throughput", throughput(batch));
    return failures == 0 ? 0 : 1;
}
