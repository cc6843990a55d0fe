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

#include "vidcrf/solver.hpp"

#include "vidcrf/error.hpp"
#include "vidcrf/hoc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace vidcrf {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// In-place softmax of -logits (costs) into `out`, max-subtracted.
void softmax_of_costs(std::span<const double> costs, std::span<double> out) {
    double lo = std::numeric_limits<double>::infinity();
    for (double c : costs)
        lo = std::min(lo, c);
    double z = 0.0;
    for (std::size_t l = 0; l < costs.size(); ++l) {
        out[l] = std::exp(lo - costs[l]);
        z += out[l];
    }
    const double inv = 1.0 / z;
    for (double& v : out)
        v *= inv;
}

void check_oracle_size(const CrfProblem& problem, const char* what) {
    if (problem.variable_count() > kOracleMaxVariables)
        throw Error(std::string(what) + ": " + std::to_string(problem.variable_count()) +
                    " variables exceeds the exact-evaluation limit of " + std::to_string(kOracleMaxVariables));
}

void check_shape(const CrfProblem& problem, const MarginalField& q, const char* what) {
    if (q.variable_count() != problem.variable_count() || q.labels() != problem.labels())
        throw Error(std::string(what) + ": marginal field " + std::to_string(q.variable_count()) + "x" +
                    std::to_string(q.labels()) + " does not match problem " +
                    std::to_string(problem.variable_count()) + "x" + std::to_string(problem.labels()));
}

// Exact embedded features of every non-zero kernel, for the O(n^2) paths.
struct ExactKernels {
    std::vector<FeatureMatrix> features;
    std::vector<double> weights;

    explicit ExactKernels(const CrfProblem& problem) {
        for (const auto& k : problem.kernels)
            if (k.weight != 0.0) {
                features.push_back(embed_features(problem, k));
                weights.push_back(k.weight);
            }
    }

    double operator()(std::size_t a, std::size_t b) const {
        double s = 0.0;
        for (std::size_t m = 0; m < features.size(); ++m) {
            const auto fa = features[m].row(a);
            const auto fb = features[m].row(b);
            double d2 = 0.0;
            for (std::size_t k = 0; k < fa.size(); ++k) {
                const double t = fa[k] - fb[k];
                d2 += t * t;
            }
            s += weights[m] * std::exp(-0.5 * d2);
        }
        return s;
    }
};

// Cliques containing each variable.
struct Membership {
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> cliques;

    Membership(const CliqueSet& set, std::size_t n) : offsets(n + 1, 0) {
        for (std::size_t c = 0; c < set.size(); ++c)
            for (VariableId v : set.members(c))
                ++offsets[v + 1];
        std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
        cliques.resize(offsets.back());
        std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
        for (std::size_t c = 0; c < set.size(); ++c)
            for (VariableId v : set.members(c))
                cliques[fill[v]++] = c;
    }

    std::span<const std::size_t> of(std::size_t v) const {
        return {cliques.data() + offsets[v], offsets[v + 1] - offsets[v]};
    }
};

} // namespace

void SolverOptions::validate() const {
    if (!(damping > 0.0 && damping <= 1.0))
        throw Error("damping must lie in (0, 1], got " + std::to_string(damping));
}

PhaseTimes& PhaseTimes::operator+=(const PhaseTimes& o) {
    lattice_build += o.lattice_build;
    filtering += o.filtering;
    hoc += o.hoc;
    normalization += o.normalization;
    return *this;
}

MarginalField init_marginals(const UnaryField& unary) {
    MarginalField q(unary.frames(), unary.pixels_per_frame(), unary.labels());
    const std::size_t labels = unary.labels();
    const auto n = static_cast<std::ptrdiff_t>(unary.variable_count());
#pragma omp parallel
    {
        std::vector<double> costs(labels);
#pragma omp for schedule(static)
        for (std::ptrdiff_t vi = 0; vi < n; ++vi) {
            const auto v = static_cast<std::size_t>(vi);
            const auto u = unary.row(v);
            std::copy(u.begin(), u.end(), costs.begin());
            softmax_of_costs(costs, q.row(v));
        }
    }
    return q;
}

MeanFieldSolver::MeanFieldSolver(const CrfProblem& problem, SolverOptions options)
    : problem_(problem), options_(std::move(options)) {
    problem_.validate();
    options_.validate();
    if (options_.message_form == MessageForm::folded && !problem_.compatibility.is_potts())
        options_.message_form = MessageForm::explicit_sum;
    const auto start = Clock::now();
    for (const auto& k : problem_.kernels) {
        if (k.weight == 0.0)
            continue;
        lattices_.emplace_back(embed_features(problem_, k));
        weights_.push_back(k.weight);
    }
    times_.lattice_build = seconds_since(start);
}

void MeanFieldSolver::filtered_mass(const MarginalField& q, std::span<double> out) {
    check_shape(problem_, q, "mf_step_parallel");
    const std::size_t labels = q.labels();
    const auto total = static_cast<std::ptrdiff_t>(q.data().size());
    std::fill(out.begin(), out.end(), 0.0);
    filtered_.resize(q.data().size());
    const auto in = q.data();
    for (std::size_t m = 0; m < lattices_.size(); ++m) {
        const auto start = Clock::now();
        lattices_[m].filter(in, labels, filtered_, FilterMode::raw);
        times_.filtering += seconds_since(start);
        const double w = weights_[m];
        const auto norm_start = Clock::now();
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t k = 0; k < total; ++k) {
            const auto i = static_cast<std::size_t>(k);
            out[i] += w * (filtered_[i] - in[i]);
        }
        times_.normalization += seconds_since(norm_start);
    }
}

double MeanFieldSolver::labeling_energy(std::span<const Label> labeling) {
    const std::size_t labels = problem_.labels();
    const std::size_t n = problem_.variable_count();
    if (labeling.size() != n)
        throw Error("labeling_energy: labeling has " + std::to_string(labeling.size()) + " entries, expected " +
                    std::to_string(n));
    MarginalField onehot(problem_.volume.frames(), problem_.volume.pixels_per_frame(), labels);
    for (std::size_t i = 0; i < n; ++i) {
        if (labeling[i] >= labels)
            throw Error("labeling_energy: label " + std::to_string(labeling[i]) + " at variable " +
                        std::to_string(i) + " out of range");
        onehot(i, labeling[i]) = 1.0;
    }
    std::vector<double> mass(n * labels);
    filtered_mass(onehot, mass);
    double unary = 0.0, pairwise = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        unary += problem_.unary.cost(i, labeling[i]);
        for (std::size_t l = 0; l < labels; ++l)
            pairwise += problem_.compatibility(labeling[i], l) * mass[i * labels + l];
    }
    double cliques = 0.0;
    for (std::size_t c = 0; c < problem_.cliques.size(); ++c)
        cliques += clique_energy(problem_.cliques, c, labeling);
    return unary + 0.5 * pairwise + cliques;
}

void MeanFieldSolver::step(const MarginalField& q, MarginalField& out) {
    const std::size_t labels = q.labels();
    const std::size_t n = q.variable_count();
    if (&q == &out)
        throw Error("mf_step_parallel: output must not alias input");
    if (out.variable_count() != n || out.labels() != labels)
        out = MarginalField(q.frames(), q.pixels_per_frame(), labels);

    mass_.resize(n * labels);
    filtered_mass(q, mass_);

    const bool with_hoc = !problem_.cliques.empty();
    if (with_hoc) {
        const auto start = Clock::now();
        hoc_.resize(n * labels);
        hoc_update_field(q, problem_.cliques, hoc_);
        times_.hoc += seconds_since(start);
    }

    const auto start = Clock::now();
    const auto& mu = problem_.compatibility;
    const bool folded = options_.message_form == MessageForm::folded;
    const double lambda = options_.damping;
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel
    {
        std::vector<double> costs(labels), fresh(labels);
#pragma omp for schedule(static)
        for (std::ptrdiff_t vi = 0; vi < count; ++vi) {
            const auto v = static_cast<std::size_t>(vi);
            const double* p = mass_.data() + v * labels;
            const auto u = problem_.unary.row(v);
            if (folded) {
                double s = 0.0;
                for (std::size_t l = 0; l < labels; ++l)
                    s += p[l];
                for (std::size_t l = 0; l < labels; ++l)
                    costs[l] = static_cast<double>(u[l]) + (s - p[l]);
            } else {
                for (std::size_t l = 0; l < labels; ++l) {
                    double m = 0.0;
                    for (std::size_t k = 0; k < labels; ++k)
                        m += mu(l, k) * p[k];
                    costs[l] = static_cast<double>(u[l]) + m;
                }
            }
            if (with_hoc)
                for (std::size_t l = 0; l < labels; ++l)
                    costs[l] += hoc_[v * labels + l];
            auto dst = out.row(v);
            if (lambda == 1.0) {
                softmax_of_costs(costs, dst);
            } else {
                softmax_of_costs(costs, fresh);
                const auto old = q.row(v);
                for (std::size_t l = 0; l < labels; ++l)
                    dst[l] = lambda * fresh[l] + (1.0 - lambda) * old[l];
            }
        }
    }
    times_.normalization += seconds_since(start);
}

MarginalField MeanFieldSolver::step(const MarginalField& q) {
    MarginalField out;
    step(q, out);
    return out;
}

MarginalField mf_step_sequential(const CrfProblem& problem, const MarginalField& q,
                                 std::span<const VariableId> order,
                                 const std::function<void(VariableId, const MarginalField&)>& after_update) {
    problem.validate();
    check_oracle_size(problem, "mf_step_sequential");
    check_shape(problem, q, "mf_step_sequential");
    const std::size_t n = problem.variable_count();
    const std::size_t labels = problem.labels();
    if (order.size() != n)
        throw Error("mf_step_sequential: order has " + std::to_string(order.size()) + " entries, expected " +
                    std::to_string(n));
    std::vector<char> seen(n, 0);
    for (VariableId v : order) {
        if (v >= n || seen[v])
            throw Error("mf_step_sequential: order is not a permutation of the variables");
        seen[v] = 1;
    }

    const ExactKernels kernel(problem);
    const Membership membership(problem.cliques, n);
    const auto& mu = problem.compatibility;
    MarginalField cur = q;
    std::vector<double> mass(labels), costs(labels);

    for (VariableId i : order) {
        std::fill(mass.begin(), mass.end(), 0.0);
        if (!kernel.weights.empty()) {
            for (std::size_t b = 0; b < n; ++b) {
                if (b == i)
                    continue;
                const double k = kernel(i, b);
                const auto qb = cur.row(b);
                for (std::size_t l = 0; l < labels; ++l)
                    mass[l] += k * qb[l];
            }
        }
        for (std::size_t l = 0; l < labels; ++l) {
            double m = 0.0;
            for (std::size_t k = 0; k < labels; ++k)
                m += mu(l, k) * mass[k];
            costs[l] = static_cast<double>(problem.unary.cost(i, l)) + m;
            for (std::size_t c : membership.of(i))
                costs[l] += expected_clique_cost(cur, problem.cliques, c, i, l);
        }
        softmax_of_costs(costs, cur.row(i));
        if (after_update)
            after_update(i, cur);
    }
    return cur;
}

double free_energy(const CrfProblem& problem, const MarginalField& q) {
    problem.validate();
    check_oracle_size(problem, "free_energy");
    check_shape(problem, q, "free_energy");
    const std::size_t n = problem.variable_count();
    const std::size_t labels = problem.labels();
    const auto& mu = problem.compatibility;

    double e = 0.0;
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t l = 0; l < labels; ++l) {
            const double p = q(v, l);
            e += p * problem.unary.cost(v, l);
            if (p > 0.0)
                e += p * std::log(p);
        }

    const ExactKernels kernel(problem);
    if (!kernel.weights.empty()) {
        // (mu Q_b)(l) for every b.
        std::vector<double> mq(n * labels, 0.0);
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t l = 0; l < labels; ++l)
                for (std::size_t k = 0; k < labels; ++k)
                    mq[b * labels + l] += mu(l, k) * q(b, k);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b) {
                double s = 0.0;
                for (std::size_t l = 0; l < labels; ++l)
                    s += q(a, l) * mq[b * labels + l];
                if (s != 0.0)
                    e += kernel(a, b) * s;
            }
    }

    for (std::size_t c = 0; c < problem.cliques.size(); ++c)
        e += expected_clique_energy(q, problem.cliques, c);
    return e;
}

InferenceResult run_inference(const CrfProblem& problem, const SolverOptions& options) {
    problem.validate();
    options.validate();
    const auto wall = Clock::now();
    InferenceResult result;

    if (options.schedule == Schedule::sequential) {
        check_oracle_size(problem, "run_inference (sequential)");
        auto start = Clock::now();
        MarginalField q = init_marginals(problem.unary);
        result.report.times.normalization += seconds_since(start);
        std::vector<VariableId> order(problem.variable_count());
        std::iota(order.begin(), order.end(), VariableId{0});
        result.report.free_energy_trace.push_back(free_energy(problem, q));
        for (int it = 0; it < problem.iterations; ++it) {
            start = Clock::now();
            q = mf_step_sequential(problem, q, order);
            result.report.times.normalization += seconds_since(start);
            result.report.free_energy_trace.push_back(free_energy(problem, q));
            result.report.iterations = it + 1;
            if (options.on_iteration)
                options.on_iteration(it, q);
        }
        result.marginals = std::move(q);
    } else {
        MeanFieldSolver solver(problem, options);
        auto start = Clock::now();
        MarginalField q = init_marginals(problem.unary);
        const double init_time = seconds_since(start);
        MarginalField next;
        for (int it = 0; it < problem.iterations; ++it) {
            solver.step(q, next);
            std::swap(q, next);
            result.report.iterations = it + 1;
            if (options.on_iteration)
                options.on_iteration(it, q);
        }
        result.report.times = solver.times();
        result.report.times.normalization += init_time;
        result.marginals = std::move(q);
        result.labeling = decode_argmax(result.marginals);
        if (options.compute_energy)
            result.report.energy = solver.labeling_energy(result.labeling);
    }

    if (options.schedule == Schedule::sequential) {
        result.labeling = decode_argmax(result.marginals);
        if (options.compute_energy)
            result.report.energy = energy(problem, result.labeling);
    }
    result.report.wall_seconds = seconds_since(wall);
    return result;
}

InferenceResult run_windows(const CrfProblem& problem, std::size_t batch, const SolverOptions& options) {
    problem.validate();
    if (batch == 0)
        throw Error("batch must be >= 1");
    const std::size_t frames = problem.volume.frames();
    if (batch >= frames)
        return run_inference(problem, options);

    const auto wall = Clock::now();
    InferenceResult out;
    out.marginals = MarginalField(frames, problem.volume.pixels_per_frame(), problem.labels());
    out.labeling.reserve(problem.variable_count());
    std::size_t offset = 0;
    for (std::size_t first = 0; first < frames; first += batch) {
        const std::size_t count = std::min(batch, frames - first);
        const CrfProblem window = problem.slice_frames(first, count);
        InferenceResult part = run_inference(window, options);
        std::copy(part.marginals.data().begin(), part.marginals.data().end(),
                  out.marginals.data().begin() + static_cast<std::ptrdiff_t>(offset));
        offset += part.marginals.data().size();
        out.labeling.insert(out.labeling.end(), part.labeling.begin(), part.labeling.end());
        out.report.times += part.report.times;
        out.report.iterations = part.report.iterations;
        if (options.compute_energy)
            out.report.energy = first == 0 ? part.report.energy : out.report.energy + part.report.energy;
    }
    out.report.wall_seconds = seconds_since(wall);
    return out;
}

} // namespace vidcrf
