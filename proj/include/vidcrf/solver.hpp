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

#pragma once

#include "vidcrf/lattice.hpp"
#include "vidcrf/marginals.hpp"
#include "vidcrf/model.hpp"

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace vidcrf {

enum class Schedule {
    parallel,  ///< simultaneous filter-based updates (fast path)
    sequential ///< exact one-variable-at-a-time updates (O(n^2) oracle)
};

/// How the pairwise message is assembled from the filtered marginals.
enum class MessageForm {
    folded,  ///< Potts only: sum_m w_m (S_i - F_i(l)), S_i summed over labels
    explicit_sum ///< sum_{l'} mu(l, l') * filtered mass of l'
};

struct SolverOptions {
    Schedule schedule = Schedule::parallel;
    MessageForm message_form = MessageForm::folded;
    /// Q' = damping * Q_new + (1 - damping) * Q_old, in (0, 1].
    double damping = 1.0;
    /// Invoked after every parallel iteration (and every sequential sweep)
    /// with the iteration index and the new marginals.
    std::function<void(int, const MarginalField&)> on_iteration;
    /// Fill SolverReport::energy with the filtered energy of the result.
    bool compute_energy = false;

    void validate() const;
};

/// Wall-clock seconds per phase.
struct PhaseTimes {
    double lattice_build = 0.0;
    double filtering = 0.0;
    double hoc = 0.0;
    double normalization = 0.0;

    double total() const { return lattice_build + filtering + hoc + normalization; }
    PhaseTimes& operator+=(const PhaseTimes& o);
};

struct SolverReport {
    int iterations = 0;
    PhaseTimes times;
    double wall_seconds = 0.0;
    /// Free energy before the first and after every sweep; sequential schedule only.
    std::vector<double> free_energy_trace;
    /// Energy of the decoded labeling with lattice-filtered pairwise sums, or
    /// NaN when not requested.
    double energy = std::numeric_limits<double>::quiet_NaN();
};

struct InferenceResult {
    Labeling labeling;
    MarginalField marginals;
    SolverReport report;
};

/// Q_i = softmax(-unary_i), with max subtraction.
MarginalField init_marginals(const UnaryField& unary);

/// Filter-based mean-field over a whole frame batch. Builds one lattice per
/// kernel with non-zero weight; step() performs one simultaneous update.
class MeanFieldSolver {
public:
    MeanFieldSolver(const CrfProblem& problem, SolverOptions options = {});

    /// One parallel update; `out` is resized as needed and must not alias `q`.
    void step(const MarginalField& q, MarginalField& out);
    MarginalField step(const MarginalField& q);

    /// Pairwise term sum_m w_m (filter_m(Q(l))_i - Q_i(l)) for every i, l.
    void filtered_mass(const MarginalField& q, std::span<double> out);

    /// Energy of a labeling with the pairwise sum taken through the lattices.
    double labeling_energy(std::span<const Label> labeling);

    const PhaseTimes& times() const { return times_; }
    std::size_t lattice_count() const { return lattices_.size(); }
    const PermutohedralLattice& lattice(std::size_t k) const { return lattices_[k]; }

private:
    const CrfProblem& problem_;
    SolverOptions options_;
    std::vector<PermutohedralLattice> lattices_;
    std::vector<double> weights_;
    std::vector<double> mass_;
    std::vector<double> filtered_;
    std::vector<double> hoc_;
    PhaseTimes times_;
};

/// Exact sequential coordinate update in the given order (a permutation of
/// all variable ids). Each variable is set to its exact conditional
/// minimiser of the free energy given the others. `after_update`, when set,
/// is called with the variable id and the current marginals after each update.
MarginalField mf_step_sequential(const CrfProblem& problem, const MarginalField& q,
                                 std::span<const VariableId> order,
                                 const std::function<void(VariableId, const MarginalField&)>& after_update = {});

/// Mean-field free energy E_Q[E] - H(Q), exact O(n^2 L).
double free_energy(const CrfProblem& problem, const MarginalField& q);

/// Runs problem.iterations updates over the whole volume as one batch and
/// decodes the argmax labeling.
InferenceResult run_inference(const CrfProblem& problem, const SolverOptions& options = {});

/// Splits the volume into disjoint consecutive windows of `batch` frames,
/// infers each one independently and concatenates the results.
InferenceResult run_windows(const CrfProblem& problem, std::size_t batch, const SolverOptions& options = {});

} // namespace vidcrf
