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

#include "vidcrf/marginals.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace vidcrf {

/// P^n-Potts costs: gamma_low[l] when every member of a clique takes label l,
/// gamma_max(c) = alpha * |c| otherwise.
struct PnPottsParams {
    std::vector<double> gamma_low; ///< per label; missing entries read as 0
    double alpha = 0.05;

    double low(std::size_t label) const { return label < gamma_low.size() ? gamma_low[label] : 0.0; }
    void validate() const;
};

enum class CliqueSource : std::uint8_t {
    superpixel,       ///< per-frame segment of one superpixel layer
    supervoxel_slice, ///< one frame's cross-section of a supervoxel
    supervoxel        ///< a supervoxel spanning several frames
};

/// Contiguous run of cliques coming from one segmentation.
struct CliqueLayer {
    CliqueSource source;
    std::size_t begin;
    std::size_t end;
};

/// Pattern cliques. Within a layer cliques are pairwise disjoint; cliques
/// from different layers may overlap.
class CliqueSet {
public:
    CliqueSet() = default;
    explicit CliqueSet(PnPottsParams params);

    /// Appends one layer. Throws on empty cliques or cliques sharing a variable.
    void add_layer(CliqueSource source, std::span<const std::vector<VariableId>> cliques);
    /// Appends the layers of `other`; parameters of *this are kept.
    void append(const CliqueSet& other);

    std::size_t size() const { return offsets_.size() - 1; }
    bool empty() const { return size() == 0; }
    std::span<const VariableId> members(std::size_t c) const {
        return {members_.data() + offsets_[c], offsets_[c + 1] - offsets_[c]};
    }
    std::size_t total_members() const { return members_.size(); }
    const std::vector<CliqueLayer>& layers() const { return layers_; }
    const PnPottsParams& params() const { return params_; }
    void set_params(PnPottsParams params);

    double gamma_low(std::size_t label) const { return params_.low(label); }
    /// alpha * |c|, raised to the largest gamma_low so that gamma_max >= gamma_l.
    double gamma_max(std::size_t c) const;

    /// Throws if any member id is >= variable_count.
    void validate(std::size_t variable_count) const;

    /// Cliques restricted to variables [first, first + count), ids shifted by
    /// -first. Cliques left empty are dropped; with `single_frame` set,
    /// supervoxel layers are retagged as slices.
    CliqueSet restrict(VariableId first, std::size_t count, bool single_frame) const;

private:
    PnPottsParams params_;
    double max_low_ = 0.0;
    std::vector<VariableId> members_;
    std::vector<std::size_t> offsets_{0};
    std::vector<CliqueLayer> layers_;
};

/// E[psi_c | x_i = l] under Q: gamma_low * P + gamma_max * (1 - P) with
/// P = prod_{j in c, j != i} Q_j(l). Throws if the clique is empty or i is
/// not a member.
double expected_clique_cost(const MarginalField& q, std::span<const VariableId> clique, VariableId i,
                            std::size_t label, double gamma_low, double gamma_max);

double expected_clique_cost(const MarginalField& q, const CliqueSet& cliques, std::size_t clique, VariableId i,
                            std::size_t label);

/// E_Q[psi_c], conditioned through the first member.
double expected_clique_energy(const MarginalField& q, const CliqueSet& cliques, std::size_t clique);

/// h_i(l) = sum over cliques containing i of expected_clique_cost(q, c, i, l),
/// written row-major (variables x labels) into `h`, which is overwritten.
void hoc_update_field(const MarginalField& q, const CliqueSet& cliques, std::span<double> h);
std::vector<double> hoc_update_field(const MarginalField& q, const CliqueSet& cliques);

/// gamma_low[l] if all members share label l, gamma_max otherwise.
double clique_energy(std::span<const VariableId> clique, std::span<const Label> labeling, double gamma_max,
                     const PnPottsParams& params);
double clique_energy(const CliqueSet& cliques, std::size_t clique, std::span<const Label> labeling);

} // namespace vidcrf
