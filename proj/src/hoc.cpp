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

#include "vidcrf/hoc.hpp"

#include "vidcrf/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace vidcrf {

namespace {

// Products carry a separate power-of-two exponent so that long cliques never
// underflow in intermediate steps; only the final value is rounded to double.
constexpr double kRescaleBelow = 0x1.0p-500;
constexpr double kRescaleFactor = 0x1.0p+500;
constexpr int kRescaleExponent = 500;

struct ScaledProduct {
    double mantissa = 1.0;
    long exponent = 0;

    void multiply(double v) {
        mantissa *= v;
        if (mantissa < kRescaleBelow && mantissa > 0.0) {
            mantissa *= kRescaleFactor;
            exponent -= kRescaleExponent;
        }
    }
};

double combine(const ScaledProduct& a, const ScaledProduct& b) {
    // Mantissas are at most 1, so anything scaled below 2^-1500 is zero.
    const long exponent = a.exponent + b.exponent;
    if (exponent <= -1500)
        return 0.0;
    double v = a.mantissa * b.mantissa;
    for (long e = exponent; e < 0 && v != 0.0; e += kRescaleExponent)
        v *= kRescaleBelow;
    return v;
}

// Adds gamma_low * P + gamma_max * (1 - P) to h for every member and label,
// with P = prod over the other members of Q_j(l). Prefix products are stored
// and the suffix product is carried through a backward pass.
void accumulate_clique(const MarginalField& q, const CliqueSet& cliques, std::size_t c,
                       std::vector<ScaledProduct>& prefix, std::vector<ScaledProduct>& suffix, std::span<double> h) {
    const auto members = cliques.members(c);
    const std::size_t m = members.size();
    const std::size_t labels = q.labels();
    const double gmax = cliques.gamma_max(c);
    prefix.assign((m + 1) * labels, ScaledProduct{});
    for (std::size_t k = 0; k < m; ++k) {
        const auto row = q.row(members[k]);
        const ScaledProduct* from = prefix.data() + k * labels;
        ScaledProduct* to = prefix.data() + (k + 1) * labels;
        for (std::size_t l = 0; l < labels; ++l) {
            to[l] = from[l];
            to[l].multiply(row[l]);
        }
    }
    suffix.assign(labels, ScaledProduct{});
    for (std::size_t k = m; k-- > 0;) {
        const auto v = static_cast<std::size_t>(members[k]);
        const auto row = q.row(v);
        const ScaledProduct* before = prefix.data() + k * labels;
        double* out = h.data() + v * labels;
        for (std::size_t l = 0; l < labels; ++l) {
            const double p = combine(before[l], suffix[l]);
            out[l] += cliques.gamma_low(l) * p + gmax * (1.0 - p);
            suffix[l].multiply(row[l]);
        }
    }
}

} // namespace

void PnPottsParams::validate() const {
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
        throw Error("P^n-Potts alpha must be finite and >= 0, got " + std::to_string(alpha));
    for (std::size_t l = 0; l < gamma_low.size(); ++l)
        if (!(gamma_low[l] >= 0.0) || !std::isfinite(gamma_low[l]))
            throw Error("P^n-Potts gamma_low[" + std::to_string(l) + "] must be finite and >= 0");
}

CliqueSet::CliqueSet(PnPottsParams params) { set_params(std::move(params)); }

void CliqueSet::set_params(PnPottsParams params) {
    params.validate();
    params_ = std::move(params);
    max_low_ = params_.gamma_low.empty() ? 0.0 : *std::max_element(params_.gamma_low.begin(), params_.gamma_low.end());
}

double CliqueSet::gamma_max(std::size_t c) const {
    const auto size = static_cast<double>(offsets_[c + 1] - offsets_[c]);
    return std::max(params_.alpha * size, max_low_);
}

void CliqueSet::add_layer(CliqueSource source, std::span<const std::vector<VariableId>> cliques) {
    std::vector<VariableId> all;
    for (std::size_t c = 0; c < cliques.size(); ++c) {
        if (cliques[c].empty())
            throw Error("clique layer: clique " + std::to_string(c) + " is empty");
        all.insert(all.end(), cliques[c].begin(), cliques[c].end());
    }
    std::sort(all.begin(), all.end());
    if (auto dup = std::adjacent_find(all.begin(), all.end()); dup != all.end())
        throw Error("clique layer: variable " + std::to_string(*dup) + " belongs to more than one clique");

    const std::size_t begin = size();
    for (const auto& c : cliques) {
        members_.insert(members_.end(), c.begin(), c.end());
        offsets_.push_back(members_.size());
    }
    layers_.push_back({source, begin, size()});
}

void CliqueSet::append(const CliqueSet& other) {
    const std::size_t shift = size();
    const std::size_t member_shift = members_.size();
    members_.insert(members_.end(), other.members_.begin(), other.members_.end());
    for (std::size_t c = 1; c < other.offsets_.size(); ++c)
        offsets_.push_back(other.offsets_[c] + member_shift);
    for (const auto& layer : other.layers_)
        layers_.push_back({layer.source, layer.begin + shift, layer.end + shift});
}

void CliqueSet::validate(std::size_t variable_count) const {
    for (std::size_t c = 0; c < size(); ++c)
        for (VariableId v : members(c))
            if (v >= variable_count)
                throw Error("clique " + std::to_string(c) + " references variable " + std::to_string(v) +
                            " outside [0, " + std::to_string(variable_count) + ")");
}

CliqueSet CliqueSet::restrict(VariableId first, std::size_t count, bool single_frame) const {
    CliqueSet out(params_);
    const std::uint64_t lo = first;
    const std::uint64_t hi = lo + count;
    std::vector<std::vector<VariableId>> kept;
    for (const auto& layer : layers_) {
        kept.clear();
        for (std::size_t c = layer.begin; c < layer.end; ++c) {
            std::vector<VariableId> part;
            for (VariableId v : members(c))
                if (v >= lo && v < hi)
                    part.push_back(static_cast<VariableId>(v - first));
            if (!part.empty())
                kept.push_back(std::move(part));
        }
        CliqueSource source = layer.source;
        if (single_frame && source == CliqueSource::supervoxel)
            source = CliqueSource::supervoxel_slice;
        out.add_layer(source, kept);
    }
    return out;
}

double expected_clique_cost(const MarginalField& q, std::span<const VariableId> clique, VariableId i,
                            std::size_t label, double gamma_low, double gamma_max) {
    if (clique.empty())
        throw Error("expected_clique_cost: empty clique");
    if (std::find(clique.begin(), clique.end(), i) == clique.end())
        throw Error("expected_clique_cost: variable " + std::to_string(i) + " is not a clique member");
    ScaledProduct prod;
    for (VariableId j : clique)
        if (j != i)
            prod.multiply(q(j, label));
    const double p = combine(prod, ScaledProduct{});
    return gamma_low * p + gamma_max * (1.0 - p);
}

double expected_clique_cost(const MarginalField& q, const CliqueSet& cliques, std::size_t clique, VariableId i,
                            std::size_t label) {
    return expected_clique_cost(q, cliques.members(clique), i, label, cliques.gamma_low(label),
                                cliques.gamma_max(clique));
}

double expected_clique_energy(const MarginalField& q, const CliqueSet& cliques, std::size_t clique) {
    const auto members = cliques.members(clique);
    const VariableId i = members.front();
    double e = 0.0;
    for (std::size_t l = 0; l < q.labels(); ++l)
        e += q(i, l) * expected_clique_cost(q, cliques, clique, i, l);
    return e;
}

void hoc_update_field(const MarginalField& q, const CliqueSet& cliques, std::span<double> h) {
    if (h.size() != q.variable_count() * q.labels())
        throw Error("hoc_update_field: output size does not match marginal field");
    std::fill(h.begin(), h.end(), 0.0);
    cliques.validate(q.variable_count());

    // Layers run in order; within a layer cliques are disjoint, so each entry
    // of h receives its contributions in layer order whatever the schedule.
    for (const auto& layer : cliques.layers()) {
        const auto begin = static_cast<std::ptrdiff_t>(layer.begin);
        const auto end = static_cast<std::ptrdiff_t>(layer.end);
#pragma omp parallel
        {
            std::vector<ScaledProduct> prefix, suffix;
#pragma omp for schedule(dynamic, 16)
            for (std::ptrdiff_t c = begin; c < end; ++c)
                accumulate_clique(q, cliques, static_cast<std::size_t>(c), prefix, suffix, h);
        }
    }
}

std::vector<double> hoc_update_field(const MarginalField& q, const CliqueSet& cliques) {
    std::vector<double> h(q.variable_count() * q.labels());
    hoc_update_field(q, cliques, h);
    return h;
}

double clique_energy(std::span<const VariableId> clique, std::span<const Label> labeling, double gamma_max,
                     const PnPottsParams& params) {
    if (clique.empty())
        throw Error("clique_energy: empty clique");
    const Label first = labeling[clique.front()];
    for (VariableId v : clique)
        if (labeling[v] != first)
            return gamma_max;
    return params.low(first);
}

double clique_energy(const CliqueSet& cliques, std::size_t clique, std::span<const Label> labeling) {
    return clique_energy(cliques.members(clique), labeling, cliques.gamma_max(clique), cliques.params());
}

} // namespace vidcrf
