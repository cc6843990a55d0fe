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

#include "vidcrf/hoc.hpp"
#include "vidcrf/lattice.hpp"
#include "vidcrf/marginals.hpp"
#include "vidcrf/model.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace vidcrf::testing {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
    std::size_t range(std::size_t lo, std::size_t hi) { return lo + index(hi - lo + 1); }

private:
    std::mt19937_64 engine_;
};

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("vidcrf-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out << bytes;
}

/// Exhaustive expectation of the clique cost over every assignment of the
/// other members, with member i fixed to `label`.
inline double exhaustive_clique_cost(const MarginalField& q, std::span<const VariableId> clique, VariableId i,
                                     std::size_t label, double gamma_low_l, double gamma_max) {
    std::vector<VariableId> others;
    for (VariableId v : clique)
        if (v != i)
            others.push_back(v);
    const std::size_t L = q.labels();
    std::vector<std::size_t> x(others.size(), 0);
    double total = 0.0;
    for (;;) {
        double prob = 1.0;
        bool unanimous = true;
        for (std::size_t k = 0; k < others.size(); ++k) {
            prob *= q(others[k], x[k]);
            unanimous = unanimous && x[k] == label;
        }
        total += prob * (unanimous ? gamma_low_l : gamma_max);
        std::size_t k = 0;
        while (k < x.size() && ++x[k] == L)
            x[k++] = 0;
        if (k == x.size())
            break;
    }
    return total;
}

/// Random rows on the simplex, occasionally with exact zeros.
inline MarginalField random_marginals(std::size_t n, std::size_t labels, Rng& rng, double zero_rate = 0.0) {
    MarginalField q(1, n, labels);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t l = 0; l < labels; ++l) {
            q(i, l) = rng.uniform() < zero_rate ? 0.0 : rng.uniform(0.01, 1.0);
            s += q(i, l);
        }
        if (s == 0.0) {
            q(i, 0) = 1.0;
            s = 1.0;
        }
        for (std::size_t l = 0; l < labels; ++l)
            q(i, l) /= s;
    }
    return q;
}

/// Features drawn uniformly from a box holding `density` points per unit
/// feature volume.
inline FeatureMatrix random_box_features(std::size_t n, std::size_t d, double density, Rng& rng) {
    const double side = std::pow(static_cast<double>(n) / density, 1.0 / static_cast<double>(d));
    FeatureMatrix f(n, d);
    for (double& v : f.data())
        v = rng.uniform(0.0, side);
    return f;
}

inline ValueMatrix random_values(std::size_t n, std::size_t channels, Rng& rng, double lo = 0.0, double hi = 1.0) {
    ValueMatrix v(n, channels);
    for (double& x : v.data())
        x = rng.uniform(lo, hi);
    return v;
}

inline double relative_rms(std::span<const double> got, std::span<const double> want) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < want.size(); ++k) {
        num += (got[k] - want[k]) * (got[k] - want[k]);
        den += want[k] * want[k];
    }
    return std::sqrt(num / den);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        s += a[k] * b[k];
    return s;
}

/// One frame of W x H pixels with the given colours (3 bytes per pixel) and
/// unary costs, Potts compatibility and no kernels or cliques.
inline CrfProblem plain_problem(std::size_t frames, std::size_t width, std::size_t height, std::size_t labels,
                                std::vector<std::uint8_t> rgb, std::vector<float> costs) {
    CrfProblem p;
    p.volume = VideoVolume(frames, width, height, std::move(rgb));
    p.unary = UnaryField(frames, width, height, labels, std::move(costs));
    p.compatibility = Compatibility::potts(labels);
    p.cliques = CliqueSet(PnPottsParams{});
    return p;
}

/// Two neighbouring grey pixels with unaries (0, 1) and (1, 0) and one
/// smoothness kernel of weight 1 and sigma_xy 1.
inline CrfProblem two_pixel_problem() {
    CrfProblem p = plain_problem(1, 2, 1, 2, std::vector<std::uint8_t>(6, 128), {0.0f, 1.0f, 1.0f, 0.0f});
    KernelSpec k = KernelSpec::default_smoothness();
    k.weight = 1.0;
    k.sigma_xy = 1.0;
    p.kernels = {k};
    return p;
}

/// Small random video problem: random colours and unaries, both kernels,
/// optional random grid cliques.
struct ProblemShape {
    std::size_t frames = 1;
    std::size_t width = 4;
    std::size_t height = 4;
    std::size_t labels = 3;
};

inline CrfProblem random_problem(const ProblemShape& s, Rng& rng, bool with_cliques, double weight_scale = 1.0) {
    CrfProblem p;
    const std::size_t n = s.frames * s.width * s.height;
    std::vector<std::uint8_t> rgb(n * 3);
    for (auto& c : rgb)
        c = static_cast<std::uint8_t>(rng.index(256));
    p.volume = VideoVolume(s.frames, s.width, s.height, std::move(rgb));
    std::vector<float> costs(n * s.labels);
    for (auto& c : costs)
        c = static_cast<float>(rng.uniform(0.0, 3.0));
    p.unary = UnaryField(s.frames, s.width, s.height, s.labels, std::move(costs));
    KernelSpec k1 = KernelSpec::default_smoothness();
    k1.weight = rng.uniform(0.2, 2.0) * weight_scale;
    k1.sigma_xy = rng.uniform(1.0, 4.0);
    k1.sigma_time = rng.uniform(0.5, 2.0);
    KernelSpec k2 = KernelSpec::default_appearance();
    k2.weight = rng.uniform(0.2, 2.0) * weight_scale;
    k2.sigma_xy = rng.uniform(2.0, 10.0);
    k2.sigma_rgb = rng.uniform(20.0, 80.0);
    p.kernels = {k1, k2};
    p.compatibility = Compatibility::potts(s.labels);
    PnPottsParams params{{}, rng.uniform(0.02, 0.3)};
    for (std::size_t l = 0; l < s.labels; ++l)
        params.gamma_low.push_back(rng.uniform(0.0, 0.2));
    p.cliques = CliqueSet(params);
    if (with_cliques) {
        for (int layer = 0; layer < 2; ++layer) {
            // Random partition of the variables into groups of 1..6.
            std::vector<VariableId> perm(n);
            for (std::size_t i = 0; i < n; ++i)
                perm[i] = static_cast<VariableId>(i);
            for (std::size_t i = n; i > 1; --i)
                std::swap(perm[i - 1], perm[rng.index(i)]);
            std::vector<std::vector<VariableId>> cl;
            for (std::size_t k = 0; k < n;) {
                const std::size_t m = std::min(n - k, rng.range(1, 6));
                cl.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(k),
                                perm.begin() + static_cast<std::ptrdiff_t>(k + m));
                k += m;
            }
            p.cliques.add_layer(CliqueSource::superpixel, cl);
        }
    }
    p.iterations = 5;
    return p;
}

} // namespace vidcrf::testing
