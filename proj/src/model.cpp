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

#include "vidcrf/model.hpp"

#include "vidcrf/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace vidcrf {

VideoVolume::VideoVolume(std::size_t frames, std::size_t width, std::size_t height, std::vector<std::uint8_t> rgb,
                         std::size_t time_origin)
    : frames_(frames), width_(width), height_(height), time_origin_(time_origin), rgb_(std::move(rgb)) {
    if (frames == 0 || width == 0 || height == 0)
        throw Error("video volume must have at least one frame and non-zero size");
    if (rgb_.size() != frames * width * height * 3)
        throw Error("video volume holds " + std::to_string(rgb_.size()) + " bytes, expected " +
                    std::to_string(frames * width * height * 3));
    if (variable_count() >= (std::size_t{1} << 32))
        throw Error("video volume exceeds 2^32 variables");
}

VideoVolume VideoVolume::from_frames(std::span<const RgbImage> frames, std::size_t time_origin) {
    if (frames.empty())
        throw Error("video volume needs at least one frame");
    const std::size_t w = frames.front().width;
    const std::size_t h = frames.front().height;
    std::vector<std::uint8_t> rgb;
    rgb.reserve(frames.size() * w * h * 3);
    for (std::size_t t = 0; t < frames.size(); ++t) {
        if (frames[t].width != w || frames[t].height != h)
            throw Error("frame " + std::to_string(t) + " is " + std::to_string(frames[t].width) + "x" +
                        std::to_string(frames[t].height) + ", expected " + std::to_string(w) + "x" +
                        std::to_string(h));
        rgb.insert(rgb.end(), frames[t].rgb.begin(), frames[t].rgb.end());
    }
    return VideoVolume(frames.size(), w, h, std::move(rgb), time_origin);
}

RgbImage VideoVolume::frame(std::size_t t) const {
    const std::size_t bytes = pixels_per_frame() * 3;
    RgbImage img{width_, height_, {}};
    img.rgb.assign(rgb_.begin() + static_cast<std::ptrdiff_t>(t * bytes),
                   rgb_.begin() + static_cast<std::ptrdiff_t>((t + 1) * bytes));
    return img;
}

VideoVolume VideoVolume::slice_frames(std::size_t first, std::size_t count) const {
    if (count == 0 || first + count > frames_)
        throw Error("frame range [" + std::to_string(first) + ", " + std::to_string(first + count) +
                    ") outside volume of " + std::to_string(frames_) + " frames");
    const std::size_t bytes = pixels_per_frame() * 3;
    std::vector<std::uint8_t> rgb(rgb_.begin() + static_cast<std::ptrdiff_t>(first * bytes),
                                  rgb_.begin() + static_cast<std::ptrdiff_t>((first + count) * bytes));
    return VideoVolume(count, width_, height_, std::move(rgb), time_origin_ + first);
}

UnaryField::UnaryField(std::size_t frames, std::size_t width, std::size_t height, std::size_t labels,
                       std::vector<float> costs)
    : frames_(frames), width_(width), height_(height), labels_(labels), costs_(std::move(costs)) {
    if (frames == 0 || width == 0 || height == 0)
        throw Error("unary field must have non-zero dimensions");
    if (labels == 0 || labels > kMaxLabels)
        throw Error("unary field label count " + std::to_string(labels) + " outside [1, " +
                    std::to_string(kMaxLabels) + "]");
    if (costs_.size() != frames * width * height * labels)
        throw Error("unary field holds " + std::to_string(costs_.size()) + " costs, expected " +
                    std::to_string(frames * width * height * labels));
    for (std::size_t k = 0; k < costs_.size(); ++k)
        if (!std::isfinite(costs_[k]))
            throw Error("unary field: non-finite cost at variable " + std::to_string(k / labels) + ", label " +
                        std::to_string(k % labels));
}

UnaryField UnaryField::stack(std::span<const UnaryField> parts) {
    if (parts.empty())
        throw Error("cannot stack an empty list of unary fields");
    const auto& a = parts.front();
    std::vector<float> costs;
    std::size_t frames = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto& p = parts[k];
        if (p.width() != a.width() || p.height() != a.height() || p.labels() != a.labels())
            throw Error("unary part " + std::to_string(k) + " is " + std::to_string(p.width()) + "x" +
                        std::to_string(p.height()) + "x" + std::to_string(p.labels()) + ", expected " +
                        std::to_string(a.width()) + "x" + std::to_string(a.height()) + "x" +
                        std::to_string(a.labels()));
        costs.insert(costs.end(), p.costs().begin(), p.costs().end());
        frames += p.frames();
    }
    return UnaryField(frames, a.width(), a.height(), a.labels(), std::move(costs));
}

UnaryField UnaryField::slice_frames(std::size_t first, std::size_t count) const {
    if (count == 0 || first + count > frames_)
        throw Error("unary frame range outside field");
    const std::size_t block = pixels_per_frame() * labels_;
    std::vector<float> costs(costs_.begin() + static_cast<std::ptrdiff_t>(first * block),
                             costs_.begin() + static_cast<std::ptrdiff_t>((first + count) * block));
    return UnaryField(count, width_, height_, labels_, std::move(costs));
}

void KernelSpec::validate() const {
    if (!std::isfinite(weight) || weight < 0.0)
        throw Error("kernel weight must be finite and >= 0, got " + std::to_string(weight));
    if (!(sigma_xy > 0.0) || !(sigma_time > 0.0) || !std::isfinite(sigma_xy) || !std::isfinite(sigma_time))
        throw Error("kernel bandwidths must be finite and > 0");
    if (kind == KernelKind::appearance && (!(sigma_rgb > 0.0) || !std::isfinite(sigma_rgb)))
        throw Error("appearance kernel colour bandwidth must be finite and > 0");
}

Compatibility Compatibility::potts(std::size_t labels) {
    Compatibility c;
    c.labels_ = labels;
    c.potts_ = true;
    c.mu_.assign(labels * labels, 1.0);
    for (std::size_t l = 0; l < labels; ++l)
        c.mu_[l * labels + l] = 0.0;
    return c;
}

Compatibility Compatibility::from_matrix(std::size_t labels, std::vector<double> mu) {
    if (mu.size() != labels * labels)
        throw Error("compatibility matrix must be " + std::to_string(labels) + "x" + std::to_string(labels));
    bool potts = true;
    for (std::size_t a = 0; a < labels; ++a)
        for (std::size_t b = 0; b < labels; ++b) {
            const double v = mu[a * labels + b];
            if (!std::isfinite(v))
                throw Error("compatibility matrix has a non-finite entry");
            if (v != mu[b * labels + a])
                throw Error("compatibility matrix is not symmetric at (" + std::to_string(a) + ", " +
                            std::to_string(b) + ")");
            if (v != (a == b ? 0.0 : 1.0))
                potts = false;
        }
    Compatibility c;
    c.labels_ = labels;
    c.potts_ = potts;
    c.mu_ = std::move(mu);
    return c;
}

void CrfProblem::validate() const {
    const auto& u = unary;
    if (u.frames() != volume.frames() || u.width() != volume.width() || u.height() != volume.height())
        throw Error("unary field " + std::to_string(u.frames()) + "x" + std::to_string(u.width()) + "x" +
                    std::to_string(u.height()) + " does not match video volume " + std::to_string(volume.frames()) +
                    "x" + std::to_string(volume.width()) + "x" + std::to_string(volume.height()));
    if (compatibility.labels() != u.labels())
        throw Error("compatibility has " + std::to_string(compatibility.labels()) + " labels, unaries have " +
                    std::to_string(u.labels()));
    for (const auto& k : kernels)
        k.validate();
    if (iterations < 1)
        throw Error("iterations must be >= 1");
    if (batch < 1)
        throw Error("batch must be >= 1");
    cliques.validate(variable_count());
}

CrfProblem CrfProblem::slice_frames(std::size_t first, std::size_t count) const {
    CrfProblem out;
    out.volume = volume.slice_frames(first, count);
    out.unary = unary.slice_frames(first, count);
    out.kernels = kernels;
    out.compatibility = compatibility;
    const std::size_t n = volume.pixels_per_frame();
    out.cliques = cliques.restrict(static_cast<VariableId>(first * n), count * n, count == 1);
    out.iterations = iterations;
    out.batch = batch;
    return out;
}

namespace {

struct Coord {
    double x, y, t;
};

Coord coord(const VideoVolume& vol, VariableId v) {
    const std::size_t n = vol.pixels_per_frame();
    const std::size_t t = v / n;
    const std::size_t r = v % n;
    return {static_cast<double>(r % vol.width()), static_cast<double>(r / vol.width()),
            static_cast<double>(vol.time_origin() + t)};
}

} // namespace

FeatureMatrix embed_features(const CrfProblem& problem, const KernelSpec& kernel) {
    kernel.validate();
    const auto& vol = problem.volume;
    const std::size_t n = vol.variable_count();
    const std::size_t d = kernel.feature_dim();
    const double sxy = std::numbers::sqrt2 / kernel.sigma_xy;
    const double st = std::numbers::sqrt2 / kernel.sigma_time;
    const double srgb = std::numbers::sqrt2 / kernel.sigma_rgb;
    FeatureMatrix f(n, d);
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t vi = 0; vi < count; ++vi) {
        const auto v = static_cast<VariableId>(vi);
        const Coord c = coord(vol, v);
        auto row = f.row(v);
        row[0] = c.x * sxy;
        row[1] = c.y * sxy;
        row[2] = c.t * st;
        if (kernel.kind == KernelKind::appearance) {
            const auto rgb = vol.color(v);
            row[3] = rgb[0] * srgb;
            row[4] = rgb[1] * srgb;
            row[5] = rgb[2] * srgb;
        }
    }
    return f;
}

double pairwise_kernel_value(const CrfProblem& problem, const KernelSpec& kernel, VariableId a, VariableId b) {
    const auto& vol = problem.volume;
    const Coord ca = coord(vol, a);
    const Coord cb = coord(vol, b);
    const double dx = ca.x - cb.x;
    const double dy = ca.y - cb.y;
    const double dt = ca.t - cb.t;
    double e = (dx * dx + dy * dy) / (kernel.sigma_xy * kernel.sigma_xy) +
               dt * dt / (kernel.sigma_time * kernel.sigma_time);
    if (kernel.kind == KernelKind::appearance) {
        const auto ia = vol.color(a);
        const auto ib = vol.color(b);
        double dc = 0.0;
        for (int k = 0; k < 3; ++k) {
            const double t = static_cast<double>(ia[k]) - static_cast<double>(ib[k]);
            dc += t * t;
        }
        e += dc / (kernel.sigma_rgb * kernel.sigma_rgb);
    }
    return std::exp(-e);
}

double combined_kernel_value(const CrfProblem& problem, VariableId a, VariableId b) {
    double k = 0.0;
    for (const auto& spec : problem.kernels)
        if (spec.weight != 0.0)
            k += spec.weight * pairwise_kernel_value(problem, spec, a, b);
    return k;
}

double energy(const CrfProblem& problem, std::span<const Label> labeling) {
    problem.validate();
    const std::size_t n = problem.variable_count();
    const std::size_t labels = problem.labels();
    if (labeling.size() != n)
        throw Error("energy: labeling has " + std::to_string(labeling.size()) + " entries, expected " +
                    std::to_string(n));
    if (n > kOracleMaxVariables)
        throw Error("energy: " + std::to_string(n) + " variables exceeds the exact-evaluation limit of " +
                    std::to_string(kOracleMaxVariables));
    for (std::size_t v = 0; v < n; ++v)
        if (labeling[v] >= labels)
            throw Error("energy: label " + std::to_string(labeling[v]) + " at variable " + std::to_string(v) +
                        " is out of range");

    double e = 0.0;
    for (std::size_t v = 0; v < n; ++v)
        e += problem.unary.cost(v, labeling[v]);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            const double mu = problem.compatibility(labeling[a], labeling[b]);
            if (mu != 0.0)
                e += mu * combined_kernel_value(problem, static_cast<VariableId>(a), static_cast<VariableId>(b));
        }
    for (std::size_t c = 0; c < problem.cliques.size(); ++c)
        e += clique_energy(problem.cliques, c, labeling);
    return e;
}

} // namespace vidcrf
