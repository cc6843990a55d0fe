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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace vidcrf {

/// Interleaved 8-bit RGB raster.
struct RgbImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> rgb; // width * height * 3
};

/// F frames of W x H RGB pixels. `time_origin` is the index of the first
/// frame in the source video; temporal kernels use absolute frame indices.
class VideoVolume {
public:
    VideoVolume() = default;
    VideoVolume(std::size_t frames, std::size_t width, std::size_t height, std::vector<std::uint8_t> rgb,
                std::size_t time_origin = 0);
    static VideoVolume from_frames(std::span<const RgbImage> frames, std::size_t time_origin = 0);

    std::size_t frames() const { return frames_; }
    std::size_t width() const { return width_; }
    std::size_t height() const { return height_; }
    std::size_t pixels_per_frame() const { return width_ * height_; }
    std::size_t variable_count() const { return frames_ * width_ * height_; }
    std::size_t time_origin() const { return time_origin_; }

    std::span<const std::uint8_t, 3> color(VariableId v) const {
        return std::span<const std::uint8_t, 3>(rgb_.data() + 3 * static_cast<std::size_t>(v), 3);
    }
    std::span<const std::uint8_t> rgb() const { return rgb_; }
    RgbImage frame(std::size_t t) const;

    VideoVolume slice_frames(std::size_t first, std::size_t count) const;

private:
    std::size_t frames_ = 0;
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::size_t time_origin_ = 0;
    std::vector<std::uint8_t> rgb_;
};

/// Per-variable label costs (negative log scores), variable-major, label-minor.
class UnaryField {
public:
    UnaryField() = default;
    UnaryField(std::size_t frames, std::size_t width, std::size_t height, std::size_t labels,
               std::vector<float> costs);
    /// Concatenates single- or multi-frame fields of equal size along time.
    static UnaryField stack(std::span<const UnaryField> parts);

    std::size_t frames() const { return frames_; }
    std::size_t width() const { return width_; }
    std::size_t height() const { return height_; }
    std::size_t labels() const { return labels_; }
    std::size_t pixels_per_frame() const { return width_ * height_; }
    std::size_t variable_count() const { return frames_ * width_ * height_; }

    std::span<const float> row(std::size_t v) const { return {costs_.data() + v * labels_, labels_}; }
    float cost(std::size_t v, std::size_t l) const { return costs_[v * labels_ + l]; }
    std::span<const float> costs() const { return costs_; }

    UnaryField slice_frames(std::size_t first, std::size_t count) const;

private:
    std::size_t frames_ = 0;
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::size_t labels_ = 0;
    std::vector<float> costs_;
};

enum class KernelKind { smoothness, appearance };

/// Weighted Gaussian pairwise kernel.
///   smoothness: exp(-|dp|^2 / sxy^2 - dt^2 / st^2)
///   appearance: exp(-|dp|^2 / sxy^2 - dt^2 / st^2 - |dI|^2 / srgb^2)
struct KernelSpec {
    KernelKind kind = KernelKind::smoothness;
    double weight = 3.0;
    double sigma_xy = 3.0;
    double sigma_time = 1.0;
    double sigma_rgb = 10.0;

    static KernelSpec default_smoothness() { return {KernelKind::smoothness, 3.0, 3.0, 1.0, 10.0}; }
    static KernelSpec default_appearance() { return {KernelKind::appearance, 5.0, 50.0, 3.0, 10.0}; }

    std::size_t feature_dim() const { return kind == KernelKind::smoothness ? 3 : 6; }
    void validate() const;
};

/// Label compatibility mu(l, l'), symmetric.
class Compatibility {
public:
    Compatibility() = default;
    static Compatibility potts(std::size_t labels);
    /// Throws unless `mu` is labels x labels, finite and symmetric.
    static Compatibility from_matrix(std::size_t labels, std::vector<double> mu);

    std::size_t labels() const { return labels_; }
    bool is_potts() const { return potts_; }
    double operator()(std::size_t a, std::size_t b) const { return mu_[a * labels_ + b]; }

private:
    std::size_t labels_ = 0;
    bool potts_ = false;
    std::vector<double> mu_;
};

/// Joint random field over a window of frames.
struct CrfProblem {
    VideoVolume volume;
    UnaryField unary;
    std::vector<KernelSpec> kernels;
    Compatibility compatibility;
    CliqueSet cliques;
    int iterations = 5;
    std::size_t batch = 50;

    std::size_t variable_count() const { return volume.variable_count(); }
    std::size_t labels() const { return unary.labels(); }

    /// Throws on any dimension mismatch or invalid parameter.
    void validate() const;

    /// Frames [first, first + count) with their unaries and cliques.
    CrfProblem slice_frames(std::size_t first, std::size_t count) const;
};

/// Problems above this size are rejected by the O(n^2) exact paths.
inline constexpr std::size_t kOracleMaxVariables = 5000;

/// Features scaled by sqrt(2)/sigma so that exp(-0.5 |df|^2) is the kernel value.
/// Smoothness: (x, y, t); appearance: (x, y, t, r, g, b).
FeatureMatrix embed_features(const CrfProblem& problem, const KernelSpec& kernel);

/// Exact kernel value between two variables, evaluated from coordinates.
double pairwise_kernel_value(const CrfProblem& problem, const KernelSpec& kernel, VariableId a, VariableId b);

/// sum_m w_m k_m(a, b).
double combined_kernel_value(const CrfProblem& problem, VariableId a, VariableId b);

/// Unary + Potts-weighted pairwise over unordered distinct pairs + clique costs.
double energy(const CrfProblem& problem, std::span<const Label> labeling);

} // namespace vidcrf
