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
#include "vidcrf/model.hpp"
#include "vidcrf/segments.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace vidcrf {

/// Blend rate at which unary argmax on the default 10-frame 128x128 4-label
/// scene scores an average per-class accuracy near 0.75.
inline constexpr double kCalibratedNoise = 0.55;

struct SynthParams {
    std::uint64_t seed = 1;
    std::size_t frames = 10;
    std::size_t width = 128;
    std::size_t height = 128;
    std::size_t labels = 4;
    /// Blend rate eta of p = (1 - eta) onehot + eta r.
    double noise = kCalibratedNoise;
    /// Side of the coarse grid the noise field r is interpolated from.
    std::size_t noise_cell = 32;
    /// Softmax sharpness of r.
    double noise_sharpness = 4.0;
    std::size_t objects_per_class = 2;
    std::size_t grid_cell = 8;
    std::vector<std::size_t> kmeans_k{48, 128};

    void validate() const;
};

struct SynthData {
    SynthParams params;
    std::vector<RgbImage> images;
    std::vector<Labeling> ground_truth;
    UnaryField unary;
    /// The grid layer first, then one k-means layer per entry of kmeans_k.
    std::vector<SegmentMap> segments;

    VideoVolume volume() const { return VideoVolume::from_frames(images); }
};

/// Textured background (label 0) with moving rectangles and discs of the
/// other labels. Deterministic in the parameters.
SynthData generate_synthetic(const SynthParams& params);

/// Writes images/, gt/, unaries/, segments/, palette.txt and manifest.txt.
void write_synthetic(const std::filesystem::path& dir, const SynthData& data);

/// Stable frame file stem: frame_0000, frame_0001, ...
std::string frame_stem(std::size_t t);

} // namespace vidcrf
