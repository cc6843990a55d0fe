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
#include "vidcrf/model.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace vidcrf {

enum class SegmentScope : std::uint8_t {
    per_frame = 0,  ///< ids are meaningful within one frame only
    cross_frame = 1 ///< equal ids in different frames denote one supervoxel
};

/// How a cross-frame supervoxel becomes cliques.
enum class SupervoxelCliques {
    cross_frame,     ///< one clique: the union of its per-frame slices
    per_frame_slices ///< one clique per frame it touches
};

/// Per-pixel segment ids over F frames; ids need not be contiguous.
struct SegmentMap {
    std::size_t frames = 0;
    std::size_t width = 0;
    std::size_t height = 0;
    SegmentScope scope = SegmentScope::per_frame;
    std::vector<std::uint32_t> ids;

    std::size_t pixels_per_frame() const { return width * height; }
    void validate() const;
    /// Stacks single- or multi-frame per-frame maps of equal size along time.
    static SegmentMap stack(std::span<const SegmentMap> parts);
    SegmentMap slice_frames(std::size_t first, std::size_t count) const;
};

/// One clique per (frame, id) for per-frame maps, per id for cross-frame maps
/// (or per slice when `mode` asks for it). Cliques are ordered by compacted
/// id, members by variable id; singletons are kept.
CliqueSet cliques_from_map(const SegmentMap& map, const PnPottsParams& params,
                           SupervoxelCliques mode = SupervoxelCliques::cross_frame);

/// Regular tiling with `cell` x `cell` blocks, ids in row-major block order.
SegmentMap grid_segments(std::size_t width, std::size_t height, std::size_t cell);

/// Lloyd k-means over (x, y, r, g, b) with k-means++ seeding from `seed` and
/// at most 20 iterations. Segments need not be connected.
SegmentMap kmeans_color_segments(const RgbImage& frame, std::size_t k, std::uint64_t seed);

} // namespace vidcrf
