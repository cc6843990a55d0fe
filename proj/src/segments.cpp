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

#include "vidcrf/segments.hpp"

#include "vidcrf/error.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <string>

namespace vidcrf {

namespace {

constexpr int kKmeansIterations = 20;

// Uniform double in [0, 1) from the top 53 bits.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Maps arbitrary ids to 0..k-1 in increasing id order.
std::vector<std::uint32_t> compact(std::span<const std::uint32_t> ids, std::size_t& count) {
    std::vector<std::uint32_t> sorted(ids.begin(), ids.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    count = sorted.size();
    std::vector<std::uint32_t> out(ids.size());
    for (std::size_t k = 0; k < ids.size(); ++k)
        out[k] = static_cast<std::uint32_t>(std::lower_bound(sorted.begin(), sorted.end(), ids[k]) - sorted.begin());
    return out;
}

} // namespace

void SegmentMap::validate() const {
    if (frames == 0 || width == 0 || height == 0)
        throw Error("segment map is empty");
    if (ids.size() != frames * width * height)
        throw Error("segment map holds " + std::to_string(ids.size()) + " ids, expected " +
                    std::to_string(frames * width * height));
}

SegmentMap SegmentMap::stack(std::span<const SegmentMap> parts) {
    if (parts.empty())
        throw Error("cannot stack an empty list of segment maps");
    SegmentMap out{0, parts.front().width, parts.front().height, SegmentScope::per_frame, {}};
    for (const auto& p : parts) {
        p.validate();
        if (p.width != out.width || p.height != out.height)
            throw Error("segment maps to stack differ in size");
        if (p.scope != SegmentScope::per_frame)
            throw Error("only per-frame segment maps can be stacked");
        out.ids.insert(out.ids.end(), p.ids.begin(), p.ids.end());
        out.frames += p.frames;
    }
    return out;
}

SegmentMap SegmentMap::slice_frames(std::size_t first, std::size_t count) const {
    validate();
    if (count == 0 || first + count > frames)
        throw Error("segment frame range outside map");
    const std::size_t n = pixels_per_frame();
    SegmentMap out{count, width, height, scope, {}};
    out.ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(first * n),
                   ids.begin() + static_cast<std::ptrdiff_t>((first + count) * n));
    return out;
}

CliqueSet cliques_from_map(const SegmentMap& map, const PnPottsParams& params, SupervoxelCliques mode) {
    map.validate();
    const std::size_t n = map.pixels_per_frame();
    CliqueSet out(params);
    std::vector<std::vector<VariableId>> cliques;

    if (map.scope == SegmentScope::cross_frame && mode == SupervoxelCliques::cross_frame) {
        std::size_t count = 0;
        const auto ids = compact(map.ids, count);
        cliques.resize(count);
        for (std::size_t v = 0; v < ids.size(); ++v)
            cliques[ids[v]].push_back(static_cast<VariableId>(v));
        out.add_layer(map.frames > 1 ? CliqueSource::supervoxel : CliqueSource::supervoxel_slice, cliques);
        return out;
    }

    const CliqueSource source =
        map.scope == SegmentScope::cross_frame ? CliqueSource::supervoxel_slice : CliqueSource::superpixel;
    for (std::size_t t = 0; t < map.frames; ++t) {
        std::size_t count = 0;
        const auto ids = compact(std::span<const std::uint32_t>(map.ids).subspan(t * n, n), count);
        const std::size_t base = cliques.size();
        cliques.resize(base + count);
        for (std::size_t p = 0; p < n; ++p)
            cliques[base + ids[p]].push_back(static_cast<VariableId>(t * n + p));
    }
    out.add_layer(source, cliques);
    return out;
}

SegmentMap grid_segments(std::size_t width, std::size_t height, std::size_t cell) {
    if (cell == 0)
        throw Error("grid_segments: cell must be >= 1");
    if (width == 0 || height == 0)
        throw Error("grid_segments: empty frame");
    const std::size_t cols = (width + cell - 1) / cell;
    SegmentMap map{1, width, height, SegmentScope::per_frame, std::vector<std::uint32_t>(width * height)};
    for (std::size_t y = 0; y < height; ++y)
        for (std::size_t x = 0; x < width; ++x)
            map.ids[y * width + x] = static_cast<std::uint32_t>((y / cell) * cols + x / cell);
    return map;
}

SegmentMap kmeans_color_segments(const RgbImage& frame, std::size_t k, std::uint64_t seed) {
    const std::size_t n = frame.width * frame.height;
    if (k == 0)
        throw Error("kmeans_color_segments: k must be >= 1");
    if (k > n)
        throw Error("kmeans_color_segments: k = " + std::to_string(k) + " exceeds pixel count " + std::to_string(n));
    if (frame.rgb.size() != n * 3)
        throw Error("kmeans_color_segments: frame buffer size mismatch");

    constexpr std::size_t dim = 5;
    std::vector<double> pts(n * dim);
    for (std::size_t p = 0; p < n; ++p) {
        pts[p * dim + 0] = static_cast<double>(p % frame.width);
        pts[p * dim + 1] = static_cast<double>(p / frame.width);
        for (std::size_t c = 0; c < 3; ++c)
            pts[p * dim + 2 + c] = frame.rgb[p * 3 + c];
    }
    auto dist2 = [&](std::size_t p, const double* c) {
        double s = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            const double t = pts[p * dim + j] - c[j];
            s += t * t;
        }
        return s;
    };

    // k-means++ seeding.
    std::mt19937_64 rng(seed);
    std::vector<double> centers(k * dim);
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
    std::size_t pick = static_cast<std::size_t>(unit(rng) * static_cast<double>(n));
    for (std::size_t c = 0; c < k; ++c) {
        std::copy_n(pts.begin() + static_cast<std::ptrdiff_t>(pick * dim), dim,
                    centers.begin() + static_cast<std::ptrdiff_t>(c * dim));
        double total = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            nearest[p] = std::min(nearest[p], dist2(p, centers.data() + c * dim));
            total += nearest[p];
        }
        if (c + 1 == k)
            break;
        if (total <= 0.0) {
            pick = static_cast<std::size_t>(unit(rng) * static_cast<double>(n));
            continue;
        }
        const double target = unit(rng) * total;
        double acc = 0.0;
        pick = n - 1;
        for (std::size_t p = 0; p < n; ++p) {
            acc += nearest[p];
            if (acc > target) {
                pick = p;
                break;
            }
        }
    }

    SegmentMap map{1, frame.width, frame.height, SegmentScope::per_frame, std::vector<std::uint32_t>(n, 0)};
    std::vector<double> sums(k * dim);
    std::vector<std::size_t> sizes(k);
    for (int it = 0; it < kKmeansIterations; ++it) {
        bool changed = false;
        for (std::size_t p = 0; p < n; ++p) {
            std::uint32_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = dist2(p, centers.data() + c * dim);
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<std::uint32_t>(c);
                }
            }
            if (it == 0 || map.ids[p] != best)
                changed = true;
            map.ids[p] = best;
        }
        if (!changed)
            break;
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(sizes.begin(), sizes.end(), 0);
        for (std::size_t p = 0; p < n; ++p) {
            const std::size_t c = map.ids[p];
            ++sizes[c];
            for (std::size_t j = 0; j < dim; ++j)
                sums[c * dim + j] += pts[p * dim + j];
        }
        for (std::size_t c = 0; c < k; ++c)
            if (sizes[c] > 0)
                for (std::size_t j = 0; j < dim; ++j)
                    centers[c * dim + j] = sums[c * dim + j] / static_cast<double>(sizes[c]);
    }
    return map;
}

} // namespace vidcrf
