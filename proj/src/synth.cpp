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

#include "vidcrf/synth.hpp"

#include "vidcrf/error.hpp"
#include "vidcrf/io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

namespace vidcrf {

namespace fs = std::filesystem;

namespace {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() {
        const double u = 1.0 - uniform();
        const double v = uniform();
        return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
    }

private:
    std::mt19937_64 engine_;
};

std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint8_t clamp8(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0l, 255l)); }

/// Bilinear interpolation of a (gw x gh) grid of values at cell spacing.
class CoarseField {
public:
    CoarseField(std::size_t width, std::size_t height, std::size_t cell, std::size_t channels, Rng& rng)
        : cell_(static_cast<double>(cell)), gw_(width / cell + 2), gh_(height / cell + 2), channels_(channels),
          nodes_(gw_ * gh_ * channels) {
        for (auto& v : nodes_)
            v = rng.normal();
    }

    void sample(std::size_t x, std::size_t y, double* out) const {
        const double fx = static_cast<double>(x) / cell_;
        const double fy = static_cast<double>(y) / cell_;
        const auto x0 = static_cast<std::size_t>(fx);
        const auto y0 = static_cast<std::size_t>(fy);
        const double ax = fx - static_cast<double>(x0);
        const double ay = fy - static_cast<double>(y0);
        for (std::size_t c = 0; c < channels_; ++c) {
            auto at = [&](std::size_t i, std::size_t j) { return nodes_[(j * gw_ + i) * channels_ + c]; };
            out[c] = (1 - ay) * ((1 - ax) * at(x0, y0) + ax * at(x0 + 1, y0)) +
                     ay * ((1 - ax) * at(x0, y0 + 1) + ax * at(x0 + 1, y0 + 1));
        }
    }

private:
    double cell_;
    std::size_t gw_;
    std::size_t gh_;
    std::size_t channels_;
    std::vector<double> nodes_;
};

struct SceneObject {
    Label label;
    bool disc;
    double cx, cy, half_w, half_h, vx, vy;
    std::array<double, 3> color;

    bool covers(double x, double y) const {
        const double dx = (x - cx) / half_w;
        const double dy = (y - cy) / half_h;
        return disc ? dx * dx + dy * dy <= 1.0 : std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
    }
};

std::array<double, 3> class_color(std::size_t label) {
    static constexpr std::array<std::array<double, 3>, 8> table{{{200, 60, 50},
                                                                 {60, 170, 70},
                                                                 {60, 90, 200},
                                                                 {210, 190, 60},
                                                                 {170, 70, 180},
                                                                 {60, 190, 190},
                                                                 {230, 130, 40},
                                                                 {150, 150, 230}}};
    if (label - 1 < table.size())
        return table[label - 1];
    const auto p = Palette::generate(label + 1).entries()[label].rgb;
    return {double(p[0]), double(p[1]), double(p[2])};
}

} // namespace

void SynthParams::validate() const {
    if (frames == 0 || width == 0 || height == 0)
        throw Error("synth: frames, width and height must be positive");
    if (labels < 2 || labels > kMaxLabels)
        throw Error("synth: labels must lie in [2, " + std::to_string(kMaxLabels) + "]");
    if (!(noise >= 0.0 && noise <= 1.0))
        throw Error("synth: noise must lie in [0, 1]");
    if (noise_cell == 0 || grid_cell == 0)
        throw Error("synth: cell sizes must be positive");
    if (!(noise_sharpness > 0.0))
        throw Error("synth: noise sharpness must be positive");
    for (auto k : kmeans_k)
        if (k == 0 || k > width * height)
            throw Error("synth: k-means k = " + std::to_string(k) + " out of range");
}

std::string frame_stem(std::size_t t) {
    std::string digits = std::to_string(t);
    if (digits.size() < 4)
        digits.insert(0, 4 - digits.size(), '0');
    return "frame_" + digits;
}

SynthData generate_synthetic(const SynthParams& params) {
    params.validate();
    const std::size_t W = params.width, H = params.height, L = params.labels, F = params.frames;
    const std::size_t N = W * H;
    SynthData data;
    data.params = params;

    Rng scene_rng(mix(params.seed, 0));
    const CoarseField texture(W, H, 8, 1, scene_rng);
    const double scale = static_cast<double>(std::min(W, H)) / 128.0;
    std::vector<SceneObject> objects;
    for (std::size_t l = 1; l < L; ++l) {
        for (std::size_t k = 0; k < params.objects_per_class; ++k) {
            SceneObject o;
            o.label = static_cast<Label>(l);
            o.disc = (l + k) % 2 == 1;
            o.half_w = scene_rng.uniform(7.0, 16.0) * scale;
            o.half_h = o.disc ? o.half_w : scene_rng.uniform(7.0, 16.0) * scale;
            o.cx = scene_rng.uniform(o.half_w, static_cast<double>(W) - o.half_w);
            o.cy = scene_rng.uniform(o.half_h, static_cast<double>(H) - o.half_h);
            o.vx = scene_rng.uniform(-2.5, 2.5) * scale;
            o.vy = scene_rng.uniform(-2.5, 2.5) * scale;
            const auto base = class_color(l);
            for (std::size_t c = 0; c < 3; ++c)
                o.color[c] = base[c] + scene_rng.uniform(-15.0, 15.0);
            objects.push_back(o);
        }
    }

    Rng pixel_rng(mix(params.seed, 1));
    std::vector<float> costs(F * N * L);
    std::vector<double> z(L), r(L);
    for (std::size_t t = 0; t < F; ++t) {
        RgbImage img{W, H, std::vector<std::uint8_t>(N * 3)};
        Labeling gt(N, 0);
        for (std::size_t y = 0; y < H; ++y) {
            for (std::size_t x = 0; x < W; ++x) {
                const std::size_t p = y * W + x;
                double tex = 0.0;
                texture.sample(x, y, &tex);
                std::array<double, 3> color{110 + 22 * tex, 105 + 20 * tex, 95 + 18 * tex};
                const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5;
                for (const auto& o : objects) {
                    if (o.covers(px, py)) {
                        gt[p] = o.label;
                        color = o.color;
                    }
                }
                for (std::size_t c = 0; c < 3; ++c)
                    img.rgb[3 * p + c] = clamp8(color[c] + 6.0 * pixel_rng.normal());
            }
        }

        Rng noise_rng(mix(params.seed, 2 + t));
        const CoarseField field(W, H, params.noise_cell, L, noise_rng);
        for (std::size_t p = 0; p < N; ++p) {
            field.sample(p % W, p / W, z.data());
            const double zmax = *std::max_element(z.begin(), z.end());
            double sum = 0.0;
            for (std::size_t l = 0; l < L; ++l)
                sum += r[l] = std::exp(params.noise_sharpness * (z[l] - zmax));
            float* out = costs.data() + (t * N + p) * L;
            for (std::size_t l = 0; l < L; ++l) {
                const double prob = (1.0 - params.noise) * (l == gt[p] ? 1.0 : 0.0) + params.noise * r[l] / sum;
                out[l] = static_cast<float>(-std::log(std::max(prob, 1e-12)));
            }
        }

        data.images.push_back(std::move(img));
        data.ground_truth.push_back(std::move(gt));
        for (auto& o : objects) {
            o.cx += o.vx;
            o.cy += o.vy;
            if (o.cx < o.half_w || o.cx > static_cast<double>(W) - o.half_w)
                o.vx = -o.vx;
            if (o.cy < o.half_h || o.cy > static_cast<double>(H) - o.half_h)
                o.vy = -o.vy;
        }
    }
    data.unary = UnaryField(F, W, H, L, std::move(costs));

    SegmentMap grid = grid_segments(W, H, params.grid_cell);
    std::vector<SegmentMap> grids(F, grid);
    data.segments.push_back(SegmentMap::stack(grids));
    for (std::size_t layer = 0; layer < params.kmeans_k.size(); ++layer) {
        std::vector<SegmentMap> parts;
        for (std::size_t t = 0; t < F; ++t)
            parts.push_back(kmeans_color_segments(data.images[t], params.kmeans_k[layer],
                                                  mix(params.seed, 1000 + layer * F + t)));
        data.segments.push_back(SegmentMap::stack(parts));
    }
    return data;
}

void write_synthetic(const fs::path& dir, const SynthData& data) {
    const auto& p = data.params;
    for (const char* sub : {"images", "gt", "unaries", "segments"})
        fs::create_directories(dir / sub);
    for (std::size_t t = 0; t < p.frames; ++t) {
        const auto stem = frame_stem(t);
        save_image(dir / "images" / (stem + ".ppm"), data.images[t]);
        save_labelmap(dir / "gt" / (stem + ".pgm"), data.ground_truth[t], p.width, p.height);
        save_unary(dir / "unaries" / (stem + ".unr"), data.unary, t);
    }
    for (std::size_t k = 0; k < data.segments.size(); ++k)
        save_segments(dir / "segments" / ("layer" + std::to_string(k) + ".seg"), data.segments[k]);

    std::vector<PaletteEntry> entries = Palette::generate(p.labels).entries();
    entries[0].name = "background";
    entries[0].rgb = {110, 105, 95};
    for (std::size_t l = 1; l < p.labels; ++l) {
        const auto c = class_color(l);
        entries[l].rgb = {clamp8(c[0]), clamp8(c[1]), clamp8(c[2])};
    }
    Palette(std::move(entries)).save(dir / "palette.txt");

    std::ofstream m(dir / "manifest.txt");
    if (!m)
        throw Error((dir / "manifest.txt").string() + ": cannot open for writing");
    m << "seed=" << p.seed << "\nframes=" << p.frames << "\nwidth=" << p.width << "\nheight=" << p.height
      << "\nlabels=" << p.labels << "\nnoise=" << p.noise << "\nnoise_cell=" << p.noise_cell
      << "\nnoise_sharpness=" << p.noise_sharpness << "\nobjects_per_class=" << p.objects_per_class
      << "\ngrid_cell=" << p.grid_cell << "\nkmeans_k=";
    for (std::size_t k = 0; k < p.kmeans_k.size(); ++k)
        m << (k ? "," : "") << p.kmeans_k[k];
    m << "\ncalibrated_noise=" << kCalibratedNoise << "\n";
}

} // namespace vidcrf
