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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vidcrf {

/// 8-bit single-channel raster.
struct GrayImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;
};

// Binary netpbm, maxval 255 only. Readers reject short or over-long payloads.
RgbImage load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const RgbImage& image);
GrayImage load_pgm(const std::filesystem::path& path);
void save_pgm(const std::filesystem::path& path, const GrayImage& image);

/// UNR1: "UNR1", u32 width, height, labels (LE), then width*height*labels
/// f32 LE costs, pixel-major row-major, label-minor. Returns a 1-frame field.
/// With `is_probability` set, values p are converted to -ln(max(p, 1e-12)).
UnaryField load_unary(const std::filesystem::path& path, bool is_probability = false);
void save_unary(const std::filesystem::path& path, const UnaryField& unary, std::size_t frame = 0);

/// SEG1: "SEG1", u32 width, height, frames (LE), u8 scope (0 per-frame,
/// 1 cross-frame), then frames*width*height u32 LE ids.
SegmentMap load_segments(const std::filesystem::path& path);
void save_segments(const std::filesystem::path& path, const SegmentMap& map);

/// Label maps are P5 files, one per frame; 255 marks void.
void save_labelmap(const std::filesystem::path& path, std::span<const Label> labels, std::size_t width,
                   std::size_t height);
/// Throws if a value is >= labels and != 255.
GrayImage load_labelmap(const std::filesystem::path& path, std::size_t labels);

struct PaletteEntry {
    Label id;
    std::array<std::uint8_t, 3> rgb;
    std::string name;
};

/// Text palette: one `id,r,g,b,name` line per label, `#` starts a comment.
class Palette {
public:
    Palette() = default;
    explicit Palette(std::vector<PaletteEntry> entries);
    static Palette load(const std::filesystem::path& path);
    static Palette parse(const std::string& text, const std::string& origin = "<palette>");
    /// Evenly spread distinct colours for labels 0..labels-1.
    static Palette generate(std::size_t labels);
    void save(const std::filesystem::path& path) const;

    const std::vector<PaletteEntry>& entries() const { return entries_; }
    const PaletteEntry* find(Label id) const;
    std::optional<Label> lookup(std::array<std::uint8_t, 3> rgb) const;
    /// Throws unless every id is unique and lies in [0, labels) or is 255.
    void validate(std::size_t labels) const;

private:
    std::vector<PaletteEntry> entries_;
};

/// P6 colour coding of a label map; 255 maps to black.
RgbImage colorize(std::span<const Label> labels, std::size_t width, std::size_t height, const Palette& palette);
void save_colorized(const std::filesystem::path& path, std::span<const Label> labels, std::size_t width,
                    std::size_t height, const Palette& palette);
/// Inverse of colorize through the palette. Black not in the palette decodes
/// to 255; any other unknown colour is an error.
Labeling decode_colorized(const RgbImage& image, const Palette& palette, const std::string& origin = "<image>");

} // namespace vidcrf
