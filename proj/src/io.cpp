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

#include "vidcrf/io.hpp"

#include "vidcrf/error.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace vidcrf {

namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(path.string() + ": cannot open for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(path.string() + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error(path.string() + ": write failed");
}

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
    for (int k = 0; k < 4; ++k)
        b.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f32(std::vector<std::uint8_t>& b, float v) { put_u32(b, std::bit_cast<std::uint32_t>(v)); }

float get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

std::uint32_t checked_u32(std::size_t v, const fs::path& path) {
    if (v > 0xFFFFFFFFu)
        throw Error(path.string() + ": dimension too large for a 32-bit header field");
    return static_cast<std::uint32_t>(v);
}

struct NetpbmHeader {
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t payload_offset = 0;
};

NetpbmHeader parse_netpbm(const std::vector<std::uint8_t>& bytes, const char* magic, const fs::path& path) {
    if (bytes.size() < 2 || bytes[0] != magic[0] || bytes[1] != magic[1]) {
        std::string got = bytes.size() >= 2 ? std::string(bytes.begin(), bytes.begin() + 2) : std::string("<short>");
        throw Error(path.string() + ": bad magic '" + got + "', expected binary '" + magic + "'");
    }
    std::size_t pos = 2;
    auto next_number = [&](const char* what) -> std::size_t {
        for (;;) {
            while (pos < bytes.size() && std::isspace(bytes[pos]))
                ++pos;
            if (pos < bytes.size() && bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n')
                    ++pos;
                continue;
            }
            break;
        }
        if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
            throw Error(path.string() + ": malformed header, missing " + what);
        std::size_t v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + static_cast<std::size_t>(bytes[pos] - '0');
            if (v > (std::size_t{1} << 31))
                throw Error(path.string() + ": header " + what + " too large");
            ++pos;
        }
        return v;
    };
    NetpbmHeader h;
    h.width = next_number("width");
    h.height = next_number("height");
    const std::size_t maxval = next_number("maxval");
    if (h.width == 0 || h.height == 0)
        throw Error(path.string() + ": zero image dimension");
    if (maxval != 255)
        throw Error(path.string() + ": maxval " + std::to_string(maxval) + " unsupported, expected 255");
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        throw Error(path.string() + ": malformed header, missing separator before payload");
    h.payload_offset = pos + 1;
    return h;
}

void check_payload(std::size_t have, std::size_t expected, const fs::path& path) {
    if (have != expected)
        throw Error(path.string() + ": payload has " + std::to_string(have) + " bytes, expected " +
                    std::to_string(expected));
}

std::vector<std::uint8_t> netpbm_header(const char* magic, std::size_t w, std::size_t h) {
    const std::string head = std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    return {head.begin(), head.end()};
}

} // namespace

RgbImage load_image(const fs::path& path) {
    const auto bytes = read_file(path);
    const auto h = parse_netpbm(bytes, "P6", path);
    check_payload(bytes.size() - h.payload_offset, h.width * h.height * 3, path);
    RgbImage img{h.width, h.height, {}};
    img.rgb.assign(bytes.begin() + static_cast<std::ptrdiff_t>(h.payload_offset), bytes.end());
    return img;
}

void save_image(const fs::path& path, const RgbImage& image) {
    if (image.rgb.size() != image.width * image.height * 3)
        throw Error(path.string() + ": image buffer does not match its dimensions");
    auto bytes = netpbm_header("P6", image.width, image.height);
    bytes.insert(bytes.end(), image.rgb.begin(), image.rgb.end());
    write_file(path, bytes);
}

GrayImage load_pgm(const fs::path& path) {
    const auto bytes = read_file(path);
    const auto h = parse_netpbm(bytes, "P5", path);
    check_payload(bytes.size() - h.payload_offset, h.width * h.height, path);
    GrayImage img{h.width, h.height, {}};
    img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(h.payload_offset), bytes.end());
    return img;
}

void save_pgm(const fs::path& path, const GrayImage& image) {
    if (image.pixels.size() != image.width * image.height)
        throw Error(path.string() + ": image buffer does not match its dimensions");
    auto bytes = netpbm_header("P5", image.width, image.height);
    bytes.insert(bytes.end(), image.pixels.begin(), image.pixels.end());
    write_file(path, bytes);
}

UnaryField load_unary(const fs::path& path, bool is_probability) {
    const auto bytes = read_file(path);
    if (bytes.size() < 16 || std::memcmp(bytes.data(), "UNR1", 4) != 0)
        throw Error(path.string() + ": bad magic, expected 'UNR1'");
    const std::size_t w = get_u32(bytes.data() + 4);
    const std::size_t h = get_u32(bytes.data() + 8);
    const std::size_t labels = get_u32(bytes.data() + 12);
    if (w == 0 || h == 0 || labels == 0)
        throw Error(path.string() + ": zero dimension in header");
    if (labels > kMaxLabels)
        throw Error(path.string() + ": " + std::to_string(labels) + " labels exceeds the limit of " +
                    std::to_string(kMaxLabels));
    const std::size_t count = w * h * labels;
    check_payload(bytes.size() - 16, count * 4, path);
    std::vector<float> costs(count);
    for (std::size_t k = 0; k < count; ++k) {
        float v = get_f32(bytes.data() + 16 + 4 * k);
        if (!std::isfinite(v))
            throw Error(path.string() + ": non-finite value at pixel " + std::to_string(k / labels) + ", label " +
                        std::to_string(k % labels));
        if (is_probability)
            v = static_cast<float>(-std::log(std::max(static_cast<double>(v), 1e-12)));
        costs[k] = v;
    }
    return UnaryField(1, w, h, labels, std::move(costs));
}

void save_unary(const fs::path& path, const UnaryField& unary, std::size_t frame) {
    if (frame >= unary.frames())
        throw Error(path.string() + ": frame " + std::to_string(frame) + " outside unary field");
    std::vector<std::uint8_t> bytes{'U', 'N', 'R', '1'};
    put_u32(bytes, checked_u32(unary.width(), path));
    put_u32(bytes, checked_u32(unary.height(), path));
    put_u32(bytes, checked_u32(unary.labels(), path));
    const std::size_t block = unary.pixels_per_frame() * unary.labels();
    const auto costs = unary.costs().subspan(frame * block, block);
    bytes.reserve(bytes.size() + 4 * block);
    for (float v : costs)
        put_f32(bytes, v);
    write_file(path, bytes);
}

SegmentMap load_segments(const fs::path& path) {
    const auto bytes = read_file(path);
    if (bytes.size() < 17 || std::memcmp(bytes.data(), "SEG1", 4) != 0)
        throw Error(path.string() + ": bad magic, expected 'SEG1'");
    SegmentMap map;
    map.width = get_u32(bytes.data() + 4);
    map.height = get_u32(bytes.data() + 8);
    map.frames = get_u32(bytes.data() + 12);
    const std::uint8_t scope = bytes[16];
    if (scope > 1)
        throw Error(path.string() + ": scope byte " + std::to_string(scope) + " is neither 0 nor 1");
    map.scope = static_cast<SegmentScope>(scope);
    const std::size_t count = map.frames * map.width * map.height;
    if (count == 0)
        throw Error(path.string() + ": empty segment map");
    check_payload(bytes.size() - 17, count * 4, path);
    map.ids.resize(count);
    for (std::size_t k = 0; k < count; ++k)
        map.ids[k] = get_u32(bytes.data() + 17 + 4 * k);
    return map;
}

void save_segments(const fs::path& path, const SegmentMap& map) {
    map.validate();
    std::vector<std::uint8_t> bytes{'S', 'E', 'G', '1'};
    put_u32(bytes, checked_u32(map.width, path));
    put_u32(bytes, checked_u32(map.height, path));
    put_u32(bytes, checked_u32(map.frames, path));
    bytes.push_back(static_cast<std::uint8_t>(map.scope));
    bytes.reserve(bytes.size() + 4 * map.ids.size());
    for (std::uint32_t id : map.ids)
        put_u32(bytes, id);
    write_file(path, bytes);
}

void save_labelmap(const fs::path& path, std::span<const Label> labels, std::size_t width, std::size_t height) {
    if (labels.size() != width * height)
        throw Error(path.string() + ": label map has " + std::to_string(labels.size()) + " entries, expected " +
                    std::to_string(width * height));
    save_pgm(path, GrayImage{width, height, {labels.begin(), labels.end()}});
}

GrayImage load_labelmap(const fs::path& path, std::size_t labels) {
    GrayImage img = load_pgm(path);
    for (std::size_t k = 0; k < img.pixels.size(); ++k) {
        const auto v = img.pixels[k];
        if (v >= labels && v != kIgnoreLabel)
            throw Error(path.string() + ": label " + std::to_string(v) + " at pixel " + std::to_string(k) +
                        " outside [0, " + std::to_string(labels) + ") and not void");
    }
    return img;
}

Palette::Palette(std::vector<PaletteEntry> entries) : entries_(std::move(entries)) {}

Palette Palette::parse(const std::string& text, const std::string& origin) {
    std::vector<PaletteEntry> entries;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ','))
            fields.push_back(field);
        if (fields.size() < 4)
            throw Error(origin + ":" + std::to_string(lineno) + ": expected id,r,g,b,name");
        auto number = [&](const std::string& s, int max) {
            std::size_t used = 0;
            int v = -1;
            try {
                v = std::stoi(s, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || s.find_first_not_of(" \t\r", used) != std::string::npos || v < 0 || v > max)
                throw Error(origin + ":" + std::to_string(lineno) + ": invalid number '" + s + "'");
            return v;
        };
        PaletteEntry e;
        e.id = static_cast<Label>(number(fields[0], 255));
        for (int c = 0; c < 3; ++c)
            e.rgb[static_cast<std::size_t>(c)] = static_cast<std::uint8_t>(number(fields[1 + static_cast<std::size_t>(c)], 255));
        if (fields.size() > 4) {
            std::string name = fields[4];
            for (std::size_t k = 5; k < fields.size(); ++k)
                name += "," + fields[k];
            const auto b = name.find_first_not_of(" \t");
            const auto e2 = name.find_last_not_of(" \t\r");
            e.name = b == std::string::npos ? std::string() : name.substr(b, e2 - b + 1);
        }
        entries.push_back(std::move(e));
    }
    return Palette(std::move(entries));
}

Palette Palette::load(const fs::path& path) {
    const auto bytes = read_file(path);
    return parse(std::string(bytes.begin(), bytes.end()), path.string());
}

Palette Palette::generate(std::size_t labels) {
    std::vector<PaletteEntry> entries;
    for (std::size_t l = 0; l < labels; ++l) {
        // Golden-angle hue walk at full saturation.
        const double hue = std::fmod(static_cast<double>(l) * 137.508, 360.0) / 60.0;
        const double x = 1.0 - std::abs(std::fmod(hue, 2.0) - 1.0);
        double r = 0, g = 0, b = 0;
        switch (static_cast<int>(hue)) {
        case 0: r = 1, g = x; break;
        case 1: r = x, g = 1; break;
        case 2: g = 1, b = x; break;
        case 3: g = x, b = 1; break;
        case 4: r = x, b = 1; break;
        default: r = 1, b = x; break;
        }
        const double v = l % 2 == 0 ? 230.0 : 160.0;
        entries.push_back({static_cast<Label>(l),
                           {static_cast<std::uint8_t>(std::lround(r * v)), static_cast<std::uint8_t>(std::lround(g * v)),
                            static_cast<std::uint8_t>(std::lround(b * v))},
                           "class" + std::to_string(l)});
    }
    return Palette(std::move(entries));
}

void Palette::save(const fs::path& path) const {
    std::string text = "# id,r,g,b,name\n";
    for (const auto& e : entries_)
        text += std::to_string(e.id) + "," + std::to_string(e.rgb[0]) + "," + std::to_string(e.rgb[1]) + "," +
                std::to_string(e.rgb[2]) + "," + e.name + "\n";
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

const PaletteEntry* Palette::find(Label id) const {
    for (const auto& e : entries_)
        if (e.id == id)
            return &e;
    return nullptr;
}

std::optional<Label> Palette::lookup(std::array<std::uint8_t, 3> rgb) const {
    for (const auto& e : entries_)
        if (e.rgb == rgb)
            return e.id;
    return std::nullopt;
}

void Palette::validate(std::size_t labels) const {
    std::vector<bool> seen(256, false);
    for (const auto& e : entries_) {
        if (e.id >= labels && e.id != kIgnoreLabel)
            throw Error("palette: id " + std::to_string(e.id) + " outside [0, " + std::to_string(labels) +
                        ") and not 255");
        if (seen[e.id])
            throw Error("palette: duplicate id " + std::to_string(e.id));
        seen[e.id] = true;
    }
}

RgbImage colorize(std::span<const Label> labels, std::size_t width, std::size_t height, const Palette& palette) {
    if (labels.size() != width * height)
        throw Error("colorize: label map does not match its dimensions");
    std::array<const PaletteEntry*, 256> table{};
    for (const auto& e : palette.entries())
        if (!table[e.id])
            table[e.id] = &e;
    RgbImage img{width, height, std::vector<std::uint8_t>(width * height * 3, 0)};
    for (std::size_t p = 0; p < labels.size(); ++p) {
        const Label l = labels[p];
        if (l == kIgnoreLabel)
            continue;
        if (!table[l])
            throw Error("colorize: label " + std::to_string(l) + " has no palette entry");
        std::copy(table[l]->rgb.begin(), table[l]->rgb.end(), img.rgb.begin() + static_cast<std::ptrdiff_t>(3 * p));
    }
    return img;
}

void save_colorized(const fs::path& path, std::span<const Label> labels, std::size_t width, std::size_t height,
                    const Palette& palette) {
    save_image(path, colorize(labels, width, height, palette));
}

Labeling decode_colorized(const RgbImage& image, const Palette& palette, const std::string& origin) {
    Labeling out(image.width * image.height);
    for (std::size_t p = 0; p < out.size(); ++p) {
        const std::array<std::uint8_t, 3> c{image.rgb[3 * p], image.rgb[3 * p + 1], image.rgb[3 * p + 2]};
        if (const auto id = palette.lookup(c)) {
            out[p] = *id;
        } else if (c == std::array<std::uint8_t, 3>{0, 0, 0}) {
            out[p] = kIgnoreLabel;
        } else {
            throw Error(origin + ": colour (" + std::to_string(c[0]) + "," + std::to_string(c[1]) + "," +
                        std::to_string(c[2]) + ") at pixel " + std::to_string(p) + " is not in the palette");
        }
    }
    return out;
}

} // namespace vidcrf
