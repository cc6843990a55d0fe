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

#include "vidcrf/lattice.hpp"

#include "vidcrf/error.hpp"
#include "vidcrf/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace vidcrf {

RowMatrix::RowMatrix(std::size_t count, std::size_t width)
    : count_(count), width_(width), data_(count * width, 0.0) {}

RowMatrix::RowMatrix(std::size_t count, std::size_t width, std::vector<double> data)
    : count_(count), width_(width), data_(std::move(data)) {
    if (data_.size() != count * width)
        throw Error("matrix data has " + std::to_string(data_.size()) + " entries, expected " +
                    std::to_string(count * width));
}

std::size_t RowMatrix::first_non_finite_row() const {
    for (std::size_t k = 0; k < data_.size(); ++k)
        if (!std::isfinite(data_[k]))
            return k / width_;
    return count_;
}

namespace {

// Half-pass taps [a, 1 - 2a, a]: variance 2a = 1/4 lattice steps^2.
constexpr double kSideTap = 0.125;
constexpr double kCenterTap = 1.0 - 2.0 * kSideTap;
// Half passes per direction; the blur variance per direction is
// kHalfPasses / 4 steps^2.
constexpr int kHalfPasses = 2;

// Open-addressing table mapping the first d coordinates of a lattice point
// to a dense vertex index. Indices follow insertion order. Each slot holds
// a copy of its key followed by the index, so a probe touches one line.
class KeyTable {
public:
    explicit KeyTable(std::size_t dim, std::size_t expected) : dim_(dim), stride_(std::bit_ceil(dim + 1)) {
        std::size_t cap = 64;
        while (cap < 2 * expected)
            cap <<= 1;
        slots_.assign(cap * stride_, kEmptySlot);
        keys_.reserve(expected * dim);
    }

    std::size_t size() const { return keys_.size() / dim_; }

    std::size_t hash(const std::int32_t* key) const {
        std::uint64_t h = 0x9E3779B97F4A7C15ull;
        for (std::size_t i = 0; i < dim_; ++i) {
            h ^= static_cast<std::uint32_t>(key[i]);
            h *= 0xBF58476D1CE4E5B9ull;
            h ^= h >> 31;
        }
        return static_cast<std::size_t>(h);
    }

    void prefetch(std::size_t h) const { __builtin_prefetch(slot(h & mask())); }

    std::uint32_t insert(const std::int32_t* key, std::size_t h) {
        std::int32_t* s = probe(key, h);
        if (s[dim_] != kEmptySlot)
            return static_cast<std::uint32_t>(s[dim_]);
        if (size() >= static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()))
            throw Error("permutohedral lattice exceeds 2^31 vertices");
        const auto index = static_cast<std::int32_t>(size());
        keys_.insert(keys_.end(), key, key + dim_);
        std::copy(key, key + dim_, s);
        s[dim_] = index;
        if (2 * size() > capacity())
            grow();
        return static_cast<std::uint32_t>(index);
    }

    /// Vertex index of `key`, or kEmpty.
    std::uint32_t find(const std::int32_t* key, std::size_t h) const {
        const std::int32_t* s = const_cast<KeyTable*>(this)->probe(key, h);
        return s[dim_] == kEmptySlot ? kEmpty : static_cast<std::uint32_t>(s[dim_]);
    }

    const std::int32_t* key(std::size_t index) const { return keys_.data() + index * dim_; }

    static constexpr std::uint32_t kEmpty = std::numeric_limits<std::uint32_t>::max();

private:
    static constexpr std::int32_t kEmptySlot = -1;

    std::size_t capacity() const { return slots_.size() / stride_; }
    std::size_t mask() const { return capacity() - 1; }
    std::int32_t* slot(std::size_t s) { return slots_.data() + s * stride_; }
    const std::int32_t* slot(std::size_t s) const { return slots_.data() + s * stride_; }

    std::int32_t* probe(const std::int32_t* key, std::size_t h) {
        const std::size_t m = mask();
        std::size_t s = h & m;
        for (;;) {
            std::int32_t* at = slot(s);
            if (at[dim_] == kEmptySlot || std::equal(key, key + dim_, at))
                return at;
            s = (s + 1) & m;
        }
    }

    void grow() {
        std::vector<std::int32_t> old(slots_.size() * 2, kEmptySlot);
        old.swap(slots_);
        const std::size_t m = mask();
        for (std::size_t k = 0; k < old.size(); k += stride_) {
            if (old[k + dim_] == kEmptySlot)
                continue;
            std::size_t s = hash(&old[k]) & m;
            while (slot(s)[dim_] != kEmptySlot)
                s = (s + 1) & m;
            std::copy(old.begin() + static_cast<std::ptrdiff_t>(k),
                      old.begin() + static_cast<std::ptrdiff_t>(k + stride_), slot(s));
        }
    }

    std::size_t dim_;
    std::size_t stride_;
    std::vector<std::int32_t> slots_;
    std::vector<std::int32_t> keys_;
};

// Elevation scale relative to (d+1): blur variance per direction plus the
// second moment of splat and slice interpolation (1/12 each, in units of
// (d+1)^2) must give unit variance in feature space.
double elevation_scale() {
    const double blur_variance = kHalfPasses * 2.0 * kSideTap;
    return std::sqrt(blur_variance + 1.0 / 6.0);
}

} // namespace

PermutohedralLattice::PermutohedralLattice(const FeatureMatrix& features)
    : dim_(features.dim()), count_(features.count()) {
    if (dim_ == 0 || count_ == 0)
        throw Error("build_lattice: features must have dim >= 1 and count >= 1");
    if (const std::size_t bad = features.first_non_finite_row(); bad < count_)
        throw Error("build_lattice: non-finite feature at point " + std::to_string(bad));
    if (count_ >= std::numeric_limits<std::uint32_t>::max())
        throw Error("build_lattice: too many points");

    const std::size_t d = dim_;
    const std::size_t d1 = d + 1;
    const double inv_std_dev = elevation_scale() * static_cast<double>(d1);

    std::vector<double> scale(d);
    for (std::size_t i = 0; i < d; ++i)
        scale[i] = inv_std_dev / std::sqrt(static_cast<double>((i + 1) * (i + 2)));

    // canonical[k * d1 + r]: offset of the remainder-k simplex vertex along an axis of rank r.
    std::vector<std::int32_t> canonical(d1 * d1);
    for (std::size_t k = 0; k <= d; ++k) {
        for (std::size_t r = 0; r <= d - k; ++r)
            canonical[k * d1 + r] = static_cast<std::int32_t>(k);
        for (std::size_t r = d - k + 1; r <= d; ++r)
            canonical[k * d1 + r] = static_cast<std::int32_t>(k) - static_cast<std::int32_t>(d1);
    }

    offsets_.resize(count_ * d1);
    weights_.resize(count_ * d1);

    KeyTable table(d, std::max<std::size_t>(count_ / 2, 16));
    std::vector<double> elevated(d1), bary(d1 + 1);
    std::vector<std::int64_t> rem0(d1);
    std::vector<std::int64_t> rank(d1);
    std::vector<std::int32_t> keys(2 * d1 * d);
    std::vector<std::size_t> hashes(2 * d1);
    const double down = 1.0 / static_cast<double>(d1);
    const auto d1i = static_cast<std::int64_t>(d1);

    for (std::size_t p = 0; p < count_; ++p) {
        const auto f = features.row(p);

        double sm = 0.0;
        for (std::size_t j = d; j > 0; --j) {
            const double cf = f[j - 1] * scale[j - 1];
            elevated[j] = sm - static_cast<double>(j) * cf;
            sm += cf;
        }
        elevated[0] = sm;

        // Nearest remainder-0 point.
        std::int64_t sum = 0;
        for (std::size_t i = 0; i <= d; ++i) {
            const double v = down * elevated[i];
            const double up = std::ceil(v) * static_cast<double>(d1);
            const double lo = std::floor(v) * static_cast<double>(d1);
            const double r = (up - elevated[i] < elevated[i] - lo) ? up : lo;
            if (std::abs(r) > 2.0e9)
                throw Error("build_lattice: feature magnitude too large at point " + std::to_string(p));
            rem0[i] = static_cast<std::int64_t>(r);
            sum += rem0[i] / d1i;
        }

        // Rank of each coordinate's residual, ties broken by index.
        std::fill(rank.begin(), rank.end(), 0);
        for (std::size_t i = 0; i < d; ++i) {
            const double di = elevated[i] - static_cast<double>(rem0[i]);
            for (std::size_t j = i + 1; j <= d; ++j) {
                if (di < elevated[j] - static_cast<double>(rem0[j]))
                    ++rank[i];
                else
                    ++rank[j];
            }
        }

        // Project onto the plane if the rounded point left it.
        for (std::size_t i = 0; i <= d; ++i) {
            rank[i] += sum;
            if (rank[i] < 0) {
                rank[i] += d1i;
                rem0[i] += d1i;
            } else if (rank[i] > static_cast<std::int64_t>(d)) {
                rank[i] -= d1i;
                rem0[i] -= d1i;
            }
        }

        std::fill(bary.begin(), bary.end(), 0.0);
        for (std::size_t i = 0; i <= d; ++i) {
            const double v = (elevated[i] - static_cast<double>(rem0[i])) * down;
            const auto r = static_cast<std::size_t>(rank[i]);
            bary[d - r] += v;
            bary[d - r + 1] -= v;
        }
        bary[0] += 1.0 + bary[d1];

        for (std::size_t k = 0; k <= d; ++k) {
            std::int32_t* key = keys.data() + k * d;
            for (std::size_t i = 0; i < d; ++i)
                key[i] = static_cast<std::int32_t>(rem0[i] + canonical[k * d1 + static_cast<std::size_t>(rank[i])]);
            hashes[k] = table.hash(key);
            table.prefetch(hashes[k]);
        }
        for (std::size_t k = 0; k <= d; ++k) {
            offsets_[p * d1 + k] = table.insert(keys.data() + k * d, hashes[k]);
            weights_[p * d1 + k] = static_cast<float>(bary[k]);
        }
    }

    vertex_count_ = table.size();

    // Blur neighbours along each lattice direction.
    neighbors_.assign(d1 * vertex_count_ * 2, static_cast<std::uint32_t>(vertex_count_));
    const auto missing = static_cast<std::uint32_t>(vertex_count_);
    const auto di32 = static_cast<std::int32_t>(d);
    for (std::size_t v = 0; v < vertex_count_; ++v) {
        const std::int32_t* k = table.key(v);
        for (std::size_t j = 0; j <= d; ++j) {
            std::int32_t* n1 = keys.data() + (2 * j) * d;
            std::int32_t* n2 = n1 + d;
            for (std::size_t i = 0; i < d; ++i) {
                n1[i] = k[i] - 1;
                n2[i] = k[i] + 1;
            }
            if (j < d) {
                n1[j] = k[j] + di32;
                n2[j] = k[j] - di32;
            }
            hashes[2 * j] = table.hash(n1);
            hashes[2 * j + 1] = table.hash(n2);
            table.prefetch(hashes[2 * j]);
            table.prefetch(hashes[2 * j + 1]);
        }
        for (std::size_t j = 0; j <= d; ++j) {
            for (std::size_t side = 0; side < 2; ++side) {
                const std::uint32_t a = table.find(keys.data() + (2 * j + side) * d, hashes[2 * j + side]);
                neighbors_[(j * vertex_count_ + v) * 2 + side] = a == KeyTable::kEmpty ? missing : a;
            }
        }
    }

    // Feature-space volume per lattice vertex is (d+1)^(d - 1/2) / inv_std_dev^d;
    // scaling by (2 pi)^(d/2) over it matches the integral of exp(-|x|^2 / 2).
    const double dd = static_cast<double>(d);
    const double log_gain = 0.5 * dd * std::log(2.0 * std::numbers::pi) + dd * std::log(inv_std_dev) -
                            (dd - 0.5) * std::log(static_cast<double>(d1));
    gain_ = std::exp(log_gain);

    const std::vector<double> ones(count_, 1.0);
    normalization_.assign(count_, 0.0);
    filter(ones, 1, normalization_, FilterMode::raw);
    for (std::size_t p = 0; p < count_; ++p)
        if (!(normalization_[p] > 0.0))
            throw Error("build_lattice: non-positive normalization at point " + std::to_string(p));
}

ValueMatrix PermutohedralLattice::filter(const ValueMatrix& values, FilterMode mode) const {
    ValueMatrix out(values.count(), values.channels());
    if (values.count() != count_)
        throw Error("filter: value count " + std::to_string(values.count()) + " does not match lattice count " +
                    std::to_string(count_));
    if (const std::size_t bad = values.first_non_finite_row(); bad < count_)
        throw Error("filter: non-finite value at point " + std::to_string(bad));
    filter(values.data(), values.channels(), out.data(), mode);
    return out;
}

void PermutohedralLattice::filter(std::span<const double> values, std::size_t channels, std::span<double> out,
                                  FilterMode mode) const {
    if (channels == 0 || values.size() != count_ * channels || out.size() != count_ * channels)
        throw Error("filter: value buffer does not match lattice count " + std::to_string(count_));
    // One extra zero vertex absorbs missing blur neighbours.
    std::vector<double> lattice((vertex_count_ + 1) * channels, 0.0);
    std::vector<double> scratch((vertex_count_ + 1) * channels, 0.0);
    splat(values, channels, lattice);
    blur(lattice, scratch, channels);
    slice(lattice, channels, out);
    if (mode == FilterMode::normalized) {
        const auto n = static_cast<std::ptrdiff_t>(count_);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t p = 0; p < n; ++p) {
            const double inv = 1.0 / normalization_[static_cast<std::size_t>(p)];
            for (std::size_t c = 0; c < channels; ++c)
                out[static_cast<std::size_t>(p) * channels + c] *= inv;
        }
    }
}

void PermutohedralLattice::splat(std::span<const double> values, std::size_t channels,
                                 std::span<double> lattice) const {
    const std::size_t d1 = dim_ + 1;
    const int threads = std::min<int>(max_threads(), static_cast<int>(std::max<std::size_t>(1, count_ / 4096)));

    auto splat_range = [&](std::size_t begin, std::size_t end, double* dst) {
        for (std::size_t p = begin; p < end; ++p) {
            const double* v = values.data() + p * channels;
            const std::uint32_t* off = offsets_.data() + p * d1;
            const float* w = weights_.data() + p * d1;
            for (std::size_t k = 0; k < d1; ++k) {
                double* cell = dst + static_cast<std::size_t>(off[k]) * channels;
                const double wk = w[k];
                for (std::size_t c = 0; c < channels; ++c)
                    cell[c] += wk * v[c];
            }
        }
    };

    if (threads <= 1) {
        splat_range(0, count_, lattice.data());
        return;
    }

    // Each thread splats a contiguous chunk of points into a private buffer;
    // buffers are then summed in thread order so the result depends only on
    // the thread count.
    std::vector<std::vector<double>> partial(static_cast<std::size_t>(threads - 1));
#pragma omp parallel num_threads(threads)
    {
#ifdef _OPENMP
        const int t = omp_get_thread_num();
#else
        const int t = 0;
#endif
        const ChunkRange r = chunk_range(count_, threads, t);
        if (t == 0) {
            splat_range(r.begin, r.end, lattice.data());
        } else {
            auto& buf = partial[static_cast<std::size_t>(t - 1)];
            buf.assign(lattice.size(), 0.0);
            splat_range(r.begin, r.end, buf.data());
        }
    }
    const auto total = static_cast<std::ptrdiff_t>(lattice.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < total; ++i) {
        double acc = lattice[static_cast<std::size_t>(i)];
        for (const auto& buf : partial)
            acc += buf[static_cast<std::size_t>(i)];
        lattice[static_cast<std::size_t>(i)] = acc;
    }
}

void PermutohedralLattice::blur(std::vector<double>& lattice, std::vector<double>& scratch,
                                std::size_t channels) const {
    const std::size_t d1 = dim_ + 1;
    const auto m = static_cast<std::ptrdiff_t>(vertex_count_);

    auto pass = [&](std::size_t j) {
        const std::uint32_t* nb = neighbors_.data() + j * vertex_count_ * 2;
        const double* src = lattice.data();
        double* dst = scratch.data();
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t vi = 0; vi < m; ++vi) {
            const auto v = static_cast<std::size_t>(vi);
            const double* a = src + static_cast<std::size_t>(nb[2 * v]) * channels;
            const double* b = src + static_cast<std::size_t>(nb[2 * v + 1]) * channels;
            const double* x = src + v * channels;
            double* y = dst + v * channels;
            for (std::size_t c = 0; c < channels; ++c)
                y[c] = kCenterTap * x[c] + kSideTap * (a[c] + b[c]);
        }
        lattice.swap(scratch);
    };

    // Palindromic order keeps the composed blur symmetric.
    for (int rep = 0; rep < kHalfPasses / 2; ++rep)
        for (std::size_t j = 0; j < d1; ++j)
            pass(j);
    for (int rep = 0; rep < kHalfPasses / 2; ++rep)
        for (std::size_t j = d1; j-- > 0;)
            pass(j);
}

void PermutohedralLattice::slice(std::span<const double> lattice, std::size_t channels,
                                 std::span<double> out) const {
    const std::size_t d1 = dim_ + 1;
    const auto n = static_cast<std::ptrdiff_t>(count_);
    const double g = gain_;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t pi = 0; pi < n; ++pi) {
        const auto p = static_cast<std::size_t>(pi);
        double* o = out.data() + p * channels;
        std::fill(o, o + channels, 0.0);
        const std::uint32_t* off = offsets_.data() + p * d1;
        const float* w = weights_.data() + p * d1;
        for (std::size_t k = 0; k < d1; ++k) {
            const double* cell = lattice.data() + static_cast<std::size_t>(off[k]) * channels;
            const double wk = w[k];
            for (std::size_t c = 0; c < channels; ++c)
                o[c] += wk * cell[c];
        }
        for (std::size_t c = 0; c < channels; ++c)
            o[c] *= g;
    }
}

ValueMatrix brute_force_gaussian(const FeatureMatrix& features, const ValueMatrix& values) {
    if (features.count() != values.count())
        throw Error("brute_force_gaussian: feature count " + std::to_string(features.count()) +
                    " does not match value count " + std::to_string(values.count()));
    if (const std::size_t bad = features.first_non_finite_row(); bad < features.count())
        throw Error("brute_force_gaussian: non-finite feature at point " + std::to_string(bad));
    if (const std::size_t bad = values.first_non_finite_row(); bad < values.count())
        throw Error("brute_force_gaussian: non-finite value at point " + std::to_string(bad));

    const std::size_t n = features.count();
    const std::size_t d = features.dim();
    const std::size_t c = values.channels();
    ValueMatrix out(n, c);
    for (std::size_t a = 0; a < n; ++a) {
        const auto fa = features.row(a);
        auto oa = out.row(a);
        for (std::size_t b = 0; b < n; ++b) {
            const auto fb = features.row(b);
            double dist2 = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                const double t = fa[k] - fb[k];
                dist2 += t * t;
            }
            const double w = std::exp(-0.5 * dist2);
            const auto vb = values.row(b);
            for (std::size_t k = 0; k < c; ++k)
                oa[k] += w * vb[k];
        }
    }
    return out;
}

} // namespace vidcrf
