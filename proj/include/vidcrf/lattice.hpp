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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace vidcrf {

/// Dense row-major n x k block of doubles. Base of the feature and value
/// matrices handed to the lattice.
class RowMatrix {
public:
    RowMatrix() = default;
    RowMatrix(std::size_t count, std::size_t width);
    RowMatrix(std::size_t count, std::size_t width, std::vector<double> data);

    std::size_t count() const { return count_; }
    std::size_t width() const { return width_; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * width_, width_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * width_, width_}; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * width_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * width_ + j]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    /// Index of the first non-finite entry's row, or count() if all are finite.
    std::size_t first_non_finite_row() const;

private:
    std::size_t count_ = 0;
    std::size_t width_ = 0;
    std::vector<double> data_;
};

/// Per-point embedding; the implied kernel is exp(-0.5 * |f_a - f_b|^2).
class FeatureMatrix : public RowMatrix {
public:
    using RowMatrix::RowMatrix;
    std::size_t dim() const { return width(); }
};

/// Per-point value vectors to be filtered.
class ValueMatrix : public RowMatrix {
public:
    using RowMatrix::RowMatrix;
    std::size_t channels() const { return width(); }
};

enum class FilterMode {
    raw,       ///< sum_b k(a,b) v_b, self term included
    normalized ///< raw output divided by the filtered all-ones vector
};

/// Permutohedral lattice for approximate Gaussian filtering in O(n d).
///
/// Points are lifted onto the hyperplane x_0 + ... + x_d = 0, splatted onto
/// the d+1 vertices of their enclosing simplex with barycentric weights,
/// blurred along the d+1 lattice directions and sliced back. The blur is a
/// palindromic sequence of symmetric 3-tap passes, so the operator
/// S^T B S is exactly symmetric even on the sparse lattice. Output is
/// scaled so the implied kernel integrates like exp(-0.5 |df|^2).
///
/// Immutable once built; concurrent filter() calls are safe.
class PermutohedralLattice {
public:
    /// Builds the lattice. Throws Error naming the first point with a
    /// non-finite coordinate.
    explicit PermutohedralLattice(const FeatureMatrix& features);

    std::size_t dim() const { return dim_; }
    std::size_t count() const { return count_; }
    std::size_t vertex_count() const { return vertex_count_; }

    ValueMatrix filter(const ValueMatrix& values, FilterMode mode) const;

    /// Span form of filter(); `values` and `out` are count() x channels
    /// row-major and must not alias.
    void filter(std::span<const double> values, std::size_t channels, std::span<double> out,
                FilterMode mode) const;

    /// Raw filter response to the all-ones value, one entry per point.
    std::span<const double> normalization() const { return normalization_; }

    std::span<const std::uint32_t> vertex_offsets(std::size_t point) const {
        return {offsets_.data() + point * (dim_ + 1), dim_ + 1};
    }
    std::span<const float> barycentric(std::size_t point) const {
        return {weights_.data() + point * (dim_ + 1), dim_ + 1};
    }

    /// Output scale applied at slicing.
    double gain() const { return gain_; }

private:
    void splat(std::span<const double> values, std::size_t channels, std::span<double> lattice) const;
    void blur(std::vector<double>& lattice, std::vector<double>& scratch, std::size_t channels) const;
    void slice(std::span<const double> lattice, std::size_t channels, std::span<double> out) const;

    std::size_t dim_ = 0;
    std::size_t count_ = 0;
    std::size_t vertex_count_ = 0;
    double gain_ = 1.0;
    std::vector<std::uint32_t> offsets_; // count x (dim+1)
    std::vector<float> weights_;         // count x (dim+1)
    // Per direction j and vertex v: index of v - u_j and v + u_j, or
    // vertex_count_ when that vertex is not populated.
    std::vector<std::uint32_t> neighbors_; // (dim+1) x vertex_count x 2
    std::vector<double> normalization_;
};

/// Exact O(n^2) reference: out_a = sum_b exp(-0.5 |f_a - f_b|^2) v_b, b = a included.
ValueMatrix brute_force_gaussian(const FeatureMatrix& features, const ValueMatrix& values);

} // namespace vidcrf
