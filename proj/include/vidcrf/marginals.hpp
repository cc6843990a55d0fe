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

/// Variable id: t * (W * H) + y * W + x, with t counted from the first frame
/// of the volume the field belongs to.
using VariableId = std::uint32_t;

/// Label ids fit the 8-bit label maps; 255 is reserved for void/ignore.
using Label = std::uint8_t;
inline constexpr Label kIgnoreLabel = 255;
inline constexpr std::size_t kMaxLabels = 255;

using Labeling = std::vector<Label>;

/// Mean-field distribution Q: one probability row per variable.
class MarginalField {
public:
    MarginalField() = default;
    MarginalField(std::size_t frames, std::size_t pixels_per_frame, std::size_t labels);

    std::size_t frames() const { return frames_; }
    std::size_t pixels_per_frame() const { return pixels_; }
    std::size_t labels() const { return labels_; }
    std::size_t variable_count() const { return frames_ * pixels_; }

    std::span<double> row(std::size_t i) { return {q_.data() + i * labels_, labels_}; }
    std::span<const double> row(std::size_t i) const { return {q_.data() + i * labels_, labels_}; }
    double operator()(std::size_t i, std::size_t l) const { return q_[i * labels_ + l]; }
    double& operator()(std::size_t i, std::size_t l) { return q_[i * labels_ + l]; }

    std::span<double> data() { return q_; }
    std::span<const double> data() const { return q_; }

    /// Largest |sum_l Q_i(l) - 1| over all rows; +inf if any entry is
    /// negative or non-finite.
    double max_normalization_error() const;

private:
    std::size_t frames_ = 0;
    std::size_t pixels_ = 0;
    std::size_t labels_ = 0;
    std::vector<double> q_;
};

/// Index of the largest entry of each row, ties toward the smaller label.
Labeling decode_argmax(const MarginalField& q);

} // namespace vidcrf
