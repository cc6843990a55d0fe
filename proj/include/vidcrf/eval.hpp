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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace vidcrf {

/// Ground truth in rows, prediction in columns.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::size_t labels);

    std::size_t labels() const { return labels_; }
    std::uint64_t operator()(std::size_t gt, std::size_t pred) const { return counts_[gt * labels_ + pred]; }
    std::uint64_t& operator()(std::size_t gt, std::size_t pred) { return counts_[gt * labels_ + pred]; }
    std::uint64_t ignored() const { return ignored_; }
    void add_ignored(std::uint64_t n) { ignored_ += n; }

    std::uint64_t row_sum(std::size_t gt) const;
    std::uint64_t total() const;
    std::uint64_t diagonal() const;

    ConfusionMatrix& operator+=(const ConfusionMatrix& o);

private:
    std::size_t labels_ = 0;
    std::vector<std::uint64_t> counts_;
    std::uint64_t ignored_ = 0;
};

/// Tallies every pixel whose ground truth differs from `ignore`.
ConfusionMatrix confusion(std::span<const Label> pred, std::span<const Label> gt, std::size_t labels,
                          Label ignore = kIgnoreLabel);

struct AccuracyReport {
    /// Empty for classes absent from the ground truth.
    std::vector<std::optional<double>> per_class;
    double average = 0.0;
    double global = 0.0;
    std::size_t classes_counted = 0;
};

/// Mean over classes of diagonal / row sum. Absent classes are skipped, or
/// counted as 0 when `absent_as_zero` is set. Throws if every row is empty.
AccuracyReport average_per_class_accuracy(const ConfusionMatrix& cm, bool absent_as_zero = false);

/// Columns: class_id,class_name,gt_pixels,correct_pixels,accuracy. One row
/// per class (accuracy blank when absent), then `average` and `global`
/// summary rows with the metric in the accuracy column.
void write_accuracy_csv(std::ostream& out, const ConfusionMatrix& cm, const AccuracyReport& report,
                        std::span<const std::string> class_names = {});

} // namespace vidcrf
