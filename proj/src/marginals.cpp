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

#include "vidcrf/marginals.hpp"

#include <cmath>
#include <limits>

namespace vidcrf {

MarginalField::MarginalField(std::size_t frames, std::size_t pixels_per_frame, std::size_t labels)
    : frames_(frames), pixels_(pixels_per_frame), labels_(labels), q_(frames * pixels_per_frame * labels, 0.0) {}

double MarginalField::max_normalization_error() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < variable_count(); ++i) {
        double s = 0.0;
        for (double v : row(i)) {
            if (!(v >= 0.0) || !std::isfinite(v))
                return std::numeric_limits<double>::infinity();
            s += v;
        }
        worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
}

Labeling decode_argmax(const MarginalField& q) {
    Labeling out(q.variable_count());
    for (std::size_t i = 0; i < q.variable_count(); ++i) {
        const auto r = q.row(i);
        std::size_t best = 0;
        for (std::size_t l = 1; l < r.size(); ++l)
            if (r[l] > r[best])
                best = l;
        out[i] = static_cast<Label>(best);
    }
    return out;
}

} // namespace vidcrf
