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

#include "vidcrf/eval.hpp"

#include "vidcrf/error.hpp"

#include <iomanip>
#include <numeric>
#include <sstream>
#include <string>

namespace vidcrf {

ConfusionMatrix::ConfusionMatrix(std::size_t labels) : labels_(labels), counts_(labels * labels, 0) {}

std::uint64_t ConfusionMatrix::row_sum(std::size_t gt) const {
    std::uint64_t s = 0;
    for (std::size_t p = 0; p < labels_; ++p)
        s += (*this)(gt, p);
    return s;
}

std::uint64_t ConfusionMatrix::total() const {
    return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::diagonal() const {
    std::uint64_t s = 0;
    for (std::size_t l = 0; l < labels_; ++l)
        s += (*this)(l, l);
    return s;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
    if (o.labels_ != labels_)
        throw Error("confusion matrices with " + std::to_string(labels_) + " and " + std::to_string(o.labels_) +
                    " labels cannot be merged");
    for (std::size_t k = 0; k < counts_.size(); ++k)
        counts_[k] += o.counts_[k];
    ignored_ += o.ignored_;
    return *this;
}

ConfusionMatrix confusion(std::span<const Label> pred, std::span<const Label> gt, std::size_t labels, Label ignore) {
    if (pred.size() != gt.size())
        throw Error("confusion: prediction has " + std::to_string(pred.size()) + " pixels, ground truth " +
                    std::to_string(gt.size()));
    if (labels == 0 || labels > kMaxLabels)
        throw Error("confusion: label count " + std::to_string(labels) + " out of range");
    ConfusionMatrix cm(labels);
    for (std::size_t k = 0; k < gt.size(); ++k) {
        if (gt[k] == ignore) {
            cm.add_ignored(1);
            continue;
        }
        if (gt[k] >= labels)
            throw Error("confusion: ground truth label " + std::to_string(gt[k]) + " at pixel " + std::to_string(k) +
                        " is >= " + std::to_string(labels));
        if (pred[k] >= labels)
            throw Error("confusion: predicted label " + std::to_string(pred[k]) + " at pixel " + std::to_string(k) +
                        " is >= " + std::to_string(labels));
        ++cm(gt[k], pred[k]);
    }
    return cm;
}

AccuracyReport average_per_class_accuracy(const ConfusionMatrix& cm, bool absent_as_zero) {
    AccuracyReport r;
    r.per_class.resize(cm.labels());
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t l = 0; l < cm.labels(); ++l) {
        const auto row = cm.row_sum(l);
        if (row == 0)
            continue;
        r.per_class[l] = static_cast<double>(cm(l, l)) / static_cast<double>(row);
        sum += *r.per_class[l];
        ++present;
    }
    if (present == 0)
        throw Error("accuracy: every ground-truth class is empty");
    r.classes_counted = absent_as_zero ? cm.labels() : present;
    r.average = sum / static_cast<double>(r.classes_counted);
    r.global = static_cast<double>(cm.diagonal()) / static_cast<double>(cm.total());
    return r;
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"')
            out += '"';
        out += c;
    }
    return out + '"';
}

} // namespace

void write_accuracy_csv(std::ostream& out, const ConfusionMatrix& cm, const AccuracyReport& report,
                        std::span<const std::string> class_names) {
    auto fmt = [](double v) {
        std::ostringstream s;
        s << std::setprecision(6) << std::fixed << v;
        return s.str();
    };
    out << "class_id,class_name,gt_pixels,correct_pixels,accuracy\n";
    for (std::size_t l = 0; l < cm.labels(); ++l) {
        out << l << ',' << (l < class_names.size() ? csv_field(class_names[l]) : std::string()) << ',' << cm.row_sum(l) << ','
            << cm(l, l) << ',' << (report.per_class[l] ? fmt(*report.per_class[l]) : std::string()) << '\n';
    }
    out << "average,," << cm.total() << ',' << cm.diagonal() << ',' << fmt(report.average) << '\n';
    out << "global,," << cm.total() << ',' << cm.diagonal() << ',' << fmt(report.global) << '\n';
}

} // namespace vidcrf
