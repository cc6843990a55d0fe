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

#include "vidcrf/eval.hpp"
#include "vidcrf/model.hpp"
#include "vidcrf/solver.hpp"
#include "vidcrf/synth.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace vidcrf {

enum class RunMode { joint, perframe };

struct BenchParams {
    std::size_t frame_width = 100;
    std::size_t frame_height = 100;
    std::size_t min_variables = 100000;
    std::size_t max_variables = 10000000;
    int repeat = 3;
};

struct RunConfig {
    std::filesystem::path images;
    std::filesystem::path unaries;
    std::vector<std::filesystem::path> segments;
    std::filesystem::path gt;
    std::filesystem::path pred;
    std::filesystem::path out;
    std::filesystem::path palette;

    std::size_t labels = 0; ///< 0 takes the count from the unaries
    std::size_t batch = 50;
    int iterations = 5;
    RunMode mode = RunMode::joint;
    bool hoc = true;
    double alpha = 0.05;
    KernelSpec smoothness = KernelSpec::default_smoothness();
    KernelSpec appearance = KernelSpec::default_appearance();
    double damping = 1.0;
    bool unary_is_prob = false;
    bool absent_as_zero = false;
    int threads = 0;
    std::uint64_t seed = 1;

    SynthParams synth;
    BenchParams bench;

    /// Frames per inference window after applying the mode.
    std::size_t window() const { return mode == RunMode::perframe ? 1 : batch; }
    void validate() const;
};

/// Files with the given extension in a directory, sorted by name; a regular
/// file stands for itself.
std::vector<std::filesystem::path> list_inputs(const std::filesystem::path& path, const std::string& extension);

struct InputSet {
    std::vector<std::string> stems;
    VideoVolume volume;
    UnaryField unary;
    std::vector<SegmentMap> segments;
};

InputSet load_inputs(const RunConfig& config);

/// Kernels, Potts compatibility and (with hoc on) one clique layer per map.
CrfProblem make_problem(VideoVolume volume, UnaryField unary, const std::vector<SegmentMap>& segments,
                        const RunConfig& config);

struct BatchSummary {
    std::size_t first_frame = 0;
    std::size_t frames = 0;
    std::size_t variables = 0;
    SolverReport report;
};

struct PipelineResult {
    Labeling labeling;
    std::vector<BatchSummary> batches;
    double wall_seconds = 0.0;
};

/// Consecutive disjoint windows of config.window() frames.
PipelineResult run_pipeline(const CrfProblem& problem, const RunConfig& config, bool compute_energy = true);

void write_batch_csv(std::ostream& out, const std::vector<BatchSummary>& batches);

int cmd_infer(const RunConfig& config, std::ostream& log);
int cmd_eval(const RunConfig& config, std::ostream& log);
int cmd_synth(const RunConfig& config, std::ostream& log);
int cmd_bench(const RunConfig& config, std::ostream& log);

struct BenchPoint {
    std::size_t variables = 0;
    std::size_t frames = 0;
    std::vector<double> seconds; ///< one per repeat
    PhaseTimes times;            ///< from the fastest repeat
};

/// Least-squares slope of log(seconds) against log(variables), using the
/// fastest repeat at each size.
double fitted_exponent(const std::vector<BenchPoint>& points);

std::vector<BenchPoint> run_bench(const RunConfig& config, std::ostream* progress = nullptr);

} // namespace vidcrf
