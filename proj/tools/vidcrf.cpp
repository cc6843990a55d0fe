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

#include "vidcrf/error.hpp"
#include "vidcrf/pipeline.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

using namespace vidcrf;

namespace {

void add_common(CLI::App& cmd, RunConfig& c) {
    cmd.add_option("--threads", c.threads, "Thread cap, 0 for the OpenMP default");
    cmd.add_option("--seed", c.seed, "Random seed");
    cmd.add_option("--config", "key=value file; command-line flags win");
}

void add_model(CLI::App& cmd, RunConfig& c) {
    cmd.add_option("--labels", c.labels, "Label count L");
    cmd.add_option("--batch", c.batch, "Frames per joint window")->capture_default_str();
    cmd.add_option("--iters", c.iterations, "Mean-field iterations")->capture_default_str();
    cmd.add_option("--mode", c.mode, "joint or perframe")
        ->transform(CLI::CheckedTransformer(std::map<std::string, RunMode>{{"joint", RunMode::joint},
                                                                          {"perframe", RunMode::perframe}}));
    cmd.add_option("--hoc", c.hoc, "Higher-order cliques on|off")
        ->transform(CLI::CheckedTransformer(std::map<std::string, bool>{{"on", true}, {"off", false}}));
    cmd.add_option("--alpha", c.alpha, "gamma_max = alpha * |c|")->capture_default_str();
    cmd.add_option("--w1", c.smoothness.weight, "Smoothness kernel weight")->capture_default_str();
    cmd.add_option("--sxy1", c.smoothness.sigma_xy, "Smoothness spatial bandwidth")->capture_default_str();
    cmd.add_option("--st1", c.smoothness.sigma_time, "Smoothness temporal bandwidth")->capture_default_str();
    cmd.add_option("--w2", c.appearance.weight, "Appearance kernel weight")->capture_default_str();
    cmd.add_option("--sxy2", c.appearance.sigma_xy, "Appearance spatial bandwidth")->capture_default_str();
    cmd.add_option("--st2", c.appearance.sigma_time, "Appearance temporal bandwidth")->capture_default_str();
    cmd.add_option("--srgb", c.appearance.sigma_rgb, "Appearance colour bandwidth")->capture_default_str();
    cmd.add_option("--damping", c.damping, "Update damping in (0, 1]")->capture_default_str();
}

void build(CLI::App& app, RunConfig& c) {
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    auto* infer = app.add_subcommand("infer", "Run inference and write label maps");
    infer->add_option("--images", c.images, "Directory of P6 frames (or one file)");
    infer->add_option("--unaries", c.unaries, "Directory of UNR1 files (or one file)");
    infer->add_option("--segments", c.segments, "SEG1 layer files or directories of them")
        ->delimiter(',');
    infer->add_option("--gt", c.gt, "Ground-truth label maps to evaluate against");
    infer->add_option("--out", c.out, "Output directory");
    infer->add_option("--palette", c.palette, "Palette for colourised output");
    infer->add_flag("--unary-is-prob", c.unary_is_prob, "Unaries hold probabilities");
    infer->add_flag("--absent-as-zero", c.absent_as_zero, "Count absent classes as 0 accuracy");
    add_model(*infer, c);
    add_common(*infer, c);

    auto* eval = app.add_subcommand("eval", "Average per-class accuracy of label maps");
    eval->add_option("--pred", c.pred, "Predicted label maps (or an infer output directory)");
    eval->add_option("--gt", c.gt, "Ground-truth label maps, or colour maps with --palette");
    eval->add_option("--labels", c.labels, "Label count L");
    eval->add_option("--palette", c.palette, "Palette for class names and colour ground truth");
    eval->add_option("--out", c.out, "Directory for accuracy.csv");
    eval->add_flag("--absent-as-zero", c.absent_as_zero, "Count absent classes as 0 accuracy");
    add_common(*eval, c);

    auto* synth = app.add_subcommand("synth", "Generate a synthetic video benchmark");
    synth->add_option("--out", c.out, "Output directory");
    synth->add_option("--labels", c.labels, "Label count L (default 4)");
    synth->add_option("--frames", c.synth.frames, "Frame count")->capture_default_str();
    synth->add_option("--width", c.synth.width, "Frame width")->capture_default_str();
    synth->add_option("--height", c.synth.height, "Frame height")->capture_default_str();
    synth->add_option("--noise", c.synth.noise, "Unary noise blend rate")->capture_default_str();
    add_common(*synth, c);

    auto* bench = app.add_subcommand("bench", "Time inference at geometrically growing sizes");
    add_model(*bench, c);
    bench->add_option("--out", c.out, "Directory for bench.csv");
    bench->add_option("--width", c.bench.frame_width, "Frame width")->capture_default_str();
    bench->add_option("--height", c.bench.frame_height, "Frame height")->capture_default_str();
    bench->add_option("--min-n", c.bench.min_variables, "Smallest variable count")->capture_default_str();
    bench->add_option("--max-n", c.bench.max_variables, "Largest variable count")->capture_default_str();
    bench->add_option("--repeat", c.bench.repeat, "Timed runs per size")->capture_default_str();
    add_common(*bench, c);
}

// Config lines become `--key=value` arguments placed before the command
// line ones, skipping keys the command line already sets.
std::vector<std::string> config_arguments(const std::string& path, const CLI::App& cmd) {
    std::ifstream in(path);
    if (!in)
        throw Error(path + ": cannot open config file");
    std::vector<std::string> args;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (const auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos)
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(path + ":" + std::to_string(lineno) + ": expected key=value");
        auto trim = [](std::string s) {
            const auto l = s.find_first_not_of(" \t\r");
            const auto r = s.find_last_not_of(" \t\r");
            return l == std::string::npos ? std::string() : s.substr(l, r - l + 1);
        };
        std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.rfind("--", 0) != 0)
            key = "--" + key;
        const CLI::Option* opt = cmd.get_option_no_throw(key);
        if (!opt || key == "--config")
            throw Error(path + ":" + std::to_string(lineno) + ": unknown key '" + key.substr(2) + "'");
        if (opt->count() > 0)
            continue;
        if (opt->get_expected_max() > 1) {
            std::stringstream ss(value);
            std::string item;
            while (std::getline(ss, item, ','))
                args.push_back(key + "=" + trim(item));
        } else {
            args.push_back(key + "=" + value);
        }
    }
    return args;
}

int dispatch(const CLI::App& app, const RunConfig& c) {
    const auto* cmd = app.get_subcommands().front();
    const std::string name = cmd->get_name();
    if (name == "infer")
        return cmd_infer(c, std::cout);
    if (name == "eval")
        return cmd_eval(c, std::cout);
    if (name == "synth")
        return cmd_synth(c, std::cout);
    return cmd_bench(c, std::cout);
}

} // namespace

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::reverse(args.begin(), args.end());
    try {
        RunConfig config;
        CLI::App app("Joint dense-CRF inference for video segmentation", "vidcrf");
        build(app, config);
        try {
            auto first = args;
            app.parse(first);
            const auto* cmd = app.get_subcommands().front();
            if (const auto* opt = cmd->get_option_no_throw("--config"); opt && opt->count() > 0) {
                auto extra = config_arguments(opt->as<std::string>(), *cmd);
                RunConfig fresh;
                CLI::App again("Joint dense-CRF inference for video segmentation", "vidcrf");
                build(again, fresh);
                // Reversed order: the subcommand first, then config values, then the command line.
                std::vector<std::string> merged(args.begin(), args.end() - 1);
                for (auto it = extra.rbegin(); it != extra.rend(); ++it)
                    merged.push_back(*it);
                merged.push_back(args.back());
                again.parse(merged);
                return dispatch(again, fresh);
            }
        } catch (const CLI::ParseError& e) {
            return app.exit(e);
        }
        return dispatch(app, config);
    } catch (const std::exception& e) {
        std::cerr << "vidcrf: error: " << e.what() << '\n';
        return 1;
    }
}
