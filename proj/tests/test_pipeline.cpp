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


#include "support.hpp"
#include "vidcrf/error.hpp"
#include "vidcrf/io.hpp"
#include "vidcrf/pipeline.hpp"

#include <doctest.h>

#include <cstdlib>
#include <sstream>

using namespace vidcrf;
using vidcrf::testing::TempDir;
using vidcrf::testing::read_bytes;
namespace fs = std::filesystem;

namespace {

SynthParams small_scene(std::uint64_t seed = 3) {
    SynthParams p;
    p.seed = seed;
    p.frames = 4;
    p.width = 40;
    p.height = 32;
    p.labels = 3;
    p.kmeans_k = {10};
    return p;
}

RunConfig inputs_from(const fs::path& dir) {
    RunConfig c;
    c.images = dir / "images";
    c.unaries = dir / "unaries";
    c.segments = {dir / "segments"};
    return c;
}

Labeling flatten(const std::vector<Labeling>& frames) {
    Labeling out;
    for (const auto& f : frames)
        out.insert(out.end(), f.begin(), f.end());
    return out;
}

double unary_accuracy(const SynthData& d) {
    const Labeling argmax = decode_argmax(init_marginals(d.unary));
    return average_per_class_accuracy(confusion(argmax, flatten(d.ground_truth), d.params.labels)).average;
}

std::string tree_bytes(const fs::path& root) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file())
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::string all;
    for (const auto& f : files)
        all += fs::relative(f, root).string() + '\n' + read_bytes(f);
    return all;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(VIDCRF_CLI) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

} // namespace

TEST_CASE("synthetic scenes are deterministic") {
    TempDir a("synth-a"), b("synth-b"), c("synth-c");
    write_synthetic(a.path(), generate_synthetic(small_scene()));
    write_synthetic(b.path(), generate_synthetic(small_scene()));
    write_synthetic(c.path(), generate_synthetic(small_scene(4)));
    CHECK(tree_bytes(a.path()) == tree_bytes(b.path()));
    CHECK(tree_bytes(a.path()) != tree_bytes(c.path()));
    CHECK(fs::exists(a / "images/frame_0003.ppm"));
    CHECK(fs::exists(a / "gt/frame_0000.pgm"));
    CHECK(fs::exists(a / "segments/layer1.seg"));
    CHECK(fs::exists(a / "palette.txt"));
}

TEST_CASE("synthetic unaries") {
    SynthParams p = small_scene();
    p.noise = 0.0;
    const SynthData clean = generate_synthetic(p);
    CHECK(unary_accuracy(clean) == 1.0);
    REQUIRE(clean.segments.size() == 2);
    CHECK(clean.unary.frames() == 4);

    const SynthData noisy = generate_synthetic(SynthParams{});
    const double acc = unary_accuracy(noisy);
    CHECK(acc >= 0.70);
    CHECK(acc <= 0.80);
}

TEST_CASE("per-frame mode equals joint windows of one frame") {
    const SynthData d = generate_synthetic(small_scene());
    RunConfig c;
    const CrfProblem p = make_problem(d.volume(), d.unary, d.segments, c);
    c.mode = RunMode::perframe;
    const PipelineResult per = run_pipeline(p, c);
    c.mode = RunMode::joint;
    c.batch = 1;
    const PipelineResult joint = run_pipeline(p, c);
    CHECK(per.labeling == joint.labeling);
    CHECK(per.batches.size() == 4);
    CHECK(per.batches[2].first_frame == 2);

    c.batch = 3;
    const PipelineResult two = run_pipeline(p, c);
    REQUIRE(two.batches.size() == 2);
    CHECK(two.batches[1].frames == 1);
}

TEST_CASE("weights zero with cliques off yields the unary argmax") {
    const SynthData d = generate_synthetic(small_scene());
    RunConfig c;
    c.hoc = false;
    c.smoothness.weight = 0.0;
    c.appearance.weight = 0.0;
    const CrfProblem p = make_problem(d.volume(), d.unary, d.segments, c);
    CHECK(p.cliques.empty());
    CHECK(run_pipeline(p, c).labeling == decode_argmax(init_marginals(d.unary)));
}

TEST_CASE("infer and eval on files") {
    TempDir data("data"), out("out"), again("again");
    write_synthetic(data.path(), generate_synthetic(small_scene()));
    RunConfig c = inputs_from(data.path());
    c.out = out.path();
    c.gt = data / "gt";
    c.palette = data / "palette.txt";
    std::ostringstream log;
    CHECK(cmd_infer(c, log) == 0);
    CHECK(log.str().find("average_per_class_accuracy=") != std::string::npos);
    CHECK(fs::exists(out / "labels/frame_0002.pgm"));
    CHECK(fs::exists(out / "color/frame_0002.ppm"));
    CHECK(fs::exists(out / "accuracy.csv"));
    const std::string summary = read_bytes(out / "summary.csv");
    CHECK(summary.rfind("first_frame,frames,variables,iterations,", 0) == 0);

    c.out = again.path();
    std::ostringstream quiet;
    cmd_infer(c, quiet);
    for (std::size_t t = 0; t < 4; ++t) {
        const std::string f = "labels/" + frame_stem(t) + ".pgm";
        CHECK(read_bytes(out / f) == read_bytes(again / f));
    }

    RunConfig e;
    e.pred = out.path();
    e.gt = data / "gt";
    e.labels = 3;
    std::ostringstream eval_log;
    CHECK(cmd_eval(e, eval_log) == 0);
    const auto line = [](const std::string& s) {
        const auto k = s.find("average_per_class_accuracy=");
        return s.substr(k, s.find(' ', k) - k);
    };
    CHECK(line(eval_log.str()) == line(log.str()));

    // Colour-coded ground truth through the palette.
    TempDir color_gt("cgt");
    const Palette pal = Palette::load(data / "palette.txt");
    for (std::size_t t = 0; t < 4; ++t) {
        const GrayImage g = load_labelmap(data / ("gt/" + frame_stem(t) + ".pgm"), 3);
        save_colorized(color_gt / (frame_stem(t) + ".ppm"), g.pixels, g.width, g.height, pal);
    }
    RunConfig ce = e;
    ce.gt = color_gt.path();
    ce.labels = 0;
    ce.palette = data / "palette.txt";
    std::ostringstream color_log;
    CHECK(cmd_eval(ce, color_log) == 0);
    CHECK(line(color_log.str()) == line(log.str()));

    // A single frame pair gives the same number as a direct evaluation.
    RunConfig single = e;
    single.pred = out / "labels/frame_0001.pgm";
    single.gt = data / "gt/frame_0001.pgm";
    std::ostringstream single_log;
    cmd_eval(single, single_log);
    const GrayImage pg = load_labelmap(single.pred, 3), gg = load_labelmap(single.gt, 3);
    std::ostringstream want;
    want << "average_per_class_accuracy=" << average_per_class_accuracy(confusion(pg.pixels, gg.pixels, 3)).average;
    CHECK(line(single_log.str()) == want.str());

    fs::remove(out / "labels/frame_0003.pgm");
    CHECK_THROWS_WITH_AS(cmd_eval(e, eval_log), doctest::Contains("frame_0003"), Error);
    TempDir empty("empty");
    e.pred = empty.path();
    CHECK_THROWS_AS(cmd_eval(e, eval_log), Error);
}

TEST_CASE("input validation") {
    TempDir data("bad");
    write_synthetic(data.path(), generate_synthetic(small_scene()));
    RunConfig c = inputs_from(data.path());
    fs::remove(data / "unaries/frame_0001.unr");
    CHECK_THROWS_AS(load_inputs(c), Error);
    c = inputs_from(data.path());
    c.images = data / "nowhere";
    CHECK_THROWS_AS(load_inputs(c), Error);
    RunConfig bad;
    bad.batch = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = RunConfig{};
    bad.damping = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = RunConfig{};
    bad.alpha = -0.5;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("benchmark bookkeeping") {
    std::vector<BenchPoint> pts(3);
    for (std::size_t k = 0; k < 3; ++k) {
        pts[k].variables = 1000u << k;
        pts[k].seconds = {0.5 * static_cast<double>(1u << k), 9.0};
    }
    CHECK(fitted_exponent(pts) == doctest::Approx(1.0));

    RunConfig c;
    c.bench = {20, 20, 400, 1600, 1};
    c.iterations = 1;
    const auto run = run_bench(c);
    REQUIRE(run.size() == 3);
    CHECK(run[0].frames == 1);
    CHECK(run[2].variables == 1600);
}

TEST_CASE("command line") {
    TempDir data("cli-data"), out("cli-out"), cfg("cli-cfg");
    CHECK(run_cli("synth --out " + data.path().string() + " --frames 3 --width 24 --height 20 --labels 3") == 0);
    CHECK(fs::exists(data / "images/frame_0002.ppm"));

    {
        std::ofstream f(cfg / "run.cfg");
        f << "# defaults\nbatch = 2\niters=3\nhoc=off\nsegments = " << (data / "segments/layer0.seg").string() << ","
          << (data / "segments/layer1.seg").string() << "\n";
    }
    const std::string inputs =
        "--images " + (data / "images").string() + " --unaries " + (data / "unaries").string();
    CHECK(run_cli("infer " + inputs + " --out " + out.path().string() + " --config " + (cfg / "run.cfg").string() +
                  " --iters 4") == 0);
    const std::string summary = read_bytes(out / "summary.csv");
    // batch 2 from the file, iters 4 from the command line.
    CHECK(summary.find("\n0,2,960,4,") != std::string::npos);
    CHECK(summary.find("\n2,1,480,4,") != std::string::npos);

    {
        std::ofstream f(cfg / "typo.cfg");
        f << "bacth=2\n";
    }
    CHECK(run_cli("infer " + inputs + " --out " + out.path().string() + " --config " + (cfg / "typo.cfg").string()) ==
          1);
    CHECK(run_cli("infer " + inputs + " --out " + out.path().string() + " --mode sideways") != 0);
    CHECK(run_cli("infer " + inputs) == 1);
    CHECK(run_cli("eval --pred " + out.path().string() + " --gt " + (data / "gt").string() + " --labels 3") == 0);
    CHECK(run_cli("eval --pred " + out.path().string() + " --gt " + (data / "gt").string() +
                  " --labels 3 --absent-as-zero") == 0);
}
