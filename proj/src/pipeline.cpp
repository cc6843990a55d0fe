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

#include "vidcrf/pipeline.hpp"

#include "vidcrf/error.hpp"
#include "vidcrf/io.hpp"
#include "vidcrf/parallel.hpp"
#include "vidcrf/segments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

namespace vidcrf {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void require_path(const fs::path& p, const char* flag) {
    if (p.empty())
        throw Error(std::string(flag) + " is required");
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw Error(path.string() + ": cannot open for writing");
    return out;
}

struct FrameLabels {
    std::string stem;
    GrayImage labels;
};

// Ground truth as P5 label maps, or P6 colour maps decoded through the palette.
std::vector<FrameLabels> load_ground_truth(const fs::path& path, std::size_t labels, const Palette* palette) {
    std::vector<FrameLabels> frames;
    for (const auto& f : list_inputs(path, ".pgm"))
        frames.push_back({f.stem().string(), load_labelmap(f, labels)});
    if (frames.empty() && palette) {
        for (const auto& f : list_inputs(path, ".ppm")) {
            const RgbImage img = load_image(f);
            Labeling decoded = decode_colorized(img, *palette, f.string());
            for (std::size_t p = 0; p < decoded.size(); ++p)
                if (decoded[p] >= labels && decoded[p] != kIgnoreLabel)
                    throw Error(f.string() + ": label " + std::to_string(decoded[p]) + " at pixel " +
                                std::to_string(p) + " outside [0, " + std::to_string(labels) + ")");
            frames.push_back({f.stem().string(), GrayImage{img.width, img.height, std::move(decoded)}});
        }
    }
    if (frames.empty())
        throw Error(path.string() + ": no ground-truth frames found");
    return frames;
}

// Every ground-truth frame needs a prediction with the same stem; extra
// predictions are ignored.
ConfusionMatrix evaluate_frames(const std::map<std::string, GrayImage>& pred, const std::vector<FrameLabels>& gt,
                                std::size_t labels, const fs::path& gt_path) {
    ConfusionMatrix cm(labels);
    for (const auto& g : gt) {
        const auto it = pred.find(g.stem);
        if (it == pred.end())
            throw Error(gt_path.string() + ": no prediction for ground-truth frame '" + g.stem + "'");
        if (it->second.width != g.labels.width || it->second.height != g.labels.height)
            throw Error("frame '" + g.stem + "': prediction is " + std::to_string(it->second.width) + "x" +
                        std::to_string(it->second.height) + ", ground truth " + std::to_string(g.labels.width) +
                        "x" + std::to_string(g.labels.height));
        cm += confusion(it->second.pixels, g.labels.pixels, labels);
    }
    return cm;
}

std::vector<std::string> class_names(const Palette* palette, std::size_t labels) {
    std::vector<std::string> names(labels);
    if (palette)
        for (std::size_t l = 0; l < labels; ++l)
            if (const auto* e = palette->find(static_cast<Label>(l)))
                names[l] = e->name;
    return names;
}

void report_accuracy(const ConfusionMatrix& cm, const RunConfig& config, const Palette* palette,
                     std::ostream& log) {
    const auto report = average_per_class_accuracy(cm, config.absent_as_zero);
    const auto names = class_names(palette, cm.labels());
    if (!config.out.empty()) {
        fs::create_directories(config.out);
        auto csv = open_output(config.out / "accuracy.csv");
        write_accuracy_csv(csv, cm, report, names);
    }
    write_accuracy_csv(log, cm, report, names);
    log << std::setprecision(6) << "average_per_class_accuracy=" << report.average
        << " global_accuracy=" << report.global << " classes=" << report.classes_counted << '\n';
}

std::optional<Palette> load_palette(const RunConfig& config, std::size_t labels) {
    if (config.palette.empty())
        return std::nullopt;
    Palette p = Palette::load(config.palette);
    p.validate(labels);
    return p;
}

} // namespace

void RunConfig::validate() const {
    if (batch == 0)
        throw Error("--batch must be >= 1");
    if (iterations < 1)
        throw Error("--iters must be >= 1");
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
        throw Error("--alpha must be a finite non-negative number");
    if (!(damping > 0.0 && damping <= 1.0))
        throw Error("--damping must lie in (0, 1]");
    if (labels > kMaxLabels)
        throw Error("--labels must be <= " + std::to_string(kMaxLabels));
    smoothness.validate();
    appearance.validate();
    if (bench.frame_width == 0 || bench.frame_height == 0 || bench.repeat < 1)
        throw Error("bench frame size and repeat count must be positive");
    if (bench.min_variables == 0 || bench.max_variables < bench.min_variables)
        throw Error("bench variable range is empty");
}

std::vector<fs::path> list_inputs(const fs::path& path, const std::string& extension) {
    if (fs::is_regular_file(path))
        return {path};
    if (!fs::is_directory(path))
        throw Error(path.string() + ": no such file or directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(path))
        if (e.is_regular_file() && e.path().extension() == extension)
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    return files;
}

InputSet load_inputs(const RunConfig& config) {
    require_path(config.images, "--images");
    require_path(config.unaries, "--unaries");
    const auto image_files = list_inputs(config.images, ".ppm");
    const auto unary_files = list_inputs(config.unaries, ".unr");
    if (image_files.empty())
        throw Error(config.images.string() + ": no .ppm frames found");
    if (image_files.size() != unary_files.size())
        throw Error(config.images.string() + " has " + std::to_string(image_files.size()) + " frames but " +
                    config.unaries.string() + " has " + std::to_string(unary_files.size()));

    InputSet in;
    std::vector<RgbImage> images;
    std::vector<UnaryField> unaries;
    for (std::size_t t = 0; t < image_files.size(); ++t) {
        images.push_back(load_image(image_files[t]));
        unaries.push_back(load_unary(unary_files[t], config.unary_is_prob));
        const auto& img = images.back();
        const auto& un = unaries.back();
        if (img.width != images.front().width || img.height != images.front().height)
            throw Error(image_files[t].string() + ": frame size " + std::to_string(img.width) + "x" +
                        std::to_string(img.height) + " differs from the first frame");
        if (un.width() != img.width || un.height() != img.height)
            throw Error(unary_files[t].string() + ": unary size " + std::to_string(un.width()) + "x" +
                        std::to_string(un.height()) + " does not match image " + image_files[t].string());
        if (un.labels() != unaries.front().labels())
            throw Error(unary_files[t].string() + ": " + std::to_string(un.labels()) +
                        " labels differs from the first frame");
        in.stems.push_back(image_files[t].stem().string());
    }
    if (config.labels != 0 && config.labels != unaries.front().labels())
        throw Error("--labels " + std::to_string(config.labels) + " does not match the " +
                    std::to_string(unaries.front().labels()) + " labels in " + config.unaries.string());
    in.volume = VideoVolume::from_frames(images);
    images.clear();
    in.unary = UnaryField::stack(unaries);
    unaries.clear();

    for (const auto& seg : config.segments) {
        for (const auto& f : list_inputs(seg, ".seg")) {
            SegmentMap m = load_segments(f);
            if (m.width != in.volume.width() || m.height != in.volume.height() || m.frames != in.volume.frames())
                throw Error(f.string() + ": segment map " + std::to_string(m.frames) + "x" + std::to_string(m.width) +
                            "x" + std::to_string(m.height) + " does not match the " +
                            std::to_string(in.volume.frames()) + "x" + std::to_string(in.volume.width()) + "x" +
                            std::to_string(in.volume.height()) + " video");
            in.segments.push_back(std::move(m));
        }
    }
    return in;
}

CrfProblem make_problem(VideoVolume volume, UnaryField unary, const std::vector<SegmentMap>& segments,
                        const RunConfig& config) {
    CrfProblem p;
    p.volume = std::move(volume);
    p.unary = std::move(unary);
    p.kernels = {config.smoothness, config.appearance};
    p.kernels[0].kind = KernelKind::smoothness;
    p.kernels[1].kind = KernelKind::appearance;
    p.compatibility = Compatibility::potts(p.unary.labels());
    p.iterations = config.iterations;
    p.batch = config.batch;
    const PnPottsParams params{{}, config.alpha};
    p.cliques = CliqueSet(params);
    if (config.hoc)
        for (const auto& m : segments)
            p.cliques.append(cliques_from_map(m, params));
    p.validate();
    return p;
}

PipelineResult run_pipeline(const CrfProblem& problem, const RunConfig& config, bool compute_energy) {
    const auto wall = Clock::now();
    SolverOptions options;
    options.damping = config.damping;
    options.compute_energy = compute_energy;
    PipelineResult out;
    out.labeling.reserve(problem.variable_count());
    const std::size_t frames = problem.volume.frames();
    const std::size_t window = config.window();
    for (std::size_t first = 0; first < frames; first += window) {
        const std::size_t count = std::min(window, frames - first);
        InferenceResult r = count == frames ? run_inference(problem, options)
                                            : run_inference(problem.slice_frames(first, count), options);
        out.labeling.insert(out.labeling.end(), r.labeling.begin(), r.labeling.end());
        out.batches.push_back({first, count, count * problem.volume.pixels_per_frame(), r.report});
    }
    out.wall_seconds = seconds_since(wall);
    return out;
}

void write_batch_csv(std::ostream& out, const std::vector<BatchSummary>& batches) {
    out << "first_frame,frames,variables,iterations,lattice_build_s,filtering_s,hoc_s,normalization_s,wall_s,"
           "energy\n";
    out << std::setprecision(9);
    for (const auto& b : batches) {
        const auto& t = b.report.times;
        out << b.first_frame << ',' << b.frames << ',' << b.variables << ',' << b.report.iterations << ','
            << t.lattice_build << ',' << t.filtering << ',' << t.hoc << ',' << t.normalization << ','
            << b.report.wall_seconds << ',' << b.report.energy << '\n';
    }
}

int cmd_infer(const RunConfig& config, std::ostream& log) {
    config.validate();
    require_path(config.out, "--out");
    ScopedThreads threads(config.threads);
    InputSet in = load_inputs(config);
    const auto stems = in.stems;
    const std::size_t w = in.volume.width(), h = in.volume.height(), n = in.volume.pixels_per_frame();
    const CrfProblem problem = make_problem(std::move(in.volume), std::move(in.unary), in.segments, config);
    in.segments.clear();
    const auto palette = load_palette(config, problem.labels());

    const PipelineResult result = run_pipeline(problem, config);

    fs::create_directories(config.out / "labels");
    if (palette)
        fs::create_directories(config.out / "color");
    std::map<std::string, GrayImage> predictions;
    for (std::size_t t = 0; t < stems.size(); ++t) {
        const std::span<const Label> frame(result.labeling.data() + t * n, n);
        save_labelmap(config.out / "labels" / (stems[t] + ".pgm"), frame, w, h);
        if (palette)
            save_colorized(config.out / "color" / (stems[t] + ".ppm"), frame, w, h, *palette);
        if (!config.gt.empty())
            predictions.emplace(stems[t], GrayImage{w, h, {frame.begin(), frame.end()}});
    }
    {
        auto csv = open_output(config.out / "summary.csv");
        write_batch_csv(csv, result.batches);
    }

    PhaseTimes times;
    double energy = 0.0;
    for (const auto& b : result.batches) {
        times += b.report.times;
        energy += b.report.energy;
    }
    log << std::setprecision(6) << "frames=" << stems.size() << " variables=" << problem.variable_count()
        << " labels=" << problem.labels() << " batches=" << result.batches.size()
        << " cliques=" << problem.cliques.size() << "\n"
        << "wall_s=" << result.wall_seconds << " lattice_build_s=" << times.lattice_build
        << " filtering_s=" << times.filtering << " hoc_s=" << times.hoc << " normalization_s=" << times.normalization
        << "\nenergy=" << std::setprecision(12) << energy << "\n";

    if (!config.gt.empty()) {
        const auto gt = load_ground_truth(config.gt, problem.labels(), palette ? &*palette : nullptr);
        report_accuracy(evaluate_frames(predictions, gt, problem.labels(), config.gt), config,
                        palette ? &*palette : nullptr, log);
    }
    return 0;
}

int cmd_eval(const RunConfig& config, std::ostream& log) {
    require_path(config.pred, "--pred");
    require_path(config.gt, "--gt");
    std::optional<Palette> palette;
    std::size_t labels = config.labels;
    if (!config.palette.empty()) {
        palette = Palette::load(config.palette);
        if (labels == 0)
            for (const auto& e : palette->entries())
                if (e.id != kIgnoreLabel)
                    labels = std::max<std::size_t>(labels, e.id + 1u);
        palette->validate(labels);
    }
    if (labels == 0)
        throw Error("--labels is required unless --palette is given");

    fs::path pred_dir = config.pred;
    if (fs::is_directory(pred_dir / "labels"))
        pred_dir /= "labels";
    std::map<std::string, GrayImage> predictions;
    for (const auto& f : list_inputs(pred_dir, ".pgm"))
        predictions.emplace(f.stem().string(), load_labelmap(f, labels));
    if (predictions.empty())
        throw Error(pred_dir.string() + ": no predicted label maps found");
    const auto gt = load_ground_truth(config.gt, labels, palette ? &*palette : nullptr);
    report_accuracy(evaluate_frames(predictions, gt, labels, config.gt), config, palette ? &*palette : nullptr, log);
    return 0;
}

int cmd_synth(const RunConfig& config, std::ostream& log) {
    require_path(config.out, "--out");
    SynthParams p = config.synth;
    p.seed = config.seed;
    if (config.labels != 0)
        p.labels = config.labels;
    ScopedThreads threads(config.threads);
    const SynthData data = generate_synthetic(p);
    write_synthetic(config.out, data);

    Labeling gt;
    for (const auto& g : data.ground_truth)
        gt.insert(gt.end(), g.begin(), g.end());
    const auto unary = decode_argmax(init_marginals(data.unary));
    const auto acc = average_per_class_accuracy(confusion(unary, gt, p.labels));
    log << "wrote " << p.frames << " frames of " << p.width << "x" << p.height << " with " << p.labels
        << " labels to " << config.out.string() << "\nunary_argmax_accuracy=" << std::setprecision(6) << acc.average
        << "\n";
    return 0;
}

double fitted_exponent(const std::vector<BenchPoint>& points) {
    if (points.size() < 2)
        return std::numeric_limits<double>::quiet_NaN();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& pt : points) {
        const double x = std::log(static_cast<double>(pt.variables));
        const double y = std::log(*std::min_element(pt.seconds.begin(), pt.seconds.end()));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double m = static_cast<double>(points.size());
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

std::vector<BenchPoint> run_bench(const RunConfig& config, std::ostream* progress) {
    config.validate();
    ScopedThreads threads(config.threads);
    const auto& b = config.bench;
    const std::size_t n = b.frame_width * b.frame_height;
    std::vector<BenchPoint> points;
    for (std::size_t frames = std::max<std::size_t>(1, (b.min_variables + n - 1) / n); frames * n <= b.max_variables;
         frames *= 2) {
        SynthParams sp;
        sp.seed = config.seed;
        sp.frames = frames;
        sp.width = b.frame_width;
        sp.height = b.frame_height;
        sp.labels = config.labels != 0 ? config.labels : 2;
        sp.noise = kCalibratedNoise;
        sp.kmeans_k.clear();
        CrfProblem problem;
        {
            SynthData data = generate_synthetic(sp);
            problem = make_problem(data.volume(), std::move(data.unary), data.segments, config);
        }
        RunConfig joint = config;
        joint.mode = RunMode::joint;
        joint.batch = frames;
        BenchPoint pt;
        pt.variables = frames * n;
        pt.frames = frames;
        double best = std::numeric_limits<double>::infinity();
        for (int r = 0; r < b.repeat; ++r) {
            const auto result = run_pipeline(problem, joint, false);
            pt.seconds.push_back(result.wall_seconds);
            if (result.wall_seconds < best) {
                best = result.wall_seconds;
                pt.times = result.batches.front().report.times;
            }
        }
        if (progress)
            *progress << "n=" << pt.variables << " seconds=" << best << std::endl;
        points.push_back(std::move(pt));
    }
    return points;
}

int cmd_bench(const RunConfig& config, std::ostream& log) {
    const auto points = run_bench(config, nullptr);
    std::ostringstream csv;
    csv << std::setprecision(6);
    csv << "n,frames,seconds,seconds_max,lattice_build_s,filtering_s,hoc_s,normalization_s,ratio\n";
    for (std::size_t k = 0; k < points.size(); ++k) {
        const auto& pt = points[k];
        const double lo = *std::min_element(pt.seconds.begin(), pt.seconds.end());
        const double hi = *std::max_element(pt.seconds.begin(), pt.seconds.end());
        csv << pt.variables << ',' << pt.frames << ',' << lo << ',' << hi << ',' << pt.times.lattice_build << ','
            << pt.times.filtering << ',' << pt.times.hoc << ',' << pt.times.normalization << ',';
        if (k > 0)
            csv << lo / *std::min_element(points[k - 1].seconds.begin(), points[k - 1].seconds.end());
        csv << '\n';
    }
    csv << "# exponent=" << fitted_exponent(points) << '\n';
    if (!config.out.empty()) {
        fs::create_directories(config.out);
        auto f = open_output(config.out / "bench.csv");
        f << csv.str();
    }
    log << csv.str();
    return 0;
}

} // namespace vidcrf
