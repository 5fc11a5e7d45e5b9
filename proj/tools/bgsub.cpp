// bgsub: synthesize sequences, segment them with GMG / MOG / MOG2, evaluate
// masks against ground truth and time the models.
//
//   bgsub synth    --out DIR [scene flags]
//   bgsub segment  --algo mog2 --input DIR --targets 250,299 --out DIR
//   bgsub evaluate --pred DIR --gt DIR --out DIR
//   bgsub bench    [--input DIR] [--algos gmg,mog,mog2] [--repetitions 100,1000,10000]

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bgsub/bgsub.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class InsufficientLeadIn : public bgsub::Error {
public:
    InsufficientLeadIn(long target, long warmup, long start)
        : Error("target frame " + std::to_string(target) + " needs " + std::to_string(warmup) +
                " lead-in frames but the sequence starts at " + std::to_string(start) + " (use --clamp to start early)") {}
};

std::string fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9e", v);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw bgsub::IoError(path, "cannot open for writing");
    out << text;
    if (!out) throw bgsub::IoError(path, "write failed");
}

std::map<std::string, std::string> read_key_values(const fs::path& path) {
    std::map<std::string, std::string> kv;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw bgsub::IoError(dir, "cannot create directory");
}

/// `pattern` as given, or the .pgm / .png variant of `stem` present in `dir`.
std::string resolve_pattern(const fs::path& dir, const std::string& pattern, const std::string& stem) {
    if (!pattern.empty()) return pattern;
    for (const char* ext : {".pgm", ".png"}) {
        const std::string candidate = stem + "_%06d" + ext;
        if (!bgsub::list_indexed(dir, candidate).empty()) return candidate;
    }
    throw bgsub::IoError(dir, "no " + stem + "_NNNNNN.pgm or .png files found");
}

// ---------------------------------------------------------------------------
// Algorithm flags
// ---------------------------------------------------------------------------

struct AlgoFlags {
    std::string algo;
    bgsub::AlgorithmParams params;
    std::optional<int> history;
    std::optional<double> backgroundRatio;
    std::string detectShadows = "true";
};

void add_algorithm_flags(CLI::App* cmd, AlgoFlags& f) {
    auto& p = f.params;
    cmd->add_option("--history", f.history, "MOG/MOG2 history (default 200)")->check(CLI::PositiveNumber);
    cmd->add_option("--nmixtures", p.mog.nmixtures, "MOG mixture count")->capture_default_str();
    cmd->add_option("--background-ratio", f.backgroundRatio, "MOG (0.7) / MOG2 (0.9) background ratio");
    cmd->add_option("--noise-sigma", p.mog.noiseSigma, "MOG noise sigma (0 = 15)")->capture_default_str();
    cmd->add_option("--var-threshold", p.mog2.varThreshold, "MOG2 squared Mahalanobis threshold")
        ->capture_default_str();
    cmd->add_option("--detect-shadows", f.detectShadows, "MOG2 shadow labelling (true/false)")
        ->check(CLI::IsMember({"true", "false", "1", "0"}))
        ->capture_default_str();
    cmd->add_option("--shadow-threshold", p.mog2.shadowThreshold, "MOG2 shadow ratio lower bound")
        ->capture_default_str();
    cmd->add_option("--complexity-prior", p.mog2.complexityPrior, "MOG2 complexity prior")->capture_default_str();
    cmd->add_option("--initialization-frames", p.gmg.initializationFrames, "GMG initialization frames")
        ->capture_default_str();
    cmd->add_option("--decision-threshold", p.gmg.decisionThreshold, "GMG decision threshold")->capture_default_str();
    cmd->add_option("--smoothing-radius", p.gmg.smoothingRadius, "GMG median radius (0 = off)")
        ->capture_default_str();
    cmd->add_option("--quantization-levels", p.gmg.quantizationLevels, "GMG intensity bins")->capture_default_str();
    cmd->add_option("--learning-rate", p.gmg.learningRate, "GMG learning rate")->capture_default_str();
    cmd->add_option("--max-features", p.gmg.maxFeatures, "GMG features per pixel")->capture_default_str();
}

void finalize_algorithm_flags(AlgoFlags& f) {
    if (f.history) f.params.mog.history = f.params.mog2.history = *f.history;
    if (f.backgroundRatio) f.params.mog.backgroundRatio = f.params.mog2.backgroundRatio = *f.backgroundRatio;
    f.params.mog2.detectShadows = f.detectShadows == "true" || f.detectShadows == "1";
    f.params.gmg.validate();
    f.params.mog.validate();
    f.params.mog2.validate();
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthOptions {
    bgsub::SynthSpec spec;
    fs::path out;
    std::string format = "pgm";
};

void add_scene_flags(CLI::App* cmd, bgsub::SynthSpec& s, const std::string& noiseFlag) {
    cmd->add_option("--width", s.width, "Frame width")->capture_default_str();
    cmd->add_option("--height", s.height, "Frame height")->capture_default_str();
    cmd->add_option("--frames", s.frames, "Frame count")->capture_default_str();
    cmd->add_option("--bg", s.bgIntensity, "Background intensity")->capture_default_str();
    cmd->add_option("--fg", s.fgIntensity, "Rectangle intensity")->capture_default_str();
    cmd->add_option("--rect-width", s.rectWidth, "Rectangle width")->capture_default_str();
    cmd->add_option("--rect-height", s.rectHeight, "Rectangle height")->capture_default_str();
    cmd->add_option("--velocity", s.velocity, "Horizontal pixels per frame")->capture_default_str();
    cmd->add_option("--start-x", s.startX, "Rectangle x at t = 0")->capture_default_str();
    cmd->add_option("--start-y", s.startY, "Rectangle y")->capture_default_str();
    cmd->add_option(noiseFlag, s.noiseSigma, "Gaussian noise sigma on the background")->capture_default_str();
    cmd->add_option("--seed", s.seed, "Noise seed")->capture_default_str();
}

int run_synth(const SynthOptions& o) {
    const auto m = bgsub::synth_sequence(o.spec, o.out, "." + o.format);
    std::cout << "wrote " << m.frames.size() << " frames and " << m.masks.size() << " masks to " << o.out.string()
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// segment
// ---------------------------------------------------------------------------

struct SegmentOptions {
    AlgoFlags algo;
    fs::path input;
    std::string pattern;
    std::vector<long> targets;
    long warmup = static_cast<long>(bgsub::kDefaultWarmupFrames);
    bool clamp = false;
    fs::path out;
    std::string format = "pgm";
};

int run_segment(SegmentOptions& o) {
    finalize_algorithm_flags(o.algo);
    const bgsub::Algorithm algo = bgsub::parse_algorithm(o.algo.algo);
    const std::string pattern = resolve_pattern(o.input, o.pattern, "frame");
    const bgsub::SequenceRef seq = bgsub::discover_sequence(o.input, pattern);
    if (o.warmup < 0) throw bgsub::InvalidParameter("warmup", "must be >= 0");

    std::vector<long> targets = o.targets;
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    for (long t : targets) {
        if (t < seq.startIndex || t > seq.endIndex)
            throw bgsub::InvalidParameter("targets", "frame " + std::to_string(t) + " is outside the sequence [" +
                                                         std::to_string(seq.startIndex) + ", " +
                                                         std::to_string(seq.endIndex) + "]");
        if (t - o.warmup < seq.startIndex && !o.clamp) throw InsufficientLeadIn(t, o.warmup, seq.startIndex);
    }

    ensure_directory(o.out);
    const bgsub::IndexPattern maskPattern("mask_%06d." + o.format);
    const bgsub::Frame first = bgsub::load_frame(seq.path(seq.startIndex));
    std::ostringstream starts;
    for (long t : targets) {
        const long begin = std::max(seq.startIndex, t - o.warmup);
        if (begin > t - o.warmup)
            std::cerr << "bgsub: warning: target " << t << " clamped to start at frame " << begin << "\n";
        auto sub = bgsub::make_subtractor(algo, o.algo.params, first.width(), first.height());
        bgsub::Mask mask;
        for (long i = begin; i <= t; ++i) mask = sub->apply(bgsub::load_frame(seq.path(i)));
        bgsub::write_mask(mask, o.out / maskPattern.format(t));
        starts << (starts.tellp() > 0 ? "," : "") << begin;
    }

    std::ostringstream m;
    m << "algorithm=" << bgsub::to_string(algo) << "\n";
    for (const auto& [k, v] : bgsub::describe_params(algo, o.algo.params)) m << k << "=" << v << "\n";
    m << "input=" << o.input.string() << "\n"
      << "pattern=" << pattern << "\n"
      << "start_index=" << seq.startIndex << "\n"
      << "end_index=" << seq.endIndex << "\n"
      << "warmup_frames=" << o.warmup << "\n"
      << "clamp=" << (o.clamp ? "true" : "false") << "\n";
    m << "targets=";
    for (std::size_t i = 0; i < targets.size(); ++i) m << (i ? "," : "") << targets[i];
    m << "\nprocessing_starts=" << starts.str() << "\n"
      << "mask_pattern=mask_%06d." << o.format << "\n"
      << "frame_width=" << first.width() << "\n"
      << "frame_height=" << first.height() << "\n";
    write_text(o.out / "run_manifest.txt", m.str());
    std::cout << "wrote " << targets.size() << " masks to " << o.out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateOptions {
    fs::path pred;
    fs::path gt;
    std::string predPattern;
    std::string gtPattern;
    int bins = bgsub::kDefaultHistogramBins;
    fs::path out;
    std::string video;
    std::string algorithm;
    bool json = false;
};

void append_histogram(std::string& csv, json& js, const char* metric, const bgsub::HistogramReport& h) {
    json rows = json::array();
    for (std::size_t b = 0; b < h.bins(); ++b) {
        csv += std::string(metric) + "," + fixed(h.binEdges[b]) + "," + fixed(h.binEdges[b + 1]) + "," +
               std::to_string(h.counts[b]) + "," + std::to_string(h.cumulative[b]) + "\n";
        rows.push_back({{"binStart", h.binEdges[b]},
                        {"binEnd", h.binEdges[b + 1]},
                        {"count", h.counts[b]},
                        {"cumulative", h.cumulative[b]}});
    }
    js[metric] = rows;
}

int run_evaluate(const EvaluateOptions& o) {
    const std::string predPattern = resolve_pattern(o.pred, o.predPattern, "mask");
    const std::string gtPattern = resolve_pattern(o.gt, o.gtPattern, "gt");
    const auto preds = bgsub::list_indexed(o.pred, predPattern);
    const auto gts = bgsub::list_indexed(o.gt, gtPattern);

    std::string algorithm = o.algorithm;
    if (algorithm.empty()) {
        const auto manifest = read_key_values(o.pred / "run_manifest.txt");
        const auto it = manifest.find("algorithm");
        algorithm = it != manifest.end() ? it->second : o.pred.filename().string();
    }
    const std::string video = o.video.empty() ? fs::absolute(o.gt).lexically_normal().filename().string() : o.video;

    std::string csv = "video,frame,algorithm,tp,fp,fn,tn,accuracy,precision\n";
    json rows = json::array();
    std::vector<double> accuracies;
    std::vector<double> precisions;
    for (const auto& [index, predPath] : preds) {
        const auto gt = gts.find(index);
        if (gt == gts.end()) throw bgsub::FileNotFound(o.gt / bgsub::IndexPattern(gtPattern).format(index));
        const bgsub::Mask p = bgsub::load_mask(predPath, bgsub::MaskKind::prediction);
        const bgsub::Mask g = bgsub::load_mask(gt->second, bgsub::MaskKind::groundTruth);
        const bgsub::ConfusionMatrix cm = bgsub::confusion(p, g);
        const double acc = bgsub::accuracy(cm);
        const std::optional<double> prec = bgsub::precision(cm);
        accuracies.push_back(acc);
        if (prec) precisions.push_back(*prec);
        csv += video + "," + std::to_string(index) + "," + algorithm + "," + std::to_string(cm.tp) + "," +
               std::to_string(cm.fp) + "," + std::to_string(cm.fn) + "," + std::to_string(cm.tn) + "," + fixed(acc) +
               "," + (prec ? fixed(*prec) : std::string("undefined")) + "\n";
        rows.push_back({{"video", video},
                        {"frame", index},
                        {"algorithm", algorithm},
                        {"tp", cm.tp},
                        {"fp", cm.fp},
                        {"fn", cm.fn},
                        {"tn", cm.tn},
                        {"accuracy", acc},
                        {"precision", prec ? json(*prec) : json("undefined")}});
    }
    if (preds.empty()) throw bgsub::IoError(o.pred, "no prediction masks match '" + predPattern + "'");

    std::string hist = "metric,binStart,binEnd,count,cumulative\n";
    json histJson = json::object();
    append_histogram(hist, histJson, "accuracy", bgsub::histogram(accuracies, o.bins));
    append_histogram(hist, histJson, "precision", bgsub::histogram(precisions, o.bins));

    ensure_directory(o.out);
    write_text(o.out / "metrics.csv", csv);
    write_text(o.out / "histogram.csv", hist);
    if (o.json) {
        write_text(o.out / "metrics.json", rows.dump(2) + "\n");
        write_text(o.out / "histogram.json", histJson.dump(2) + "\n");
    }
    std::cout << "evaluated " << preds.size() << " masks; reports in " << o.out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

struct BenchCliOptions {
    AlgoFlags algo;
    std::vector<std::string> algos = {"gmg", "mog", "mog2"};
    fs::path input;
    std::string pattern;
    std::optional<long> frame;
    std::size_t warmup = bgsub::kDefaultWarmupFrames;
    std::vector<std::size_t> repetitions = {100, 1000, 10000};
    std::size_t runs = 1;
    unsigned threads = 1;
    bgsub::SynthSpec scene;
    fs::path out;
    bool json = false;
};

/// The default scene: the 320x240 moving rectangle with mild sensor noise.
bgsub::SynthSpec default_bench_scene() {
    bgsub::SynthSpec s;
    s.noiseSigma = 3.0;
    s.seed = 7;
    return s;
}

int run_bench(BenchCliOptions& o) {
    finalize_algorithm_flags(o.algo);
    std::vector<bgsub::Algorithm> algos;
    for (const auto& name : o.algos) algos.push_back(bgsub::parse_algorithm(name));
    if (o.repetitions.empty()) throw bgsub::InvalidParameter("repetitions", "at least one count is required");

    std::vector<bgsub::Frame> frames;
    bgsub::Frame timed;
    if (!o.input.empty()) {
        const std::string pattern = resolve_pattern(o.input, o.pattern, "frame");
        const bgsub::SequenceRef seq = bgsub::discover_sequence(o.input, pattern);
        for (long i = seq.startIndex; i <= seq.endIndex; ++i) frames.push_back(bgsub::load_frame(seq.path(i)));
        const long idx = o.frame.value_or(seq.endIndex);
        if (idx < seq.startIndex || idx > seq.endIndex)
            throw bgsub::InvalidParameter("frame", "index outside the sequence");
        timed = frames[static_cast<std::size_t>(idx - seq.startIndex)];
    } else {
        for (auto& [f, m] : bgsub::synth_all(o.scene)) frames.push_back(std::move(f));
        const long idx = o.frame.value_or(o.scene.frames - 1);
        if (idx < 0 || idx >= o.scene.frames) throw bgsub::InvalidParameter("frame", "index outside the scene");
        timed = frames[static_cast<std::size_t>(idx)];
    }

    std::string csv = "algorithm,width,height,warmupFrames,repetitions,totalSeconds,meanSecondsPerOp,fps\n";
    json rows = json::array();
    for (std::size_t reps : o.repetitions) {
        for (bgsub::Algorithm a : algos) {
            bgsub::BenchOptions bo;
            bo.warmupFrames = o.warmup;
            bo.repetitions = reps;
            bo.runs = o.runs;
            bo.workers = o.threads;
            const auto result = bgsub::bench_runs(
                [&] { return bgsub::make_subtractor(a, o.algo.params, timed.width(), timed.height()); }, frames,
                timed, bo);
            for (const auto& r : result.runs) {
                csv += r.algorithm + "," + std::to_string(r.width) + "," + std::to_string(r.height) + "," +
                       std::to_string(r.warmupFrames) + "," + std::to_string(r.repetitions) + "," +
                       sci(r.totalSeconds) + "," + sci(r.meanSecondsPerOp) + "," + sci(r.fps) + "\n";
                rows.push_back({{"algorithm", r.algorithm},
                                {"width", r.width},
                                {"height", r.height},
                                {"warmupFrames", r.warmupFrames},
                                {"repetitions", r.repetitions},
                                {"totalSeconds", r.totalSeconds},
                                {"meanSecondsPerOp", r.meanSecondsPerOp},
                                {"fps", r.fps}});
            }
        }
    }

    const std::string text = o.json ? rows.dump(2) + "\n" : csv;
    if (o.out.empty())
        std::cout << text;
    else
        write_text(o.out, text);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Background subtraction (GMG, MOG, MOG2): synthesize, segment, evaluate, benchmark"};
    app.require_subcommand(1);

    SynthOptions synth;
    auto* synthCmd = app.add_subcommand("synth", "Write a synthetic moving-rectangle sequence with ground truth");
    add_scene_flags(synthCmd, synth.spec, "--noise-sigma");
    synthCmd->add_option("--out", synth.out, "Output directory")->required();
    synthCmd->add_option("--format", synth.format, "Image format")->check(CLI::IsMember({"pgm", "png"}))
        ->capture_default_str();

    SegmentOptions segment;
    auto* segmentCmd = app.add_subcommand("segment", "Run one algorithm and keep the masks of the target frames");
    segmentCmd->add_option("--algo", segment.algo.algo, "gmg | mog | mog2")
        ->required()
        ->check(CLI::IsMember({"gmg", "mog", "mog2"}));
    segmentCmd->add_option("--input", segment.input, "Frame directory")->required();
    segmentCmd->add_option("--pattern", segment.pattern, "Frame file pattern (default frame_%06d.pgm|png)");
    segmentCmd->add_option("--targets", segment.targets, "Frame indices to keep")->required()->delimiter(',');
    segmentCmd->add_option("--warmup", segment.warmup, "Frames processed before each target")->capture_default_str();
    segmentCmd->add_flag("--clamp", segment.clamp, "Start at the first frame when the lead-in is too short");
    segmentCmd->add_option("--out", segment.out, "Mask output directory")->required();
    segmentCmd->add_option("--format", segment.format, "Mask format")->check(CLI::IsMember({"pgm", "png"}))
        ->capture_default_str();
    add_algorithm_flags(segmentCmd, segment.algo);

    EvaluateOptions evaluate;
    auto* evaluateCmd = app.add_subcommand("evaluate", "Confusion-matrix metrics and histograms against ground truth");
    evaluateCmd->add_option("--pred", evaluate.pred, "Directory of mask_NNNNNN files")->required();
    evaluateCmd->add_option("--gt", evaluate.gt, "Directory of gt_NNNNNN files")->required();
    evaluateCmd->add_option("--pred-pattern", evaluate.predPattern, "Prediction file pattern");
    evaluateCmd->add_option("--gt-pattern", evaluate.gtPattern, "Ground-truth file pattern");
    evaluateCmd->add_option("--bins", evaluate.bins, "Histogram bins")->check(CLI::PositiveNumber)
        ->capture_default_str();
    evaluateCmd->add_option("--out", evaluate.out, "Report directory")->required();
    evaluateCmd->add_option("--video", evaluate.video, "Video name column (default: ground-truth directory name)");
    evaluateCmd->add_option("--algorithm", evaluate.algorithm, "Algorithm column (default: from run_manifest.txt)");
    evaluateCmd->add_flag("--json", evaluate.json, "Also write JSON mirrors");

    BenchCliOptions bench;
    bench.scene = default_bench_scene();
    auto* benchCmd = app.add_subcommand("bench", "Warm up, then time repeated apply calls on one frame");
    benchCmd->add_option("--algos", bench.algos, "Algorithms")->delimiter(',')
        ->check(CLI::IsMember({"gmg", "mog", "mog2"}))
        ->capture_default_str();
    benchCmd->add_option("--input", bench.input, "Frame directory (default: synthetic scene)");
    benchCmd->add_option("--pattern", bench.pattern, "Frame file pattern");
    benchCmd->add_option("--frame", bench.frame, "Index of the timed frame (default: last)");
    benchCmd->add_option("--warmup", bench.warmup, "Warm-up frames (cycled)")->capture_default_str();
    benchCmd->add_option("--repetitions", bench.repetitions, "Repetition counts")->delimiter(',')
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    benchCmd->add_option("--runs", bench.runs, "Independent runs per cell")->check(CLI::PositiveNumber)
        ->capture_default_str();
    benchCmd->add_option("--threads", bench.threads, "Pixel-parallel workers while timing")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    benchCmd->add_option("--out", bench.out, "Report file (default: stdout)");
    benchCmd->add_flag("--json", bench.json, "JSON instead of CSV");
    add_scene_flags(benchCmd, bench.scene, "--scene-noise-sigma");
    add_algorithm_flags(benchCmd, bench.algo);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synthCmd) return run_synth(synth);
        if (*segmentCmd) return run_segment(segment);
        if (*evaluateCmd) return run_evaluate(evaluate);
        if (*benchCmd) return run_bench(bench);
    } catch (const std::exception& e) {
        std::cerr << "bgsub: error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
