#include "support.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

using namespace bgsub;
using testing_support::TempDir;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

/// Runs the CLI with `args`, capturing stdout and stderr together.
Result cli(const std::string& args) {
    const std::string cmd = std::string("'") + BGSUB_CLI_PATH + "' " + args + " 2>&1";
    Result r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
    const int rc = ::pclose(pipe);
    r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return r;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> lines_of(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

const char* kScene = " --width 48 --height 32 --frames 30 --rect-width 6 --rect-height 6 --start-y 10"
                     " --noise-sigma 2 --seed 3";

}  // namespace

TEST(Cli, SynthWritesSequence) {
    TempDir dir;
    const Result r = cli("synth --out " + q(dir / "s") + kScene);
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_TRUE(fs::exists(dir / "s" / "frame_000029.pgm"));
    EXPECT_TRUE(fs::exists(dir / "s" / "gt_000000.pgm"));
    EXPECT_NE(slurp(dir / "s" / "manifest.txt").find("width=48"), std::string::npos);
    ASSERT_EQ(cli("synth --format png --out " + q(dir / "p") + kScene).code, 0);
    EXPECT_TRUE(fs::exists(dir / "p" / "frame_000000.png"));
}

TEST(Cli, SegmentKeepsOnlyTargets) {
    TempDir dir;
    ASSERT_EQ(cli("synth --out " + q(dir / "s") + kScene).code, 0);
    const Result r = cli("segment --algo mog --input " + q(dir / "s") + " --targets 12,20,29 --warmup 10 --out " +
                         q(dir / "m"));
    ASSERT_EQ(r.code, 0) << r.out;
    std::size_t masks = 0;
    for (const auto& e : fs::directory_iterator(dir / "m")) masks += e.path().filename().string().starts_with("mask_");
    EXPECT_EQ(masks, 3u);
    const std::string manifest = slurp(dir / "m" / "run_manifest.txt");
    EXPECT_NE(manifest.find("algorithm=mog\n"), std::string::npos);
    EXPECT_NE(manifest.find("processing_starts=2,10,19\n"), std::string::npos);
    EXPECT_NE(manifest.find("nmixtures=5\n"), std::string::npos);
}

TEST(Cli, SegmentMatchesLibraryRun) {
    TempDir dir;
    ASSERT_EQ(cli("synth --out " + q(dir / "s") + kScene).code, 0);
    ASSERT_EQ(cli("segment --algo mog2 --var-threshold 9 --input " + q(dir / "s") +
                  " --targets 25 --warmup 15 --out " + q(dir / "m"))
                  .code,
              0);
    Mog2Params p;
    p.varThreshold = 9;
    Mog2 model(p, 48, 32);
    Mask last;
    for (int t = 10; t <= 25; ++t) last = model.apply(load_frame(dir / "s" / IndexPattern("frame_%06d.pgm").format(t)));
    EXPECT_TRUE(masks_equal(load_mask(dir / "m" / "mask_000025.pgm"), last));
}

TEST(Cli, InsufficientLeadIn) {
    TempDir dir;
    ASSERT_EQ(cli("synth --out " + q(dir / "s") + kScene).code, 0);
    const Result r = cli("segment --algo gmg --input " + q(dir / "s") + " --targets 5 --out " + q(dir / "m"));
    EXPECT_NE(r.code, 0);
    EXPECT_EQ(lines_of(r.out).size(), 1u) << r.out;
    EXPECT_NE(r.out.find("lead-in"), std::string::npos);

    const Result c = cli("segment --algo gmg --clamp --input " + q(dir / "s") + " --targets 5 --out " + q(dir / "m"));
    EXPECT_EQ(c.code, 0) << c.out;
    EXPECT_TRUE(fs::exists(dir / "m" / "mask_000005.pgm"));
}

TEST(Cli, UsageErrors) {
    TempDir dir;
    EXPECT_NE(cli("segment --algo knn --input " + q(dir.path()) + " --targets 1 --out " + q(dir / "m")).code, 0);
    EXPECT_NE(cli("").code, 0);
    EXPECT_NE(cli("frobnicate").code, 0);
    const Result missing = cli("evaluate --pred " + q(dir / "nope") + " --gt " + q(dir / "nope") + " --out " + q(dir / "e"));
    EXPECT_EQ(missing.code, 1);
    EXPECT_EQ(lines_of(missing.out).size(), 1u) << missing.out;
}

TEST(Cli, EvaluateIdenticalDirectories) {
    TempDir dir;
    ASSERT_EQ(cli("synth --out " + q(dir / "s") + kScene).code, 0);
    fs::create_directories(dir / "p");
    for (int t = 0; t < 30; ++t)
        fs::copy_file(dir / "s" / IndexPattern("gt_%06d.pgm").format(t), dir / "p" / IndexPattern("mask_%06d.pgm").format(t));
    const Result r = cli("evaluate --json --algorithm truth --pred " + q(dir / "p") + " --gt " + q(dir / "s") +
                         " --out " + q(dir / "e"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto rows = lines_of(slurp(dir / "e" / "metrics.csv"));
    ASSERT_EQ(rows.size(), 31u);
    EXPECT_EQ(rows[0], "video,frame,algorithm,tp,fp,fn,tn,accuracy,precision");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_NE(rows[i].find(",truth,36,0,0,1500,1.000000,1.000000"), std::string::npos) << rows[i];
    }
    const auto hist = lines_of(slurp(dir / "e" / "histogram.csv"));
    ASSERT_EQ(hist.size(), 21u);
    EXPECT_EQ(hist[0], "metric,binStart,binEnd,count,cumulative");
    EXPECT_EQ(hist[10], "accuracy,0.900000,1.000000,30,30");
    EXPECT_TRUE(fs::exists(dir / "e" / "metrics.json"));
    EXPECT_TRUE(fs::exists(dir / "e" / "histogram.json"));
}

TEST(Cli, UndefinedPrecisionIsReported) {
    TempDir dir;
    fs::create_directories(dir / "p");
    fs::create_directories(dir / "g");
    write_mask(Mask(4, 4), dir / "p" / "mask_000000.pgm");
    write_mask(Mask(4, 4, 255), dir / "g" / "gt_000000.pgm");
    ASSERT_EQ(cli("evaluate --pred " + q(dir / "p") + " --gt " + q(dir / "g") + " --out " + q(dir / "e")).code, 0);
    const auto rows = lines_of(slurp(dir / "e" / "metrics.csv"));
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_NE(rows[1].find(",0.000000,undefined"), std::string::npos) << rows[1];
}

TEST(Cli, PipelineIsDeterministic) {
    TempDir dir;
    std::string csv[2];
    for (int run = 0; run < 2; ++run) {
        const fs::path base = dir / ("run" + std::to_string(run));
        ASSERT_EQ(cli("synth --out " + q(base / "s") + kScene).code, 0);
        for (const char* algo : {"gmg", "mog", "mog2"}) {
            ASSERT_EQ(cli(std::string("segment --algo ") + algo + " --initialization-frames 10 --input " + q(base / "s") +
                          " --targets 20,29 --warmup 18 --out " + q(base / algo))
                          .code,
                      0);
            ASSERT_EQ(cli("evaluate --video v --pred " + q(base / algo) + " --gt " + q(base / "s") + " --out " +
                          q(base / (std::string("e") + algo)))
                          .code,
                      0);
            csv[run] += slurp(base / (std::string("e") + algo) / "metrics.csv");
            csv[run] += slurp(base / (std::string("e") + algo) / "histogram.csv");
        }
    }
    EXPECT_FALSE(csv[0].empty());
    EXPECT_EQ(csv[0], csv[1]);
}

TEST(Cli, BenchRunMatrix) {
    TempDir dir;
    const Result r = cli("bench --width 64 --height 48 --frames 20 --rect-width 8 --rect-height 8 --start-y 5"
                         " --warmup 3 --repetitions 1,2,3 --out " + q(dir / "t.csv"));
    ASSERT_EQ(r.code, 0) << r.out;
    const auto rows = lines_of(slurp(dir / "t.csv"));
    ASSERT_EQ(rows.size(), 10u);
    EXPECT_EQ(rows[0], "algorithm,width,height,warmupFrames,repetitions,totalSeconds,meanSecondsPerOp,fps");
    EXPECT_EQ(rows[1].rfind("gmg,64,48,3,1,", 0), 0u) << rows[1];
    EXPECT_EQ(rows[9].rfind("mog2,64,48,3,3,", 0), 0u) << rows[9];

    const Result j = cli("bench --json --algos mog --width 32 --height 24 --frames 5 --rect-width 4 --rect-height 4"
                         " --start-y 1 --warmup 2 --repetitions 2 --runs 3");
    ASSERT_EQ(j.code, 0) << j.out;
    EXPECT_EQ(nlohmann::json::parse(j.out).size(), 3u);
}

TEST(Cli, BenchFromSequence) {
    TempDir dir;
    ASSERT_EQ(cli("synth --out " + q(dir / "s") + kScene).code, 0);
    const Result r = cli("bench --input " + q(dir / "s") + " --frame 7 --algos mog2 --warmup 4 --repetitions 2");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("mog2,48,32,4,2,"), std::string::npos) << r.out;
    EXPECT_NE(cli("bench --input " + q(dir / "s") + " --frame 99 --repetitions 1 --warmup 1").code, 0);
}
