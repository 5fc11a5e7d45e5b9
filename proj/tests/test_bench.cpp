#include "support.hpp"

#include <thread>

using namespace bgsub;

namespace {

/// Costs a fixed 10 ms per apply.
class SleepingStub {
public:
    Mask apply(const Frame& f) {
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
        ++seen_;
        return Mask(f.width(), f.height());
    }
    void reset() { seen_ = 0; }
    std::size_t seen() const { return seen_; }

private:
    std::size_t seen_ = 0;
};

}  // namespace

TEST(Warmup, ZeroIsNoop) {
    Mog m(4, 4);
    std::vector<Frame> none;
    warmup(m, none, 0);
    EXPECT_EQ(m.frames_seen(), 0u);
}

TEST(Warmup, CyclesShortSources) {
    std::vector<Frame> frames(300, Frame(4, 4, 10));
    Mog2 m(4, 4);
    warmup(m, frames, 1000);
    EXPECT_EQ(m.frames_seen(), 1000u);

    Gmg g(4, 4);
    warmup(g, frames, 1000);
    EXPECT_FALSE(g.initializing());
}

TEST(Warmup, ExhaustionWithoutCycling) {
    std::vector<Frame> frames(3, Frame(2, 2));
    Mog m(2, 2);
    EXPECT_THROW(warmup(m, frames, 4, Cycling::disabled), SourceExhausted);
    EXPECT_NO_THROW(warmup(m, frames, 3, Cycling::disabled));
    std::vector<Frame> none;
    EXPECT_THROW(warmup(m, none, 1), SourceExhausted);
}

TEST(TimeApply, ReportArithmetic) {
    Mog m(8, 8);
    const TimingReport r = time_apply(m, Frame(8, 8, 3), 50, 7);
    EXPECT_EQ(r.algorithm, "mog");
    EXPECT_EQ(r.repetitions, 50u);
    EXPECT_EQ(r.warmupFrames, 7u);
    EXPECT_EQ(r.width, 8);
    EXPECT_EQ(r.meanSecondsPerOp, r.totalSeconds / 50.0);
    EXPECT_NEAR(r.fps * r.meanSecondsPerOp, 1.0, 1e-9);
    EXPECT_EQ(m.frames_seen(), 50u);
}

TEST(TimeApply, SingleRepetition) {
    Mog2 m(4, 4);
    const TimingReport r = time_apply(m, Frame(4, 4), 1);
    EXPECT_EQ(r.totalSeconds, r.meanSecondsPerOp);
    EXPECT_THROW(time_apply(m, Frame(4, 4), 0), InvalidParameter);
}

TEST(TimeApply, KnownCostOracle) {
    SleepingStub stub;
    const TimingReport r = time_apply(stub, Frame(2, 2), 30);
    EXPECT_EQ(stub.seen(), 30u);
    EXPECT_EQ(r.algorithm, "custom");
    EXPECT_GE(r.fps, 80.0);
    EXPECT_LE(r.fps, 100.0);
}

TEST(MakeTimingReport, SpecExample) {
    const TimingReport r = make_timing_report("gmg", 320, 240, 1000, 10000, 150.0);
    EXPECT_DOUBLE_EQ(r.meanSecondsPerOp, 0.015);
    EXPECT_NEAR(r.fps, 66.7, 0.05);
}

TEST(Median, OddAndEven) {
    EXPECT_EQ(median({3, 1, 2}), 2);
    EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
    EXPECT_THROW(median({}), InvalidParameter);
}

TEST(BenchRuns, FreshModelPerRun) {
    std::vector<Frame> frames(5, Frame(6, 6, 20));
    BenchOptions opt;
    opt.warmupFrames = 12;
    opt.repetitions = 4;
    opt.runs = 3;
    std::vector<const BackgroundSubtractor*> made;
    const BenchResult r = bench_runs(
        [&] {
            auto s = make_subtractor(Algorithm::mog, {}, 6, 6);
            made.push_back(s.get());
            return s;
        },
        frames, frames[0], opt);
    ASSERT_EQ(r.runs.size(), 3u);
    EXPECT_EQ(made.size(), 3u);
    for (const auto& t : r.runs) {
        EXPECT_EQ(t.repetitions, 4u);
        EXPECT_EQ(t.warmupFrames, 12u);
    }
    std::vector<double> means;
    for (const auto& t : r.runs) means.push_back(t.meanSecondsPerOp);
    EXPECT_EQ(r.medianMeanSecondsPerOp, median(means));
}
