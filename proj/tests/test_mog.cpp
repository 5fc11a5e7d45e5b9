#include "support.hpp"

using namespace bgsub;
using testing_support::all_equal;

TEST(MogParams, Validation) {
    MogParams p;
    p.nmixtures = 0;
    try {
        Mog m(p, 4, 4);
        FAIL() << "expected an error";
    } catch (const InvalidParameter& e) {
        EXPECT_EQ(e.field(), "nmixtures");
    }
    p = {};
    p.backgroundRatio = 1.2;
    EXPECT_THROW(Mog(p, 4, 4), InvalidParameter);
    p = {};
    p.history = 0;
    EXPECT_THROW(Mog(p, 4, 4), InvalidParameter);
    p = {};
    p.noiseSigma = -1;
    EXPECT_THROW(Mog(p, 4, 4), InvalidParameter);
    p = {};
    p.nmixtures = 9;
    EXPECT_THROW(Mog(p, 4, 4), InvalidParameter);
}

TEST(Mog, FreshModelIsEmpty) {
    Mog m(4, 4);
    EXPECT_EQ(m.frames_seen(), 0u);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) EXPECT_TRUE(m.components(x, y).empty());
}

TEST(Mog, ConstantFrameTrace) {
    Mog m(6, 5);
    const Frame f(6, 5, 100);
    EXPECT_TRUE(all_equal(m.apply(f), label::foreground));
    EXPECT_TRUE(all_equal(m.apply(f), label::background));
    const auto c = m.components(2, 3);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_DOUBLE_EQ(c[0].weight, 1.0);
    EXPECT_DOUBLE_EQ(c[0].mean, 100.0);
}

TEST(Mog, StepAfterConstantSceneIsForeground) {
    Mog m(5, 5);
    for (int i = 0; i < 200; ++i) m.apply(Frame(5, 5, 100));
    EXPECT_TRUE(all_equal(m.apply(Frame(5, 5, 250)), label::foreground));
}

TEST(Mog, NewComponentUsesNoiseSigma) {
    MogParams p;
    p.noiseSigma = 7;
    Mog m(p, 1, 1);
    m.apply(Frame(1, 1, 10));
    EXPECT_DOUBLE_EQ(m.components(0, 0)[0].variance, 49.0);
    Mog d(1, 1);
    d.apply(Frame(1, 1, 10));
    EXPECT_DOUBLE_EQ(d.components(0, 0)[0].variance, 225.0);
}

TEST(MogBackgroundCount, SpecExamples) {
    const double a[] = {0.5, 0.3, 0.2};
    EXPECT_EQ(mog_background_count(a, 0.7), 2u);
    const double b[] = {1.0};
    EXPECT_EQ(mog_background_count(b, 0.7), 1u);
    const double c[] = {0.4, 0.3, 0.3};
    EXPECT_EQ(mog_background_count(c, 0.9), 3u);
    const double d[] = {0.7, 0.3};
    EXPECT_EQ(mog_background_count(d, 0.7), 2u);  // strictly exceeds
}

TEST(Mog, InvariantsHoldOnRandomInput) {
    std::mt19937 rng(21);
    Mog m(20, 15);
    for (int i = 0; i < 300; ++i) {
        // Mostly a stable scene with occasional random disruptions.
        Frame f = i % 7 == 0 ? testing_support::random_frame(rng, 20, 15) : Frame(20, 15, static_cast<std::uint8_t>(90 + i % 3));
        m.apply(f);
        const auto bad = m.check_invariants();
        ASSERT_FALSE(bad.has_value()) << "frame " << i << ": " << *bad;
    }
    for (int y = 0; y < 15; ++y)
        for (int x = 0; x < 20; ++x) EXPECT_LE(m.components(x, y).size(), 5u);
}

TEST(Mog, UnmatchedSampleAddsComponentThenRenormalizes) {
    // Frame 1 (alpha = 1/2): existing weight 1 is kept, the newcomer gets 1/2.
    Mog m(1, 1);
    m.apply(Frame(1, 1, 0));
    EXPECT_EQ(m.apply(Frame(1, 1, 200))[0], label::foreground);
    const auto c = m.components(0, 0);
    ASSERT_EQ(c.size(), 2u);
    EXPECT_DOUBLE_EQ(c[0].weight, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(c[1].weight, 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(c[0].mean, 0.0);
    EXPECT_DOUBLE_EQ(c[1].mean, 200.0);
}

TEST(Mog, StaticSceneConverges) {
    Mog m(16, 16);
    m.apply(Frame(16, 16, 42));
    for (int i = 0; i < 199; ++i) ASSERT_TRUE(all_equal(m.apply(Frame(16, 16, 42)), label::background)) << i;
}

namespace {

/// Frames after a persistent +60 step until the mask is all background again.
int frames_to_reconverge(int history) {
    MogParams p;
    p.history = history;
    Mog m(p, 4, 4);
    for (int i = 0; i < 300; ++i) m.apply(Frame(4, 4, 100));
    for (int n = 1; n <= 2000; ++n)
        if (all_equal(m.apply(Frame(4, 4, 160)), label::background)) return n;
    return -1;
}

}  // namespace

TEST(Mog, ShortHistoryAdaptsFaster) {
    const int fast = frames_to_reconverge(5);
    const int slow = frames_to_reconverge(200);
    ASSERT_GT(fast, 0);
    ASSERT_GT(slow, 0);
    EXPECT_LT(fast, slow);
}

TEST(Mog, VarianceNeverBelowFloor) {
    MogParams p;
    p.noiseSigma = 0.5;
    Mog m(p, 3, 3);
    for (int i = 0; i < 400; ++i) m.apply(Frame(3, 3, 77));
    EXPECT_DOUBLE_EQ(m.components(1, 1)[0].variance, p.variance_floor());
    EXPECT_FALSE(m.check_invariants().has_value());
}
