#pragma once

/**
 * @file bgsub/bench.hpp
 * @brief Warm-up-then-repeat timing of a subtractor's apply call.
 *
 * A model is first stabilized on `warmupFrames` frames, then apply() is
 * called `repetitions` times on one frame and the loop is timed with a
 * monotonic clock. Only the apply call is inside the timed region.
 */

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bgsub/core.hpp"

namespace bgsub {

inline constexpr std::size_t kDefaultWarmupFrames = 1000;

class SourceExhausted : public Error {
public:
    SourceExhausted(std::size_t wanted, std::size_t available)
        : Error("frame source exhausted: wanted " + std::to_string(wanted) + " frames, have " +
                std::to_string(available)) {}
};

struct TimingReport {
    std::string algorithm;
    int width = 0;
    int height = 0;
    std::size_t warmupFrames = 0;
    std::size_t repetitions = 0;
    double totalSeconds = 0.0;
    double meanSecondsPerOp = 0.0;
    double fps = 0.0;
};

enum class Cycling { enabled, disabled };

/// Feeds exactly n frames from `source`, discarding the masks.
template <Subtractor S>
void warmup(S& subtractor, std::span<const Frame> source, std::size_t n = kDefaultWarmupFrames,
            Cycling cycling = Cycling::enabled) {
    if (n == 0) return;
    if (source.empty() || (cycling == Cycling::disabled && source.size() < n))
        throw SourceExhausted(n, source.size());
    for (std::size_t i = 0; i < n; ++i) (void)subtractor.apply(source[i % source.size()]);
}

namespace detail {

template <class S>
std::string subtractor_name(const S& s) {
    if constexpr (requires { s.name(); })
        return std::string(s.name());
    else
        return "custom";
}

}  // namespace detail

inline TimingReport make_timing_report(std::string algorithm, int width, int height, std::size_t warmupFrames,
                                       std::size_t repetitions, double totalSeconds) {
    TimingReport r;
    r.algorithm = std::move(algorithm);
    r.width = width;
    r.height = height;
    r.warmupFrames = warmupFrames;
    r.repetitions = repetitions;
    r.totalSeconds = totalSeconds;
    r.meanSecondsPerOp = totalSeconds / static_cast<double>(repetitions);
    r.fps = 1.0 / r.meanSecondsPerOp;
    return r;
}

/// Times `repetitions` apply calls on the same frame. The model keeps
/// learning across repetitions.
template <Subtractor S>
TimingReport time_apply(S& subtractor, const Frame& frame, std::size_t repetitions, std::size_t warmupFrames = 0) {
    if (repetitions < 1) throw InvalidParameter("repetitions", "must be >= 1");
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    for (std::size_t i = 0; i < repetitions; ++i) {
        Mask m = subtractor.apply(frame);
        // Keep the result observable so the call is not elided.
        asm volatile("" : : "g"(m.data().data()) : "memory");
    }
    const std::chrono::duration<double> elapsed = clock::now() - start;
    return make_timing_report(detail::subtractor_name(subtractor), frame.width(), frame.height(), warmupFrames,
                              repetitions, elapsed.count());
}

inline double median(std::vector<double> values) {
    if (values.empty()) throw InvalidParameter("values", "median of an empty list");
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    return values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

struct BenchOptions {
    std::size_t warmupFrames = kDefaultWarmupFrames;
    std::size_t repetitions = 1000;
    std::size_t runs = 1;
    /// Timing is single-worker unless this is set above 1.
    unsigned workers = 1;
};

struct BenchResult {
    std::vector<TimingReport> runs;
    double medianMeanSecondsPerOp = 0.0;
};

/// Independent runs, each on a freshly built and warmed model.
inline BenchResult bench_runs(const std::function<std::unique_ptr<BackgroundSubtractor>()>& make,
                              std::span<const Frame> warmupSource, const Frame& frame, const BenchOptions& opt) {
    if (opt.runs < 1) throw InvalidParameter("runs", "must be >= 1");
    BenchResult result;
    std::vector<double> means;
    for (std::size_t r = 0; r < opt.runs; ++r) {
        auto sub = make();
        sub->set_workers(opt.workers);
        warmup(*sub, warmupSource, opt.warmupFrames);
        result.runs.push_back(time_apply(*sub, frame, opt.repetitions, opt.warmupFrames));
        means.push_back(result.runs.back().meanSecondsPerOp);
    }
    result.medianMeanSecondsPerOp = median(std::move(means));
    return result;
}

}  // namespace bgsub
