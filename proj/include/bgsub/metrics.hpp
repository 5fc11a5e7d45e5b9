#pragma once

/**
 * @file bgsub/metrics.hpp
 * @brief Pixel confusion matrix against binary ground truth, accuracy and
 *        precision, and the occurrence histogram used for reporting.
 */

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bgsub/core.hpp"

namespace bgsub {

class EmptyMatrix : public Error {
public:
    EmptyMatrix() : Error("confusion matrix is empty") {}
};

class InvalidGroundTruth : public Error {
public:
    InvalidGroundTruth(std::size_t index, std::uint8_t value)
        : Error("ground truth pixel " + std::to_string(index) + " has label " + std::to_string(value) +
                " (expected 0 or 255)"),
          index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class ValueOutOfRange : public Error {
public:
    using Error::Error;
};

struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;

    std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
    std::uint64_t positives() const noexcept { return tp + fn; }
    std::uint64_t negatives() const noexcept { return fp + tn; }

    ConfusionMatrix& operator+=(const ConfusionMatrix& o) noexcept {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        tn += o.tn;
        return *this;
    }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Predicted 255 is positive; 0 and shadow (127) are negative.
inline ConfusionMatrix confusion(const Mask& pred, const Mask& gt) {
    if (!pred.same_shape(gt)) throw DimensionMismatch(gt.width(), gt.height(), pred.width(), pred.height());
    ConfusionMatrix cm;
    const auto& p = pred.data();
    const auto& g = gt.data();
    for (std::size_t i = 0; i < g.size(); ++i) {
        const std::uint8_t gv = g[i];
        if (gv != label::background && gv != label::foreground) throw InvalidGroundTruth(i, gv);
        const bool predFg = p[i] == label::foreground;
        const bool gtFg = gv == label::foreground;
        cm.tp += predFg && gtFg;
        cm.fp += predFg && !gtFg;
        cm.fn += !predFg && gtFg;
        cm.tn += !predFg && !gtFg;
    }
    return cm;
}

inline double accuracy(const ConfusionMatrix& cm) {
    const std::uint64_t total = cm.total();
    if (total == 0) throw EmptyMatrix();
    return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(total);
}

/// Empty when nothing was predicted foreground.
inline std::optional<double> precision(const ConfusionMatrix& cm) noexcept {
    const std::uint64_t predicted = cm.tp + cm.fp;
    if (predicted == 0) return std::nullopt;
    return static_cast<double>(cm.tp) / static_cast<double>(predicted);
}

struct HistogramReport {
    std::vector<double> binEdges;  // binCount + 1 edges, 0 .. 1
    std::vector<std::size_t> counts;
    std::vector<std::size_t> cumulative;

    std::size_t bins() const noexcept { return counts.size(); }
    std::size_t total() const noexcept { return cumulative.empty() ? 0 : cumulative.back(); }
};

inline constexpr int kDefaultHistogramBins = 10;

/// Equal-width bins on [0, 1]; every bin is half-open except the last,
/// which also takes 1.0.
inline HistogramReport histogram(std::span<const double> values, int binCount = kDefaultHistogramBins) {
    if (binCount < 1) throw InvalidParameter("binCount", "must be >= 1");
    HistogramReport r;
    const auto bins = static_cast<std::size_t>(binCount);
    r.binEdges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) r.binEdges[i] = static_cast<double>(i) / static_cast<double>(bins);
    r.counts.assign(bins, 0);
    for (const double v : values) {
        if (!(v >= 0.0 && v <= 1.0)) throw ValueOutOfRange("histogram value " + std::to_string(v) + " outside [0, 1]");
        auto b = static_cast<std::size_t>(v * static_cast<double>(bins));
        // v * bins can round across an edge; settle against the stored edges.
        if (b >= bins) b = bins - 1;
        while (b > 0 && v < r.binEdges[b]) --b;
        while (b + 1 < bins && v >= r.binEdges[b + 1]) ++b;
        ++r.counts[b];
    }
    r.cumulative.resize(bins);
    std::size_t run = 0;
    for (std::size_t i = 0; i < bins; ++i) r.cumulative[i] = run += r.counts[i];
    return r;
}

}  // namespace bgsub
