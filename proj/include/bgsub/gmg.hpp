#pragma once

/**
 * @file bgsub/gmg.hpp
 * @brief Per-pixel quantized intensity histogram with a posterior decision
 *        (Godbehere-Matsukawa-Goldberg), followed by a median filter stage.
 *
 * The first `initializationFrames` frames only accumulate evidence and yield
 * black masks. Afterwards each pixel's foreground posterior is
 * 1 - P(bin | background); pixels above `decisionThreshold` are foreground.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bgsub/core.hpp"

namespace bgsub {

struct GmgParams {
    int initializationFrames = 120;
    double decisionThreshold = 0.8;

    int quantizationLevels = 16;
    double learningRate = 0.025;
    int maxFeatures = 64;
    /// 0 disables the filter stage.
    int smoothingRadius = 7;

    void validate() const {
        if (initializationFrames < 1) throw InvalidParameter("initializationFrames", "must be >= 1");
        if (!(decisionThreshold > 0.0 && decisionThreshold < 1.0))
            throw InvalidParameter("decisionThreshold", "must be in (0, 1)");
        if (quantizationLevels < 1 || quantizationLevels > 256)
            throw InvalidParameter("quantizationLevels", "must be in 1..256");
        if (!(learningRate > 0.0 && learningRate < 1.0))
            throw InvalidParameter("learningRate", "must be in (0, 1)");
        if (maxFeatures < 1) throw InvalidParameter("maxFeatures", "must be >= 1");
        if (smoothingRadius < 0) throw InvalidParameter("smoothingRadius", "must be >= 0");
    }
};

struct GmgFeature {
    std::uint16_t bin = 0;
    double weight = 0.0;
};

constexpr int gmg_quantize(int x, int levels) noexcept { return x * levels / 256; }

/// Binary median filter over a (2r+1)^2 window clipped at the borders.
/// A pixel becomes foreground when strictly more than half of its window is
/// foreground (the lower median of the window values).
inline Mask gmg_smooth(const Mask& raw, int radius) {
    if (radius < 0) throw InvalidParameter("smoothingRadius", "must be >= 0");
    if (radius == 0) return raw;
    const int w = raw.width();
    const int h = raw.height();
    const auto stride = static_cast<std::size_t>(w) + 1;
    // Summed-area table of foreground counts, one extra row/column of zeros.
    std::vector<std::uint32_t> sat(stride * (static_cast<std::size_t>(h) + 1), 0);
    for (int y = 0; y < h; ++y) {
        std::uint32_t rowSum = 0;
        for (int x = 0; x < w; ++x) {
            rowSum += raw[static_cast<std::size_t>(y) * w + x] == label::foreground ? 1u : 0u;
            sat[(y + 1) * stride + x + 1] = sat[y * stride + x + 1] + rowSum;
        }
    }
    Mask out(w, h);
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - radius);
        const int y1 = std::min(h, y + radius + 1);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - radius);
            const int x1 = std::min(w, x + radius + 1);
            const std::uint32_t fg = sat[y1 * stride + x1] - sat[y0 * stride + x1] - sat[y1 * stride + x0] +
                                     sat[y0 * stride + x0];
            const auto total = static_cast<std::uint32_t>((y1 - y0) * (x1 - x0));
            out[static_cast<std::size_t>(y) * w + x] = 2 * fg > total ? label::foreground : label::background;
        }
    }
    return out;
}

class Gmg final : public BackgroundSubtractor {
public:
    Gmg(const GmgParams& params, int width, int height) : params_(params), width_(width), height_(height) {
        params_.validate();
        detail::require_dims(width, height);
        stride_ = static_cast<std::size_t>(std::min(params_.maxFeatures, params_.quantizationLevels));
        const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
        features_.resize(n * stride_);
        counts_.assign(n, 0);
        workers_ = workers_from_env();
    }

    Gmg(int width, int height) : Gmg(GmgParams{}, width, height) {}

    Mask apply(const Frame& frame) override {
        detail::require_shape(width_, height_, frame);
        const bool initializing = framesSeen_ < static_cast<std::size_t>(params_.initializationFrames);
        raw_ = Mask(width_, height_);
        const Kernel k = kernel();
        parallel_rows(height_, workers_, [&](int y0, int y1) {
            for (int y = y0; y < y1; ++y) {
                const std::size_t row = static_cast<std::size_t>(y) * static_cast<std::size_t>(width_);
                for (int x = 0; x < width_; ++x) {
                    const std::size_t i = row + static_cast<std::size_t>(x);
                    GmgFeature* f = features_.data() + i * stride_;
                    raw_[i] = initializing ? accumulate(k, f, counts_[i], frame[i]) : decide(k, f, counts_[i], frame[i]);
                }
            }
        });
        ++framesSeen_;
        if (initializing || params_.smoothingRadius == 0) return raw_;
        return gmg_smooth(raw_, params_.smoothingRadius);
    }

    void reset() override {
        std::fill(features_.begin(), features_.end(), GmgFeature{});
        std::fill(counts_.begin(), counts_.end(), 0);
        framesSeen_ = 0;
        raw_ = Mask{};
    }

    std::string_view name() const noexcept override { return "gmg"; }
    std::size_t frames_seen() const noexcept override { return framesSeen_; }

    const GmgParams& params() const noexcept { return params_; }
    bool initializing() const noexcept {
        return framesSeen_ < static_cast<std::size_t>(params_.initializationFrames);
    }

    /// Decision-stage labels of the last apply, before the filter stage.
    const Mask& raw_mask() const noexcept { return raw_; }

    std::span<const GmgFeature> histogram(int x, int y) const {
        if (x < 0 || y < 0 || x >= width_ || y >= height_) throw std::out_of_range("pixel out of range");
        const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
        return {features_.data() + i * stride_, counts_[i]};
    }

    std::optional<std::string> check_invariants() const {
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            const GmgFeature* f = features_.data() + i * stride_;
            double sum = 0.0;
            for (std::size_t k = 0; k < counts_[i]; ++k) {
                if (f[k].weight < 0.0) return "pixel " + std::to_string(i) + ": negative weight";
                for (std::size_t j = 0; j < k; ++j)
                    if (f[j].bin == f[k].bin) return "pixel " + std::to_string(i) + ": duplicate bin";
                sum += f[k].weight;
            }
            if (sum > 1.0 + 1e-9) return "pixel " + std::to_string(i) + ": total weight above 1";
        }
        return std::nullopt;
    }

private:
    struct Kernel {
        int levels;
        double increment;  // accumulation weight per frame
        double learningRate;
        double threshold;
        std::size_t capacity;
    };

    Kernel kernel() const noexcept {
        return {params_.quantizationLevels, 1.0 / params_.initializationFrames, params_.learningRate,
                params_.decisionThreshold, stride_};
    }

    [[gnu::always_inline]] static std::uint8_t accumulate(const Kernel k, GmgFeature* f, std::uint16_t& count, std::uint8_t value) noexcept {
        add(k, f, count, static_cast<std::uint16_t>(gmg_quantize(value, k.levels)), k.increment);
        return label::background;
    }

    [[gnu::always_inline]] static std::uint8_t decide(const Kernel k, GmgFeature* f, std::uint16_t& count, std::uint8_t value) noexcept {
        const auto bin = static_cast<std::uint16_t>(gmg_quantize(value, k.levels));
        const std::size_t n = count;
        double total = 0.0;
        double hit = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            total += f[i].weight;
            if (f[i].bin == bin) hit = f[i].weight;
        }
        const double posterior = total > 0.0 ? 1.0 - hit / total : 1.0;

        const double keep = 1.0 - k.learningRate;
        for (std::size_t i = 0; i < n; ++i) f[i].weight *= keep;
        add(k, f, count, bin, k.learningRate);

        return posterior > k.threshold ? label::foreground : label::background;
    }

    [[gnu::always_inline]] static void add(const Kernel k, GmgFeature* f, std::uint16_t& count, std::uint16_t bin, double amount) noexcept {
        const std::size_t n = count;
        for (std::size_t i = 0; i < n; ++i) {
            if (f[i].bin == bin) {
                f[i].weight += amount;
                return;
            }
        }
        if (n < k.capacity) {
            f[n] = GmgFeature{bin, amount};
            ++count;
            return;
        }
        std::size_t weakest = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (f[i].weight < f[weakest].weight) weakest = i;
        f[weakest] = GmgFeature{bin, amount};
    }

    GmgParams params_;
    int width_;
    int height_;
    std::size_t stride_ = 0;
    std::size_t framesSeen_ = 0;
    std::vector<GmgFeature> features_;
    std::vector<std::uint16_t> counts_;
    Mask raw_;
};

}  // namespace bgsub
