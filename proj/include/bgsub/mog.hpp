#pragma once

/**
 * @file bgsub/mog.hpp
 * @brief Fixed-size per-pixel Gaussian mixture (Stauffer-Grimson / KaewTraKulPong).
 *
 * Each pixel keeps up to `nmixtures` components sorted by fitness w/sigma.
 * A sample matches the first component within 2.5 standard deviations. The
 * background is the shortest fitness-ordered prefix whose weight exceeds
 * `backgroundRatio`.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bgsub/core.hpp"

namespace bgsub {

struct MogParams {
    int history = 200;
    int nmixtures = 5;
    double backgroundRatio = 0.7;
    /// 0 selects the built-in 15.
    double noiseSigma = 0.0;

    static constexpr int kMaxMixtures = 8;
    static constexpr double kDefaultNoiseSigma = 15.0;
    static constexpr double kVarMin = 0.01;
    static constexpr double kMatchSigmas = 2.5;

    double effective_noise_sigma() const noexcept {
        return noiseSigma == 0.0 ? kDefaultNoiseSigma : noiseSigma;
    }

    /// Variance never drops below the accepted noise level.
    double variance_floor() const noexcept {
        const double s = effective_noise_sigma();
        return std::max(kVarMin, s * s);
    }

    void validate() const {
        if (history < 1) throw InvalidParameter("history", "must be >= 1");
        if (nmixtures < 1 || nmixtures > kMaxMixtures)
            throw InvalidParameter("nmixtures", "must be in 1..8");
        if (!(backgroundRatio > 0.0 && backgroundRatio <= 1.0))
            throw InvalidParameter("backgroundRatio", "must be in (0, 1]");
        if (!(noiseSigma >= 0.0) || !std::isfinite(noiseSigma))
            throw InvalidParameter("noiseSigma", "must be >= 0");
    }
};

struct MogComponent {
    double weight = 0.0;
    double mean = 0.0;
    double variance = 0.0;

    double fitness() const noexcept { return weight / std::sqrt(variance); }
};

/// Length of the shortest prefix whose cumulative weight strictly exceeds
/// `ratio`; the full length when none does.
inline std::size_t mog_background_count(std::span<const double> weightsSortedDesc, double ratio) noexcept {
    double cum = 0.0;
    for (std::size_t i = 0; i < weightsSortedDesc.size(); ++i) {
        cum += weightsSortedDesc[i];
        if (cum > ratio) return i + 1;
    }
    return weightsSortedDesc.size();
}

class Mog final : public BackgroundSubtractor {
public:
    Mog(const MogParams& params, int width, int height) : params_(params), width_(width), height_(height) {
        params_.validate();
        detail::require_dims(width, height);
        const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
        comps_.resize(n * static_cast<std::size_t>(params_.nmixtures));
        counts_.assign(n, 0);
        workers_ = workers_from_env();
    }

    Mog(int width, int height) : Mog(MogParams{}, width, height) {}

    Mask apply(const Frame& frame) override {
        detail::require_shape(width_, height_, frame);
        Mask mask(width_, height_);
        const double alpha = 1.0 / static_cast<double>(std::min<std::size_t>(framesSeen_ + 1,
                                                                              static_cast<std::size_t>(params_.history)));
        const Kernel k = kernel(alpha);
        parallel_rows(height_, workers_, [&](int y0, int y1) {
            for (int y = y0; y < y1; ++y) {
                const std::size_t row = static_cast<std::size_t>(y) * static_cast<std::size_t>(width_);
                for (int x = 0; x < width_; ++x) {
                    const std::size_t i = row + static_cast<std::size_t>(x);
                    mask[i] = update_pixel(k, comps_.data() + i * k.capacity, counts_[i], frame[i]);
                }
            }
        });
        ++framesSeen_;
        return mask;
    }

    void reset() override {
        std::fill(comps_.begin(), comps_.end(), MogComponent{});
        std::fill(counts_.begin(), counts_.end(), 0);
        framesSeen_ = 0;
    }

    std::string_view name() const noexcept override { return "mog"; }
    std::size_t frames_seen() const noexcept override { return framesSeen_; }

    const MogParams& params() const noexcept { return params_; }
    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    /// Components of pixel (x, y) in fitness order.
    std::span<const MogComponent> components(int x, int y) const {
        const std::size_t i = pixel_index(x, y);
        return {comps_.data() + i * stride(), counts_[i]};
    }

    /// Debug check of the mixture invariants; the first violation found, if any.
    std::optional<std::string> check_invariants() const {
        const double floor = params_.variance_floor();
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            const std::size_t n = counts_[i];
            if (n > stride()) return "pixel " + std::to_string(i) + ": too many components";
            if (n == 0) continue;
            const MogComponent* c = comps_.data() + i * stride();
            double sum = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                sum += c[k].weight;
                if (c[k].weight < 0.0) return "pixel " + std::to_string(i) + ": negative weight";
                if (c[k].variance < floor) return "pixel " + std::to_string(i) + ": variance below floor";
                if (k > 0 && c[k].fitness() > c[k - 1].fitness())
                    return "pixel " + std::to_string(i) + ": not sorted by fitness";
            }
            if (std::abs(sum - 1.0) > 1e-9) return "pixel " + std::to_string(i) + ": weights sum to " + std::to_string(sum);
        }
        return std::nullopt;
    }

private:
    std::size_t stride() const noexcept { return static_cast<std::size_t>(params_.nmixtures); }

    std::size_t pixel_index(int x, int y) const {
        if (x < 0 || y < 0 || x >= width_ || y >= height_) throw std::out_of_range("pixel out of range");
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    struct Kernel {
        double alpha;
        double matchScale;
        double varianceFloor;
        double newVariance;
        double backgroundRatio;
        std::size_t capacity;
    };

    Kernel kernel(double alpha) const noexcept {
        const double s0 = params_.effective_noise_sigma();
        return {alpha,
                MogParams::kMatchSigmas * MogParams::kMatchSigmas,
                params_.variance_floor(),
                std::max(params_.variance_floor(), s0 * s0),
                params_.backgroundRatio,
                stride()};
    }

    [[gnu::always_inline]] static std::uint8_t update_pixel(const Kernel k, MogComponent* c, std::uint8_t& count, std::uint8_t value) noexcept {
        std::size_t n = count;
        const double x = value;

        constexpr std::size_t kNone = MogParams::kMaxMixtures;
        std::size_t matched = kNone;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = x - c[i].mean;
            if (d * d < k.matchScale * c[i].variance) {
                matched = i;
                break;
            }
        }

        double sum = 0.0;
        std::size_t moved = matched;
        if (matched != kNone) {
            for (std::size_t i = 0; i < n; ++i) {
                c[i].weight = (1.0 - k.alpha) * c[i].weight + (i == matched ? k.alpha : 0.0);
                sum += c[i].weight;
            }
            MogComponent& m = c[matched];
            const double rho = std::min(1.0, k.alpha / m.weight);
            m.mean += rho * (x - m.mean);
            const double d = x - m.mean;
            m.variance = std::max(k.varianceFloor, m.variance + rho * (d * d - m.variance));
        } else {
            // Sorted by fitness, so the last component is the weakest.
            moved = n < k.capacity ? n++ : n - 1;
            c[moved] = MogComponent{k.alpha, x, k.newVariance};
            count = static_cast<std::uint8_t>(n);
            for (std::size_t i = 0; i < n; ++i) sum += c[i].weight;
        }

        const double inv = 1.0 / sum;
        for (std::size_t i = 0; i < n; ++i) c[i].weight *= inv;

        // The others were scaled alike and stay in order; only `moved` can be
        // out of place. Strict comparisons keep ties in index order.
        const MogComponent key = c[moved];
        const double keyFit = key.fitness();
        std::size_t j = moved;
        while (j > 0 && c[j - 1].fitness() < keyFit) {
            c[j] = c[j - 1];
            --j;
        }
        if (j == moved) {
            while (j + 1 < n && keyFit < c[j + 1].fitness()) {
                c[j] = c[j + 1];
                ++j;
            }
        }
        c[j] = key;
        if (matched != kNone) matched = j;

        if (matched == kNone) return label::foreground;
        double cum = 0.0;
        std::size_t background = n;
        for (std::size_t i = 0; i < n; ++i) {
            cum += c[i].weight;
            if (cum > k.backgroundRatio) {
                background = i + 1;
                break;
            }
        }
        return matched < background ? label::background : label::foreground;
    }

    MogParams params_;
    int width_;
    int height_;
    std::size_t framesSeen_ = 0;
    std::vector<MogComponent> comps_;
    std::vector<std::uint8_t> counts_;
};

}  // namespace bgsub
