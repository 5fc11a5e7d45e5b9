#pragma once

/**
 * @file bgsub/mog2.hpp
 * @brief Variable-size per-pixel Gaussian mixture with a complexity prior
 *        (Zivkovic) and intensity-ratio shadow detection.
 *
 * Unmatched components decay by alpha*complexityPrior every frame and are
 * dropped once their weight reaches zero, so the number of components per
 * pixel follows the number of modes actually observed.
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

struct Mog2Params {
    int history = 200;
    double varThreshold = 16.0;
    bool detectShadows = true;

    int maxComponents = 5;
    double backgroundRatio = 0.9;
    double varInit = 225.0;
    double varMin = 4.0;
    double varMax = 5.0 * 225.0;
    double complexityPrior = 0.05;
    double shadowThreshold = 0.5;

    static constexpr int kComponentLimit = 8;

    void validate() const {
        if (history < 1) throw InvalidParameter("history", "must be >= 1");
        if (!(varThreshold > 0.0) || !std::isfinite(varThreshold))
            throw InvalidParameter("varThreshold", "must be > 0");
        if (maxComponents < 1 || maxComponents > kComponentLimit)
            throw InvalidParameter("maxComponents", "must be in 1..8");
        if (!(backgroundRatio > 0.0 && backgroundRatio <= 1.0))
            throw InvalidParameter("backgroundRatio", "must be in (0, 1]");
        if (!(varMin > 0.0)) throw InvalidParameter("varMin", "must be > 0");
        if (!(varMax >= varMin)) throw InvalidParameter("varMax", "must be >= varMin");
        if (!(varInit >= varMin && varInit <= varMax))
            throw InvalidParameter("varInit", "must lie in [varMin, varMax]");
        if (!(complexityPrior >= 0.0 && complexityPrior < 1.0))
            throw InvalidParameter("complexityPrior", "must be in [0, 1)");
        if (!(shadowThreshold > 0.0 && shadowThreshold < 1.0))
            throw InvalidParameter("shadowThreshold", "must be in (0, 1)");
    }
};

struct Mog2Component {
    double weight = 0.0;
    double mean = 0.0;
    double variance = 0.0;
};

/// True when x is a darkened copy of the background mean: tau <= x/mean < 1.
constexpr bool mog2_shadow_test(double x, double backgroundMean, double tau) noexcept {
    if (backgroundMean <= 0.0) return false;
    const double ratio = x / backgroundMean;
    return ratio >= tau && ratio < 1.0;
}

class Mog2 final : public BackgroundSubtractor {
public:
    Mog2(const Mog2Params& params, int width, int height) : params_(params), width_(width), height_(height) {
        params_.validate();
        detail::require_dims(width, height);
        const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
        comps_.resize(n * stride());
        counts_.assign(n, 0);
        workers_ = workers_from_env();
    }

    Mog2(int width, int height) : Mog2(Mog2Params{}, width, height) {}

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
        std::fill(comps_.begin(), comps_.end(), Mog2Component{});
        std::fill(counts_.begin(), counts_.end(), 0);
        framesSeen_ = 0;
    }

    std::string_view name() const noexcept override { return "mog2"; }
    std::size_t frames_seen() const noexcept override { return framesSeen_; }

    const Mog2Params& params() const noexcept { return params_; }
    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    /// Components of pixel (x, y), heaviest first.
    std::span<const Mog2Component> components(int x, int y) const {
        if (x < 0 || y < 0 || x >= width_ || y >= height_) throw std::out_of_range("pixel out of range");
        const std::size_t i = static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
        return {comps_.data() + i * stride(), counts_[i]};
    }

    std::optional<std::string> check_invariants() const {
        for (std::size_t i = 0; i < counts_.size(); ++i) {
            const std::size_t n = counts_[i];
            const auto where = [i](const char* what) { return "pixel " + std::to_string(i) + ": " + what; };
            if (n > stride()) return where("too many components");
            if (n == 0) continue;
            const Mog2Component* c = comps_.data() + i * stride();
            double sum = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                sum += c[k].weight;
                if (c[k].weight < 0.0) return where("negative weight");
                if (c[k].variance < params_.varMin || c[k].variance > params_.varMax)
                    return where("variance outside [varMin, varMax]");
                if (k > 0 && c[k].weight > c[k - 1].weight) return where("not sorted by weight");
            }
            if (std::abs(sum - 1.0) > 1e-9) return where("weights do not sum to 1");
        }
        return std::nullopt;
    }

private:
    std::size_t stride() const noexcept { return static_cast<std::size_t>(params_.maxComponents); }

    // Constants copied out of params_ so component stores cannot alias them.
    struct Kernel {
        double alpha;
        double decay;
        double varThreshold;
        double varInit;
        double varMin;
        double varMax;
        double backgroundRatio;
        double shadowThreshold;
        std::size_t capacity;
        bool detectShadows;
    };

    Kernel kernel(double alpha) const noexcept {
        return {alpha,
                alpha * params_.complexityPrior,
                params_.varThreshold,
                params_.varInit,
                params_.varMin,
                params_.varMax,
                params_.backgroundRatio,
                params_.shadowThreshold,
                stride(),
                params_.detectShadows};
    }

    [[gnu::always_inline]] static std::uint8_t update_pixel(const Kernel k, Mog2Component* c, std::uint8_t& count, std::uint8_t value) noexcept {
        std::size_t n = count;
        const double x = value;

        std::size_t matched = n;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = x - c[i].mean;
            if (d * d < k.varThreshold * c[i].variance) {
                matched = i;
                break;
            }
        }

        // Decay every weight, reinforce the match, drop extinct components.
        std::size_t kept = 0;
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double w = c[i].weight + k.alpha * ((i == matched ? 1.0 : 0.0) - c[i].weight) - k.decay;
            if (w <= 0.0) continue;
            if (i == matched) matched = kept;
            if (kept != i) c[kept] = c[i];
            c[kept++].weight = w;
            sum += w;
        }
        if (matched >= n) matched = kept;
        n = kept;

        std::size_t moved = matched;
        if (matched < n) {
            Mog2Component& m = c[matched];
            const double rho = std::min(1.0, k.alpha / m.weight);
            m.mean += rho * (x - m.mean);
            const double d = x - m.mean;
            m.variance = std::clamp(m.variance + rho * (d * d - m.variance), k.varMin, k.varMax);
        } else {
            moved = n;
            if (n < k.capacity) {
                ++n;
            } else {
                moved = 0;
                for (std::size_t i = 1; i < n; ++i)
                    if (c[i].weight <= c[moved].weight) moved = i;
                sum -= c[moved].weight;
            }
            c[moved] = Mog2Component{k.alpha, x, k.varInit};
            sum += k.alpha;
            matched = n;
        }
        count = static_cast<std::uint8_t>(n);

        const double inv = 1.0 / sum;
        for (std::size_t i = 0; i < n; ++i) c[i].weight *= inv;

        // Unmatched weights keep their relative order, so only the match or
        // the newcomer is out of place, and only ever too low.
        const Mog2Component key = c[moved];
        std::size_t j = moved;
        while (j > 0 && c[j - 1].weight < key.weight) {
            c[j] = c[j - 1];
            --j;
        }
        c[j] = key;
        if (matched < n) matched = j;

        if (matched < n) {
            double cum = 0.0;
            std::size_t background = n;
            for (std::size_t i = 0; i < n; ++i) {
                cum += c[i].weight;
                if (cum > k.backgroundRatio) {
                    background = i + 1;
                    break;
                }
            }
            if (matched < background) return label::background;
        }
        if (k.detectShadows && mog2_shadow_test(x, c[0].mean, k.shadowThreshold)) return label::shadow;
        return label::foreground;
    }

    Mog2Params params_;
    int width_;
    int height_;
    std::size_t framesSeen_ = 0;
    std::vector<Mog2Component> comps_;
    std::vector<std::uint8_t> counts_;
};

}  // namespace bgsub
