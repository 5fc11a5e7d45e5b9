#pragma once

/**
 * @file bgsub/synthgen.hpp
 * @brief Deterministic moving-rectangle sequences with exact ground truth.
 */

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "bgsub/core.hpp"
#include "bgsub/frameio.hpp"

namespace bgsub {

/// Noise source, recorded in every manifest.
inline constexpr const char* kSynthNoiseGenerator =
    "std::mt19937_64(seed_seq{seed_lo,seed_hi,t}) + std::normal_distribution<double>, row-major draw order";

struct SynthSpec {
    int width = 320;
    int height = 240;
    int frames = 300;
    int bgIntensity = 80;
    int fgIntensity = 200;
    int rectWidth = 20;
    int rectHeight = 20;
    /// Horizontal pixels per frame; motion wraps around.
    int velocity = 2;
    int startX = 0;
    int startY = 110;
    double noiseSigma = 0.0;
    std::uint64_t seed = 1;

    void validate() const {
        if (width < 1) throw InvalidParameter("width", "must be >= 1");
        if (height < 1) throw InvalidParameter("height", "must be >= 1");
        if (frames < 1) throw InvalidParameter("frames", "must be >= 1");
        if (bgIntensity < 0 || bgIntensity > 255) throw InvalidParameter("bgIntensity", "must be in [0, 255]");
        if (fgIntensity < 0 || fgIntensity > 255) throw InvalidParameter("fgIntensity", "must be in [0, 255]");
        if (fgIntensity == bgIntensity) throw InvalidParameter("fgIntensity", "must differ from bgIntensity");
        if (rectWidth < 1 || rectHeight < 1) throw InvalidParameter("rectWidth", "rectangle must be non-empty");
        if (startX < 0 || startY < 0 || startX + rectWidth > width || startY + rectHeight > height)
            throw InvalidParameter("startX", "rectangle must fit inside the frame at t = 0");
        if (!(noiseSigma >= 0.0) || !std::isfinite(noiseSigma))
            throw InvalidParameter("noiseSigma", "must be >= 0");
    }

    /// Left edge of the rectangle at frame t.
    int rect_x(int t) const noexcept {
        const long long x = (static_cast<long long>(startX) + static_cast<long long>(t) * velocity) % width;
        return static_cast<int>(x < 0 ? x + width : x);
    }
};

inline std::pair<Frame, Mask> synth_frame(const SynthSpec& spec, int t) {
    spec.validate();
    if (t < 0 || t >= spec.frames)
        throw InvalidParameter("t", "frame index " + std::to_string(t) + " outside [0, " + std::to_string(spec.frames) + ")");

    Frame frame(spec.width, spec.height, static_cast<std::uint8_t>(spec.bgIntensity));
    Mask mask(spec.width, spec.height);

    if (spec.noiseSigma > 0.0) {
        std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                          static_cast<std::uint32_t>(t)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> noise(0.0, spec.noiseSigma);
        for (auto& px : frame.data()) {
            const double v = std::floor(spec.bgIntensity + noise(rng) + 0.5);
            px = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
        }
    }

    const int x0 = spec.rect_x(t);
    for (int dy = 0; dy < spec.rectHeight; ++dy) {
        const int y = spec.startY + dy;
        for (int dx = 0; dx < spec.rectWidth; ++dx) {
            const int x = (x0 + dx) % spec.width;
            frame.at(x, y) = static_cast<std::uint8_t>(spec.fgIntensity);
            mask.at(x, y) = label::foreground;
        }
    }
    return {std::move(frame), std::move(mask)};
}

/// All frames of the sequence, in order.
inline std::vector<std::pair<Frame, Mask>> synth_all(const SynthSpec& spec) {
    spec.validate();
    std::vector<std::pair<Frame, Mask>> out;
    out.reserve(static_cast<std::size_t>(spec.frames));
    for (int t = 0; t < spec.frames; ++t) out.push_back(synth_frame(spec, t));
    return out;
}

inline std::string synth_manifest_text(const SynthSpec& spec, const std::string& extension) {
    std::string s;
    auto kv = [&s](const std::string& k, const std::string& v) { s += k + "=" + v + "\n"; };
    kv("width", std::to_string(spec.width));
    kv("height", std::to_string(spec.height));
    kv("frames", std::to_string(spec.frames));
    kv("bg_intensity", std::to_string(spec.bgIntensity));
    kv("fg_intensity", std::to_string(spec.fgIntensity));
    kv("rect_width", std::to_string(spec.rectWidth));
    kv("rect_height", std::to_string(spec.rectHeight));
    kv("velocity", std::to_string(spec.velocity));
    kv("start_x", std::to_string(spec.startX));
    kv("start_y", std::to_string(spec.startY));
    char sigma[64];
    std::snprintf(sigma, sizeof sigma, "%.17g", spec.noiseSigma);
    kv("noise_sigma", sigma);
    kv("seed", std::to_string(spec.seed));
    kv("noise_generator", kSynthNoiseGenerator);
    kv("frame_pattern", "frame_%06d" + extension);
    kv("gt_pattern", "gt_%06d" + extension);
    return s;
}

struct SynthManifest {
    std::filesystem::path manifest;
    std::vector<std::filesystem::path> frames;
    std::vector<std::filesystem::path> masks;
};

/// Writes frame_%06d / gt_%06d files (PGM or PNG by `extension`) and manifest.txt.
inline SynthManifest synth_sequence(const SynthSpec& spec, const std::filesystem::path& outDir,
                                    const std::string& extension = ".pgm") {
    spec.validate();
    if (extension != ".pgm" && extension != ".png")
        throw InvalidParameter("format", "extension must be .pgm or .png");
    std::error_code ec;
    std::filesystem::create_directories(outDir, ec);
    if (ec || !std::filesystem::is_directory(outDir)) throw IoError(outDir, "cannot create output directory");

    SynthManifest out;
    const IndexPattern framePat("frame_%06d" + extension);
    const IndexPattern gtPat("gt_%06d" + extension);
    for (int t = 0; t < spec.frames; ++t) {
        auto [frame, mask] = synth_frame(spec, t);
        out.frames.push_back(outDir / framePat.format(t));
        out.masks.push_back(outDir / gtPat.format(t));
        write_frame(frame, out.frames.back());
        write_mask(mask, out.masks.back());
    }
    out.manifest = outDir / "manifest.txt";
    std::ofstream m(out.manifest, std::ios::binary | std::ios::trunc);
    if (!m) throw IoError(out.manifest, "cannot open for writing");
    m << synth_manifest_text(spec, extension);
    if (!m) throw IoError(out.manifest, "write failed");
    return out;
}

}  // namespace bgsub
