#pragma once

// Runtime algorithm selection by name, and a key=value dump of parameters.

#include <cstdio>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bgsub/core.hpp"
#include "bgsub/gmg.hpp"
#include "bgsub/mog.hpp"
#include "bgsub/mog2.hpp"

namespace bgsub {

enum class Algorithm { gmg, mog, mog2 };

inline constexpr Algorithm kAllAlgorithms[] = {Algorithm::gmg, Algorithm::mog, Algorithm::mog2};

inline std::string_view to_string(Algorithm a) noexcept {
    switch (a) {
        case Algorithm::gmg: return "gmg";
        case Algorithm::mog: return "mog";
        case Algorithm::mog2: return "mog2";
    }
    return "?";
}

inline Algorithm parse_algorithm(std::string_view name) {
    for (Algorithm a : kAllAlgorithms)
        if (to_string(a) == name) return a;
    throw InvalidParameter("algorithm", "unknown algorithm '" + std::string(name) + "' (expected gmg, mog or mog2)");
}

struct AlgorithmParams {
    GmgParams gmg;
    MogParams mog;
    Mog2Params mog2;
};

inline std::unique_ptr<BackgroundSubtractor> make_subtractor(Algorithm a, const AlgorithmParams& p, int width,
                                                             int height) {
    switch (a) {
        case Algorithm::gmg: return std::make_unique<Gmg>(p.gmg, width, height);
        case Algorithm::mog: return std::make_unique<Mog>(p.mog, width, height);
        case Algorithm::mog2: return std::make_unique<Mog2>(p.mog2, width, height);
    }
    throw InvalidParameter("algorithm", "unknown algorithm");
}

namespace detail {

inline std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

/// Every parameter of the selected algorithm, including the fixed constants.
inline std::vector<std::pair<std::string, std::string>> describe_params(Algorithm a, const AlgorithmParams& p) {
    using detail::format_real;
    std::vector<std::pair<std::string, std::string>> kv;
    switch (a) {
        case Algorithm::gmg:
            kv = {{"initialization_frames", std::to_string(p.gmg.initializationFrames)},
                  {"decision_threshold", format_real(p.gmg.decisionThreshold)},
                  {"quantization_levels", std::to_string(p.gmg.quantizationLevels)},
                  {"learning_rate", format_real(p.gmg.learningRate)},
                  {"max_features", std::to_string(p.gmg.maxFeatures)},
                  {"smoothing_radius", std::to_string(p.gmg.smoothingRadius)}};
            break;
        case Algorithm::mog:
            kv = {{"history", std::to_string(p.mog.history)},
                  {"nmixtures", std::to_string(p.mog.nmixtures)},
                  {"background_ratio", format_real(p.mog.backgroundRatio)},
                  {"noise_sigma", format_real(p.mog.noiseSigma)}};
            break;
        case Algorithm::mog2:
            kv = {{"history", std::to_string(p.mog2.history)},
                  {"var_threshold", format_real(p.mog2.varThreshold)},
                  {"detect_shadows", p.mog2.detectShadows ? "true" : "false"},
                  {"max_components", std::to_string(p.mog2.maxComponents)},
                  {"background_ratio", format_real(p.mog2.backgroundRatio)},
                  {"var_init", format_real(p.mog2.varInit)},
                  {"var_min", format_real(p.mog2.varMin)},
                  {"var_max", format_real(p.mog2.varMax)},
                  {"complexity_prior", format_real(p.mog2.complexityPrior)},
                  {"shadow_threshold", format_real(p.mog2.shadowThreshold)}};
            break;
    }
    return kv;
}

}  // namespace bgsub
