#pragma once

/**
 * @file bgsub/core.hpp
 * @brief Frame and mask grids, grayscale conversion, the subtractor contract
 *        and the row-parallel helper shared by all background models.
 */

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

namespace bgsub {

// ============================================================================
// Errors
// ============================================================================

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
public:
    InvalidParameter(std::string field, const std::string& why)
        : Error("invalid parameter '" + field + "': " + why), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class DimensionMismatch : public Error {
public:
    DimensionMismatch(int expectedW, int expectedH, int gotW, int gotH)
        : Error("dimension mismatch: expected " + std::to_string(expectedW) + "x" +
                std::to_string(expectedH) + ", got " + std::to_string(gotW) + "x" +
                std::to_string(gotH)) {}
};

// ============================================================================
// Grids
// ============================================================================

namespace label {
inline constexpr std::uint8_t background = 0;
inline constexpr std::uint8_t shadow = 127;
inline constexpr std::uint8_t foreground = 255;
}  // namespace label

/// Row-major, top-left origin 8-bit grid. Base of Frame and Mask.
template <class Tag>
class Grid {
public:
    Grid() = default;

    Grid(int width, int height, std::uint8_t fill = 0) : width_(width), height_(height) {
        if (width < 1) throw InvalidParameter("width", "must be >= 1");
        if (height < 1) throw InvalidParameter("height", "must be >= 1");
        data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }

    Grid(int width, int height, std::vector<std::uint8_t> data)
        : width_(width), height_(height), data_(std::move(data)) {
        if (width < 1) throw InvalidParameter("width", "must be >= 1");
        if (height < 1) throw InvalidParameter("height", "must be >= 1");
        if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
            throw InvalidParameter("data", "length must equal width*height");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::uint8_t operator[](std::size_t i) const noexcept { return data_[i]; }
    std::uint8_t& operator[](std::size_t i) noexcept { return data_[i]; }
    std::uint8_t at(int x, int y) const { return data_.at(index(x, y)); }
    std::uint8_t& at(int x, int y) { return data_.at(index(x, y)); }

    const std::vector<std::uint8_t>& data() const noexcept { return data_; }
    std::vector<std::uint8_t>& data() noexcept { return data_; }

    bool same_shape(const Grid& o) const noexcept {
        return width_ == o.width_ && height_ == o.height_;
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t index(int x, int y) const {
        if (x < 0 || y < 0 || x >= width_ || y >= height_) throw std::out_of_range("pixel out of range");
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

struct FrameTag {};
struct MaskTag {};

/// Single-channel intensity image.
using Frame = Grid<FrameTag>;
/// Per-pixel labels in {0, 127, 255}.
using Mask = Grid<MaskTag>;

inline bool masks_equal(const Mask& a, const Mask& b) noexcept { return a == b; }

inline bool is_valid_label(std::uint8_t v) noexcept {
    return v == label::background || v == label::shadow || v == label::foreground;
}

inline std::size_t count_nonzero(const Mask& m) noexcept {
    return static_cast<std::size_t>(
        std::count_if(m.data().begin(), m.data().end(), [](std::uint8_t v) { return v != 0; }));
}

/// Luma (0.299, 0.587, 0.114), rounded half up.
constexpr std::uint8_t to_grayscale(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
    // Integer form: weights scaled by 1000 keep the .5 boundary exact.
    const std::uint32_t scaled = 299u * r + 587u * g + 114u * b;
    const std::uint32_t rounded = (scaled + 500u) / 1000u;
    return static_cast<std::uint8_t>(rounded > 255u ? 255u : rounded);
}

// ============================================================================
// Subtractor contract
// ============================================================================

/// apply() consumes one frame and returns its mask; reset() restores the
/// freshly constructed state.
template <class S>
concept Subtractor = requires(S& s, const Frame& f) {
    { s.apply(f) } -> std::convertible_to<Mask>;
    s.reset();
};

/// Type-erased base for runtime algorithm selection.
class BackgroundSubtractor {
public:
    virtual ~BackgroundSubtractor() = default;

    virtual Mask apply(const Frame& frame) = 0;
    virtual void reset() = 0;
    virtual std::string_view name() const noexcept = 0;
    virtual std::size_t frames_seen() const noexcept = 0;

    /// Upper bound on internal pixel-parallel workers (>= 1).
    void set_workers(unsigned n) noexcept { workers_ = n == 0 ? 1 : n; }
    unsigned workers() const noexcept { return workers_; }

protected:
    unsigned workers_ = 1;
};

// ============================================================================
// Parallelism
// ============================================================================

/// Worker cap from BGSUB_THREADS; 1 when unset or unparsable.
inline unsigned workers_from_env() {
    const char* env = std::getenv("BGSUB_THREADS");
    if (env == nullptr) return 1;
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || v < 1) return 1;
    return static_cast<unsigned>(std::min<long>(v, 256));
}

/// Runs fn(rowBegin, rowEnd) over [0, rows) split into at most `workers`
/// contiguous chunks. Sequential when workers <= 1.
template <class Fn>
void parallel_rows(int rows, unsigned workers, Fn&& fn) {
    const unsigned n = std::min<unsigned>(std::max(1u, workers), static_cast<unsigned>(std::max(rows, 1)));
    if (n <= 1) {
        fn(0, rows);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(n - 1);
    const int chunk = (rows + static_cast<int>(n) - 1) / static_cast<int>(n);
    for (unsigned w = 1; w < n; ++w) {
        const int b = static_cast<int>(w) * chunk;
        const int e = std::min(rows, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    fn(0, std::min(rows, chunk));
}

namespace detail {

inline void require_shape(int modelW, int modelH, const Frame& f) {
    if (f.width() != modelW || f.height() != modelH)
        throw DimensionMismatch(modelW, modelH, f.width(), f.height());
}

inline void require_dims(int width, int height) {
    if (width < 1) throw InvalidParameter("width", "must be >= 1");
    if (height < 1) throw InvalidParameter("height", "must be >= 1");
}

}  // namespace detail

}  // namespace bgsub
