#pragma once

/**
 * @file bgsub/frameio.hpp
 * @brief Numbered image sequences: 8-bit PGM (P5), PPM (P6) and PNG frames
 *        and masks.
 *
 * Color input is reduced to intensity with to_grayscale(). Masks are always
 * written as 8-bit grayscale. PNG goes through libpng's simplified API.
 */

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bgsub/core.hpp"

namespace bgsub {

namespace fs = std::filesystem;

class IoError : public Error {
public:
    IoError(const fs::path& path, const std::string& what)
        : Error(path.string() + ": " + what), path_(path) {}

    const fs::path& path() const noexcept { return path_; }

private:
    fs::path path_;
};

class FileNotFound : public IoError {
public:
    explicit FileNotFound(const fs::path& path) : IoError(path, "no such file") {}
};

class CorruptImage : public IoError {
public:
    using IoError::IoError;
};

class UnsupportedBitDepth : public IoError {
public:
    using IoError::IoError;
};

class UnsupportedFormat : public IoError {
public:
    using IoError::IoError;
};

class NonconformingValue : public IoError {
public:
    NonconformingValue(const fs::path& path, int x, int y, int value)
        : IoError(path, "nonconforming mask value " + std::to_string(value) + " at (" + std::to_string(x) + ", " +
                            std::to_string(y) + ")"),
          x_(x), y_(y), value_(value) {}

    int x() const noexcept { return x_; }
    int y() const noexcept { return y_; }
    int value() const noexcept { return value_; }

private:
    int x_, y_, value_;
};

enum class MaskKind {
    prediction,   // {0, 127, 255}
    groundTruth,  // {0, 255}
};

namespace detail {

struct RawImage {
    int width = 0;
    int height = 0;
    int channels = 0;  // 1 or 3
    std::vector<std::uint8_t> pixels;
};

inline std::vector<std::uint8_t> read_bytes(const fs::path& path) {
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) throw FileNotFound(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, "cannot open for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const fs::path& path, const std::string& header, const std::vector<std::uint8_t>& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path, "cannot open for writing");
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(body.data()), static_cast<std::streamsize>(body.size()));
    if (!out) throw IoError(path, "write failed");
}

inline RawImage decode_pnm(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    std::size_t pos = 2;
    const int channels = bytes[1] == '5' ? 1 : 3;
    auto skip_space = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_uint = [&](const char* field) {
        skip_space();
        if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
            throw CorruptImage(path, std::string("bad header field '") + field + "'");
        long v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos++] - '0');
            if (v > 1'000'000) throw CorruptImage(path, std::string("header field '") + field + "' too large");
        }
        return static_cast<int>(v);
    };
    const int w = read_uint("width");
    const int h = read_uint("height");
    const int maxval = read_uint("maxval");
    if (w < 1 || h < 1) throw CorruptImage(path, "zero image dimension");
    if (maxval < 1) throw CorruptImage(path, "maxval must be positive");
    if (maxval > 255) throw UnsupportedBitDepth(path, "16-bit samples are not supported");
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) throw CorruptImage(path, "missing raster separator");
    ++pos;
    const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * channels;
    if (bytes.size() - pos < need) throw CorruptImage(path, "truncated raster");
    RawImage img{w, h, channels, {}};
    img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
    return img;
}

inline RawImage decode_png(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw CorruptImage(path, std::string("png: ") + image.message);
    if (image.format & PNG_FORMAT_FLAG_LINEAR) {
        png_image_free(&image);
        throw UnsupportedBitDepth(path, "16-bit samples are not supported");
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    RawImage img{static_cast<int>(image.width), static_cast<int>(image.height), color ? 3 : 1, {}};
    img.pixels.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, img.pixels.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw CorruptImage(path, "png: " + msg);
    }
    return img;
}

inline RawImage read_image(const fs::path& path) {
    const std::vector<std::uint8_t> bytes = read_bytes(path);
    static constexpr std::uint8_t kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (bytes.size() >= 8 && std::equal(std::begin(kPngMagic), std::end(kPngMagic), bytes.begin()))
        return decode_png(path, bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) return decode_pnm(path, bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] >= '1' && bytes[1] <= '7')
        throw UnsupportedFormat(path, "only binary PGM (P5) and PPM (P6) are supported");
    throw UnsupportedFormat(path, "unrecognized image format");
}

inline std::vector<std::uint8_t> to_intensity(const RawImage& img) {
    if (img.channels == 1) return img.pixels;
    std::vector<std::uint8_t> out(static_cast<std::size_t>(img.width) * img.height);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = to_grayscale(img.pixels[3 * i], img.pixels[3 * i + 1], img.pixels[3 * i + 2]);
    return out;
}

inline std::string lower_extension(const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

inline void write_gray(const fs::path& path, int width, int height, const std::vector<std::uint8_t>& data) {
    const std::string ext = lower_extension(path);
    if (ext == ".pgm") {
        write_bytes(path, "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n", data);
    } else if (ext == ".png") {
        png_image image{};
        image.version = PNG_IMAGE_VERSION;
        image.width = static_cast<png_uint_32>(width);
        image.height = static_cast<png_uint_32>(height);
        image.format = PNG_FORMAT_GRAY;
        png_alloc_size_t size = 0;
        if (!png_image_write_get_memory_size(image, size, 0, data.data(), 0, nullptr))
            throw IoError(path, std::string("png encode: ") + image.message);
        std::vector<std::uint8_t> buf(size);
        if (!png_image_write_to_memory(&image, buf.data(), &size, 0, data.data(), 0, nullptr))
            throw IoError(path, std::string("png encode: ") + image.message);
        buf.resize(size);
        write_bytes(path, {}, buf);
    } else {
        throw UnsupportedFormat(path, "cannot write '" + ext + "' (use .pgm or .png)");
    }
}

}  // namespace detail

inline Frame load_frame(const fs::path& path) {
    detail::RawImage img = detail::read_image(path);
    return Frame(img.width, img.height, detail::to_intensity(img));
}

inline void write_frame(const Frame& frame, const fs::path& path) {
    detail::write_gray(path, frame.width(), frame.height(), frame.data());
}

inline Mask load_mask(const fs::path& path, MaskKind kind = MaskKind::prediction) {
    detail::RawImage img = detail::read_image(path);
    std::vector<std::uint8_t> data = detail::to_intensity(img);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const std::uint8_t v = data[i];
        const bool ok = v == label::background || v == label::foreground ||
                        (v == label::shadow && kind == MaskKind::prediction);
        if (!ok)
            throw NonconformingValue(path, static_cast<int>(i % static_cast<std::size_t>(img.width)),
                                     static_cast<int>(i / static_cast<std::size_t>(img.width)), v);
    }
    return Mask(img.width, img.height, std::move(data));
}

inline void write_mask(const Mask& mask, const fs::path& path) {
    detail::write_gray(path, mask.width(), mask.height(), mask.data());
}

// ============================================================================
// Sequences
// ============================================================================

/// printf-style file name pattern with exactly one `%0Nd` (or `%d`) field.
class IndexPattern {
public:
    IndexPattern() = default;

    explicit IndexPattern(const std::string& pattern) {
        const auto pct = pattern.find('%');
        if (pct == std::string::npos) throw InvalidParameter("pattern", "missing %d index field in '" + pattern + "'");
        std::size_t p = pct + 1;
        while (p < pattern.size() && std::isdigit(static_cast<unsigned char>(pattern[p]))) ++p;
        if (p >= pattern.size() || pattern[p] != 'd')
            throw InvalidParameter("pattern", "index field must look like %06d in '" + pattern + "'");
        const std::string digits = pattern.substr(pct + 1, p - pct - 1);
        width_ = digits.empty() ? 0 : std::stoi(digits);
        prefix_ = pattern.substr(0, pct);
        suffix_ = pattern.substr(p + 1);
        if (suffix_.find('%') != std::string::npos) throw InvalidParameter("pattern", "more than one % field");
    }

    std::string format(long index) const {
        std::string digits = std::to_string(index);
        if (static_cast<int>(digits.size()) < width_) digits.insert(0, static_cast<std::size_t>(width_) - digits.size(), '0');
        return prefix_ + digits + suffix_;
    }

    /// Index encoded in `name`, if it matches the pattern.
    std::optional<long> parse(const std::string& name) const {
        if (name.size() <= prefix_.size() + suffix_.size()) return std::nullopt;
        if (name.compare(0, prefix_.size(), prefix_) != 0) return std::nullopt;
        if (name.compare(name.size() - suffix_.size(), suffix_.size(), suffix_) != 0) return std::nullopt;
        const std::string digits = name.substr(prefix_.size(), name.size() - prefix_.size() - suffix_.size());
        if (digits.empty() || digits.size() > 12 ||
            !std::all_of(digits.begin(), digits.end(), [](unsigned char c) { return std::isdigit(c); }))
            return std::nullopt;
        if (width_ > 0 && static_cast<int>(digits.size()) < width_) return std::nullopt;
        return std::stol(digits);
    }

private:
    std::string prefix_;
    std::string suffix_;
    int width_ = 0;
};

/// A contiguous, inclusive run of numbered files in one directory.
struct SequenceRef {
    fs::path directory;
    std::string pattern;
    long startIndex = 0;
    long endIndex = 0;

    fs::path path(long index) const { return directory / IndexPattern(pattern).format(index); }
    std::size_t length() const noexcept { return static_cast<std::size_t>(endIndex - startIndex + 1); }
};

/// Validates that every file of [start, end] exists.
inline SequenceRef open_sequence(const fs::path& directory, const std::string& pattern, long start, long end) {
    if (end < start) throw InvalidParameter("endIndex", "must be >= startIndex");
    SequenceRef ref{directory, pattern, start, end};
    const IndexPattern pat(pattern);
    for (long i = start; i <= end; ++i) {
        const fs::path p = directory / pat.format(i);
        std::error_code ec;
        if (!fs::is_regular_file(p, ec)) throw FileNotFound(p);
    }
    return ref;
}

/// Every index in `directory` matching `pattern`, ascending.
inline std::map<long, fs::path> list_indexed(const fs::path& directory, const std::string& pattern) {
    std::error_code ec;
    if (!fs::is_directory(directory, ec)) throw IoError(directory, "not a directory");
    const IndexPattern pat(pattern);
    std::map<long, fs::path> out;
    for (const auto& entry : fs::directory_iterator(directory)) {
        if (!entry.is_regular_file()) continue;
        if (auto idx = pat.parse(entry.path().filename().string())) out.emplace(*idx, entry.path());
    }
    return out;
}

/// The full index range present in `directory`; it must have no gaps.
inline SequenceRef discover_sequence(const fs::path& directory, const std::string& pattern) {
    const auto files = list_indexed(directory, pattern);
    if (files.empty()) throw IoError(directory, "no files match '" + pattern + "'");
    const long first = files.begin()->first;
    const long last = files.rbegin()->first;
    if (static_cast<long>(files.size()) != last - first + 1)
        throw IoError(directory, "sequence '" + pattern + "' has gaps");
    return SequenceRef{directory, pattern, first, last};
}

}  // namespace bgsub
