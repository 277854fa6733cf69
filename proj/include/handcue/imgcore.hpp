#pragma once

// Raster primitives shared by every stage of the gesture pipeline.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "handcue/error.hpp"

namespace handcue::imgcore {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Ycbcr {
    std::uint8_t y = 0, cb = 128, cr = 128;
    friend bool operator==(const Ycbcr&, const Ycbcr&) = default;
};

// Hue in degrees [0, 360); 0 for achromatic pixels.
struct Hsv {
    double h = 0.0;
    std::uint8_t s = 0, v = 0;
};

/// BT.601 full range, chroma offset 128, rounded and clamped to [0, 255].
Ycbcr to_ycbcr(Rgb p) noexcept;
Rgb from_ycbcr(Ycbcr p) noexcept;
Hsv to_hsv(Rgb p) noexcept;
Rgb from_hsv(double hue_deg, double sat01, double val01) noexcept;

/// Interleaved 8-bit raster (1 or 3 channels), row-major.
class Frame {
public:
    Frame() = default;
    Frame(int width, int height, int channels, double timestamp = 0.0);
    Frame(int width, int height, int channels, std::vector<std::uint8_t> data,
          double timestamp = 0.0);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    double timestamp() const noexcept { return timestamp_; }
    void set_timestamp(double t) noexcept { timestamp_ = t; }
    bool empty() const noexcept { return data_.empty(); }
    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }

    std::span<const std::uint8_t> data() const noexcept { return data_; }
    std::span<std::uint8_t> data() noexcept { return data_; }

    std::uint8_t at(int x, int y, int c = 0) const noexcept {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }
    std::uint8_t& at(int x, int y, int c = 0) noexcept {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
    }

    /// Gray frames report (v, v, v).
    Rgb rgb(std::size_t pixel_index) const noexcept {
        const std::size_t o = pixel_index * channels_;
        if (channels_ == 1) return {data_[o], data_[o], data_[o]};
        return {data_[o], data_[o + 1], data_[o + 2]};
    }
    void set_rgb(int x, int y, Rgb p) noexcept;

    friend bool operator==(const Frame& a, const Frame& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ && a.channels_ == b.channels_ &&
               a.data_ == b.data_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 1;
    double timestamp_ = 0.0;
    std::vector<std::uint8_t> data_;
};

/// One boolean per pixel, stored as bytes (0/1) for cheap random access.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(int width, int height, bool fill = false);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return bits_.size(); }

    bool get(int x, int y) const noexcept {
        return bits_[static_cast<std::size_t>(y) * width_ + x] != 0;
    }
    void set(int x, int y, bool v) noexcept {
        bits_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0;
    }
    bool operator[](std::size_t i) const noexcept { return bits_[i] != 0; }

    std::span<const std::uint8_t> bits() const noexcept { return bits_; }
    std::span<std::uint8_t> bits() noexcept { return bits_; }

    std::size_t count() const noexcept;
    bool any() const noexcept { return count() > 0; }
    bool same_shape(const BinaryMask& o) const noexcept {
        return width_ == o.width_ && height_ == o.height_;
    }
    BinaryMask complement() const;

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> bits_;
};

struct Rect {
    int x = 0, y = 0, w = 0, h = 0;
    int area() const noexcept { return w * h; }
    friend bool operator==(const Rect&, const Rect&) = default;
};

double iou(const Rect& a, const Rect& b) noexcept;

/// Single-channel view of a frame: luma (rounded BT.601 Y) for colour input.
Frame to_gray(const Frame& frame);

/// Mask rendered as {0, 255} gray.
Frame render(const BinaryMask& mask);

/// Summed-area table with a zero guard row and column.
class IntegralImage {
public:
    explicit IntegralImage(const Frame& gray);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }

    /// Sum over rect via 4 lookups; throws Errc::bounds when rect leaves the image.
    std::int64_t rect_sum(const Rect& r) const;
    /// Same as rect_sum over squared pixel values.
    std::int64_t rect_sq_sum(const Rect& r) const;

    std::int64_t entry(int x, int y) const noexcept {
        return sum_[static_cast<std::size_t>(y) * (width_ + 1) + x];
    }

    // Unchecked variants for hot scanning loops.
    std::int64_t sum_unchecked(int x, int y, int w, int h) const noexcept {
        const std::size_t s = static_cast<std::size_t>(width_) + 1;
        const std::size_t y0 = static_cast<std::size_t>(y) * s;
        const std::size_t y1 = static_cast<std::size_t>(y + h) * s;
        return sum_[y1 + x + w] - sum_[y0 + x + w] - sum_[y1 + x] + sum_[y0 + x];
    }
    std::int64_t sq_sum_unchecked(int x, int y, int w, int h) const noexcept {
        const std::size_t s = static_cast<std::size_t>(width_) + 1;
        const std::size_t y0 = static_cast<std::size_t>(y) * s;
        const std::size_t y1 = static_cast<std::size_t>(y + h) * s;
        return sq_[y1 + x + w] - sq_[y0 + x + w] - sq_[y1 + x] + sq_[y0 + x];
    }

private:
    void check(const Rect& r) const;

    int width_ = 0;
    int height_ = 0;
    std::vector<std::int64_t> sum_;
    std::vector<std::int64_t> sq_;
};

std::int64_t integral_rect_sum(const IntegralImage& table, const Rect& rect);

/// Normalized Gaussian taps for radius ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

/// Separable blur with clamp-to-border. Throws Errc::parameter for sigma <= 0.
Frame gaussian_blur(const Frame& gray, double sigma);

BinaryMask threshold(const Frame& gray, std::uint8_t t);

enum class MorphOp { erode, dilate, open, close };

/// Square (2r+1)^2 structuring element. Pixels outside the image never
/// contribute to a dilation, so erosion (its dual) ignores them too.
BinaryMask morph(const BinaryMask& mask, MorphOp op, int kernel_radius);

struct Blob {
    int label = 0;
    std::size_t area = 0;
    Rect bbox;
    double cx = 0.0, cy = 0.0;
};

struct Labeling {
    int width = 0, height = 0;
    std::vector<int> labels;  // 0 = background, otherwise blobs[label - 1]
    std::vector<Blob> blobs;
};

/// 8-connected labeling; blobs sorted by area descending, ties by (bbox.y, bbox.x).
Labeling label_components(const BinaryMask& mask);
std::vector<Blob> connected_components(const BinaryMask& mask);

struct CannyParams {
    double sigma = 1.4;
    // Unset thresholds resolve to t_high = 0.2 * max |grad|, t_low = 0.5 * t_high.
    std::optional<double> t_low;
    std::optional<double> t_high;
};

struct CannyResult {
    BinaryMask edges;
    std::vector<float> magnitude;  // per pixel, Sobel on the smoothed image
    double t_low = 0.0;
    double t_high = 0.0;
};

CannyResult canny_detailed(const Frame& gray, const CannyParams& params = {});
BinaryMask canny_edges(const Frame& gray, double sigma, double t_low, double t_high);
BinaryMask canny_edges(const Frame& gray, const CannyParams& params = {});

}  // namespace handcue::imgcore
