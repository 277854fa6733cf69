#include "handcue/imgcore.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace handcue {

const char* to_string(Errc code) noexcept {
    switch (code) {
        case Errc::bounds: return "bounds error";
        case Errc::parameter: return "parameter error";
        case Errc::dimension: return "dimension mismatch";
        case Errc::training: return "training error";
        case Errc::model: return "model error";
        case Errc::degenerate_shape: return "degenerate shape";
        case Errc::empty_model: return "empty model";
        case Errc::empty_db: return "empty database";
        case Errc::shape_mismatch: return "shape mismatch";
        case Errc::time_regression: return "time regression";
        case Errc::io: return "i/o error";
        case Errc::format: return "format error";
    }
    return "error";
}

}  // namespace handcue

namespace handcue::imgcore {

namespace {

std::uint8_t clamp_u8(double v) noexcept {
    const long r = std::lround(v);
    return static_cast<std::uint8_t>(std::clamp<long>(r, 0, 255));
}

inline int clampi(int v, int lo, int hi) noexcept { return v < lo ? lo : (v > hi ? hi : v); }

// Separable blur in real arithmetic; shared by gaussian_blur and canny.
std::vector<double> blur_real(const Frame& gray, double sigma) {
    const auto kernel = gaussian_kernel(sigma);
    const int radius = static_cast<int>(kernel.size() / 2);
    const int w = gray.width(), h = gray.height();
    std::vector<double> tmp(gray.pixel_count()), out(gray.pixel_count());
    const auto src = gray.data();
    for (int y = 0; y < h; ++y) {
        const std::size_t row = static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[k + radius] * src[row + clampi(x + k, 0, w - 1)];
            tmp[row + x] = acc;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int k = -radius; k <= radius; ++k)
                acc += kernel[k + radius] *
                       tmp[static_cast<std::size_t>(clampi(y + k, 0, h - 1)) * w + x];
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    return out;
}

// One-dimensional box test along rows or columns using a running count.
// Neighbours outside the image are skipped.
BinaryMask box_pass(const BinaryMask& in, int r, bool horizontal, bool want_all) {
    const int w = in.width(), h = in.height();
    BinaryMask out(w, h);
    const int lines = horizontal ? h : w;
    const int len = horizontal ? w : h;
    std::vector<int> prefix(static_cast<std::size_t>(len) + 1);
    for (int l = 0; l < lines; ++l) {
        prefix[0] = 0;
        for (int i = 0; i < len; ++i) {
            const bool v = horizontal ? in.get(i, l) : in.get(l, i);
            prefix[i + 1] = prefix[i] + (v ? 1 : 0);
        }
        for (int i = 0; i < len; ++i) {
            const int lo = std::max(0, i - r), hi = std::min(len - 1, i + r);
            const int n = prefix[hi + 1] - prefix[lo];
            const bool v = want_all ? n == hi - lo + 1 : n > 0;
            if (horizontal)
                out.set(i, l, v);
            else
                out.set(l, i, v);
        }
    }
    return out;
}

BinaryMask erode(const BinaryMask& m, int r) {
    return box_pass(box_pass(m, r, true, true), r, false, true);
}

BinaryMask dilate(const BinaryMask& m, int r) {
    return box_pass(box_pass(m, r, true, false), r, false, false);
}

constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr int kDy[8] = {0, -1, -1, -1, 0, 1, 1, 1};

}  // namespace

Ycbcr to_ycbcr(Rgb p) noexcept {
    const double r = p.r, g = p.g, b = p.b;
    return {clamp_u8(0.299 * r + 0.587 * g + 0.114 * b),
            clamp_u8(128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b),
            clamp_u8(128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b)};
}

Rgb from_ycbcr(Ycbcr p) noexcept {
    const double y = p.y, cb = p.cb - 128.0, cr = p.cr - 128.0;
    return {clamp_u8(y + 1.402 * cr), clamp_u8(y - 0.344136 * cb - 0.714136 * cr),
            clamp_u8(y + 1.772 * cb)};
}

Hsv to_hsv(Rgb p) noexcept {
    const int mx = std::max({p.r, p.g, p.b});
    const int mn = std::min({p.r, p.g, p.b});
    const int delta = mx - mn;
    Hsv out;
    out.v = static_cast<std::uint8_t>(mx);
    out.s = mx == 0 ? 0 : clamp_u8(255.0 * delta / mx);
    if (delta == 0) return out;
    double h;
    if (mx == p.r)
        h = 60.0 * (static_cast<double>(p.g - p.b) / delta);
    else if (mx == p.g)
        h = 60.0 * (static_cast<double>(p.b - p.r) / delta + 2.0);
    else
        h = 60.0 * (static_cast<double>(p.r - p.g) / delta + 4.0);
    if (h < 0.0) h += 360.0;
    if (h >= 360.0) h -= 360.0;
    out.h = h;
    return out;
}

Rgb from_hsv(double hue_deg, double s, double v) noexcept {
    hue_deg = std::fmod(hue_deg, 360.0);
    if (hue_deg < 0) hue_deg += 360.0;
    const double c = v * s;
    const double hp = hue_deg / 60.0;
    const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(hp)) {
        case 0: r = c; g = x; break;
        case 1: r = x; g = c; break;
        case 2: g = c; b = x; break;
        case 3: g = x; b = c; break;
        case 4: r = x; b = c; break;
        default: r = c; b = x; break;
    }
    const double m = v - c;
    return {clamp_u8(255.0 * (r + m)), clamp_u8(255.0 * (g + m)), clamp_u8(255.0 * (b + m))};
}

Frame::Frame(int width, int height, int channels, double timestamp)
    : width_(width), height_(height), channels_(channels), timestamp_(timestamp) {
    if (width < 1 || height < 1) throw Error(Errc::parameter, "frame dimensions must be >= 1");
    if (channels != 1 && channels != 3) throw Error(Errc::parameter, "frame channels must be 1 or 3");
    data_.assign(pixel_count() * channels, 0);
}

Frame::Frame(int width, int height, int channels, std::vector<std::uint8_t> data, double timestamp)
    : width_(width), height_(height), channels_(channels), timestamp_(timestamp),
      data_(std::move(data)) {
    if (width < 1 || height < 1) throw Error(Errc::parameter, "frame dimensions must be >= 1");
    if (channels != 1 && channels != 3) throw Error(Errc::parameter, "frame channels must be 1 or 3");
    if (data_.size() != pixel_count() * channels)
        throw Error(Errc::parameter, "frame data length does not match width*height*channels");
}

void Frame::set_rgb(int x, int y, Rgb p) noexcept {
    if (channels_ == 1) {
        at(x, y) = to_ycbcr(p).y;
        return;
    }
    at(x, y, 0) = p.r;
    at(x, y, 1) = p.g;
    at(x, y, 2) = p.b;
}

BinaryMask::BinaryMask(int width, int height, bool fill) : width_(width), height_(height) {
    if (width < 1 || height < 1) throw Error(Errc::parameter, "mask dimensions must be >= 1");
    bits_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

std::size_t BinaryMask::count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

BinaryMask BinaryMask::complement() const {
    BinaryMask out = *this;
    for (auto& b : out.bits_) b = b ? 0 : 1;
    return out;
}

double iou(const Rect& a, const Rect& b) noexcept {
    const int x0 = std::max(a.x, b.x), y0 = std::max(a.y, b.y);
    const int x1 = std::min(a.x + a.w, b.x + b.w), y1 = std::min(a.y + a.h, b.y + b.h);
    const double inter = (x1 > x0 && y1 > y0) ? static_cast<double>(x1 - x0) * (y1 - y0) : 0.0;
    const double uni = static_cast<double>(a.area()) + b.area() - inter;
    return uni > 0 ? inter / uni : 0.0;
}

Frame to_gray(const Frame& frame) {
    if (frame.channels() == 1) return frame;
    Frame out(frame.width(), frame.height(), 1, frame.timestamp());
    auto dst = out.data();
    for (std::size_t i = 0; i < frame.pixel_count(); ++i) dst[i] = to_ycbcr(frame.rgb(i)).y;
    return out;
}

Frame render(const BinaryMask& mask) {
    Frame out(mask.width(), mask.height(), 1);
    auto dst = out.data();
    const auto src = mask.bits();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] ? 255 : 0;
    return out;
}

IntegralImage::IntegralImage(const Frame& gray) : width_(gray.width()), height_(gray.height()) {
    if (gray.channels() != 1) throw Error(Errc::parameter, "integral image needs a gray frame");
    const std::size_t stride = static_cast<std::size_t>(width_) + 1;
    sum_.assign(stride * (height_ + 1), 0);
    sq_.assign(stride * (height_ + 1), 0);
    const auto src = gray.data();
    for (int y = 0; y < height_; ++y) {
        std::int64_t row = 0, row_sq = 0;
        for (int x = 0; x < width_; ++x) {
            const std::int64_t v = src[static_cast<std::size_t>(y) * width_ + x];
            row += v;
            row_sq += v * v;
            sum_[(y + 1) * stride + x + 1] = sum_[y * stride + x + 1] + row;
            sq_[(y + 1) * stride + x + 1] = sq_[y * stride + x + 1] + row_sq;
        }
    }
}

void IntegralImage::check(const Rect& r) const {
    if (r.x < 0 || r.y < 0 || r.w < 0 || r.h < 0 || r.x + r.w > width_ || r.y + r.h > height_)
        throw Error(Errc::bounds, "rect (" + std::to_string(r.x) + "," + std::to_string(r.y) + "," +
                                      std::to_string(r.w) + "," + std::to_string(r.h) +
                                      ") outside " + std::to_string(width_) + "x" +
                                      std::to_string(height_));
}

std::int64_t IntegralImage::rect_sum(const Rect& r) const {
    check(r);
    return sum_unchecked(r.x, r.y, r.w, r.h);
}

std::int64_t IntegralImage::rect_sq_sum(const Rect& r) const {
    check(r);
    return sq_sum_unchecked(r.x, r.y, r.w, r.h);
}

std::int64_t integral_rect_sum(const IntegralImage& table, const Rect& rect) {
    return table.rect_sum(rect);
}

std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0.0)) throw Error(Errc::parameter, "gaussian sigma must be > 0");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * static_cast<std::size_t>(radius) + 1);
    for (int i = -radius; i <= radius; ++i) k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    const double total = std::accumulate(k.begin(), k.end(), 0.0);
    for (auto& v : k) v /= total;
    return k;
}

Frame gaussian_blur(const Frame& gray, double sigma) {
    if (gray.channels() != 1) throw Error(Errc::parameter, "gaussian_blur needs a gray frame");
    const auto blurred = blur_real(gray, sigma);
    Frame out(gray.width(), gray.height(), 1, gray.timestamp());
    auto dst = out.data();
    for (std::size_t i = 0; i < blurred.size(); ++i) dst[i] = clamp_u8(blurred[i]);
    return out;
}

BinaryMask threshold(const Frame& gray, std::uint8_t t) {
    if (gray.channels() != 1) throw Error(Errc::parameter, "threshold needs a gray frame");
    BinaryMask out(gray.width(), gray.height());
    const auto src = gray.data();
    auto dst = out.bits();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] >= t ? 1 : 0;
    return out;
}

BinaryMask morph(const BinaryMask& mask, MorphOp op, int r) {
    if (r < 1) throw Error(Errc::parameter, "morphology kernel radius must be >= 1");
    switch (op) {
        case MorphOp::erode: return erode(mask, r);
        case MorphOp::dilate: return dilate(mask, r);
        case MorphOp::open: return dilate(erode(mask, r), r);
        case MorphOp::close: return erode(dilate(mask, r), r);
    }
    return mask;
}

Labeling label_components(const BinaryMask& mask) {
    const int w = mask.width(), h = mask.height();
    Labeling out;
    out.width = w;
    out.height = h;
    out.labels.assign(mask.size(), 0);

    struct Acc {
        std::size_t area = 0;
        int x0, y0, x1, y1;
        double sx = 0, sy = 0;
    };
    std::vector<Acc> acc;
    std::vector<int> stack;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            if (!mask[idx] || out.labels[idx]) continue;
            const int label = static_cast<int>(acc.size()) + 1;
            Acc a{0, x, y, x, y};
            out.labels[idx] = label;
            stack.push_back(static_cast<int>(idx));
            while (!stack.empty()) {
                const int p = stack.back();
                stack.pop_back();
                const int px = p % w, py = p / w;
                ++a.area;
                a.sx += px;
                a.sy += py;
                a.x0 = std::min(a.x0, px);
                a.x1 = std::max(a.x1, px);
                a.y0 = std::min(a.y0, py);
                a.y1 = std::max(a.y1, py);
                for (int d = 0; d < 8; ++d) {
                    const int nx = px + kDx[d], ny = py + kDy[d];
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const std::size_t n = static_cast<std::size_t>(ny) * w + nx;
                    if (mask[n] && !out.labels[n]) {
                        out.labels[n] = label;
                        stack.push_back(static_cast<int>(n));
                    }
                }
            }
            acc.push_back(a);
        }
    }

    std::vector<Blob> blobs(acc.size());
    for (std::size_t i = 0; i < acc.size(); ++i) {
        const auto& a = acc[i];
        blobs[i] = Blob{static_cast<int>(i) + 1, a.area,
                        Rect{a.x0, a.y0, a.x1 - a.x0 + 1, a.y1 - a.y0 + 1},
                        a.sx / static_cast<double>(a.area), a.sy / static_cast<double>(a.area)};
    }
    std::stable_sort(blobs.begin(), blobs.end(), [](const Blob& a, const Blob& b) {
        if (a.area != b.area) return a.area > b.area;
        if (a.bbox.y != b.bbox.y) return a.bbox.y < b.bbox.y;
        return a.bbox.x < b.bbox.x;
    });
    std::vector<int> remap(blobs.size() + 1, 0);
    for (std::size_t i = 0; i < blobs.size(); ++i) {
        remap[blobs[i].label] = static_cast<int>(i) + 1;
        blobs[i].label = static_cast<int>(i) + 1;
    }
    for (auto& l : out.labels) l = remap[l];
    out.blobs = std::move(blobs);
    return out;
}

std::vector<Blob> connected_components(const BinaryMask& mask) {
    return label_components(mask).blobs;
}

CannyResult canny_detailed(const Frame& gray, const CannyParams& params) {
    if (gray.channels() != 1) throw Error(Errc::parameter, "canny needs a gray frame");
    if (params.t_low && params.t_high && !(*params.t_low > 0 && *params.t_low < *params.t_high))
        throw Error(Errc::parameter, "canny thresholds must satisfy 0 < t_low < t_high");

    const int w = gray.width(), h = gray.height();
    const auto smooth = blur_real(gray, params.sigma);
    auto s = [&](int x, int y) {
        return smooth[static_cast<std::size_t>(clampi(y, 0, h - 1)) * w + clampi(x, 0, w - 1)];
    };

    CannyResult res;
    res.magnitude.assign(gray.pixel_count(), 0.0f);
    std::vector<std::uint8_t> dir(gray.pixel_count(), 0);
    std::vector<std::int8_t> sgn(gray.pixel_count(), 1);
    double max_mag = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double gx = (s(x + 1, y - 1) + 2 * s(x + 1, y) + s(x + 1, y + 1)) -
                              (s(x - 1, y - 1) + 2 * s(x - 1, y) + s(x - 1, y + 1));
            const double gy = (s(x - 1, y + 1) + 2 * s(x, y + 1) + s(x + 1, y + 1)) -
                              (s(x - 1, y - 1) + 2 * s(x, y - 1) + s(x + 1, y - 1));
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const double m = std::hypot(gx, gy);
            res.magnitude[i] = static_cast<float>(m);
            max_mag = std::max(max_mag, m);
            double a = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
            if (a < 0) a += 180.0;
            std::uint8_t d;
            if (a < 22.5 || a >= 157.5)
                d = 0;
            else if (a < 67.5)
                d = 1;
            else if (a < 112.5)
                d = 2;
            else
                d = 3;
            dir[i] = d;
            // +1 when the uphill neighbour lies on the positive step of the axis below.
            const double along = d == 2 ? gy : gx;
            sgn[i] = along >= 0 ? 1 : -1;
        }
    }

    double t_high, t_low;
    if (params.t_high || params.t_low) {
        t_high = params.t_high ? *params.t_high : 2.0 * *params.t_low;
        t_low = params.t_low ? *params.t_low : 0.5 * t_high;
        if (!(t_low > 0 && t_low < t_high))
            throw Error(Errc::parameter, "canny thresholds must satisfy 0 < t_low < t_high");
    } else {
        t_high = 0.2 * max_mag;
        t_low = 0.5 * t_high;
    }
    res.t_low = t_low;
    res.t_high = t_high;
    res.edges = BinaryMask(w, h);
    if (max_mag <= 0.0 || t_high <= 0.0) return res;

    // Axis steps per quantized direction: 0 horizontal, 1 diagonal (+x,+y),
    // 2 vertical, 3 anti-diagonal (+x,-y).
    constexpr int step_x[4] = {1, 1, 0, 1};
    constexpr int step_y[4] = {0, 1, 1, -1};
    const double tol = 1e-7 * max_mag;
    auto mag_at = [&](int x, int y) -> double {
        if (x < 0 || y < 0 || x >= w || y >= h) return 0.0;
        return res.magnitude[static_cast<std::size_t>(y) * w + x];
    };

    // Non-maximum suppression. Plateaus of two equal pixels across a step
    // resolve to the uphill (brighter) pixel so edges stay one pixel wide.
    std::vector<std::uint8_t> cand(gray.pixel_count(), 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const double m = res.magnitude[i];
            if (m < t_low) continue;
            const int d = dir[i];
            const int ux = step_x[d] * sgn[i], uy = step_y[d] * sgn[i];
            const double up = mag_at(x + ux, y + uy);
            const double down = mag_at(x - ux, y - uy);
            if (m - up > tol && m - down >= -tol) cand[i] = 1;
        }
    }

    std::vector<int> stack;
    auto edges = res.edges.bits();
    for (std::size_t i = 0; i < cand.size(); ++i) {
        if (!cand[i] || edges[i] || res.magnitude[i] < t_high) continue;
        edges[i] = 1;
        stack.push_back(static_cast<int>(i));
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            const int px = p % w, py = p / w;
            for (int k = 0; k < 8; ++k) {
                const int nx = px + kDx[k], ny = py + kDy[k];
                if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                const std::size_t n = static_cast<std::size_t>(ny) * w + nx;
                if (cand[n] && !edges[n]) {
                    edges[n] = 1;
                    stack.push_back(static_cast<int>(n));
                }
            }
        }
    }
    return res;
}

BinaryMask canny_edges(const Frame& gray, double sigma, double t_low, double t_high) {
    if (!(t_low > 0 && t_low < t_high))
        throw Error(Errc::parameter, "canny thresholds must satisfy 0 < t_low < t_high");
    CannyParams p;
    p.sigma = sigma;
    p.t_low = t_low;
    p.t_high = t_high;
    return canny_detailed(gray, p).edges;
}

BinaryMask canny_edges(const Frame& gray, const CannyParams& params) {
    return canny_detailed(gray, params).edges;
}

}  // namespace handcue::imgcore
