#include "handcue/skintrack.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>

namespace handcue::skintrack {

using imgcore::BinaryMask;
using imgcore::Frame;

// ---------------------------------------------------------------- cascade

void CascadeModel::validate() const {
    if (window_w < 1 || window_h < 1) throw Error(Errc::model, "cascade window must be at least 1x1");
    for (std::size_t s = 0; s < stages.size(); ++s) {
        const auto& st = stages[s];
        if (std::isnan(st.threshold)) throw Error(Errc::model, "stage threshold is NaN");
        for (const auto& wc : st.weak) {
            if (!std::isfinite(wc.split_threshold) || !std::isfinite(wc.left_value) ||
                !std::isfinite(wc.right_value))
                throw Error(Errc::model, "weak classifier values must be finite");
            for (const auto& r : wc.feature) {
                if (r.x < 0 || r.y < 0 || r.w < 1 || r.h < 1 || r.x + r.w > window_w || r.y + r.h > window_h)
                    throw Error(Errc::model, "feature rect outside the base window in stage " +
                                                 std::to_string(s));
                if (!std::isfinite(r.weight)) throw Error(Errc::model, "feature weight must be finite");
            }
        }
    }
}

namespace {

class TokenReader {
public:
    explicit TokenReader(std::istream& in) : in_(in) {}

    std::string word() {
        std::string tok;
        if (!(in_ >> tok)) throw Error(Errc::format, "unexpected end of cascade file");
        return tok;
    }

    double real() {
        const std::string tok = word();
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0') throw Error(Errc::format, "expected a number, got '" + tok + "'");
        return v;
    }

    long integer() {
        const std::string tok = word();
        long v = 0;
        const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || p != tok.data() + tok.size())
            throw Error(Errc::format, "expected an integer, got '" + tok + "'");
        return v;
    }

    std::size_t count() {
        const long v = integer();
        if (v < 0 || v > 1'000'000) throw Error(Errc::format, "implausible count " + std::to_string(v));
        return static_cast<std::size_t>(v);
    }

private:
    std::istream& in_;
};

std::string fmt_real(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

}  // namespace

CascadeModel read_cascade(std::istream& in) {
    TokenReader rd(in);
    if (rd.word() != "HCAS1") throw Error(Errc::format, "missing HCAS1 header");
    CascadeModel m;
    m.window_w = static_cast<int>(rd.integer());
    m.window_h = static_cast<int>(rd.integer());
    m.stages.resize(rd.count());
    for (auto& st : m.stages) {
        st.threshold = rd.real();
        st.weak.resize(rd.count());
        for (auto& wc : st.weak) {
            wc.feature.resize(rd.count());
            for (auto& r : wc.feature) {
                r.x = static_cast<int>(rd.integer());
                r.y = static_cast<int>(rd.integer());
                r.w = static_cast<int>(rd.integer());
                r.h = static_cast<int>(rd.integer());
                r.weight = rd.real();
            }
            wc.split_threshold = rd.real();
            wc.left_value = rd.real();
            wc.right_value = rd.real();
        }
    }
    m.validate();
    return m;
}

void write_cascade(std::ostream& out, const CascadeModel& m) {
    out << "HCAS1\n" << m.window_w << ' ' << m.window_h << '\n' << m.stages.size() << '\n';
    for (const auto& st : m.stages) {
        out << fmt_real(st.threshold) << ' ' << st.weak.size() << '\n';
        for (const auto& wc : st.weak) {
            out << wc.feature.size() << '\n';
            for (const auto& r : wc.feature)
                out << r.x << ' ' << r.y << ' ' << r.w << ' ' << r.h << ' ' << fmt_real(r.weight) << '\n';
            out << fmt_real(wc.split_threshold) << ' ' << fmt_real(wc.left_value) << ' '
                << fmt_real(wc.right_value) << '\n';
        }
    }
    if (!out) throw Error(Errc::io, "failed writing cascade");
}

CascadeModel load_cascade(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io, "cannot open " + path.string());
    return read_cascade(in);
}

void save_cascade(const std::filesystem::path& path, const CascadeModel& model) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::io, "cannot open " + path.string() + " for writing");
    write_cascade(out, model);
}

std::vector<Roi> scan_cascade(const Frame& gray, const CascadeModel& model, double scale_factor) {
    model.validate();
    if (!(scale_factor > 1.0)) throw Error(Errc::parameter, "scale_factor must be > 1");
    if (gray.channels() != 1) throw Error(Errc::parameter, "cascade scan needs a gray frame");
    const imgcore::IntegralImage ii(gray);
    const int W = gray.width(), H = gray.height();

    struct ScaledRect {
        int x, y, w, h;
        double weight;
    };
    std::vector<Roi> passes;
    for (double s = 1.0;; s *= scale_factor) {
        const int sw = static_cast<int>(std::lround(model.window_w * s));
        const int sh = static_cast<int>(std::lround(model.window_h * s));
        if (sw > W || sh > H) break;
        const int step = std::max(1, static_cast<int>(std::lround(s / 10.0)));

        // Rects scaled once per scale and clipped to the scaled window.
        std::vector<std::vector<std::vector<ScaledRect>>> scaled(model.stages.size());
        for (std::size_t si = 0; si < model.stages.size(); ++si) {
            for (const auto& wc : model.stages[si].weak) {
                std::vector<ScaledRect> rs;
                for (const auto& r : wc.feature) {
                    const int x = std::min(static_cast<int>(std::lround(r.x * s)), sw - 1);
                    const int y = std::min(static_cast<int>(std::lround(r.y * s)), sh - 1);
                    const int w = std::clamp(static_cast<int>(std::lround(r.w * s)), 1, sw - x);
                    const int h = std::clamp(static_cast<int>(std::lround(r.h * s)), 1, sh - y);
                    rs.push_back({x, y, w, h, r.weight});
                }
                scaled[si].push_back(std::move(rs));
            }
        }

        const double area = static_cast<double>(sw) * sh;
        for (int y = 0; y + sh <= H; y += step) {
            for (int x = 0; x + sw <= W; x += step) {
                const double mean = ii.sum_unchecked(x, y, sw, sh) / area;
                const double var = ii.sq_sum_unchecked(x, y, sw, sh) / area - mean * mean;
                const double norm = area * std::max(1.0, std::sqrt(std::max(var, 0.0)));
                bool pass = true;
                for (std::size_t si = 0; si < model.stages.size() && pass; ++si) {
                    const auto& st = model.stages[si];
                    double total = 0.0;
                    for (std::size_t wi = 0; wi < st.weak.size(); ++wi) {
                        double f = 0.0;
                        for (const auto& r : scaled[si][wi])
                            f += r.weight * static_cast<double>(ii.sum_unchecked(x + r.x, y + r.y, r.w, r.h));
                        const auto& wc = st.weak[wi];
                        total += (f / norm < wc.split_threshold) ? wc.left_value : wc.right_value;
                    }
                    pass = total >= st.threshold;
                }
                if (pass) passes.push_back({x, y, sw, sh});
            }
        }
    }
    return passes;
}

namespace {

void sort_rois(std::vector<Roi>& rois) {
    std::stable_sort(rois.begin(), rois.end(), [](const Roi& a, const Roi& b) {
        if (a.area() != b.area()) return a.area() > b.area();
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });
}

}  // namespace

std::vector<Roi> group_detections(std::vector<Roi> raw, int min_neighbors) {
    if (min_neighbors < 0) throw Error(Errc::parameter, "min_neighbors must be >= 0");
    if (min_neighbors == 0) {
        sort_rois(raw);
        return raw;
    }
    std::vector<std::size_t> parent(raw.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < raw.size(); ++i)
        for (std::size_t j = i + 1; j < raw.size(); ++j)
            if (imgcore::iou(raw[i], raw[j]) > 0.3) parent[find(i)] = find(j);

    struct Acc {
        double x = 0, y = 0, w = 0, h = 0;
        int n = 0;
    };
    std::vector<Acc> acc(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        auto& a = acc[find(i)];
        a.x += raw[i].x;
        a.y += raw[i].y;
        a.w += raw[i].w;
        a.h += raw[i].h;
        ++a.n;
    }
    std::vector<Roi> out;
    for (const auto& a : acc) {
        if (a.n == 0 || a.n < min_neighbors) continue;
        out.push_back({static_cast<int>(std::lround(a.x / a.n)), static_cast<int>(std::lround(a.y / a.n)),
                       static_cast<int>(std::lround(a.w / a.n)), static_cast<int>(std::lround(a.h / a.n))});
    }
    sort_rois(out);
    return out;
}

std::vector<Roi> viola_jones_detect(const Frame& gray, const CascadeModel& model, double scale_factor,
                                    int min_neighbors) {
    return group_detections(scan_cascade(gray, model, scale_factor), min_neighbors);
}

std::vector<Roi> blob_detect(const BinaryMask& foreground, std::size_t min_area) {
    std::vector<Roi> out;
    for (const auto& b : imgcore::connected_components(foreground))
        if (b.area >= min_area) out.push_back(b.bbox);
    return out;
}

// ---------------------------------------------------------------- skin

int SkinModel::bin_of(double hue_deg) const noexcept {
    const int n = bins();
    const int b = static_cast<int>(std::floor(hue_deg * n / 360.0));
    return std::clamp(b, 0, n - 1);
}

SkinModel build_skin_model(const Frame& frame, const Roi& face, const SkinParams& params) {
    if (params.bins < 1) throw Error(Errc::parameter, "skin histogram needs at least one bin");
    if (face.x < 0 || face.y < 0 || face.w < 1 || face.h < 1 || face.x + face.w > frame.width() ||
        face.y + face.h > frame.height())
        throw Error(Errc::bounds, "face ROI outside the frame");
    SkinModel m;
    m.sat_min = params.sat_min;
    m.val_min = params.val_min;
    m.hue_hist.assign(params.bins, 0.0);

    const int cw = std::max(1, static_cast<int>(std::lround(face.w * params.core_fraction)));
    const int ch = std::max(1, static_cast<int>(std::lround(face.h * params.core_fraction)));
    const int x0 = face.x + (face.w - cw) / 2, y0 = face.y + (face.h - ch) / 2;
    std::size_t n = 0;
    for (int y = y0; y < y0 + ch; ++y)
        for (int x = x0; x < x0 + cw; ++x) {
            const auto hsv = imgcore::to_hsv(frame.rgb(static_cast<std::size_t>(y) * frame.width() + x));
            if (!m.gated(hsv)) continue;
            m.hue_hist[m.bin_of(hsv.h)] += 1.0;
            ++n;
        }
    if (n == 0) throw Error(Errc::empty_model, "no coloured pixels in the face sample");
    for (auto& v : m.hue_hist) v /= static_cast<double>(n);
    return m;
}

SkinModel skin_prior(double lo_deg, double hi_deg, const SkinParams& params) {
    SkinModel m;
    m.sat_min = params.sat_min;
    m.val_min = params.val_min;
    m.hue_hist.assign(params.bins, 0.0);
    const double width = 360.0 / params.bins;
    int n = 0;
    for (int b = 0; b < params.bins; ++b) {
        const double centre = (b + 0.5) * width;
        if (centre >= lo_deg && centre < hi_deg) {
            m.hue_hist[b] = 1.0;
            ++n;
        }
    }
    if (n == 0) throw Error(Errc::empty_model, "skin prior hue range covers no bin centre");
    for (auto& v : m.hue_hist) v /= n;
    return m;
}

Frame backproject(const Frame& frame, const SkinModel& model) {
    if (model.hue_hist.empty()) throw Error(Errc::empty_model, "backprojection needs a skin model");
    const double max_bin = *std::max_element(model.hue_hist.begin(), model.hue_hist.end());
    if (!(max_bin > 0.0)) throw Error(Errc::empty_model, "skin histogram is all zero");
    std::vector<std::uint8_t> lut(model.hue_hist.size());
    for (std::size_t b = 0; b < lut.size(); ++b)
        lut[b] = static_cast<std::uint8_t>(std::lround(255.0 * model.hue_hist[b] / max_bin));

    Frame out(frame.width(), frame.height(), 1, frame.timestamp());
    auto dst = out.data();
    for (std::size_t i = 0; i < frame.pixel_count(); ++i) {
        const auto hsv = imgcore::to_hsv(frame.rgb(i));
        dst[i] = model.gated(hsv) ? lut[model.bin_of(hsv.h)] : 0;
    }
    return out;
}

// ---------------------------------------------------------------- camshift

namespace {

struct Moments {
    double m00 = 0, m10 = 0, m01 = 0;
};

Moments moments(const Frame& prob, const Roi& r) {
    Moments m;
    const auto px = prob.data();
    for (int y = r.y; y < r.y + r.h; ++y) {
        const std::size_t row = static_cast<std::size_t>(y) * prob.width();
        double rs = 0, rx = 0;
        for (int x = r.x; x < r.x + r.w; ++x) {
            const double v = px[row + x];
            rs += v;
            rx += v * x;
        }
        m.m00 += rs;
        m.m10 += rx;
        m.m01 += rs * y;
    }
    return m;
}

Roi clamp_roi(Roi r, int W, int H) {
    r.w = std::clamp(r.w, 1, W);
    r.h = std::clamp(r.h, 1, H);
    r.x = std::clamp(r.x, 0, W - r.w);
    r.y = std::clamp(r.y, 0, H - r.h);
    return r;
}

Roi centred(double cx, double cy, int w, int h, int W, int H) {
    return clamp_roi({static_cast<int>(std::lround(cx - (w - 1) / 2.0)),
                      static_cast<int>(std::lround(cy - (h - 1) / 2.0)), w, h},
                     W, H);
}

}  // namespace

TrackState camshift_track(const Frame& prob, TrackState state, const CamshiftParams& params,
                          std::vector<double>* m00_trace) {
    if (prob.channels() != 1) throw Error(Errc::parameter, "camshift needs a single-channel probability image");
    const int W = prob.width(), H = prob.height();
    Roi win = clamp_roi(state.window, W, H);
    Moments m = moments(prob, win);
    if (m.m00 <= 0.0) {
        state.window = win;
        state.lost = true;
        return state;
    }
    if (m00_trace) m00_trace->push_back(m.m00);

    for (int it = 0; it < params.max_iterations; ++it) {
        const double cx = m.m10 / m.m00, cy = m.m01 / m.m00;
        const double ox = win.x + (win.w - 1) / 2.0, oy = win.y + (win.h - 1) / 2.0;
        if (std::hypot(cx - ox, cy - oy) < 1.0) break;
        const Roi next = centred(cx, cy, win.w, win.h, W, H);
        if (next == win) break;
        const Moments nm = moments(prob, next);
        // mass must not drop; otherwise stop at the current window
        if (nm.m00 < m.m00) break;
        win = next;
        m = nm;
        if (m00_trace) m00_trace->push_back(m.m00);
    }

    const int max_side = std::min(W, H);
    const int side = std::clamp(static_cast<int>(std::lround(2.0 * std::sqrt(m.m00 / 255.0))),
                                std::min(params.min_side, max_side), max_side);
    const double ox = win.x + (win.w - 1) / 2.0, oy = win.y + (win.h - 1) / 2.0;
    state.window = centred(ox, oy, side, side, W, H);
    state.lost = m.m00 < params.lost_threshold;
    return state;
}

// ---------------------------------------------------------------- tracker

CascadeDetector::CascadeDetector(CascadeModel model, double scale_factor, int min_neighbors)
    : model_(std::move(model)), scale_factor_(scale_factor), min_neighbors_(min_neighbors) {
    model_.validate();
}

std::vector<Roi> CascadeDetector::detect(const Frame& frame, const BinaryMask&) const {
    return viola_jones_detect(imgcore::to_gray(frame), model_, scale_factor_, min_neighbors_);
}

std::vector<Roi> BlobDetector::detect(const Frame&, const BinaryMask& foreground) const {
    return blob_detect(foreground, min_area_);
}

TrackerOutput tracker_step(const Frame& frame, const BinaryMask& foreground, const TrackState& in,
                           const Detector& detector, const SkinModel& skin, const TrackerParams& params) {
    if (in.reinit_period < 1) throw Error(Errc::parameter, "reinit_period must be >= 1");
    TrackerOutput out;
    out.state = in;
    auto& st = out.state;
    if (st.lost || st.frames_since_reinit + 1 >= st.reinit_period) {
        out.detector_ran = true;
        st.frames_since_reinit = 0;
        const auto rois = detector.detect(frame, foreground);
        if (!rois.empty()) {
            st.window = rois.front();
            st.lost = false;
        } else if (st.lost) {
            out.skin_mask = BinaryMask(frame.width(), frame.height());
            return out;
        }
    } else {
        st.frames_since_reinit += 1;
    }
    const Frame prob = backproject(frame, skin);
    st = camshift_track(prob, st, params.camshift);
    out.skin_mask = imgcore::threshold(prob, params.skin_threshold);
    return out;
}

}  // namespace handcue::skintrack
