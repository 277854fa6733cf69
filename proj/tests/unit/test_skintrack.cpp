#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "doctest.h"
#include "handcue/skintrack.hpp"
#include "support/oracles.hpp"

using namespace handcue;
using namespace handcue::skintrack;
using imgcore::BinaryMask;
using imgcore::Frame;
using imgcore::Rgb;

namespace {

CascadeModel step_feature_cascade(double stage_threshold) {
    CascadeModel m;
    m.window_w = 12;
    m.window_h = 12;
    WeakClassifier wc;
    wc.feature = {{0, 0, 6, 12, -1.0}, {6, 0, 6, 12, 1.0}};
    wc.split_threshold = 0.5;
    wc.left_value = 0.0;
    wc.right_value = 1.0;
    m.stages.push_back({stage_threshold, {wc}});
    return m;
}

Frame grey(int w, int h, std::uint8_t v) {
    Frame f(w, h, 1);
    for (auto& p : f.data()) p = v;
    return f;
}

// Independent scan: same geometry rules, nested-loop rect sums.
std::vector<Roi> brute_force_passes(const Frame& img, const CascadeModel& m, double sf) {
    std::vector<Roi> out;
    for (double s = 1.0;; s *= sf) {
        const int sw = int(std::lround(m.window_w * s)), sh = int(std::lround(m.window_h * s));
        if (sw > img.width() || sh > img.height()) break;
        const int step = std::max(1, int(std::lround(s / 10)));
        for (int y = 0; y + sh <= img.height(); y += step)
            for (int x = 0; x + sw <= img.width(); x += step) {
                const double area = double(sw) * sh;
                const double sum = double(oracle::rect_sum(img, x, y, sw, sh));
                double sq = 0;
                for (int j = y; j < y + sh; ++j)
                    for (int i = x; i < x + sw; ++i) sq += double(img.at(i, j)) * img.at(i, j);
                const double mean = sum / area;
                const double sd = std::max(1.0, std::sqrt(std::max(sq / area - mean * mean, 0.0)));
                bool pass = true;
                for (const auto& st : m.stages) {
                    double total = 0;
                    for (const auto& wc : st.weak) {
                        double f = 0;
                        for (const auto& r : wc.feature) {
                            const int rx = std::min(int(std::lround(r.x * s)), sw - 1);
                            const int ry = std::min(int(std::lround(r.y * s)), sh - 1);
                            const int rw = std::clamp(int(std::lround(r.w * s)), 1, sw - rx);
                            const int rh = std::clamp(int(std::lround(r.h * s)), 1, sh - ry);
                            f += r.weight * double(oracle::rect_sum(img, x + rx, y + ry, rw, rh));
                        }
                        total += f / (area * sd) < wc.split_threshold ? wc.left_value : wc.right_value;
                    }
                    if (total < st.threshold) pass = false;
                }
                if (pass) out.push_back({x, y, sw, sh});
            }
    }
    return out;
}

std::set<std::tuple<int, int, int, int>> as_set(const std::vector<Roi>& v) {
    std::set<std::tuple<int, int, int, int>> s;
    for (const auto& r : v) s.insert({r.x, r.y, r.w, r.h});
    return s;
}

class CountingDetector final : public Detector {
public:
    explicit CountingDetector(std::vector<Roi> answer) : answer_(std::move(answer)) {}
    std::vector<Roi> detect(const Frame&, const BinaryMask&) const override {
        ++calls;
        return answer_;
    }
    mutable int calls = 0;

private:
    std::vector<Roi> answer_;
};

}  // namespace

TEST_CASE("zero-stage cascade accepts every scan position") {
    CascadeModel m;
    m.window_w = 8;
    m.window_h = 6;
    const auto img = grey(30, 20, 10);
    // positions per scale: (W - sw + 1) * (H - sh + 1) with unit steps at these scales
    long expected = 0;
    for (double s = 1.0;; s *= 1.25) {
        const int sw = int(std::lround(8 * s)), sh = int(std::lround(6 * s));
        if (sw > 30 || sh > 20) break;
        expected += long(30 - sw + 1) * (20 - sh + 1);
    }
    const auto rois = viola_jones_detect(img, m, 1.25, 0);
    CHECK(long(rois.size()) == expected);
}

TEST_CASE("impossible stage and constant images reject everything") {
    auto m = step_feature_cascade(std::numeric_limits<double>::infinity());
    std::mt19937 rng(2);
    CHECK(viola_jones_detect(oracle::random_gray(rng, 40, 30), m, 1.2, 0).empty());
    // feature sum is zero on a constant image, so the weak classifier says 0 < 0.5
    CHECK(viola_jones_detect(grey(40, 30, 128), step_feature_cascade(0.5), 1.2, 0).empty());
}

TEST_CASE("single pattern yields one merged detection") {
    Frame img = grey(64, 48, 128);
    const Roi truth{30, 20, 12, 12};
    for (int y = truth.y; y < truth.y + truth.h; ++y)
        for (int x = truth.x; x < truth.x + truth.w; ++x) img.at(x, y) = x < truth.x + 6 ? 0 : 255;
    const auto m = step_feature_cascade(0.5);
    const auto raw = scan_cascade(img, m, 1.2);
    REQUIRE(!raw.empty());
    CHECK(as_set(raw) == as_set(brute_force_passes(img, m, 1.2)));
    const auto merged = viola_jones_detect(img, m, 1.2, 1);
    REQUIRE(merged.size() == 1);
    CHECK(imgcore::iou(merged[0], truth) > 0.5);
}

TEST_CASE("cascade file format") {
    auto m = step_feature_cascade(0.75);
    m.stages.push_back(m.stages[0]);
    m.stages[1].threshold = -0.125;
    std::stringstream s;
    write_cascade(s, m);
    CHECK(s.str().rfind("HCAS1", 0) == 0);
    std::stringstream in(s.str());
    CHECK(read_cascade(in) == m);

    std::stringstream bad_header("HCAS2 1 1 0");
    CHECK_THROWS_AS(read_cascade(bad_header), Error);
    std::stringstream outside("HCAS1 4 4 1 0.5 1 1 2 0 3 4 1.0 0.1 0 1");
    try {
        read_cascade(outside);
        FAIL("expected a model error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::model);
    }
    std::stringstream truncated("HCAS1 4 4 1 0.5");
    CHECK_THROWS_AS(read_cascade(truncated), Error);
}

TEST_CASE("blob detection") {
    CHECK(blob_detect(BinaryMask(20, 20), 1).empty());
    BinaryMask m(40, 30);
    for (int y = 2; y < 12; ++y)
        for (int x = 3; x < 13; ++x) m.set(x, y, true);
    auto rois = blob_detect(m, 50);
    REQUIRE(rois.size() == 1);
    CHECK(rois[0] == Roi{3, 2, 10, 10});
    for (int y = 20; y < 25; ++y)
        for (int x = 20; x < 26; ++x) m.set(x, y, true);  // area 30
    rois = blob_detect(m, 50);
    CHECK(rois.size() == 1);
    CHECK(blob_detect(m, 10).size() == 2);
}

TEST_CASE("skin model construction") {
    Frame f(40, 40, 3);
    SUBCASE("uniform hue fills one bin") {
        for (int y = 0; y < 40; ++y)
            for (int x = 0; x < 40; ++x) f.set_rgb(x, y, {255, 85, 0});  // hue 20
        const auto m = build_skin_model(f, {10, 10, 20, 20});
        REQUIRE(m.bins() == 32);
        CHECK(m.hue_hist[1] == doctest::Approx(1.0));
        double others = 0;
        for (int b = 0; b < 32; ++b)
            if (b != 1) others += m.hue_hist[b];
        CHECK(others == 0.0);
    }
    SUBCASE("grey face sample is an empty model") {
        for (int y = 0; y < 40; ++y)
            for (int x = 0; x < 40; ++x) f.set_rgb(x, y, {120, 120, 120});
        try {
            build_skin_model(f, {5, 5, 20, 20});
            FAIL("expected empty model");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::empty_model);
        }
    }
    SUBCASE("two hues split evenly") {
        // 11.25 degree bins: 20 -> bin 1, 30 -> bin 2
        for (int y = 0; y < 40; ++y)
            for (int x = 0; x < 40; ++x) f.set_rgb(x, y, x < 20 ? Rgb{255, 85, 0} : Rgb{200, 110, 20});
        const auto m = build_skin_model(f, {10, 10, 20, 20});
        CHECK(m.hue_hist[1] == doctest::Approx(0.5));
        CHECK(m.hue_hist[2] == doctest::Approx(0.5));
    }
    SUBCASE("face outside frame") { CHECK_THROWS_AS(build_skin_model(f, {30, 30, 20, 20}), Error); }
}

TEST_CASE("backprojection") {
    SkinModel m;
    m.hue_hist.assign(32, 0.0);
    m.hue_hist[1] = 0.75;
    m.hue_hist[2] = 0.25;
    Frame f(4, 1, 3);
    f.set_rgb(0, 0, {255, 85, 0});    // hue 20, max bin
    f.set_rgb(1, 0, {200, 110, 20});  // hue 30
    f.set_rgb(2, 0, {0, 0, 255});     // hue 240, empty bin
    f.set_rgb(3, 0, {40, 37, 36});    // hue in bin 1 but saturation below the gate
    const auto p = backproject(f, m);
    CHECK(p.at(0, 0) == 255);
    CHECK(p.at(1, 0) == 85);
    CHECK(p.at(2, 0) == 0);
    CHECK(imgcore::to_hsv({40, 37, 36}).s < 30);
    CHECK(p.at(3, 0) == 0);
}

TEST_CASE("backprojection is a per-pixel function") {
    std::mt19937 rng(9);
    const auto m = skin_prior(0, 50);
    Frame f(16, 16, 3);
    std::uniform_int_distribution<int> d(0, 255);
    for (auto& v : f.data()) v = std::uint8_t(d(rng));
    std::vector<std::size_t> perm(256);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Frame g(16, 16, 3);
    for (std::size_t i = 0; i < 256; ++i)
        for (int c = 0; c < 3; ++c) g.data()[perm[i] * 3 + c] = f.data()[i * 3 + c];
    const auto pf = backproject(f, m), pg = backproject(g, m);
    for (std::size_t i = 0; i < 256; ++i) CHECK(pg.data()[perm[i]] == pf.data()[i]);
}

TEST_CASE("camshift converges on a gaussian blob") {
    Frame prob(100, 90, 1);
    const double mx = 50, my = 40, sigma = 6;
    for (int y = 0; y < 90; ++y)
        for (int x = 0; x < 100; ++x)
            prob.at(x, y) = std::uint8_t(std::lround(255 * std::exp(-((x - mx) * (x - mx) + (y - my) * (y - my)) /
                                                                   (2 * sigma * sigma))));
    // direct moment oracle over the whole image
    double m00 = 0, m10 = 0, m01 = 0;
    for (int y = 0; y < 90; ++y)
        for (int x = 0; x < 100; ++x) {
            m00 += prob.at(x, y);
            m10 += double(prob.at(x, y)) * x;
            m01 += double(prob.at(x, y)) * y;
        }
    TrackState st;
    st.lost = false;
    st.window = {45, 25, 30, 30};  // centre (59.5, 39.5): 9.5 px off
    std::vector<double> trace;
    const auto out = camshift_track(prob, st, {}, &trace);
    CHECK_FALSE(out.lost);
    const double cx = out.window.x + (out.window.w - 1) / 2.0;
    const double cy = out.window.y + (out.window.h - 1) / 2.0;
    CHECK(std::abs(cx - m10 / m00) <= 1.0);
    CHECK(std::abs(cy - m01 / m00) <= 1.0);
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] >= trace[i - 1]);
}

TEST_CASE("camshift on empty and uniform probability") {
    TrackState st;
    st.lost = false;
    st.window = {40, 30, 20, 20};
    const auto zero = camshift_track(Frame(100, 80, 1), st);
    CHECK(zero.lost);
    CHECK(zero.window == st.window);

    const auto full = grey(100, 80, 255);
    auto cur = st;
    for (int i = 0; i < 6; ++i) {
        cur = camshift_track(full, cur);
        CHECK(cur.window.x + (cur.window.w - 1) / 2.0 == doctest::Approx(49.5).epsilon(0.02));
        CHECK(cur.window.y + (cur.window.h - 1) / 2.0 == doctest::Approx(39.5).epsilon(0.02));
    }
    CHECK(cur.window.w == 80);
    CHECK(cur.window.h == 80);
    CHECK_FALSE(cur.lost);
}

TEST_CASE("camshift windows stay inside the frame") {
    std::mt19937 rng(14);
    std::uniform_int_distribution<int> d(-30, 90);
    for (int trial = 0; trial < 200; ++trial) {
        auto prob = gaussian_blur(oracle::random_gray(rng, 64, 48), 3.0);
        TrackState st;
        st.lost = false;
        st.window = {d(rng), d(rng), 1 + std::abs(d(rng)), 1 + std::abs(d(rng))};
        std::vector<double> trace;
        const auto out = camshift_track(prob, st, {}, &trace);
        REQUIRE(out.window.x >= 0);
        REQUIRE(out.window.y >= 0);
        REQUIRE(out.window.w >= 1);
        REQUIRE(out.window.x + out.window.w <= 64);
        REQUIRE(out.window.y + out.window.h <= 48);
        for (std::size_t i = 1; i < trace.size(); ++i) REQUIRE(trace[i] >= trace[i - 1]);
    }
}

TEST_CASE("tracker re-initialises on schedule") {
    Frame f(80, 60, 3);
    for (int y = 20; y < 40; ++y)
        for (int x = 30; x < 50; ++x) f.set_rgb(x, y, {255, 85, 0});
    const BinaryMask fg(80, 60);
    const auto skin = skin_prior(0, 45);

    SUBCASE("detector runs exactly on multiples of the period") {
        CountingDetector det({{30, 20, 20, 20}});
        TrackState st;
        for (int k = 0; k < 65; ++k) {
            const int before = det.calls;
            const auto out = tracker_step(f, fg, st, det, skin);
            st = out.state;
            CHECK((det.calls - before == 1) == (k % 20 == 0));
            CHECK(out.detector_ran == (k % 20 == 0));
            CHECK(st.frames_since_reinit >= 0);
            CHECK(st.frames_since_reinit <= st.reinit_period);
        }
    }
    SUBCASE("counter at 19 on entry") {
        CountingDetector det({{30, 20, 20, 20}});
        TrackState st;
        st.lost = false;
        st.window = {28, 18, 24, 24};
        st.frames_since_reinit = 19;
        const auto out = tracker_step(f, fg, st, det, skin);
        CHECK(det.calls == 1);
        CHECK(out.state.frames_since_reinit == 0);
    }
    SUBCASE("no detection while healthy keeps tracking") {
        CountingDetector det({});
        TrackState st;
        st.lost = false;
        st.window = {28, 18, 24, 24};
        st.frames_since_reinit = 19;
        const auto out = tracker_step(f, fg, st, det, skin);
        CHECK(det.calls == 1);
        CHECK_FALSE(out.state.lost);
        // uniform patch of area 400 resizes to side 2*sqrt(400) around its centre
        CHECK(out.state.window == Roi{20, 10, 40, 40});
        CHECK(out.skin_mask.count() == 400);
    }
    SUBCASE("no detection while lost gives an empty mask") {
        CountingDetector det({});
        const auto out = tracker_step(f, fg, TrackState{}, det, skin);
        CHECK(out.state.lost);
        CHECK(out.skin_mask.count() == 0);
    }
}

TEST_CASE("tracker recovers after the target jumps") {
    // Disk whose hue steps outward through histogram bins of decreasing
    // weight, giving a cone-shaped probability image.
    const int W = 280, H = 120, R = 14, rings = 7;
    SkinModel skin;
    skin.hue_hist.assign(32, 0.0);
    double total = 0;
    for (int k = 0; k < rings; ++k) total += skin.hue_hist[k] = rings - k;
    for (auto& v : skin.hue_hist) v /= total;

    auto centre_at = [](int t) { return t < 25 ? 40 + t : 140 + t; };
    const BlobDetector det(50);
    TrackState st;
    for (int t = 0; t < 50; ++t) {
        const int cx = centre_at(t), cy = 60;
        Frame f(W, H, 3);
        for (auto& v : f.data()) v = 90;
        BinaryMask fg(W, H);
        for (int y = cy - R; y <= cy + R; ++y)
            for (int x = cx - R; x <= cx + R; ++x) {
                const double r = std::hypot(x - cx, y - cy);
                if (r > R) continue;
                const int ring = std::min(rings - 1, int(r * rings / (R + 1)));
                f.set_rgb(x, y, imgcore::from_hsv((ring + 0.5) * 11.25, 0.8, 0.9));
                fg.set(x, y, true);
            }
        st = tracker_step(f, fg, st, det, skin).state;
        const Roi truth{cx - R, cy - R, 2 * R + 1, 2 * R + 1};
        if (t >= 45) CHECK(imgcore::iou(st.window, truth) > 0.5);
    }
}
