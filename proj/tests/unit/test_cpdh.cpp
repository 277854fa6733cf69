#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "doctest.h"
#include "handcue/cpdh.hpp"
#include "support/oracles.hpp"

using namespace handcue;
using namespace handcue::cpdh;
using imgcore::BinaryMask;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

BinaryMask filled_rect(int w, int h, int x0, int y0, int rw, int rh) {
    BinaryMask m(w, h);
    for (int y = y0; y < y0 + rh; ++y)
        for (int x = x0; x < x0 + rw; ++x) m.set(x, y, true);
    return m;
}

BinaryMask filled_disk(int w, int h, double cx, double cy, double r) {
    BinaryMask m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (std::hypot(x - cx, y - cy) <= r) m.set(x, y, true);
    return m;
}

ContourPointSet random_points(std::mt19937& rng, int n, bool integer) {
    std::uniform_real_distribution<double> d(-50.0, 50.0);
    ContourPointSet p;
    for (int i = 0; i < n; ++i) {
        double x = d(rng), y = d(rng);
        if (integer) {
            x = std::round(x);
            y = std::round(y);
        }
        p.push_back({x, y});
    }
    return p;
}

// Recomputes polar coordinates directly and reports whether any point sits
// within tol of a radial or angular bin boundary.
bool near_boundary(const ContourPointSet& pts, int u, int v, double tol = 1e-9) {
    double cx = 0, cy = 0;
    for (auto p : pts) {
        cx += p.x;
        cy += p.y;
    }
    cx /= double(pts.size());
    cy /= double(pts.size());
    double rmax = 0;
    for (auto p : pts) rmax = std::max(rmax, std::hypot(p.x - cx, p.y - cy));
    for (auto p : pts) {
        const double r = std::hypot(p.x - cx, p.y - cy) * u / rmax;
        if (r < u - tol && std::abs(r - std::round(r)) < tol) return true;
        double th = std::atan2(p.y - cy, p.x - cx);
        if (th < 0) th += kTwoPi;
        const double a = th * v / kTwoPi;
        if (std::abs(a - std::round(a)) < tol) return true;
    }
    return false;
}

CpdhDescriptor histogram(const ContourPointSet& pts, int u = 5, int v = 12) {
    return build_cpdh(to_polar(pts), u, v);
}

CpdhDescriptor random_descriptor(std::mt19937& rng, int u, int v, int n) {
    CpdhDescriptor d{u, v, n, std::vector<std::uint32_t>(std::size_t(u) * v, 0)};
    std::uniform_int_distribution<std::size_t> bin(0, d.counts.size() - 1);
    for (int i = 0; i < n; ++i) ++d.counts[bin(rng)];
    return d;
}

}  // namespace

TEST_CASE("filled square traces its 36-pixel outer ring") {
    const auto mask = filled_rect(30, 30, 10, 10, 10, 10);
    const auto c = trace_contour(mask);
    REQUIRE(c.size() == 36);
    std::set<std::pair<int, int>> seen;
    for (const auto& p : c) {
        const int x = int(p.x), y = int(p.y);
        CHECK(mask.get(x, y));
        const bool on_ring = x == 10 || x == 19 || y == 10 || y == 19;
        CHECK(on_ring);
        seen.insert({x, y});
    }
    CHECK(seen.size() == 36);
    CHECK(c.front() == Point{10, 10});
    CHECK(c[1] == Point{10, 11});  // counter-clockwise: down the left side first
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto& a = c[i];
        const auto& b = c[(i + 1) % c.size()];
        CHECK(std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)) == 1.0);
    }
}

TEST_CASE("contour edge cases") {
    BinaryMask one(9, 9);
    one.set(4, 4, true);
    try {
        trace_contour(one);
        FAIL("expected degenerate shape");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::degenerate_shape);
    }
    CHECK_THROWS_AS(trace_contour(BinaryMask(9, 9)), Error);

    auto two = filled_disk(80, 50, 20, 25, 12);
    for (int y = 5; y < 13; ++y)
        for (int x = 55; x < 63; ++x) two.set(x, y, true);
    for (const auto& p : trace_contour(two)) CHECK(p.x < 40);

    // traced pixels of a disk lie on its rim
    const auto disk = filled_disk(60, 60, 30, 30, 20);
    const auto c = trace_contour(disk);
    CHECK(c.size() > 100);
    for (const auto& p : c) {
        CHECK(std::abs(std::hypot(p.x - 30, p.y - 30) - 20) <= 1.5);
    }
}

TEST_CASE("arc-length sampling") {
    SUBCASE("identity on an evenly spaced contour") {
        ContourPointSet ring;
        for (int x = 0; x < 30; ++x) ring.push_back({double(x), 0});
        for (int y = 0; y < 20; ++y) ring.push_back({30, double(y)});
        for (int x = 30; x > 0; --x) ring.push_back({double(x), 20});
        for (int y = 20; y > 0; --y) ring.push_back({0, double(y)});
        REQUIRE(ring.size() == 100);
        CHECK(sample_contour(ring, 100) == ring);
    }
    SUBCASE("unit square") {
        const ContourPointSet sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
        CHECK(sample_contour(sq, 4) == sq);
        const auto three = sample_contour(sq, 3);
        REQUIRE(three.size() == 3);
        CHECK(three[0] == Point{0, 0});
        CHECK(three[1].x == doctest::Approx(1.0));
        CHECK(three[1].y == doctest::Approx(1.0 / 3));
        CHECK(three[2].x == doctest::Approx(1.0 / 3));
        CHECK(three[2].y == doctest::Approx(1.0));
    }
    SUBCASE("random polygons against a walking oracle") {
        std::mt19937 rng(21);
        for (int trial = 0; trial < 50; ++trial) {
            const auto poly = random_points(rng, 7 + trial % 13, false);
            const int n = 3 + trial % 40;
            const auto s = sample_contour(poly, n);
            REQUIRE(int(s.size()) == n);
            double total = 0;
            for (std::size_t i = 0; i < poly.size(); ++i) {
                const auto& a = poly[i];
                const auto& b = poly[(i + 1) % poly.size()];
                total += std::hypot(b.x - a.x, b.y - a.y);
            }
            for (int k = 0; k < n; ++k) {
                double left = total * k / n;
                Point expect = poly[0];
                for (std::size_t i = 0; i < poly.size(); ++i) {
                    const auto& a = poly[i];
                    const auto& b = poly[(i + 1) % poly.size()];
                    const double len = std::hypot(b.x - a.x, b.y - a.y);
                    if (left <= len) {
                        expect = {a.x + (b.x - a.x) * left / len, a.y + (b.y - a.y) * left / len};
                        break;
                    }
                    left -= len;
                }
                CHECK(s[k].x == doctest::Approx(expect.x).epsilon(1e-9));
                CHECK(s[k].y == doctest::Approx(expect.y).epsilon(1e-9));
            }
        }
    }
    CHECK_THROWS_AS(sample_contour({{0, 0}, {1, 0}, {1, 1}}, 2), Error);
}

TEST_CASE("polar coordinates") {
    const auto cross = to_polar({{1, 0}, {0, 1}, {-1, 0}, {0, -1}});
    CHECK(cross.centroid == Point{0, 0});
    CHECK(cross.rho_max == 1.0);
    const double expect[] = {0, kTwoPi / 4, kTwoPi / 2, 3 * kTwoPi / 4};
    for (int i = 0; i < 4; ++i) {
        CHECK(cross.points[i].rho == 1.0);
        CHECK(cross.points[i].theta == doctest::Approx(expect[i]));
    }
    CHECK(build_cpdh(cross, 1, 4).counts == std::vector<std::uint32_t>{1, 1, 1, 1});

    const auto tri = to_polar({{3, 4}, {-3, -4}, {0, 0}});
    CHECK(tri.points[0].rho == 5.0);
    CHECK(tri.points[0].theta == doctest::Approx(std::atan(4.0 / 3.0)));
    CHECK(tri.points[1].theta == doctest::Approx(std::atan(4.0 / 3.0) + std::numbers::pi));

    try {
        to_polar({{2, 2}, {2, 2}, {2, 2}});
        FAIL("expected degenerate shape");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::degenerate_shape);
    }
}

TEST_CASE("histogram binning") {
    PolarPointSet same;
    same.points.assign(40, {0.3, 1.0});
    same.rho_max = 1.0;
    const auto d = build_cpdh(same, 5, 12);
    CHECK(d.at(1, 1) == 40);
    CHECK(std::accumulate(d.counts.begin(), d.counts.end(), 0u) == 40);

    // 48 points on a circle, offset half a step to stay off angular edges
    ContourPointSet circle;
    for (int i = 0; i < 48; ++i) {
        const double a = (i + 0.5) * kTwoPi / 48;
        circle.push_back({10 * std::cos(a), 10 * std::sin(a)});
    }
    const auto c = histogram(circle, 5, 12);
    for (int a = 0; a < 12; ++a) {
        CHECK(c.at(4, a) == 4);
        for (int r = 0; r < 4; ++r) CHECK(c.at(r, a) == 0);
    }
}

TEST_CASE("descriptor totals and invariances on random point sets") {
    std::mt19937 rng(5);
    std::uniform_int_distribution<int> shift(-300, 300);
    std::uniform_real_distribution<double> scale(0.2, 6.0), pivot(-80, 80);
    std::uniform_int_distribution<int> turns(1, 11);
    int scale_checked = 0, rot_checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 3 + trial % 150;
        const auto pts = random_points(rng, n, trial % 2 == 0);
        const auto d = histogram(pts);
        REQUIRE(std::accumulate(d.counts.begin(), d.counts.end(), 0u) == unsigned(n));

        if (trial % 2 == 0) {
            ContourPointSet moved = pts;
            const int dx = shift(rng), dy = shift(rng);
            for (auto& p : moved) {
                p.x += dx;
                p.y += dy;
            }
            REQUIRE(histogram(moved) == d);
        }

        ContourPointSet scaled = pts;
        const double s = scale(rng), px = pivot(rng), py = pivot(rng);
        for (auto& p : scaled) p = {px + s * (p.x - px), py + s * (p.y - py)};
        if (!near_boundary(pts, 5, 12) && !near_boundary(scaled, 5, 12)) {
            REQUIRE(histogram(scaled) == d);
            ++scale_checked;
        }

        const int k = turns(rng);
        const auto polar = to_polar(pts);
        const double ang = k * kTwoPi / 12;
        ContourPointSet rotated;
        for (const auto& p : pts) {
            const double x = p.x - polar.centroid.x, y = p.y - polar.centroid.y;
            rotated.push_back({polar.centroid.x + x * std::cos(ang) - y * std::sin(ang),
                               polar.centroid.y + x * std::sin(ang) + y * std::cos(ang)});
        }
        if (!near_boundary(pts, 5, 12) && !near_boundary(rotated, 5, 12)) {
            const auto r = histogram(rotated);
            for (int rr = 0; rr < 5; ++rr)
                for (int a = 0; a < 12; ++a) REQUIRE(r.at(rr, (a + k) % 12) == d.at(rr, a));
            ++rot_checked;
        }
    }
    CHECK(scale_checked > 900);
    CHECK(rot_checked > 900);
}

TEST_CASE("distance") {
    std::mt19937 rng(3);
    auto a = random_descriptor(rng, 5, 12, 100);
    CHECK(cpdh_distance(a, a) == 0.0);
    auto b = a;
    std::size_t i = 0;
    while (b.counts[i] == 0) ++i;
    --b.counts[i];
    ++b.counts[(i + 1) % b.counts.size()];
    CHECK(cpdh_distance(a, b) == doctest::Approx(std::sqrt(2.0)));
    for (int t = 0; t < 200; ++t) {
        const auto x = random_descriptor(rng, 5, 12, 100), y = random_descriptor(rng, 5, 12, 100),
                   z = random_descriptor(rng, 5, 12, 100);
        CHECK(cpdh_distance(x, y) == cpdh_distance(y, x));
        CHECK(cpdh_distance(x, z) <= cpdh_distance(x, y) + cpdh_distance(y, z) + 1e-12);
        CHECK(cpdh_distance(x, y) >= 0.0);
    }
    try {
        cpdh_distance(a, random_descriptor(rng, 4, 12, 100));
        FAIL("expected shape mismatch");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::shape_mismatch);
    }
}

TEST_CASE("nearest neighbour classification") {
    std::mt19937 rng(17);
    GestureDb db;
    for (int i = 0; i < 200; ++i)
        db.entries.push_back({random_descriptor(rng, 5, 12, 100), i % 3 == 0 ? Gesture::fist : Gesture::palm});

    const auto hit = classify_gesture(db.entries[7].descriptor, db);
    CHECK(hit.index == 7);
    CHECK(hit.distance == 0.0);
    CHECK(hit.label == db.entries[7].label);

    std::uniform_int_distribution<std::size_t> pick(0, 199), bin(0, 59);
    for (int q = 0; q < 50; ++q) {
        auto query = db.entries[pick(rng)].descriptor;
        for (int m = 0; m < 15; ++m) {
            const auto from = bin(rng), to = bin(rng);
            if (query.counts[from] == 0) continue;
            --query.counts[from];
            ++query.counts[to];
        }
        // exhaustive scan on integer squared distances
        std::size_t best = 0;
        long best_d2 = -1;
        for (std::size_t e = 0; e < db.entries.size(); ++e) {
            long d2 = 0;
            for (std::size_t k = 0; k < 60; ++k) {
                const long diff = long(query.counts[k]) - long(db.entries[e].descriptor.counts[k]);
                d2 += diff * diff;
            }
            if (best_d2 < 0 || d2 < best_d2) {
                best_d2 = d2;
                best = e;
            }
        }
        const auto m = classify_gesture(query, db);
        CHECK(m.index == best);
        CHECK(m.label == db.entries[best].label);
        CHECK(m.distance == doctest::Approx(std::sqrt(double(best_d2))));
    }

    GestureDb pair;
    auto q = random_descriptor(rng, 2, 2, 50);
    auto p5 = q, f3 = q;
    p5.counts[0] += 5;  // sizes differ from n but distances are what matter here
    f3.counts[1] += 3;
    pair.entries = {{p5, Gesture::palm}, {f3, Gesture::fist}};
    const auto m = classify_gesture(q, pair);
    CHECK(m.label == Gesture::fist);
    CHECK(m.distance == 3.0);

    pair.entries = {{f3, Gesture::palm}, {f3, Gesture::fist}};
    CHECK(classify_gesture(q, pair).index == 0);

    try {
        classify_gesture(q, GestureDb{});
        FAIL("expected empty db");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::empty_db);
    }
}

TEST_CASE("building and persisting a gesture db") {
    std::vector<LabeledMask> masks;
    for (int i = 0; i < 100; ++i) {
        masks.push_back({filled_rect(60, 60, 5 + i % 7, 8 + i % 5, 20 + i % 13, 30 + i % 11), Gesture::palm});
        masks.push_back({filled_disk(60, 60, 30 + i % 6, 28 + i % 4, 10 + i % 9), Gesture::fist});
    }
    const auto db = build_gesture_db(masks);
    CHECK(db.entries.size() == 200);
    CHECK(db.skipped == 0);
    for (const auto& e : db.entries)
        CHECK(std::accumulate(e.descriptor.counts.begin(), e.descriptor.counts.end(), 0u) == 100);

    std::stringstream out;
    write_db(out, db);
    CHECK(out.str().rfind("CPDH1 5 12 100 200\n", 0) == 0);
    std::stringstream in(out.str());
    const auto back = read_db(in);
    CHECK(back == db);
    std::stringstream again;
    write_db(again, back);
    CHECK(again.str() == out.str());

    BinaryMask dot(20, 20);
    dot.set(3, 3, true);
    std::vector<LabeledMask> with_dot{masks[0], masks[1], {dot, Gesture::fist}};
    const auto small = build_gesture_db(with_dot);
    CHECK(small.entries.size() == 2);
    CHECK(small.skipped == 1);

    CHECK_THROWS_AS(build_gesture_db(std::span<const LabeledMask>{}), Error);
    std::vector<LabeledMask> palms_only{masks[0], masks[2]};
    CHECK_THROWS_AS(build_gesture_db(palms_only), Error);

    std::stringstream bad_label("CPDH1 1 2 3 1\nwave 1 2\n");
    CHECK_THROWS_AS(read_db(bad_label), Error);
    std::stringstream bad_sum("CPDH1 1 2 3 1\npalm 1 1\n");
    CHECK_THROWS_AS(read_db(bad_sum), Error);
    std::stringstream truncated("CPDH1 1 2 3 2\npalm 1 2\n");
    CHECK_THROWS_AS(read_db(truncated), Error);
}

TEST_CASE("intra-class percentile") {
    GestureDb db;
    auto base = CpdhDescriptor{1, 2, 10, {10, 0}};
    auto shifted = [&](unsigned k) { return CpdhDescriptor{1, 2, 10, {10 - k, k}}; };
    db.entries = {{base, Gesture::palm}, {shifted(1), Gesture::palm}, {shifted(3), Gesture::palm},
                  {shifted(9), Gesture::fist}};
    // palm pairs: sqrt2*{1, 3, 2}
    CHECK(intra_class_percentile(db, 0.95) == doctest::Approx(3 * std::sqrt(2.0)));
    CHECK(intra_class_percentile(db, 0.5) == doctest::Approx(2 * std::sqrt(2.0)));
    db.entries.resize(1);
    CHECK(std::isinf(intra_class_percentile(db, 0.95)));
}
