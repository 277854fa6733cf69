#include "handcue/cpdh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>

namespace handcue::cpdh {

using imgcore::BinaryMask;

std::string_view to_string(Gesture g) noexcept { return g == Gesture::palm ? "palm" : "fist"; }

std::optional<Gesture> parse_gesture(std::string_view token) noexcept {
    if (token == "palm" || token == "Palm") return Gesture::palm;
    if (token == "fist" || token == "Fist") return Gesture::fist;
    return std::nullopt;
}

void CpdhParams::validate() const {
    if (n < 3) throw Error(Errc::parameter, "sample count must be >= 3");
    if (u < 1 || v < 1) throw Error(Errc::parameter, "bin counts must be >= 1");
}

namespace {

// Counter-clockwise on screen (y grows downward), starting west.
constexpr std::array<std::array<int, 2>, 8> kRing = {
    {{-1, 0}, {-1, 1}, {0, 1}, {1, 1}, {1, 0}, {1, -1}, {0, -1}, {-1, -1}}};

int ring_index(int dx, int dy) {
    for (int k = 0; k < 8; ++k)
        if (kRing[k][0] == dx && kRing[k][1] == dy) return k;
    return 0;
}

}  // namespace

ContourPointSet trace_contour(const BinaryMask& mask, const imgcore::CannyParams& canny) {
    // Canny finds a halo ring around even a lone pixel, so count the object's
    // own boundary first.
    std::size_t boundary = 0;
    for (int y = 0; y < mask.height() && boundary < 3; ++y)
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask.get(x, y)) continue;
            const bool edge = x == 0 || y == 0 || x + 1 == mask.width() || y + 1 == mask.height() ||
                              !mask.get(x - 1, y) || !mask.get(x + 1, y) || !mask.get(x, y - 1) ||
                              !mask.get(x, y + 1);
            if (edge) ++boundary;
        }
    if (boundary < 3) throw Error(Errc::degenerate_shape, "mask has fewer than 3 boundary pixels");

    // pad so the blur support and Sobel never see the border
    const int pad = static_cast<int>(std::ceil(3.0 * canny.sigma)) + 2;
    const int w = mask.width() + 2 * pad, h = mask.height() + 2 * pad;
    imgcore::Frame grey(w, h, 1);
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask.get(x, y)) grey.at(x + pad, y + pad) = 255;

    const BinaryMask edges = imgcore::canny_edges(grey, canny);
    const auto lab = imgcore::label_components(edges);
    if (lab.blobs.empty() || lab.blobs.front().area < 3)
        throw Error(Errc::degenerate_shape, "fewer than 3 contour pixels");
    const int target = lab.blobs.front().label;
    auto inside = [&](int x, int y) {
        return x >= 0 && y >= 0 && x < w && y < h && lab.labels[static_cast<std::size_t>(y) * w + x] == target;
    };

    int sx = -1, sy = -1;
    for (int y = 0; y < h && sx < 0; ++y)
        for (int x = 0; x < w; ++x)
            if (inside(x, y)) {
                sx = x;
                sy = y;
                break;
            }

    ContourPointSet out;
    int px = sx, py = sy;
    int back = 0;  // west of the start is outside by construction
    int first_move = -1;
    const std::size_t guard = 4 * lab.blobs.front().area + 8;
    while (out.size() < guard) {
        int move = -1;
        for (int k = 1; k <= 8; ++k) {
            const int d = (back + k) % 8;
            if (inside(px + kRing[d][0], py + kRing[d][1])) {
                move = d;
                break;
            }
        }
        if (move < 0) break;  // isolated pixel
        if (px == sx && py == sy) {
            if (first_move == move) break;  // re-entering the start the same way
            if (first_move < 0) first_move = move;
        }
        out.push_back({static_cast<double>(px - pad), static_cast<double>(py - pad)});
        const int prev = (move + 7) % 8;  // last background neighbour checked
        const int bx = px + kRing[prev][0], by = py + kRing[prev][1];
        px += kRing[move][0];
        py += kRing[move][1];
        back = ring_index(bx - px, by - py);
    }
    if (out.size() < 3) throw Error(Errc::degenerate_shape, "fewer than 3 contour points");
    return out;
}

ContourPointSet sample_contour(const ContourPointSet& contour, int n) {
    if (n < 3) throw Error(Errc::parameter, "sample count must be >= 3");
    if (contour.empty()) throw Error(Errc::degenerate_shape, "empty contour");
    const std::size_t m = contour.size();
    std::vector<double> cum(m + 1, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const Point& a = contour[i];
        const Point& b = contour[(i + 1) % m];
        cum[i + 1] = cum[i] + std::hypot(b.x - a.x, b.y - a.y);
    }
    const double total = cum[m];
    ContourPointSet out;
    out.reserve(static_cast<std::size_t>(n));
    if (total == 0.0) {
        out.assign(static_cast<std::size_t>(n), contour.front());
        return out;
    }
    std::size_t seg = 0;
    for (int k = 0; k < n; ++k) {
        const double s = total * k / n;
        while (seg + 1 < m && cum[seg + 1] <= s) ++seg;
        const Point& a = contour[seg];
        const Point& b = contour[(seg + 1) % m];
        const double len = cum[seg + 1] - cum[seg];
        const double t = len > 0.0 ? (s - cum[seg]) / len : 0.0;
        if (t == 0.0)
            out.push_back(a);
        else
            out.push_back({a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t});
    }
    return out;
}

PolarPointSet to_polar(const ContourPointSet& points) {
    if (points.size() < 3) throw Error(Errc::degenerate_shape, "need at least 3 points");
    const double n = static_cast<double>(points.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& p : points) {
        sx += p.x;
        sy += p.y;
    }
    PolarPointSet out;
    out.centroid = {sx / n, sy / n};
    out.points.reserve(points.size());
    for (const auto& p : points) {
        // n*x - sum(x) keeps integer inputs exact under translation
        const double dx = n * p.x - sx, dy = n * p.y - sy;
        double theta = std::atan2(dy, dx);
        if (theta < 0.0) theta += 2.0 * std::numbers::pi;
        if (theta >= 2.0 * std::numbers::pi) theta = 0.0;
        const double rho = std::hypot(dx, dy) / n;
        out.points.push_back({rho, theta});
        out.rho_max = std::max(out.rho_max, rho);
    }
    if (out.rho_max == 0.0) throw Error(Errc::degenerate_shape, "all points coincide");
    return out;
}

CpdhDescriptor build_cpdh(const PolarPointSet& polar, int u, int v) {
    if (u < 1 || v < 1) throw Error(Errc::parameter, "bin counts must be >= 1");
    if (!(polar.rho_max > 0.0)) throw Error(Errc::degenerate_shape, "rho_max must be positive");
    CpdhDescriptor d;
    d.u = u;
    d.v = v;
    d.n = static_cast<int>(polar.points.size());
    d.counts.assign(static_cast<std::size_t>(u) * v, 0);
    for (const auto& p : polar.points) {
        const int r = std::min(static_cast<int>(std::floor(p.rho * u / polar.rho_max)), u - 1);
        const int a = std::min(static_cast<int>(std::floor(p.theta * v / (2.0 * std::numbers::pi))), v - 1);
        ++d.counts[static_cast<std::size_t>(std::max(r, 0)) * v + std::max(a, 0)];
    }
    return d;
}

double cpdh_distance(const CpdhDescriptor& a, const CpdhDescriptor& b) {
    if (a.u != b.u || a.v != b.v || a.counts.size() != b.counts.size())
        throw Error(Errc::shape_mismatch, "descriptor shapes differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.counts.size(); ++i) {
        const double d = static_cast<double>(a.counts[i]) - static_cast<double>(b.counts[i]);
        s += d * d;
    }
    return std::sqrt(s);
}

CpdhDescriptor describe(const BinaryMask& mask, const CpdhParams& params) {
    params.validate();
    return build_cpdh(to_polar(sample_contour(trace_contour(mask, params.canny), params.n)), params.u, params.v);
}

Match classify_gesture(const CpdhDescriptor& query, const GestureDb& db) {
    if (db.entries.empty()) throw Error(Errc::empty_db, "gesture database is empty");
    Match best;
    best.distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < db.entries.size(); ++i) {
        const double d = cpdh_distance(query, db.entries[i].descriptor);
        if (d < best.distance) best = {db.entries[i].label, d, i};
    }
    return best;
}

GestureDb build_gesture_db(std::span<const LabeledMask> masks, const CpdhParams& params) {
    params.validate();
    GestureDb db;
    db.u = params.u;
    db.v = params.v;
    db.n = params.n;
    bool have_palm = false, have_fist = false;
    for (const auto& lm : masks) {
        try {
            db.entries.push_back({describe(lm.mask, params), lm.label});
        } catch (const Error& e) {
            if (e.code() != Errc::degenerate_shape) throw;
            ++db.skipped;
            continue;
        }
        (lm.label == Gesture::palm ? have_palm : have_fist) = true;
    }
    if (!have_palm || !have_fist)
        throw Error(Errc::training, std::string("no usable ") + (have_palm ? "fist" : "palm") + " masks");
    return db;
}

double intra_class_percentile(const GestureDb& db, double p) {
    std::vector<double> d;
    for (std::size_t i = 0; i < db.entries.size(); ++i)
        for (std::size_t j = i + 1; j < db.entries.size(); ++j)
            if (db.entries[i].label == db.entries[j].label)
                d.push_back(cpdh_distance(db.entries[i].descriptor, db.entries[j].descriptor));
    if (d.empty()) return std::numeric_limits<double>::infinity();
    std::sort(d.begin(), d.end());
    const auto rank = static_cast<std::size_t>(std::ceil(std::clamp(p, 0.0, 1.0) * d.size()));
    return d[std::max<std::size_t>(rank, 1) - 1];
}

void write_db(std::ostream& out, const GestureDb& db) {
    out << "CPDH1 " << db.u << ' ' << db.v << ' ' << db.n << ' ' << db.entries.size() << '\n';
    for (const auto& e : db.entries) {
        out << to_string(e.label);
        for (auto c : e.descriptor.counts) out << ' ' << c;
        out << '\n';
    }
    if (!out) throw Error(Errc::io, "failed writing gesture db");
}

GestureDb read_db(std::istream& in) {
    std::string magic;
    GestureDb db;
    long long count = -1;
    if (!(in >> magic >> db.u >> db.v >> db.n >> count) || magic != "CPDH1")
        throw Error(Errc::format, "not a CPDH1 gesture db");
    if (db.u < 1 || db.v < 1 || db.n < 3 || count < 0 || db.u > 4096 || db.v > 4096)
        throw Error(Errc::format, "bad gesture db header");
    const std::size_t bins = static_cast<std::size_t>(db.u) * db.v;
    for (long long k = 0; k < count; ++k) {
        std::string token;
        if (!(in >> token)) throw Error(Errc::format, "truncated gesture db");
        const auto label = parse_gesture(token);
        if (!label) throw Error(Errc::format, "unknown gesture label '" + token + "'");
        DbEntry e;
        e.label = *label;
        e.descriptor.u = db.u;
        e.descriptor.v = db.v;
        e.descriptor.n = db.n;
        e.descriptor.counts.resize(bins);
        std::uint64_t sum = 0;
        for (auto& c : e.descriptor.counts) {
            if (!(in >> c)) throw Error(Errc::format, "truncated gesture db");
            sum += c;
        }
        if (sum != static_cast<std::uint64_t>(db.n))
            throw Error(Errc::format, "entry " + std::to_string(k) + " counts do not sum to n");
        db.entries.push_back(std::move(e));
    }
    return db;
}

void save_db(const std::filesystem::path& path, const GestureDb& db) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::io, "cannot open " + path.string() + " for writing");
    write_db(out, db);
}

GestureDb load_db(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io, "cannot open " + path.string());
    return read_db(in);
}

}  // namespace handcue::cpdh
