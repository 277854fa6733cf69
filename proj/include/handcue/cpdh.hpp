#pragma once

// Contour point distribution histogram: polar histogram of points sampled
// along a hand outline, plus a labelled database with 1-NN matching.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "handcue/imgcore.hpp"

namespace handcue::cpdh {

struct Point {
    double x = 0.0, y = 0.0;
    friend bool operator==(const Point&, const Point&) = default;
};

using ContourPointSet = std::vector<Point>;

struct PolarPoint {
    double rho = 0.0;
    double theta = 0.0;  // [0, 2*pi)
};

struct PolarPointSet {
    std::vector<PolarPoint> points;
    Point centroid;
    double rho_max = 0.0;
};

struct CpdhDescriptor {
    int u = 0;
    int v = 0;
    int n = 0;
    std::vector<std::uint32_t> counts;  // row-major: counts[r * v + a]

    std::uint32_t at(int r, int a) const { return counts[static_cast<std::size_t>(r) * v + a]; }
    friend bool operator==(const CpdhDescriptor&, const CpdhDescriptor&) = default;
};

enum class Gesture { palm, fist };

std::string_view to_string(Gesture g) noexcept;
std::optional<Gesture> parse_gesture(std::string_view token) noexcept;

struct CpdhParams {
    int n = 100;
    int u = 5;
    int v = 12;
    imgcore::CannyParams canny;

    void validate() const;
};

/// Moore trace (counter-clockwise on screen, from the topmost-leftmost pixel)
/// of the largest Canny edge component of the rendered mask.
ContourPointSet trace_contour(const imgcore::BinaryMask& mask, const imgcore::CannyParams& canny = {});

/// n points at uniform arc length k*L/n around the closed contour.
ContourPointSet sample_contour(const ContourPointSet& contour, int n);

PolarPointSet to_polar(const ContourPointSet& points);

CpdhDescriptor build_cpdh(const PolarPointSet& polar, int u, int v);

double cpdh_distance(const CpdhDescriptor& a, const CpdhDescriptor& b);

/// trace -> sample -> polar -> histogram.
CpdhDescriptor describe(const imgcore::BinaryMask& mask, const CpdhParams& params = {});

struct DbEntry {
    CpdhDescriptor descriptor;
    Gesture label = Gesture::palm;
    friend bool operator==(const DbEntry&, const DbEntry&) = default;
};

struct GestureDb {
    int u = 5;
    int v = 12;
    int n = 100;
    std::vector<DbEntry> entries;
    std::size_t skipped = 0;  // degenerate inputs dropped while building

    friend bool operator==(const GestureDb& a, const GestureDb& b) {
        return a.u == b.u && a.v == b.v && a.n == b.n && a.entries == b.entries;
    }
};

struct Match {
    Gesture label = Gesture::palm;
    double distance = 0.0;
    std::size_t index = 0;
};

/// Nearest entry by Euclidean distance; ties go to the lowest index.
Match classify_gesture(const CpdhDescriptor& query, const GestureDb& db);

struct LabeledMask {
    imgcore::BinaryMask mask;
    Gesture label = Gesture::palm;
};

GestureDb build_gesture_db(std::span<const LabeledMask> masks, const CpdhParams& params = {});

/// Nearest-rank percentile of distances between same-label entries.
/// Infinity when no class has two entries.
double intra_class_percentile(const GestureDb& db, double p);

// "CPDH1 u v n count" text format.
void write_db(std::ostream& out, const GestureDb& db);
GestureDb read_db(std::istream& in);
void save_db(const std::filesystem::path& path, const GestureDb& db);
GestureDb load_db(const std::filesystem::path& path);

}  // namespace handcue::cpdh
