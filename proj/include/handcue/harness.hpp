#pragma once

// Frame files, synthetic scenarios with procedural hands, ground truth and
// recall/precision/ROC evaluation.

#include <compare>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "handcue/cpdh.hpp"
#include "handcue/imgcore.hpp"
#include "handcue/pipeline.hpp"

namespace handcue::harness {

// --- PNM ---------------------------------------------------------------

enum class PnmKind { p2, p3, p5, p6 };

/// Reads P2/P3/P5/P6 with maxval 255. Grey variants give 1-channel frames.
imgcore::Frame read_pnm(std::istream& in);
imgcore::Frame read_pnm(const std::filesystem::path& path);

/// Binary variants by default; 1-channel frames become P2/P5, 3-channel P3/P6.
void write_pnm(std::ostream& out, const imgcore::Frame& frame, bool ascii = false);
void write_pnm(const std::filesystem::path& path, const imgcore::Frame& frame, bool ascii = false);

struct FrameSource {
    std::vector<std::filesystem::path> paths;
    std::vector<int> indices;
    double fps = 10.0;

    std::size_t size() const noexcept { return paths.size(); }
    /// Loads frame i with timestamp index/fps.
    imgcore::Frame load(std::size_t i) const;
};

/// frame_%06d.ppm / .pgm files, contiguous from the smallest index.
FrameSource load_frames(const std::filesystem::path& dir, double fps = 10.0);

std::string frame_name(int index, bool color = true);

// --- procedural hands ----------------------------------------------------

struct HandPose {
    double cx = 0.0, cy = 0.0;  // centre of the palm body
    double scale = 1.0;
};

/// Silhouette of an upright hand; base size about 75x110 px at scale 1.
imgcore::BinaryMask render_hand(cpdh::Gesture shape, int width, int height, const HandPose& pose);

/// Labelled hand masks with random scale in [scale_lo, scale_hi] and random
/// placement, alternating palm and fist.
std::vector<cpdh::LabeledMask> random_hand_masks(std::size_t count, std::uint64_t seed, double scale_lo = 0.7,
                                                 double scale_hi = 1.3, int size = 200);

// --- scenarios -------------------------------------------------------------

struct ActorEvent {
    int start = 0;  // first frame, inclusive
    int end = 0;    // last frame, inclusive
    cpdh::Gesture shape = cpdh::Gesture::palm;
    double from_x = 0.0, from_y = 0.0;
    double to_x = 0.0, to_y = 0.0;
    double scale = 1.0;
    double hue = 25.0;
};

struct FacePatch {
    double cx = 0.0, cy = 0.0, r = 0.0;
    double hue = 25.0;
};

struct ScenarioSpec {
    int width = 320;
    int height = 240;
    double fps = 10.0;
    int duration = 120;  // frames
    bool textured = false;
    std::uint64_t background_seed = 1;
    int noise_amp = 0;
    std::optional<FacePatch> face;
    std::vector<ActorEvent> events;

    void validate() const;
};

/// key = value lines, '#' comments, one [event] section per actor event.
ScenarioSpec parse_scenario(std::istream& in);
ScenarioSpec load_scenario(const std::filesystem::path& path);

struct TruthRow {
    int index = 0;
    pipeline::GestureLabel label = pipeline::GestureLabel::none;
    imgcore::Rect box;  // zero for none
    friend bool operator==(const TruthRow&, const TruthRow&) = default;
};

struct Scenario {
    std::vector<imgcore::Frame> frames;
    std::vector<TruthRow> truth;
    std::vector<std::pair<double, double>> raises;  // [start/fps, end/fps] of palm events
    std::optional<imgcore::Rect> face_roi;
};

/// Pure function of (spec, seed).
Scenario render_scenario(const ScenarioSpec& spec, std::uint64_t seed);

/// Writes frame_%06d.ppm, truth.tsv, raises.tsv and scene.txt into dir.
void gen_synthetic(const ScenarioSpec& spec, std::uint64_t seed, const std::filesystem::path& dir);

void write_truth(std::ostream& out, const std::vector<TruthRow>& rows);
std::vector<TruthRow> read_truth(std::istream& in);
std::vector<TruthRow> load_truth(const std::filesystem::path& path);

/// Reads the face_roi line of a scene.txt, if present.
std::optional<imgcore::Rect> load_scene_face(const std::filesystem::path& scene_file);

// --- metrics --------------------------------------------------------------

struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    static Rational make(std::int64_t n, std::int64_t d);
    double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
    friend bool operator==(const Rational&, const Rational&) = default;
};

struct EvalReport {
    std::size_t tp = 0, fp = 0, fn = 0;
    std::optional<Rational> recall_pct;     // absent when tp + fn == 0
    std::optional<Rational> precision_pct;  // absent when tp + fp == 0
};

EvalReport evaluate(const std::vector<pipeline::GestureLabel>& pred, const std::vector<pipeline::GestureLabel>& truth,
                    pipeline::GestureLabel positive);

struct Scored {
    double distance = 0.0;
    bool positive = false;
};

struct RocPoint {
    double threshold = 0.0;
    double tpr = 0.0;
    double fpr = 0.0;
};

/// Accept iff distance <= threshold. Throws when either class is empty.
std::vector<RocPoint> roc_points(const std::vector<Scored>& scored, const std::vector<double>& thresholds);

/// IoU of two closed time intervals.
double interval_iou(std::pair<double, double> a, std::pair<double, double> b);

}  // namespace handcue::harness
