#pragma once

// Hand localisation (boosted rectangle-feature cascade or foreground blobs),
// hue-histogram skin model and CamShift tracking.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "handcue/imgcore.hpp"

namespace handcue::skintrack {

using Roi = imgcore::Rect;

struct WeightedRect {
    int x = 0, y = 0, w = 0, h = 0;
    double weight = 0.0;
    friend bool operator==(const WeightedRect&, const WeightedRect&) = default;
};

struct WeakClassifier {
    std::vector<WeightedRect> feature;
    double split_threshold = 0.0;
    double left_value = 0.0;
    double right_value = 0.0;
    friend bool operator==(const WeakClassifier&, const WeakClassifier&) = default;
};

struct Stage {
    double threshold = 0.0;
    std::vector<WeakClassifier> weak;
    friend bool operator==(const Stage&, const Stage&) = default;
};

struct CascadeModel {
    int window_w = 24;
    int window_h = 24;
    std::vector<Stage> stages;

    /// Throws Errc::model if a rect leaves the base window or a value is not finite.
    void validate() const;
    friend bool operator==(const CascadeModel&, const CascadeModel&) = default;
};

// "HCAS1" whitespace-delimited text format.
CascadeModel read_cascade(std::istream& in);
void write_cascade(std::ostream& out, const CascadeModel& model);
CascadeModel load_cascade(const std::filesystem::path& path);
void save_cascade(const std::filesystem::path& path, const CascadeModel& model);

/// Every window position that passes all stages, before grouping.
std::vector<Roi> scan_cascade(const imgcore::Frame& gray, const CascadeModel& model, double scale_factor);

/// Union of passes with IoU > 0.3; groups smaller than min_neighbors are
/// dropped. min_neighbors == 0 returns the raw passes.
std::vector<Roi> group_detections(std::vector<Roi> raw, int min_neighbors);

std::vector<Roi> viola_jones_detect(const imgcore::Frame& gray, const CascadeModel& model,
                                    double scale_factor = 1.2, int min_neighbors = 3);

/// Bounding boxes of connected components with area >= min_area, largest first.
std::vector<Roi> blob_detect(const imgcore::BinaryMask& foreground, std::size_t min_area);

struct SkinParams {
    int bins = 32;
    std::uint8_t sat_min = 30;
    std::uint8_t val_min = 30;
    double core_fraction = 0.6;  // central part of the face box that is sampled
};

struct SkinModel {
    std::vector<double> hue_hist;  // sums to 1 when non-empty
    std::uint8_t sat_min = 30;
    std::uint8_t val_min = 30;

    int bins() const noexcept { return static_cast<int>(hue_hist.size()); }
    int bin_of(double hue_deg) const noexcept;
    bool gated(const imgcore::Hsv& p) const noexcept { return p.s >= sat_min && p.v >= val_min; }
};

/// Throws Errc::empty_model if no pixel of the sampled core passes the S/V gates.
SkinModel build_skin_model(const imgcore::Frame& frame, const Roi& face, const SkinParams& params = {});

/// Flat histogram over [lo_deg, hi_deg); used when no face sample is available.
SkinModel skin_prior(double lo_deg, double hi_deg, const SkinParams& params = {});

imgcore::Frame backproject(const imgcore::Frame& frame, const SkinModel& model);

struct TrackState {
    Roi window{0, 0, 1, 1};
    int frames_since_reinit = 0;
    int reinit_period = 20;
    bool lost = true;  // a fresh tracker has nothing to follow yet
    friend bool operator==(const TrackState&, const TrackState&) = default;
};

struct CamshiftParams {
    double lost_threshold = 5.0 * 255.0;
    int min_side = 8;
    int max_iterations = 10;
};

/// Mean-shift recentering followed by the 2*sqrt(M00/255) square resize.
/// When m00_trace is given it receives M00 of every accepted window.
TrackState camshift_track(const imgcore::Frame& prob, TrackState state, const CamshiftParams& params = {},
                          std::vector<double>* m00_trace = nullptr);

class Detector {
public:
    virtual ~Detector() = default;
    /// ROIs largest first.
    virtual std::vector<Roi> detect(const imgcore::Frame& frame, const imgcore::BinaryMask& foreground) const = 0;
};

class CascadeDetector final : public Detector {
public:
    explicit CascadeDetector(CascadeModel model, double scale_factor = 1.2, int min_neighbors = 3);
    std::vector<Roi> detect(const imgcore::Frame& frame, const imgcore::BinaryMask& foreground) const override;

private:
    CascadeModel model_;
    double scale_factor_;
    int min_neighbors_;
};

class BlobDetector final : public Detector {
public:
    explicit BlobDetector(std::size_t min_area = 200) : min_area_(min_area) {}
    std::vector<Roi> detect(const imgcore::Frame& frame, const imgcore::BinaryMask& foreground) const override;

private:
    std::size_t min_area_;
};

struct TrackerParams {
    std::uint8_t skin_threshold = 60;
    CamshiftParams camshift;
};

struct TrackerOutput {
    TrackState state;
    imgcore::BinaryMask skin_mask;  // full frame; hand restriction happens at fusion
    bool detector_ran = false;
};

TrackerOutput tracker_step(const imgcore::Frame& frame, const imgcore::BinaryMask& foreground,
                           const TrackState& state, const Detector& detector, const SkinModel& skin,
                           const TrackerParams& params = {});

}  // namespace handcue::skintrack
