#pragma once

// Per-frame orchestration: mask fusion, clean-up, classification, raise
// debouncing, participation indicator and the newline-delimited wire format.

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "handcue/background.hpp"
#include "handcue/cpdh.hpp"
#include "handcue/imgcore.hpp"
#include "handcue/skintrack.hpp"

namespace handcue::pipeline {

enum class GestureLabel { none, palm, fist };

std::string_view to_string(GestureLabel g) noexcept;
std::optional<GestureLabel> parse_label(std::string_view token) noexcept;
GestureLabel from_gesture(cpdh::Gesture g) noexcept;

struct GestureEvent {
    double t = 0.0;
    std::string learner;
    GestureLabel gesture = GestureLabel::none;
    std::optional<double> distance;  // present iff gesture != none
    friend bool operator==(const GestureEvent&, const GestureEvent&) = default;
};

struct RaiseEvent {
    double t_start = 0.0;
    double t_end = 0.0;
    std::string learner;
    friend bool operator==(const RaiseEvent&, const RaiseEvent&) = default;
};

enum class IndicatorState { green, red };

std::string_view to_string(IndicatorState s) noexcept;

struct IndicatorSample {
    double t = 0.0;
    std::string learner;
    double freq = 0.0;  // raises per minute
    IndicatorState state = IndicatorState::green;
    friend bool operator==(const IndicatorSample&, const IndicatorSample&) = default;
};

struct IndicatorParams {
    double window_w = 300.0;     // seconds
    double red_threshold = 0.5;  // raises per minute
    double grace = 120.0;        // seconds

    void validate() const;
    friend bool operator==(const IndicatorParams&, const IndicatorParams&) = default;
};

struct ParticipationSeries {
    std::string learner;
    IndicatorParams params;
    double start = 0.0;  // session start; the low-frequency clock runs from here
    std::vector<RaiseEvent> events;
    std::vector<std::pair<double, double>> freq_curve;  // (t, raises per minute)
    IndicatorState state = IndicatorState::green;
    std::optional<double> below_since;
    std::optional<double> red_since;

    friend bool operator==(const ParticipationSeries&, const ParticipationSeries&) = default;
};

/// Appends freq(now) and advances the green/red state. Throws Errc::time_regression
/// if now precedes the last curve sample.
void update_indicator(ParticipationSeries& series, double now);

/// Online debouncer: a raise opens on the k-th consecutive palm and closes at
/// the first non-palm event.
class RaiseDetector {
public:
    explicit RaiseDetector(int debounce_k = 5);

    /// Returns true when this event opens a new raise.
    bool push(const GestureEvent& e);
    const std::vector<RaiseEvent>& events() const noexcept { return events_; }
    int debounce() const noexcept { return k_; }

    friend bool operator==(const RaiseDetector&, const RaiseDetector&) = default;

private:
    int k_;
    int run_ = 0;
    double run_start_ = 0.0;
    bool open_ = false;
    std::vector<RaiseEvent> events_;
};

std::vector<RaiseEvent> detect_raise_events(const std::vector<GestureEvent>& stream, int debounce_k);

imgcore::BinaryMask fuse_masks(const imgcore::BinaryMask& motion, const imgcore::BinaryMask& skin);

struct PostprocessParams {
    int morph_radius = 1;
    double blur_sigma = 1.0;
    std::uint8_t threshold = 128;
};

/// open -> close -> render -> blur -> threshold.
imgcore::BinaryMask postprocess_mask(const imgcore::BinaryMask& mask, const PostprocessParams& params = {});

struct PipelineConfig {
    std::string learner = "L1";
    int debounce_k = 5;
    IndicatorParams indicator;
    double indicator_period = 1.0;      // seconds of stream time between samples
    std::optional<double> max_distance;  // unset: 95th percentile of intra-class db distances
    std::size_t min_area = 200;
    int reinit_period = 20;
    PostprocessParams post;
    cpdh::CpdhParams cpdh;
    skintrack::TrackerParams tracker;

    void validate() const;
};

struct Models {
    std::shared_ptr<const background::CodebookModel> background;
    std::shared_ptr<const cpdh::GestureDb> db;
    std::shared_ptr<const skintrack::Detector> detector;
    std::shared_ptr<const skintrack::SkinModel> skin;
};

struct SessionState {
    skintrack::TrackState track;
    RaiseDetector raises;
    ParticipationSeries series;
    std::optional<double> last_t;
    double next_sample = 0.0;

    friend bool operator==(const SessionState&, const SessionState&) = default;
};

struct FrameResult {
    GestureEvent event;
    std::vector<IndicatorSample> indicators;  // samples due up to this frame's time
    std::optional<cpdh::Match> nearest;  // 1-NN before the max_distance cut
    bool detector_ran = false;
    bool raise_opened = false;
};

/// One learner stream. Copies share the immutable models.
class Session {
public:
    Session(Models models, PipelineConfig config);

    /// Never throws on bad frame content; failing stages yield gesture none.
    /// Throws Errc::time_regression if timestamps go backwards.
    FrameResult process_frame(const imgcore::Frame& frame);

    const SessionState& state() const noexcept { return state_; }
    const PipelineConfig& config() const noexcept { return config_; }
    double max_distance() const noexcept { return max_distance_; }

    /// Debug view of the masks for one frame, without touching the session.
    struct Masks {
        imgcore::BinaryMask motion, skin, fused, cleaned;
    };
    Masks masks_for(const imgcore::Frame& frame) const;

private:
    GestureEvent classify(const imgcore::Frame& frame, const imgcore::BinaryMask& cleaned,
                          std::optional<cpdh::Match>& nearest) const;

    Models models_;
    PipelineConfig config_;
    double max_distance_ = 0.0;
    SessionState state_;
};

// Wire records: one JSON object per line.
using Record = std::variant<GestureEvent, IndicatorSample>;

std::string serialize_event(const GestureEvent& e);
std::string serialize_event(const IndicatorSample& s);
std::string serialize_record(const Record& r);

/// Throws Errc::format on anything outside the schema.
Record parse_record(std::string_view line);

}  // namespace handcue::pipeline
