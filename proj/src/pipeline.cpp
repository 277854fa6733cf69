#include "handcue/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

namespace handcue::pipeline {

using imgcore::BinaryMask;
using imgcore::Frame;
using json = nlohmann::ordered_json;

std::string_view to_string(GestureLabel g) noexcept {
    switch (g) {
        case GestureLabel::palm:
            return "palm";
        case GestureLabel::fist:
            return "fist";
        case GestureLabel::none:
            break;
    }
    return "none";
}

std::optional<GestureLabel> parse_label(std::string_view token) noexcept {
    if (token == "none" || token == "None") return GestureLabel::none;
    if (auto g = cpdh::parse_gesture(token)) return from_gesture(*g);
    return std::nullopt;
}

GestureLabel from_gesture(cpdh::Gesture g) noexcept {
    return g == cpdh::Gesture::palm ? GestureLabel::palm : GestureLabel::fist;
}

std::string_view to_string(IndicatorState s) noexcept { return s == IndicatorState::red ? "red" : "green"; }

void IndicatorParams::validate() const {
    if (!(window_w > 0.0)) throw Error(Errc::parameter, "window_w must be positive");
    if (!(red_threshold > 0.0)) throw Error(Errc::parameter, "red_threshold must be positive");
    if (!(grace > 0.0)) throw Error(Errc::parameter, "grace must be positive");
}

void update_indicator(ParticipationSeries& s, double now) {
    if (!s.freq_curve.empty() && now < s.freq_curve.back().first)
        throw Error(Errc::time_regression, "indicator time went backwards");
    const double lo = now - s.params.window_w;
    std::size_t hits = 0;
    for (auto it = s.events.rbegin(); it != s.events.rend(); ++it) {
        if (it->t_start <= lo) break;  // events are ordered by t_start
        if (it->t_start <= now) ++hits;
    }
    const double freq = 60.0 * static_cast<double>(hits) / s.params.window_w;

    if (freq >= s.params.red_threshold) {
        s.state = IndicatorState::green;
        s.below_since.reset();
        s.red_since.reset();
    } else {
        if (!s.below_since) s.below_since = s.freq_curve.empty() ? std::min(s.start, now) : now;
        if (s.state == IndicatorState::green && now - *s.below_since >= s.params.grace) {
            s.state = IndicatorState::red;
            s.red_since = now;
        }
    }
    if (!s.freq_curve.empty() && s.freq_curve.back().first == now)
        s.freq_curve.back().second = freq;
    else
        s.freq_curve.emplace_back(now, freq);
}

RaiseDetector::RaiseDetector(int debounce_k) : k_(debounce_k) {
    if (k_ < 1) throw Error(Errc::parameter, "debounce_k must be >= 1");
}

bool RaiseDetector::push(const GestureEvent& e) {
    if (e.gesture != GestureLabel::palm) {
        run_ = 0;
        open_ = false;
        return false;
    }
    if (run_ == 0) run_start_ = e.t;
    ++run_;
    if (open_) {
        events_.back().t_end = e.t;
        return false;
    }
    if (run_ >= k_) {
        events_.push_back({run_start_, e.t, e.learner});
        open_ = true;
        return true;
    }
    return false;
}

std::vector<RaiseEvent> detect_raise_events(const std::vector<GestureEvent>& stream, int debounce_k) {
    RaiseDetector d(debounce_k);
    for (const auto& e : stream) d.push(e);
    return d.events();
}

BinaryMask fuse_masks(const BinaryMask& motion, const BinaryMask& skin) {
    if (!motion.same_shape(skin)) throw Error(Errc::dimension, "fuse_masks: mask sizes differ");
    BinaryMask out(motion.width(), motion.height());
    auto o = out.bits();
    const auto a = motion.bits(), b = skin.bits();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = a[i] & b[i];
    return out;
}

BinaryMask postprocess_mask(const BinaryMask& mask, const PostprocessParams& p) {
    auto m = imgcore::morph(mask, imgcore::MorphOp::open, p.morph_radius);
    m = imgcore::morph(m, imgcore::MorphOp::close, p.morph_radius);
    return imgcore::threshold(imgcore::gaussian_blur(imgcore::render(m), p.blur_sigma), p.threshold);
}

void PipelineConfig::validate() const {
    if (debounce_k < 1) throw Error(Errc::parameter, "debounce_k must be >= 1");
    indicator.validate();
    if (!(indicator_period > 0.0)) throw Error(Errc::parameter, "indicator_period must be positive");
    if (max_distance && !(*max_distance > 0.0)) throw Error(Errc::parameter, "max_distance must be positive");
    if (min_area == 0) throw Error(Errc::parameter, "min_area must be positive");
    if (reinit_period < 1) throw Error(Errc::parameter, "reinit_period must be >= 1");
    cpdh.validate();
}

Session::Session(Models models, PipelineConfig config) : models_(std::move(models)), config_(std::move(config)) {
    config_.validate();
    if (!models_.background || !models_.db || !models_.detector || !models_.skin)
        throw Error(Errc::parameter, "session needs background, db, detector and skin models");
    if (models_.db->entries.empty()) throw Error(Errc::empty_db, "gesture database is empty");
    if (models_.db->u != config_.cpdh.u || models_.db->v != config_.cpdh.v || models_.db->n != config_.cpdh.n)
        throw Error(Errc::shape_mismatch, "gesture db shape differs from the cpdh parameters");
    max_distance_ = config_.max_distance ? *config_.max_distance : cpdh::intra_class_percentile(*models_.db, 0.95);
    state_.track.reinit_period = config_.reinit_period;
    state_.raises = RaiseDetector(config_.debounce_k);
    state_.series.learner = config_.learner;
    state_.series.params = config_.indicator;
}

Session::Masks Session::masks_for(const Frame& frame) const {
    Masks m;
    m.motion = background::extract_foreground(*models_.background, frame);
    m.skin = skintrack::tracker_step(frame, m.motion, state_.track, *models_.detector, *models_.skin,
                                     config_.tracker)
                 .skin_mask;
    m.fused = fuse_masks(m.motion, m.skin);
    m.cleaned = postprocess_mask(m.fused, config_.post);
    return m;
}

GestureEvent Session::classify(const Frame& frame, const BinaryMask& cleaned,
                               std::optional<cpdh::Match>& nearest) const {
    GestureEvent e{frame.timestamp(), config_.learner, GestureLabel::none, std::nullopt};
    const auto lab = imgcore::label_components(cleaned);
    if (lab.blobs.empty() || lab.blobs.front().area < config_.min_area) return e;
    const auto& blob = lab.blobs.front();
    BinaryMask hand(blob.bbox.w, blob.bbox.h);
    for (int y = 0; y < blob.bbox.h; ++y)
        for (int x = 0; x < blob.bbox.w; ++x) {
            const auto i = static_cast<std::size_t>(y + blob.bbox.y) * cleaned.width() + (x + blob.bbox.x);
            if (lab.labels[i] == blob.label) hand.set(x, y, true);
        }
    try {
        const auto d = cpdh::describe(hand, config_.cpdh);
        const auto m = cpdh::classify_gesture(d, *models_.db);
        nearest = m;
        if (m.distance <= max_distance_) {
            e.gesture = from_gesture(m.label);
            e.distance = m.distance;
        }
    } catch (const Error&) {
        // degenerate outline: no gesture
    }
    return e;
}

FrameResult Session::process_frame(const Frame& frame) {
    const double t = frame.timestamp();
    if (state_.last_t && t < *state_.last_t) throw Error(Errc::time_regression, "frame timestamps went backwards");
    if (!state_.last_t) {
        state_.series.start = t;
        state_.next_sample = std::ceil(t / config_.indicator_period) * config_.indicator_period;
    }
    state_.last_t = t;

    FrameResult r;
    r.event = {t, config_.learner, GestureLabel::none, std::nullopt};
    try {
        const auto motion = background::extract_foreground(*models_.background, frame);
        auto step = skintrack::tracker_step(frame, motion, state_.track, *models_.detector, *models_.skin,
                                            config_.tracker);
        state_.track = step.state;
        r.detector_ran = step.detector_ran;
        const auto cleaned = postprocess_mask(fuse_masks(motion, step.skin_mask), config_.post);
        r.event = classify(frame, cleaned, r.nearest);
    } catch (const Error&) {
        // wrong frame size or similar: report no gesture for this frame
    }

    r.raise_opened = state_.raises.push(r.event);
    const auto& raises = state_.raises.events();
    auto& series_events = state_.series.events;
    if (r.raise_opened)
        series_events.push_back(raises.back());
    else if (!raises.empty() && series_events.size() == raises.size())
        series_events.back() = raises.back();

    // indicator ticks fall on multiples of the period in stream time
    while (state_.next_sample <= t) {
        update_indicator(state_.series, state_.next_sample);
        r.indicators.push_back({state_.next_sample, config_.learner, state_.series.freq_curve.back().second,
                                state_.series.state});
        state_.next_sample += config_.indicator_period;
    }
    return r;
}

std::string serialize_event(const GestureEvent& e) {
    json j;
    j["t"] = e.t;
    j["learner"] = e.learner;
    j["kind"] = "gesture";
    j["gesture"] = std::string(to_string(e.gesture));
    if (e.gesture != GestureLabel::none && e.distance) j["distance"] = *e.distance;
    return j.dump() + '\n';
}

std::string serialize_event(const IndicatorSample& s) {
    json j;
    j["t"] = s.t;
    j["learner"] = s.learner;
    j["kind"] = "indicator";
    j["freq"] = s.freq;
    j["state"] = std::string(to_string(s.state));
    return j.dump() + '\n';
}

std::string serialize_record(const Record& r) {
    return std::visit([](const auto& v) { return serialize_event(v); }, r);
}

namespace {

double number_field(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_number()) throw Error(Errc::format, std::string("record field '") + key + "' missing or not a number");
    return it->get<double>();
}

std::string string_field(const json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || !it->is_string()) throw Error(Errc::format, std::string("record field '") + key + "' missing or not a string");
    return it->get<std::string>();
}

}  // namespace

Record parse_record(std::string_view line) {
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.remove_suffix(1);
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw Error(Errc::format, std::string("malformed record: ") + e.what());
    }
    if (!j.is_object()) throw Error(Errc::format, "record is not an object");
    const auto kind = string_field(j, "kind");
    if (kind == "gesture") {
        GestureEvent e;
        e.t = number_field(j, "t");
        e.learner = string_field(j, "learner");
        const auto g = parse_label(string_field(j, "gesture"));
        if (!g) throw Error(Errc::format, "unknown gesture label");
        e.gesture = *g;
        const bool has_distance = j.contains("distance");
        if (has_distance != (e.gesture != GestureLabel::none))
            throw Error(Errc::format, "distance must be present exactly when a gesture is reported");
        if (has_distance) e.distance = number_field(j, "distance");
        if (j.size() != (has_distance ? 5u : 4u)) throw Error(Errc::format, "unexpected fields in gesture record");
        return e;
    }
    if (kind == "indicator") {
        IndicatorSample s;
        s.t = number_field(j, "t");
        s.learner = string_field(j, "learner");
        s.freq = number_field(j, "freq");
        const auto st = string_field(j, "state");
        if (st == "green")
            s.state = IndicatorState::green;
        else if (st == "red")
            s.state = IndicatorState::red;
        else
            throw Error(Errc::format, "unknown indicator state");
        if (j.size() != 5u) throw Error(Errc::format, "unexpected fields in indicator record");
        return s;
    }
    throw Error(Errc::format, "unknown record kind '" + kind + "'");
}

}  // namespace handcue::pipeline
