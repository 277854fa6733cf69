#include "handcue/harness.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <regex>
#include <sstream>

namespace handcue::harness {

using imgcore::BinaryMask;
using imgcore::Frame;
using imgcore::Rect;
using imgcore::Rgb;
using pipeline::GestureLabel;

// --- PNM -------------------------------------------------------------------

namespace {

struct PnmHeader {
    char kind = '6';
    int width = 0, height = 0, maxval = 0;
};

int read_header_int(std::istream& in) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF || !std::isdigit(c)) throw Error(Errc::format, "bad PNM header");
    long v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        if (v > (1 << 24)) throw Error(Errc::format, "PNM header value too large");
        c = in.get();
    }
    // exactly one whitespace byte ends the token; for the maxval it precedes raster data
    if (c != EOF && !std::isspace(c)) throw Error(Errc::format, "bad PNM header");
    return static_cast<int>(v);
}

PnmHeader read_header(std::istream& in) {
    char magic[2] = {};
    if (!in.read(magic, 2) || magic[0] != 'P' || (magic[1] != '2' && magic[1] != '3' && magic[1] != '5' && magic[1] != '6'))
        throw Error(Errc::format, "not a P2/P3/P5/P6 file");
    PnmHeader h;
    h.kind = magic[1];
    h.width = read_header_int(in);
    h.height = read_header_int(in);
    h.maxval = read_header_int(in);
    if (h.width <= 0 || h.height <= 0) throw Error(Errc::format, "PNM dimensions must be positive");
    if (h.maxval != 255) throw Error(Errc::format, "unsupported maxval " + std::to_string(h.maxval) + " (only 255)");
    return h;
}

}  // namespace

Frame read_pnm(std::istream& in) {
    const PnmHeader h = read_header(in);
    const int ch = (h.kind == '3' || h.kind == '6') ? 3 : 1;
    Frame f(h.width, h.height, ch);
    auto data = f.data();
    if (h.kind == '5' || h.kind == '6') {
        if (!in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size())))
            throw Error(Errc::format, "truncated PNM raster");
    } else {
        for (auto& v : data) {
            int x = -1;
            if (!(in >> x)) throw Error(Errc::format, "truncated PNM raster");
            if (x < 0 || x > 255) throw Error(Errc::format, "PNM sample out of range");
            v = static_cast<std::uint8_t>(x);
        }
    }
    return f;
}

Frame read_pnm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot open " + path.string());
    try {
        return read_pnm(in);
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

void write_pnm(std::ostream& out, const Frame& frame, bool ascii) {
    const bool color = frame.channels() == 3;
    out << 'P' << (ascii ? (color ? '3' : '2') : (color ? '6' : '5')) << '\n'
        << frame.width() << ' ' << frame.height() << "\n255\n";
    const auto data = frame.data();
    if (!ascii) {
        out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    } else {
        const std::size_t row = static_cast<std::size_t>(frame.width()) * frame.channels();
        for (std::size_t i = 0; i < data.size(); ++i) {
            out << static_cast<int>(data[i]);
            out << ((i + 1) % row == 0 ? '\n' : ' ');
        }
    }
    if (!out) throw Error(Errc::io, "PNM write failed");
}

void write_pnm(const std::filesystem::path& path, const Frame& frame, bool ascii) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::io, "cannot open " + path.string() + " for writing");
    write_pnm(out, frame, ascii);
}

std::string frame_name(int index, bool color) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%06d.%s", index, color ? "ppm" : "pgm");
    return buf;
}

Frame FrameSource::load(std::size_t i) const {
    Frame f = read_pnm(paths.at(i));
    f.set_timestamp(indices.at(i) / fps);
    return f;
}

FrameSource load_frames(const std::filesystem::path& dir, double fps) {
    if (!(fps > 0.0)) throw Error(Errc::parameter, "fps must be positive");
    if (!std::filesystem::is_directory(dir)) throw Error(Errc::io, dir.string() + " is not a directory");
    static const std::regex pattern(R"(frame_(\d{6})\.(ppm|pgm))");
    std::map<int, std::filesystem::path> found;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        std::smatch m;
        if (!std::regex_match(name, m, pattern)) continue;
        const int idx = std::stoi(m[1].str());
        if (!found.emplace(idx, entry.path()).second)
            throw Error(Errc::io, "frame index " + std::to_string(idx) + " present twice in " + dir.string());
    }
    if (found.empty()) throw Error(Errc::io, "no frame_NNNNNN.ppm/.pgm files in " + dir.string());

    FrameSource src;
    src.fps = fps;
    const int first = found.begin()->first, last = found.rbegin()->first;
    const bool color = found.begin()->second.extension() == ".ppm";
    int w = 0, h = 0;
    for (int i = first; i <= last; ++i) {
        const auto it = found.find(i);
        if (it == found.end())
            throw Error(Errc::io, "missing frame " + (dir / frame_name(i, color)).string());
        std::ifstream in(it->second, std::ios::binary);
        if (!in) throw Error(Errc::io, "cannot open " + it->second.string());
        PnmHeader hd;
        try {
            hd = read_header(in);
        } catch (const Error& e) {
            throw Error(e.code(), it->second.string() + ": " + e.what());
        }
        if (i == first) {
            w = hd.width;
            h = hd.height;
        } else if (hd.width != w || hd.height != h) {
            throw Error(Errc::dimension, it->second.string() + " has different dimensions");
        }
        src.paths.push_back(it->second);
        src.indices.push_back(i);
    }
    return src;
}

// --- procedural hands --------------------------------------------------------

namespace {

struct Vec {
    double x, y;
};

double segment_distance(Vec p, Vec a, Vec b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy));
}

bool in_rounded_rect(Vec p, Vec c, double hw, double hh, double r) {
    const double qx = std::abs(p.x - c.x) - (hw - r), qy = std::abs(p.y - c.y) - (hh - r);
    const double outside = std::hypot(std::max(qx, 0.0), std::max(qy, 0.0));
    return outside + std::min(std::max(qx, qy), 0.0) <= r;
}

Vec along(Vec base, double deg_from_up, double len) {
    const double a = deg_from_up * std::numbers::pi / 180.0;
    return {base.x + std::sin(a) * len, base.y - std::cos(a) * len};
}

// Shape in hand units (scale 1, palm body centred at the origin).
bool inside_hand(cpdh::Gesture shape, Vec p) {
    const bool wrist = std::abs(p.x) <= 13 && p.y >= 14 && p.y <= 46;
    if (wrist) return true;
    if (shape == cpdh::Gesture::palm) {
        if (in_rounded_rect(p, {0, 0}, 20, 22, 8)) return true;
        const double xs[] = {-16, -5.5, 5.5, 16}, angles[] = {-16, -6, 6, 16}, lengths[] = {32, 38, 36, 28};
        for (int i = 0; i < 4; ++i) {
            const Vec base{xs[i], -16};
            if (segment_distance(p, base, along(base, angles[i], lengths[i])) <= 4.2) return true;
        }
        const Vec thumb{-15, 6};
        return segment_distance(p, thumb, along(thumb, -55, 30)) <= 5.2;
    }
    if (in_rounded_rect(p, {0, 0}, 22, 20, 9)) return true;
    for (double x : {-15.0, -5.0, 5.0, 15.0})
        if (std::hypot(p.x - x, p.y + 18) <= 6.8) return true;
    return segment_distance(p, {-26, -2}, {2, 7}) <= 6.0;
}

}  // namespace

BinaryMask render_hand(cpdh::Gesture shape, int width, int height, const HandPose& pose) {
    if (!(pose.scale > 0.0)) throw Error(Errc::parameter, "hand scale must be positive");
    BinaryMask m(width, height);
    const double s = pose.scale;
    const int x0 = std::max(0, static_cast<int>(std::floor(pose.cx - 46 * s)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(pose.cx + 46 * s)));
    const int y0 = std::max(0, static_cast<int>(std::floor(pose.cy - 62 * s)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(pose.cy + 48 * s)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x)
            if (inside_hand(shape, {(x - pose.cx) / s, (y - pose.cy) / s})) m.set(x, y, true);
    return m;
}

std::vector<cpdh::LabeledMask> random_hand_masks(std::size_t count, std::uint64_t seed, double scale_lo,
                                                 double scale_hi, int size) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> scale(scale_lo, scale_hi), unit(0.0, 1.0);
    std::vector<cpdh::LabeledMask> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const auto shape = i % 2 == 0 ? cpdh::Gesture::palm : cpdh::Gesture::fist;
        const double s = scale(rng);
        const double lo_x = 40 * s + 2, hi_x = size - 40 * s - 2;
        const double lo_y = 62 * s + 2, hi_y = size - 48 * s - 2;
        if (hi_x < lo_x || hi_y < lo_y) throw Error(Errc::parameter, "canvas too small for the hand scale");
        const HandPose pose{lo_x + unit(rng) * (hi_x - lo_x), lo_y + unit(rng) * (hi_y - lo_y), s};
        out.push_back({render_hand(shape, size, size, pose), shape});
    }
    return out;
}

// --- scenarios ---------------------------------------------------------------

void ScenarioSpec::validate() const {
    if (width < 16 || height < 16) throw Error(Errc::parameter, "scenario frame too small");
    if (!(fps > 0.0)) throw Error(Errc::parameter, "fps must be positive");
    if (duration < 1) throw Error(Errc::parameter, "duration must be >= 1 frame");
    if (noise_amp < 0 || noise_amp > 127) throw Error(Errc::parameter, "noise_amp out of range");
    for (const auto& e : events) {
        if (e.start < 0 || e.end < e.start || e.end >= duration)
            throw Error(Errc::parameter, "event frames must lie within the duration");
        if (!(e.scale > 0.0)) throw Error(Errc::parameter, "event scale must be positive");
    }
    if (face && !(face->r > 0.0)) throw Error(Errc::parameter, "face radius must be positive");
}

namespace {

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<double> numbers(const std::string& value, std::size_t lo, std::size_t hi, int line) {
    std::istringstream in(value);
    std::vector<double> out;
    double v;
    while (in >> v) out.push_back(v);
    if (!in.eof() || out.size() < lo || out.size() > hi)
        throw Error(Errc::format, "line " + std::to_string(line) + ": expected " + std::to_string(lo) + " numbers");
    return out;
}

double number(const std::string& value, int line) { return numbers(value, 1, 1, line).front(); }

}  // namespace

ScenarioSpec parse_scenario(std::istream& in) {
    ScenarioSpec spec;
    ActorEvent* ev = nullptr;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        const std::string text = trim(raw);
        if (text.empty()) continue;
        if (text == "[event]") {
            spec.events.emplace_back();
            ev = &spec.events.back();
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw Error(Errc::format, "line " + std::to_string(line) + ": expected key = value");
        const std::string key = trim(text.substr(0, eq));
        std::string value = trim(text.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
        auto bad = [&] { return Error(Errc::format, "line " + std::to_string(line) + ": unknown key '" + key + "'"); };
        if (ev) {
            if (key == "start")
                ev->start = static_cast<int>(number(value, line));
            else if (key == "end")
                ev->end = static_cast<int>(number(value, line));
            else if (key == "shape") {
                const auto g = cpdh::parse_gesture(value);
                if (!g) throw Error(Errc::format, "line " + std::to_string(line) + ": shape must be palm or fist");
                ev->shape = *g;
            } else if (key == "from") {
                const auto v = numbers(value, 2, 2, line);
                ev->from_x = v[0];
                ev->from_y = v[1];
            } else if (key == "to") {
                const auto v = numbers(value, 2, 2, line);
                ev->to_x = v[0];
                ev->to_y = v[1];
            } else if (key == "scale")
                ev->scale = number(value, line);
            else if (key == "hue")
                ev->hue = number(value, line);
            else
                throw bad();
            continue;
        }
        if (key == "width")
            spec.width = static_cast<int>(number(value, line));
        else if (key == "height")
            spec.height = static_cast<int>(number(value, line));
        else if (key == "fps")
            spec.fps = number(value, line);
        else if (key == "duration")
            spec.duration = static_cast<int>(number(value, line));
        else if (key == "background") {
            if (value != "flat" && value != "textured")
                throw Error(Errc::format, "line " + std::to_string(line) + ": background must be flat or textured");
            spec.textured = value == "textured";
        } else if (key == "background_seed")
            spec.background_seed = static_cast<std::uint64_t>(number(value, line));
        else if (key == "noise_amp")
            spec.noise_amp = static_cast<int>(number(value, line));
        else if (key == "face") {
            const auto v = numbers(value, 3, 4, line);
            spec.face = FacePatch{v[0], v[1], v[2], v.size() > 3 ? v[3] : 25.0};
        } else
            throw bad();
    }
    spec.validate();
    return spec;
}

ScenarioSpec load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io, "cannot open " + path.string());
    return parse_scenario(in);
}

namespace {

Rgb skin_colour(double hue) { return imgcore::from_hsv(hue, 0.55, 0.86); }

std::optional<Rect> bbox(const BinaryMask& m) {
    int x0 = m.width(), y0 = m.height(), x1 = -1, y1 = -1;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (m.get(x, y)) {
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
    if (x1 < 0) return std::nullopt;
    return Rect{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

Frame render_background(const ScenarioSpec& spec) {
    Frame f(spec.width, spec.height, 3);
    const Rgb base{86, 104, 128};
    if (!spec.textured) {
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x) f.set_rgb(x, y, base);
        return f;
    }
    // a few low-frequency waves per channel give a smooth wall texture
    std::mt19937_64 rng(spec.background_seed);
    std::uniform_real_distribution<double> freq(0.01, 0.06), phase(0.0, 2 * std::numbers::pi), amp(4.0, 10.0);
    struct Wave {
        double fx, fy, ph, a;
    };
    std::vector<Wave> waves[3];
    for (auto& ch : waves)
        for (int k = 0; k < 3; ++k) ch.push_back({freq(rng), freq(rng), phase(rng), amp(rng)});
    const int bases[3] = {base.r, base.g, base.b};
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x)
            for (int c = 0; c < 3; ++c) {
                double v = bases[c];
                for (const auto& w : waves[c]) v += w.a * std::sin(w.fx * x + w.fy * y + w.ph);
                f.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
            }
    return f;
}

}  // namespace

Scenario render_scenario(const ScenarioSpec& spec, std::uint64_t seed) {
    spec.validate();
    Scenario sc;
    Frame base = render_background(spec);
    if (spec.face) {
        const auto& fp = *spec.face;
        BinaryMask disk(spec.width, spec.height);
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x)
                if (std::hypot(x - fp.cx, y - fp.cy) <= fp.r) {
                    disk.set(x, y, true);
                    base.set_rgb(x, y, skin_colour(fp.hue));
                }
        sc.face_roi = bbox(disk);
    }
    for (const auto& e : spec.events)
        if (e.shape == cpdh::Gesture::palm) sc.raises.emplace_back(e.start / spec.fps, e.end / spec.fps);

    sc.frames.reserve(static_cast<std::size_t>(spec.duration));
    for (int i = 0; i < spec.duration; ++i) {
        Frame f = base;
        TruthRow row{i, GestureLabel::none, {}};
        for (const auto& e : spec.events) {
            if (i < e.start || i > e.end) continue;
            const double p = e.end > e.start ? double(i - e.start) / double(e.end - e.start) : 0.0;
            const HandPose pose{e.from_x + p * (e.to_x - e.from_x), e.from_y + p * (e.to_y - e.from_y), e.scale};
            const auto hand = render_hand(e.shape, spec.width, spec.height, pose);
            const Rgb c = skin_colour(e.hue);
            for (int y = 0; y < spec.height; ++y)
                for (int x = 0; x < spec.width; ++x)
                    if (hand.get(x, y)) f.set_rgb(x, y, c);
            if (auto box = bbox(hand)) row = {i, pipeline::from_gesture(e.shape), *box};
        }
        if (spec.noise_amp > 0) {
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(i)};
            std::mt19937 rng(seq);
            std::uniform_int_distribution<int> noise(-spec.noise_amp, spec.noise_amp);
            for (auto& v : f.data()) v = static_cast<std::uint8_t>(std::clamp(v + noise(rng), 0, 255));
        }
        f.set_timestamp(i / spec.fps);
        sc.frames.push_back(std::move(f));
        sc.truth.push_back(row);
    }
    return sc;
}

void gen_synthetic(const ScenarioSpec& spec, std::uint64_t seed, const std::filesystem::path& dir) {
    const auto sc = render_scenario(spec, seed);
    std::filesystem::create_directories(dir);
    for (std::size_t i = 0; i < sc.frames.size(); ++i)
        write_pnm(dir / frame_name(static_cast<int>(i)), sc.frames[i]);
    {
        std::ofstream out(dir / "truth.tsv");
        if (!out) throw Error(Errc::io, "cannot write truth.tsv in " + dir.string());
        write_truth(out, sc.truth);
    }
    {
        std::ofstream out(dir / "raises.tsv");
        out << "t_start\tt_end\n";
        for (const auto& [a, b] : sc.raises) out << a << '\t' << b << '\n';
    }
    std::ofstream scene(dir / "scene.txt");
    scene << "width " << spec.width << "\nheight " << spec.height << "\nfps " << spec.fps << "\nframes "
          << spec.duration << "\nseed " << seed << '\n';
    if (sc.face_roi)
        scene << "face_roi " << sc.face_roi->x << ' ' << sc.face_roi->y << ' ' << sc.face_roi->w << ' '
              << sc.face_roi->h << '\n';
    if (!scene) throw Error(Errc::io, "cannot write scene.txt in " + dir.string());
}

void write_truth(std::ostream& out, const std::vector<TruthRow>& rows) {
    for (const auto& r : rows)
        out << r.index << '\t' << pipeline::to_string(r.label) << '\t' << r.box.x << ' ' << r.box.y << ' ' << r.box.w
            << ' ' << r.box.h << '\n';
}

std::vector<TruthRow> read_truth(std::istream& in) {
    std::vector<TruthRow> rows;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string idx, label, box;
        if (!std::getline(ls, idx, '\t') || !std::getline(ls, label, '\t') || !std::getline(ls, box))
            throw Error(Errc::format, "truth line " + std::to_string(n) + ": expected 3 tab-separated fields");
        TruthRow r;
        const auto* end = idx.data() + idx.size();
        if (std::from_chars(idx.data(), end, r.index).ptr != end)
            throw Error(Errc::format, "truth line " + std::to_string(n) + ": bad frame index");
        const auto g = pipeline::parse_label(label);
        if (!g) throw Error(Errc::format, "truth line " + std::to_string(n) + ": bad label '" + label + "'");
        r.label = *g;
        std::istringstream bs(box);
        if (!(bs >> r.box.x >> r.box.y >> r.box.w >> r.box.h))
            throw Error(Errc::format, "truth line " + std::to_string(n) + ": bad box");
        rows.push_back(r);
    }
    return rows;
}

std::vector<TruthRow> load_truth(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::io, "cannot open " + path.string());
    return read_truth(in);
}

std::optional<Rect> load_scene_face(const std::filesystem::path& scene_file) {
    std::ifstream in(scene_file);
    std::string key;
    while (in >> key) {
        if (key == "face_roi") {
            Rect r;
            if (in >> r.x >> r.y >> r.w >> r.h) return r;
            throw Error(Errc::format, "bad face_roi in " + scene_file.string());
        }
        std::string rest;
        std::getline(in, rest);
    }
    return std::nullopt;
}

// --- metrics -------------------------------------------------------------------

Rational Rational::make(std::int64_t n, std::int64_t d) {
    if (d == 0) throw Error(Errc::parameter, "zero denominator");
    if (d < 0) {
        n = -n;
        d = -d;
    }
    const auto g = std::gcd(n < 0 ? -n : n, d);
    return {n / g, d / g};
}

EvalReport evaluate(const std::vector<GestureLabel>& pred, const std::vector<GestureLabel>& truth,
                    GestureLabel positive) {
    if (pred.size() != truth.size())
        throw Error(Errc::parameter, "prediction and truth lengths differ (" + std::to_string(pred.size()) + " vs " +
                                         std::to_string(truth.size()) + ")");
    EvalReport r;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] == positive, t = truth[i] == positive;
        r.tp += p && t;
        r.fp += p && !t;
        r.fn += !p && t;
    }
    const auto tp = static_cast<std::int64_t>(r.tp);
    if (r.tp + r.fn > 0) r.recall_pct = Rational::make(100 * tp, static_cast<std::int64_t>(r.tp + r.fn));
    if (r.tp + r.fp > 0) r.precision_pct = Rational::make(100 * tp, static_cast<std::int64_t>(r.tp + r.fp));
    return r;
}

std::vector<RocPoint> roc_points(const std::vector<Scored>& scored, const std::vector<double>& thresholds) {
    if (!std::is_sorted(thresholds.begin(), thresholds.end()))
        throw Error(Errc::parameter, "ROC thresholds must be sorted ascending");
    std::vector<double> pos, neg;
    for (const auto& s : scored) (s.positive ? pos : neg).push_back(s.distance);
    if (pos.empty() || neg.empty()) throw Error(Errc::parameter, "ROC needs both positive and negative samples");
    std::sort(pos.begin(), pos.end());
    std::sort(neg.begin(), neg.end());
    std::vector<RocPoint> out;
    out.reserve(thresholds.size());
    for (double t : thresholds) {
        const auto tp = std::upper_bound(pos.begin(), pos.end(), t) - pos.begin();
        const auto fp = std::upper_bound(neg.begin(), neg.end(), t) - neg.begin();
        out.push_back({t, double(tp) / double(pos.size()), double(fp) / double(neg.size())});
    }
    return out;
}

double interval_iou(std::pair<double, double> a, std::pair<double, double> b) {
    const double inter = std::min(a.second, b.second) - std::max(a.first, b.first);
    const double uni = std::max(a.second, b.second) - std::min(a.first, b.first);
    if (inter < 0) return 0.0;
    return uni > 0 ? inter / uni : 1.0;
}

}  // namespace handcue::harness
