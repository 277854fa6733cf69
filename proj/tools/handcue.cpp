// handcue command line: background training, gesture db building, live runs,
// offline evaluation and synthetic data generation.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "handcue/background.hpp"
#include "handcue/cpdh.hpp"
#include "handcue/events.hpp"
#include "handcue/harness.hpp"
#include "handcue/pipeline.hpp"
#include "handcue/skintrack.hpp"

namespace fs = std::filesystem;
using namespace handcue;

namespace {

struct ModelOptions {
    std::string bg, db, cascade, skin_roi;
    double fps = 10.0;
    double hue_lo = 0.0, hue_hi = 50.0;
    std::size_t min_area = 200;
};

struct SessionOptions {
    std::string learner = "L1";
    int debounce = 5;
    double window = 300.0, red_threshold = 0.5, grace = 120.0;
    double period = 1.0;
    std::optional<double> max_distance;
};

void add_model_options(CLI::App* cmd, ModelOptions& m) {
    cmd->add_option("--bg", m.bg, "codebook model file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--db", m.db, "gesture db file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--cascade", m.cascade, "hand cascade for tracker re-init (default: largest motion blob)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--skin-roi", m.skin_roi, "x,y,w,h face box in the first frame to sample skin hue from");
    cmd->add_option("--hue-lo", m.hue_lo, "skin hue prior lower bound when no face box is known");
    cmd->add_option("--hue-hi", m.hue_hi, "skin hue prior upper bound");
    cmd->add_option("--fps", m.fps, "frame rate of the frame files")->check(CLI::PositiveNumber);
    cmd->add_option("--min-area", m.min_area, "smallest hand blob in pixels");
}

void add_session_options(CLI::App* cmd, SessionOptions& s) {
    cmd->add_option("--learner", s.learner, "learner id written into every record");
    cmd->add_option("--debounce", s.debounce, "consecutive palm frames that open a raise");
    cmd->add_option("--window", s.window, "indicator window in seconds");
    cmd->add_option("--red-threshold", s.red_threshold, "raises per minute below which the indicator goes red");
    cmd->add_option("--grace", s.grace, "seconds below threshold before turning red");
    cmd->add_option("--indicator-period", s.period, "seconds between indicator records");
    cmd->add_option("--max-distance", s.max_distance, "1-NN acceptance distance (default: db 95th percentile)");
}

imgcore::Rect parse_roi(const std::string& s) {
    imgcore::Rect r;
    char c1 = 0, c2 = 0, c3 = 0;
    std::istringstream in(s);
    if (!(in >> r.x >> c1 >> r.y >> c2 >> r.w >> c3 >> r.h) || c1 != ',' || c2 != ',' || c3 != ',' || !(in >> std::ws).eof())
        throw Error(Errc::parameter, "skin roi must look like x,y,w,h, got '" + s + "'");
    return r;
}

pipeline::Models load_models(const ModelOptions& o, const harness::FrameSource& frames, const fs::path& frames_dir) {
    pipeline::Models m;
    m.background = std::make_shared<const background::CodebookModel>(background::load_model(o.bg));
    m.db = std::make_shared<const cpdh::GestureDb>(cpdh::load_db(o.db));
    if (!o.cascade.empty())
        m.detector = std::make_shared<const skintrack::CascadeDetector>(skintrack::load_cascade(o.cascade));
    else
        m.detector = std::make_shared<const skintrack::BlobDetector>(o.min_area);

    std::optional<imgcore::Rect> face;
    if (!o.skin_roi.empty())
        face = parse_roi(o.skin_roi);
    else if (fs::exists(frames_dir / "scene.txt"))
        face = harness::load_scene_face(frames_dir / "scene.txt");
    if (face)
        m.skin = std::make_shared<const skintrack::SkinModel>(skintrack::build_skin_model(frames.load(0), *face));
    else
        m.skin = std::make_shared<const skintrack::SkinModel>(skintrack::skin_prior(o.hue_lo, o.hue_hi));
    return m;
}

pipeline::PipelineConfig make_config(const SessionOptions& s, const cpdh::GestureDb& db, std::size_t min_area) {
    pipeline::PipelineConfig cfg;
    cfg.learner = s.learner;
    cfg.debounce_k = s.debounce;
    cfg.indicator = {s.window, s.red_threshold, s.grace};
    cfg.indicator_period = s.period;
    cfg.max_distance = s.max_distance;
    cfg.min_area = min_area;
    cfg.cpdh.n = db.n;
    cfg.cpdh.u = db.u;
    cfg.cpdh.v = db.v;
    return cfg;
}

bool is_mask_file(const fs::path& p, std::string& label) {
    const auto name = p.filename().string();
    if (p.extension() != ".pgm" && p.extension() != ".ppm") return false;
    for (const char* l : {"palm", "fist"})
        if (name.rfind(std::string(l) + "_", 0) == 0) {
            label = l;
            return true;
        }
    return false;
}

imgcore::BinaryMask to_mask(const imgcore::Frame& f) {
    return imgcore::threshold(f.channels() == 1 ? f : imgcore::to_gray(f), 128);
}

// --- subcommands ------------------------------------------------------------

int train_bg(const std::string& dir, const std::string& out, const background::CodebookParams& params, int count,
             double fps) {
    const auto src = harness::load_frames(dir, fps);
    const std::size_t n = count > 0 ? std::min<std::size_t>(std::size_t(count), src.size()) : src.size();
    std::vector<imgcore::Frame> frames;
    for (std::size_t i = 0; i < n; ++i) frames.push_back(src.load(i));
    const auto model = background::train_codebook(frames, params);
    background::save_model(out, model);
    std::cerr << "trained on " << n << " frames, " << model.total_codewords() << " codewords -> " << out << '\n';
    return 0;
}

int build_db(const std::string& dir, const std::string& out, const cpdh::CpdhParams& params) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<cpdh::LabeledMask> masks;
    for (const auto& p : files) {
        std::string label;
        if (!is_mask_file(p, label)) continue;
        masks.push_back({to_mask(harness::read_pnm(p)), *cpdh::parse_gesture(label)});
    }
    if (masks.empty()) throw Error(Errc::io, "no palm_*.pgm or fist_*.pgm masks in " + dir);
    const auto db = cpdh::build_gesture_db(masks, params);
    cpdh::save_db(out, db);
    std::cerr << db.entries.size() << " entries (" << db.skipped << " skipped) -> " << out << '\n';
    return 0;
}

int gen_masks(const std::string& dir, std::size_t count, std::uint64_t seed) {
    fs::create_directories(dir);
    const auto masks = harness::random_hand_masks(count, seed);
    for (std::size_t i = 0; i < masks.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "%s_%04zu.pgm", std::string(cpdh::to_string(masks[i].label)).c_str(), i);
        harness::write_pnm(fs::path(dir) / name, imgcore::render(masks[i].mask));
    }
    std::cerr << masks.size() << " masks -> " << dir << '\n';
    return 0;
}

int gen_synth(const std::string& spec_file, std::uint64_t seed, const std::string& out) {
    harness::gen_synthetic(harness::load_scenario(spec_file), seed, out);
    std::cerr << "scenario written to " << out << '\n';
    return 0;
}

struct RunOptions {
    std::string listen, out;
    bool pace = false;
    double linger = 0.0;
    bool wait_subscriber = false;
};

int run(const std::string& dir, const ModelOptions& mo, const SessionOptions& so, const RunOptions& ro) {
    const auto frames = harness::load_frames(dir, mo.fps);
    if (frames.size() == 0) throw Error(Errc::io, "no frames in " + dir);
    const auto models = load_models(mo, frames, dir);
    pipeline::Session session(models, make_config(so, *models.db, mo.min_area));

    std::unique_ptr<events::EventSink> sink;
    events::HttpSink* http = nullptr;
    if (!ro.listen.empty()) {
        const auto colon = ro.listen.rfind(':');
        if (colon == std::string::npos) throw Error(Errc::parameter, "--listen expects host:port");
        auto h = std::make_unique<events::HttpSink>(ro.listen.substr(0, colon), std::stoi(ro.listen.substr(colon + 1)));
        std::cerr << "serving http://" << ro.listen.substr(0, colon) << ':' << h->port() << "/events\n";
        http = h.get();
        sink = std::move(h);
        if (ro.wait_subscriber)
            while (http->subscribers() == 0) std::this_thread::sleep_for(std::chrono::milliseconds(20));
    } else if (!ro.out.empty()) {
        sink = std::make_unique<events::FileSink>(ro.out);
    } else {
        sink = std::make_unique<events::StreamSink>(std::cout);
    }

    const auto start = std::chrono::steady_clock::now();
    std::size_t raises = 0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto frame = frames.load(i);
        if (ro.pace)
            std::this_thread::sleep_until(start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                      std::chrono::duration<double>(frame.timestamp() - frames.load(0).timestamp())));
        const auto r = session.process_frame(frame);
        raises += r.raise_opened;
        sink->write_line(pipeline::serialize_event(r.event));
        for (const auto& s : r.indicators) sink->write_line(pipeline::serialize_event(s));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cerr << frames.size() << " frames, " << raises << " raise events, " << secs << " s\n";
    if (http && ro.linger > 0) std::this_thread::sleep_for(std::chrono::duration<double>(ro.linger));
    return 0;
}

std::string pct(const std::optional<harness::Rational>& r) {
    if (!r) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", r->value());
    return buf;
}

int eval(const std::string& dir, const std::string& truth_file, const ModelOptions& mo, const SessionOptions& so,
         const std::string& report_file, const std::string& roc_file) {
    const auto frames = harness::load_frames(dir, mo.fps);
    if (frames.size() == 0) throw Error(Errc::io, "no frames in " + dir);
    std::map<int, pipeline::GestureLabel> truth_by_index;
    for (const auto& row : harness::load_truth(truth_file)) truth_by_index[row.index] = row.label;

    const auto models = load_models(mo, frames, dir);
    pipeline::Session session(models, make_config(so, *models.db, mo.min_area));

    std::vector<pipeline::GestureLabel> pred, truth;
    std::vector<pipeline::GestureEvent> stream, truth_stream;
    std::vector<harness::Scored> palm_scores, fist_scores;
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto it = truth_by_index.find(frames.indices[i]);
        if (it == truth_by_index.end())
            throw Error(Errc::format, "no truth row for frame " + std::to_string(frames.indices[i]));
        const auto frame = frames.load(i);
        const auto r = session.process_frame(frame);
        pred.push_back(r.event.gesture);
        truth.push_back(it->second);
        stream.push_back(r.event);
        truth_stream.push_back({frame.timestamp(), so.learner, it->second, std::nullopt});
        const double dp = r.nearest && r.nearest->label == cpdh::Gesture::palm ? r.nearest->distance : inf;
        const double df = r.nearest && r.nearest->label == cpdh::Gesture::fist ? r.nearest->distance : inf;
        palm_scores.push_back({dp, it->second == pipeline::GestureLabel::palm});
        fist_scores.push_back({df, it->second == pipeline::GestureLabel::fist});
    }

    std::ofstream rep(report_file);
    if (!rep) throw Error(Errc::io, "cannot write " + report_file);
    rep << "class\ttp\tfp\tfn\trecall_pct\tprecision_pct\n";
    for (auto cls : {pipeline::GestureLabel::palm, pipeline::GestureLabel::fist}) {
        const auto r = harness::evaluate(pred, truth, cls);
        rep << pipeline::to_string(cls) << '\t' << r.tp << '\t' << r.fp << '\t' << r.fn << '\t' << pct(r.recall_pct)
            << '\t' << pct(r.precision_pct) << '\n';
    }

    std::ofstream roc(roc_file);
    if (!roc) throw Error(Errc::io, "cannot write " + roc_file);
    roc << "class\tmax_distance\ttpr\tfpr\n";
    auto write_roc = [&](const char* name, const std::vector<harness::Scored>& scored) {
        bool pos = false, neg = false;
        for (const auto& s : scored) (s.positive ? pos : neg) = true;
        if (!pos || !neg) {
            std::cerr << "no ROC for " << name << ": truth lacks positives or negatives\n";
            return;
        }
        std::vector<double> th{0.0};
        for (const auto& s : scored)
            if (std::isfinite(s.distance)) th.push_back(s.distance);
        th.push_back(inf);
        std::sort(th.begin(), th.end());
        th.erase(std::unique(th.begin(), th.end()), th.end());
        for (const auto& p : harness::roc_points(scored, th))
            roc << name << '\t' << p.threshold << '\t' << p.tpr << '\t' << p.fpr << '\n';
    };
    write_roc("palm", palm_scores);
    write_roc("fist", fist_scores);

    const auto found = pipeline::detect_raise_events(stream, so.debounce);
    const auto expected = pipeline::detect_raise_events(truth_stream, so.debounce);
    std::cout << "frames " << frames.size() << ", max_distance " << session.max_distance() << '\n';
    std::cout << "raise events: " << found.size() << " detected, " << expected.size() << " in truth\n";
    for (const auto& e : found) {
        double best = 0.0;
        for (const auto& t : expected) best = std::max(best, harness::interval_iou({e.t_start, e.t_end}, {t.t_start, t.t_end}));
        std::cout << "  [" << e.t_start << ", " << e.t_end << "] best IoU " << best << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hand-raise detection and participation monitoring"};
    app.require_subcommand(1);

    std::string dir, out;
    double fps = 10.0;

    auto* tb = app.add_subcommand("train-bg", "train a codebook background model from frame files");
    background::CodebookParams cb;
    int count = 0;
    tb->add_option("frames_dir", dir)->required()->check(CLI::ExistingDirectory);
    tb->add_option("--out", out, "model file")->required();
    tb->add_option("--eps", cb.eps_train, "chroma radius while training");
    tb->add_option("--eps-detect", cb.eps_detect, "chroma radius while detecting");
    tb->add_option("--alpha", cb.alpha, "lower luma factor");
    tb->add_option("--beta", cb.beta, "upper luma factor");
    tb->add_option("--prune", cb.mnrl_prune_frac, "drop codewords idle longer than this fraction of the frames");
    tb->add_option("--frames", count, "train on the first N frames only");
    tb->add_option("--fps", fps)->check(CLI::PositiveNumber);

    auto* bd = app.add_subcommand("build-db", "describe palm_*/fist_* mask images into a gesture db");
    cpdh::CpdhParams cp;
    bd->add_option("masks_dir", dir)->required()->check(CLI::ExistingDirectory);
    bd->add_option("--out", out, "db file")->required();
    bd->add_option("--n", cp.n, "contour samples");
    bd->add_option("--u", cp.u, "radial bins");
    bd->add_option("--v", cp.v, "angular bins");

    auto* gm = app.add_subcommand("gen-masks", "write synthetic palm/fist training masks");
    std::size_t mask_count = 200;
    std::uint64_t seed = 1;
    gm->add_option("--out", out, "directory")->required();
    gm->add_option("--count", mask_count);
    gm->add_option("--seed", seed);

    auto* gs = app.add_subcommand("gen-synth", "render a synthetic scenario with ground truth");
    std::string spec_file;
    gs->add_option("spec", spec_file, "key = value scenario file")->required()->check(CLI::ExistingFile);
    gs->add_option("--seed", seed);
    gs->add_option("--out", out, "directory")->required();

    ModelOptions mo;
    SessionOptions so;
    RunOptions ro;
    auto* rn = app.add_subcommand("run", "process frames and stream gesture and indicator records");
    rn->add_option("frames_dir", dir)->required()->check(CLI::ExistingDirectory);
    add_model_options(rn, mo);
    add_session_options(rn, so);
    auto* listen = rn->add_option("--listen", ro.listen, "serve records at http://host:port/events");
    rn->add_option("--out", ro.out, "write records to a file instead of stdout")->excludes(listen);
    rn->add_flag("--pace", ro.pace, "process frames in real time");
    rn->add_flag("--wait-subscriber", ro.wait_subscriber, "with --listen, start once a client is connected");
    rn->add_option("--linger", ro.linger, "with --listen, keep serving this many seconds after the last frame");

    auto* ev = app.add_subcommand("eval", "score frames against ground truth");
    std::string truth_file, report_file, roc_file;
    ev->add_option("frames_dir", dir)->required()->check(CLI::ExistingDirectory);
    ev->add_option("--truth", truth_file, "truth.tsv")->required()->check(CLI::ExistingFile);
    add_model_options(ev, mo);
    add_session_options(ev, so);
    ev->add_option("--report", report_file, "recall/precision table")->required();
    ev->add_option("--roc", roc_file, "ROC table")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*tb) return train_bg(dir, out, cb, count, fps);
        if (*bd) return build_db(dir, out, cp);
        if (*gm) return gen_masks(out, mask_count, seed);
        if (*gs) return gen_synth(spec_file, seed, out);
        if (*rn) return run(dir, mo, so, ro);
        if (*ev) return eval(dir, truth_file, mo, so, report_file, roc_file);
    } catch (const Error& e) {
        std::cerr << "handcue: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "handcue: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
