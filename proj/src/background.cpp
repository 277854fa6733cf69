#include "handcue/background.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace handcue::background {

using imgcore::BinaryMask;
using imgcore::Frame;
using imgcore::Ycbcr;

void CodebookParams::validate() const {
    if (!(eps_train > 0.0 && eps_detect >= eps_train))
        throw Error(Errc::parameter, "codebook needs eps_detect >= eps_train > 0");
    if (!(alpha > 0.0 && alpha <= 1.0 && beta >= 1.0))
        throw Error(Errc::parameter, "codebook needs 0 < alpha <= 1 <= beta");
    if (!(mnrl_prune_frac > 0.0 && mnrl_prune_frac <= 1.0))
        throw Error(Errc::parameter, "codebook needs 0 < mnrl_prune_frac <= 1");
}

bool codeword_match(Ycbcr p, const Codeword& cw, double eps, double alpha, double beta) noexcept {
    const double dcb = p.cb - cw.cb, dcr = p.cr - cw.cr;
    if (dcb * dcb + dcr * dcr > eps * eps) return false;
    const double y = p.y;
    return alpha * cw.luma_lo <= y && y <= std::min(beta * cw.luma_hi, 255.0);
}

CodebookModel::CodebookModel(int width, int height, CodebookParams params,
                             std::vector<std::uint32_t> offsets, std::vector<Codeword> words)
    : width_(width), height_(height), params_(params), offsets_(std::move(offsets)),
      words_(std::move(words)) {
    if (offsets_.size() != static_cast<std::size_t>(width) * height + 1 || offsets_.back() != words_.size())
        throw Error(Errc::model, "codebook offsets do not match dimensions");
}

CodebookModel train_codebook(std::span<const Frame> frames, const CodebookParams& params) {
    params.validate();
    if (frames.empty()) throw Error(Errc::training, "empty training sequence");
    const int w = frames.front().width(), h = frames.front().height();
    for (const auto& f : frames)
        if (f.width() != w || f.height() != h)
            throw Error(Errc::training, "training frames have mixed dimensions");

    const std::size_t pixels = frames.front().pixel_count();
    std::vector<std::vector<Codeword>> books(pixels);
    for (std::size_t t0 = 0; t0 < frames.size(); ++t0) {
        const auto t = static_cast<std::uint32_t>(t0 + 1);
        const Frame& f = frames[t0];
        for (std::size_t i = 0; i < pixels; ++i) {
            const Ycbcr p = imgcore::to_ycbcr(f.rgb(i));
            auto& book = books[i];
            auto hit = std::find_if(book.begin(), book.end(), [&](const Codeword& cw) {
                return codeword_match(p, cw, params.eps_train, params.alpha, params.beta);
            });
            if (hit == book.end()) {
                book.push_back(Codeword{static_cast<double>(p.cb), static_cast<double>(p.cr), p.y, p.y,
                                        1, t - 1, t, t});
                continue;
            }
            Codeword& cw = *hit;
            const double n = cw.freq;
            cw.cb = (n * cw.cb + p.cb) / (n + 1.0);
            cw.cr = (n * cw.cr + p.cr) / (n + 1.0);
            cw.luma_lo = std::min(cw.luma_lo, p.y);
            cw.luma_hi = std::max(cw.luma_hi, p.y);
            cw.freq += 1;
            cw.mnrl = std::max(cw.mnrl, t - cw.last_seen - 1);
            cw.last_seen = t;
        }
    }

    const auto total = static_cast<std::uint32_t>(frames.size());
    const double limit = params.mnrl_prune_frac * total;
    std::vector<std::uint32_t> offsets;
    offsets.reserve(pixels + 1);
    offsets.push_back(0);
    std::vector<Codeword> words;
    words.reserve(pixels);
    for (auto& book : books) {
        for (auto& cw : book) {
            // wrap-around run: after the last match plus before the first one
            cw.mnrl = std::max(cw.mnrl, (total - cw.last_seen) + (cw.first_seen - 1));
            if (static_cast<double>(cw.mnrl) <= limit) words.push_back(cw);
        }
        offsets.push_back(static_cast<std::uint32_t>(words.size()));
        std::vector<Codeword>().swap(book);
    }
    return CodebookModel(w, h, params, std::move(offsets), std::move(words));
}

BinaryMask extract_foreground(const CodebookModel& model, const Frame& frame) {
    if (frame.width() != model.width() || frame.height() != model.height())
        throw Error(Errc::dimension, "frame " + std::to_string(frame.width()) + "x" +
                                         std::to_string(frame.height()) + " vs model " +
                                         std::to_string(model.width()) + "x" +
                                         std::to_string(model.height()));
    const auto& prm = model.params();
    BinaryMask out(frame.width(), frame.height());
    auto bits = out.bits();
    for (std::size_t i = 0; i < frame.pixel_count(); ++i) {
        const Ycbcr p = imgcore::to_ycbcr(frame.rgb(i));
        bool matched = false;
        for (const auto& cw : model.codewords(i)) {
            if (codeword_match(p, cw, prm.eps_detect, prm.alpha, prm.beta)) {
                matched = true;
                break;
            }
        }
        bits[i] = matched ? 0 : 1;
    }
    return out;
}

namespace {

constexpr std::array<char, 4> kMagic = {'C', 'B', 'K', '1'};

template <typename T>
void put_le(std::ostream& out, T v) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    const U bits = std::bit_cast<U>(v);
    char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
    out.write(buf, sizeof(U));
}

template <typename T>
T get_le(std::istream& in) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    unsigned char buf[sizeof(U)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(U)))
        throw Error(Errc::format, "truncated codebook file");
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
    return std::bit_cast<T>(bits);
}

}  // namespace

void write_model(std::ostream& out, const CodebookModel& model) {
    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.width()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.height()));
    const auto& p = model.params();
    for (double v : {p.eps_train, p.eps_detect, p.alpha, p.beta, p.mnrl_prune_frac}) put_le(out, v);
    const std::size_t pixels = static_cast<std::size_t>(model.width()) * model.height();
    for (std::size_t i = 0; i < pixels; ++i) {
        const auto words = model.codewords(i);
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(words.size()));
        for (const auto& cw : words) {
            put_le(out, cw.cb);
            put_le(out, cw.cr);
            put_le(out, cw.luma_lo);
            put_le(out, cw.luma_hi);
            put_le(out, cw.freq);
            put_le(out, cw.mnrl);
            put_le(out, cw.first_seen);
            put_le(out, cw.last_seen);
        }
    }
    if (!out) throw Error(Errc::io, "failed writing codebook");
}

CodebookModel read_model(std::istream& in) {
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic)
        throw Error(Errc::format, "not a CBK1 codebook file");
    const auto w = get_le<std::uint32_t>(in);
    const auto h = get_le<std::uint32_t>(in);
    if (w == 0 || h == 0 || static_cast<std::uint64_t>(w) * h > (1ull << 28))
        throw Error(Errc::format, "implausible codebook dimensions");
    CodebookParams p;
    p.eps_train = get_le<double>(in);
    p.eps_detect = get_le<double>(in);
    p.alpha = get_le<double>(in);
    p.beta = get_le<double>(in);
    p.mnrl_prune_frac = get_le<double>(in);
    p.validate();
    const std::size_t pixels = static_cast<std::size_t>(w) * h;
    std::vector<std::uint32_t> offsets;
    offsets.reserve(pixels + 1);
    offsets.push_back(0);
    std::vector<Codeword> words;
    words.reserve(pixels);
    for (std::size_t i = 0; i < pixels; ++i) {
        const auto n = get_le<std::uint32_t>(in);
        for (std::uint32_t k = 0; k < n; ++k) {
            Codeword cw;
            cw.cb = get_le<double>(in);
            cw.cr = get_le<double>(in);
            cw.luma_lo = get_le<std::uint8_t>(in);
            cw.luma_hi = get_le<std::uint8_t>(in);
            cw.freq = get_le<std::uint32_t>(in);
            cw.mnrl = get_le<std::uint32_t>(in);
            cw.first_seen = get_le<std::uint32_t>(in);
            cw.last_seen = get_le<std::uint32_t>(in);
            if (cw.luma_lo > cw.luma_hi || cw.freq == 0)
                throw Error(Errc::format, "corrupt codeword record");
            words.push_back(cw);
        }
        offsets.push_back(static_cast<std::uint32_t>(words.size()));
    }
    return CodebookModel(static_cast<int>(w), static_cast<int>(h), p, std::move(offsets), std::move(words));
}

void save_model(const std::filesystem::path& path, const CodebookModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::io, "cannot open " + path.string() + " for writing");
    write_model(out, model);
}

CodebookModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot open " + path.string());
    return read_model(in);
}

}  // namespace handcue::background
