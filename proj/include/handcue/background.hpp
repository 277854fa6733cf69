#pragma once

// Codebook background model in YCbCr: chroma is matched by Euclidean radius,
// luma by a scaled [lo, hi] band.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "handcue/imgcore.hpp"

namespace handcue::background {

struct Codeword {
    double cb = 128.0;  // running chroma mean
    double cr = 128.0;
    std::uint8_t luma_lo = 0;
    std::uint8_t luma_hi = 0;
    std::uint32_t freq = 1;
    std::uint32_t mnrl = 0;  // longest run of training frames without a match
    std::uint32_t first_seen = 1;
    std::uint32_t last_seen = 1;

    friend bool operator==(const Codeword&, const Codeword&) = default;
};

struct CodebookParams {
    double eps_train = 10.0;
    double eps_detect = 12.0;
    double alpha = 0.7;
    double beta = 1.3;
    double mnrl_prune_frac = 0.5;

    void validate() const;
    friend bool operator==(const CodebookParams&, const CodebookParams&) = default;
};

inline constexpr std::size_t kDefaultTrainingFrames = 90;

bool codeword_match(imgcore::Ycbcr p, const Codeword& cw, double eps, double alpha, double beta) noexcept;

class CodebookModel {
public:
    CodebookModel() = default;
    CodebookModel(int width, int height, CodebookParams params, std::vector<std::uint32_t> offsets,
                  std::vector<Codeword> words);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    const CodebookParams& params() const noexcept { return params_; }

    std::span<const Codeword> codewords(std::size_t pixel) const noexcept {
        return {words_.data() + offsets_[pixel], words_.data() + offsets_[pixel + 1]};
    }
    std::size_t total_codewords() const noexcept { return words_.size(); }

    friend bool operator==(const CodebookModel&, const CodebookModel&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    CodebookParams params_;
    std::vector<std::uint32_t> offsets_;  // pixel i owns words_[offsets_[i], offsets_[i+1])
    std::vector<Codeword> words_;
};

/// Throws Errc::training on an empty sequence or mixed dimensions.
CodebookModel train_codebook(std::span<const imgcore::Frame> frames, const CodebookParams& params = {});

/// Foreground wherever no surviving codeword matches under eps_detect.
imgcore::BinaryMask extract_foreground(const CodebookModel& model, const imgcore::Frame& frame);

// "CBK1" little-endian binary persistence.
void write_model(std::ostream& out, const CodebookModel& model);
CodebookModel read_model(std::istream& in);
void save_model(const std::filesystem::path& path, const CodebookModel& model);
CodebookModel load_model(const std::filesystem::path& path);

}  // namespace handcue::background
