#pragma once

#include <stdexcept>
#include <string>

namespace handcue {

enum class Errc {
    bounds,
    parameter,
    dimension,
    training,
    model,
    degenerate_shape,
    empty_model,
    empty_db,
    shape_mismatch,
    time_regression,
    io,
    format,
};

const char* to_string(Errc code) noexcept;

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace handcue
