#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace stirap {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using CRowVector = Eigen::RowVectorXcd;

inline constexpr cplx kImag{0.0, 1.0};

/// Drive tones. Every chain link is driven by exactly one of them.
enum class Channel : int { pump = 0, stokes = 1 };
inline constexpr int kChannelCount = 2;

inline constexpr int index(Channel ch) { return static_cast<int>(ch); }

inline std::string_view to_string(Channel ch) {
    return ch == Channel::pump ? "pump" : "stokes";
}

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid model, parameters or configuration. Maps to CLI exit code 1.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Divergence or degenerate numerics. Maps to CLI exit code 2.
class NumericalError : public Error {
public:
    using Error::Error;
};

inline Channel channel_from_string(std::string_view name) {
    if (name == "pump" || name == "p") return Channel::pump;
    if (name == "stokes" || name == "s") return Channel::stokes;
    throw ConfigError("unknown channel '" + std::string(name) + "'");
}

}  // namespace stirap
