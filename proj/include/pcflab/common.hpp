#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pcflab {

using cplx = std::complex<double>;

/// One scalar field sampled on the full grid (layout defined by GridSpec).
using Field = std::vector<cplx>;

inline constexpr double kPi = 3.14159265358979323846;

/// Minimum eigenvalue below which a metric counts as degenerate.
inline constexpr double kDegenerateEig = 1e-12;

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Metric not invertible / not positive at some grid point.
class DegenerateMetricError : public Error {
public:
    DegenerateMetricError(const std::string& msg, std::size_t point, double min_eig)
        : Error(msg), point(point), min_eig(min_eig) {}
    std::size_t point;
    double min_eig;
};

/// Tensor signature not accepted by an operation.
class SignatureError : public Error {
public:
    explicit SignatureError(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
public:
    ConfigError(const std::string& msg, int line = 0) : Error(msg), line(line) {}
    int line;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

inline double sqr(double x) { return x * x; }

} // namespace pcflab
