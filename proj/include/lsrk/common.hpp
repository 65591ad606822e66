#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace lsrk {

inline constexpr const char* kVersion = "0.1.0";

// Bad user-supplied data: files, schemas, inconsistent columns, too few subjects.
class input_error : public std::runtime_error {
public:
    explicit input_error(const std::string& what) : std::runtime_error(what) {}
};

// A computation that cannot proceed numerically (singular systems, size caps).
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

inline std::vector<double> linspace(double lo, double hi, int count) {
    if (count < 1) throw std::invalid_argument("linspace: count must be >= 1");
    std::vector<double> out(static_cast<std::size_t>(count));
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    const double step = (hi - lo) / static_cast<double>(count - 1);
    for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = lo + step * i;
    out.back() = hi;
    return out;
}

inline std::vector<double> logspace(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi > 0.0)) throw std::invalid_argument("logspace: endpoints must be positive");
    std::vector<double> out = linspace(std::log(lo), std::log(hi), count);
    for (double& v : out) v = std::exp(v);
    return out;
}

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace lsrk
