#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ptpi {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Error with a machine-readable category prefix ("category: message").
class Error : public std::runtime_error {
public:
    Error(const std::string& category, const std::string& message)
        : std::runtime_error(category + ": " + message), category_(category) {}
    const std::string& category() const { return category_; }

private:
    std::string category_;
};

[[noreturn]] inline void fail(const std::string& category, const std::string& message) {
    throw Error(category, message);
}

inline void require(bool ok, const std::string& category, const std::string& message) {
    if (!ok) fail(category, message);
}

/// Deterministic random stream. Draw order is part of every file/run contract,
/// so this avoids the implementation-defined std:: distributions.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (pair cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

inline VectorXd linspace(double lo, double hi, int n) {
    VectorXd v(n);
    if (n == 1) {
        v(0) = lo;
        return v;
    }
    for (int i = 0; i < n; ++i) v(i) = lo + (hi - lo) * double(i) / double(n - 1);
    return v;
}

inline double rel_err(double got, double want, double floor = 1e-12) {
    return std::abs(got - want) / std::max({std::abs(got), std::abs(want), floor});
}

}  // namespace ptpi
