#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <random>

namespace imtk {

// Deterministic RNG: mt19937_64 with hand-rolled uniform/normal transforms so
// streams are identical across standard libraries (std::*_distribution is
// implementation-defined).
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform in [0,1)
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // standard normal via Box-Muller (pairs cached)
    double gauss() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * M_PI * u2;
        spare_ = r * std::sin(th);
        have_spare_ = true;
        return r * std::cos(th);
    }

    Eigen::VectorXd gauss_vec(int n) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v(i) = gauss();
        return v;
    }

    // uniform in the centered ball of given radius
    Eigen::VectorXd ball(int n, double radius) {
        Eigen::VectorXd v = gauss_vec(n);
        const double nv = v.norm();
        if (nv < 1e-300) return Eigen::VectorXd::Zero(n);
        return v * (radius * std::pow(uniform(), 1.0 / n) / nv);
    }

    std::uint64_t raw() { return gen_(); }

  private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace imtk
