#pragma once

#include <cstdint>
#include <cmath>

#include <Eigen/Dense>

namespace kprobe {

// Seeded counter-free PRNG (splitmix64). Used instead of <random> engines
// because the standard distributions are implementation-defined; this keeps
// sampled configurations bit-identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // uniform in [0,1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // uniform integer in [0, n)
    std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

    // standard normal via polar rejection on our own uniforms
    double normal() {
        for (;;) {
            const double u = uniform(-1.0, 1.0);
            const double v = uniform(-1.0, 1.0);
            const double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
        }
    }

    // uniform on the closed ball of given radius
    Eigen::VectorXd in_ball(int dim, double radius) {
        Eigen::VectorXd x(dim);
        for (;;) {
            for (int i = 0; i < dim; ++i) x[i] = uniform(-1.0, 1.0);
            const double r2 = x.squaredNorm();
            if (r2 <= 1.0 && r2 > 0.0) return radius * x;
        }
    }

    Eigen::VectorXd on_sphere(int dim) {
        Eigen::VectorXd x(dim);
        for (;;) {
            for (int i = 0; i < dim; ++i) x[i] = normal();
            const double r = x.norm();
            if (r > 1e-12) return x / r;
        }
    }

    // independent child stream; tag separates substreams of one seed
    Rng fork(std::uint64_t tag) {
        Rng child(state_ ^ (0xD1B54A32D192ED03ull * (tag + 1)));
        child.next_u64();
        return child;
    }

private:
    std::uint64_t state_;
};

} // namespace kprobe
