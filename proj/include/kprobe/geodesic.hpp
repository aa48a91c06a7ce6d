#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "kprobe/errors.hpp"
#include "kprobe/metric.hpp"
#include "kprobe/parallel.hpp"

namespace kprobe {

struct GeodesicSample {
    double t;
    Eigen::VectorXd x;
    Eigen::VectorXd v;
};

// A solved geodesic on [0, t_end]. Samples sit on a uniform parameter grid
// (each one is a genuine integrator step, not an interpolant), so the energy
// drift recorded here is an honest accuracy certificate.
struct GeodesicSegment {
    Eigen::VectorXd start, end;
    Eigen::VectorXd v_start, v_end;
    double energy = 0.0;        // g(v, v) at t = 0, constant along the true flow
    double energy_drift = 0.0;  // max over samples |g(v,v) - energy| / (1 + |energy|)
    double bvp_residual = 0.0;  // |gamma(1) - target| when produced by solve_bvp
    std::vector<GeodesicSample> samples;

    GeodesicSegment reversed() const {
        GeodesicSegment r;
        r.start = end;
        r.end = start;
        r.v_start = -v_end;
        r.v_end = -v_start;
        r.energy = energy;
        r.energy_drift = energy_drift;
        r.bvp_residual = bvp_residual;
        const double span = samples.empty() ? 0.0 : samples.back().t;
        r.samples.reserve(samples.size());
        for (auto it = samples.rbegin(); it != samples.rend(); ++it)
            r.samples.push_back({span - it->t, it->x, -it->v});
        return r;
    }

    // cubic Hermite on the sample grid (positions); velocities linear in between
    GeodesicSample state_at(double t) const {
        if (samples.size() < 2) return samples.front();
        const double t0 = samples.front().t, t1 = samples.back().t;
        double tc = std::clamp(t, t0, t1);
        const double dt = (t1 - t0) / static_cast<double>(samples.size() - 1);
        std::size_t k = std::min(samples.size() - 2,
                                 static_cast<std::size_t>(std::max(0.0, (tc - t0) / dt)));
        const auto& a = samples[k];
        const auto& b = samples[k + 1];
        const double h = b.t - a.t;
        const double s = (tc - a.t) / h;
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
        const double h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s);
        const double h11 = s * s * (s - 1);
        GeodesicSample out;
        out.t = tc;
        out.x = h00 * a.x + h10 * h * a.v + h01 * b.x + h11 * h * b.v;
        out.v = (1 - s) * a.v + s * b.v;
        return out;
    }
};

struct IvpOptions {
    double ivp_tol = 1e-10; // local error tolerance (abs and rel)
    int min_samples = 64;   // uniform parameter grid size
    int max_steps = 2000000;
};

struct BvpOptions {
    IvpOptions ivp;
    double bvp_tol = 1e-8;
    int max_iter = 50;
    double light_tol = 1e-8;
};

namespace detail {

// Dormand-Prince 5(4) embedded pair.
struct Dopri5 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                            e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                            e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;
};

// Adaptive DP5(4) from t=0 to t=span. Steps are clipped so that every grid
// time span*i/grid lands on a step end; observer(i, t, y) is called there.
template <typename Rhs, typename Observer>
void integrate_grid(const Rhs& rhs, Eigen::VectorXd y, double span, const IvpOptions& opt,
                    int grid, const Observer& observer) {
    using D = Dopri5;
    const double tol = opt.ivp_tol;
    double t = 0.0;
    Eigen::VectorXd k1 = rhs(t, y), k2, k3, k4, k5, k6, k7;
    observer(0, 0.0, y);
    int next_grid = 1;
    double h = span / grid; // first trial step: one grid cell
    int steps = 0;
    while (next_grid <= grid) {
        const double t_target = span * next_grid / grid;
        if (h > t_target - t) h = t_target - t;
        if (h < 1e-14 * span) h = 1e-14 * span;
        for (;;) {
            if (++steps > opt.max_steps)
                throw Error(ErrorKind::StepFailure, "step limit exceeded");
            k2 = rhs(t + D::c2 * h, y + h * (D::a21 * k1));
            k3 = rhs(t + D::c3 * h, y + h * (D::a31 * k1 + D::a32 * k2));
            k4 = rhs(t + D::c4 * h, y + h * (D::a41 * k1 + D::a42 * k2 + D::a43 * k3));
            k5 = rhs(t + D::c5 * h,
                     y + h * (D::a51 * k1 + D::a52 * k2 + D::a53 * k3 + D::a54 * k4));
            k6 = rhs(t + h,
                     y + h * (D::a61 * k1 + D::a62 * k2 + D::a63 * k3 + D::a64 * k4 + D::a65 * k5));
            const Eigen::VectorXd y1 =
                y + h * (D::b1 * k1 + D::b3 * k3 + D::b4 * k4 + D::b5 * k5 + D::b6 * k6);
            k7 = rhs(t + h, y1);
            const Eigen::VectorXd err =
                h * (D::e1 * k1 + D::e3 * k3 + D::e4 * k4 + D::e5 * k5 + D::e6 * k6 + D::e7 * k7);
            double en = 0.0;
            for (int i = 0; i < y.size(); ++i) {
                const double sc = tol + tol * std::max(std::abs(y[i]), std::abs(y1[i]));
                const double q = err[i] / sc;
                en += q * q;
            }
            en = std::sqrt(en / static_cast<double>(y.size()));
            if (en <= 1.0) {
                t += h;
                y = y1;
                k1 = k7; // FSAL
                const double grow = en == 0.0 ? 5.0 : 0.9 * std::pow(en, -0.2);
                h *= std::clamp(grow, 0.2, 5.0);
                break;
            }
            h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
            if (h < 1e-14 * span)
                throw Error(ErrorKind::StepFailure, "step control cannot meet tolerance");
        }
        if (t >= t_target - 1e-14 * span) {
            observer(next_grid, t_target, y);
            ++next_grid;
        }
    }
}

} // namespace detail

// Solves the geodesic equation x''^k + Gamma^k_ij x'^i x'^j = 0 from (x0, v0)
// over [0, t_end] with adaptive step control. Throws LeftDomain if the
// trajectory exits the disc, StepFailure if the controller stalls.
inline GeodesicSegment integrate_ivp(const MetricField& m, const Eigen::VectorXd& x0,
                                     const Eigen::VectorXd& v0, double t_end,
                                     const IvpOptions& opt = {}) {
    m.check_inside(x0);
    if (v0.norm() == 0.0) throw Error(ErrorKind::ConfigError, "zero initial velocity");
    const int n = m.dim();
    const double R = m.domain_radius();

    auto rhs = [&](double, const Eigen::VectorXd& y) {
        const Eigen::VectorXd x = y.head(n);
        if (x.norm() >= R) throw Error(ErrorKind::LeftDomain, "geodesic left the disc");
        const Eigen::VectorXd v = y.tail(n);
        const auto gamma = m.christoffel_raw(x);
        Eigen::VectorXd dy(2 * n);
        dy.head(n) = v;
        for (int k = 0; k < n; ++k) dy[n + k] = -v.dot(gamma[static_cast<std::size_t>(k)] * v);
        return dy;
    };

    Eigen::VectorXd y0(2 * n);
    y0 << x0, v0;

    GeodesicSegment seg;
    seg.start = x0;
    seg.v_start = v0;
    seg.energy = m.energy(x0, v0);
    seg.samples.reserve(static_cast<std::size_t>(opt.min_samples) + 1);

    detail::integrate_grid(rhs, y0, t_end, opt, opt.min_samples,
                           [&](int, double t, const Eigen::VectorXd& y) {
                               GeodesicSample s;
                               s.t = t;
                               s.x = y.head(n);
                               s.v = y.tail(n);
                               if (s.x.norm() >= R)
                                   throw Error(ErrorKind::LeftDomain, "geodesic left the disc");
                               seg.samples.push_back(std::move(s));
                           });

    seg.end = seg.samples.back().x;
    seg.v_end = seg.samples.back().v;
    double drift = 0.0;
    for (const auto& s : seg.samples)
        drift = std::max(drift, std::abs(m.energy(s.x, s.v) - seg.energy));
    seg.energy_drift = drift / (1.0 + std::abs(seg.energy));
    return seg;
}

// Two-point boundary value problem by shooting: damped Newton on the endpoint
// map, Jacobian by forward differences, initial guess v0 = xB - xA. The
// residual is polished well below bvp_tol when the iteration allows, since the
// obstruction spectra downstream live on the solver's noise floor.
inline GeodesicSegment solve_bvp(const MetricField& m, const Eigen::VectorXd& xA,
                                 const Eigen::VectorXd& xB, const BvpOptions& opt = {}) {
    m.check_inside(xA);
    m.check_inside(xB);
    if ((xA - xB).norm() == 0.0) throw Error(ErrorKind::ConfigError, "coincident endpoints");
    const int n = m.dim();
    const double target = std::min(opt.bvp_tol * 1e-4, 1e-12);

    auto endpoint = [&](const Eigen::VectorXd& v) { return integrate_ivp(m, xA, v, 1.0, opt.ivp); };

    Eigen::VectorXd v = xB - xA;
    GeodesicSegment best;
    double best_res = std::numeric_limits<double>::infinity();

    GeodesicSegment cur;
    double res = std::numeric_limits<double>::infinity();
    bool have_cur = false;
    for (int iter = 0; iter < opt.max_iter; ++iter) {
        if (!have_cur) {
            cur = endpoint(v); // LeftDomain from the very first shot propagates
            res = (cur.end - xB).norm();
            have_cur = true;
        }
        if (res < best_res) {
            best = cur;
            best_res = res;
        }
        if (res <= target) break;

        // forward-difference Jacobian of the endpoint map
        Eigen::MatrixXd J(n, n);
        const double scale = std::max(1.0, v.norm());
        bool jac_ok = true;
        for (int k = 0; k < n && jac_ok; ++k) {
            const double dk = 1e-8 * scale;
            Eigen::VectorXd vp = v;
            vp[k] += dk;
            try {
                J.col(k) = (endpoint(vp).end - cur.end) / dk;
            } catch (const Error&) {
                jac_ok = false;
            }
        }
        if (!jac_ok) break;

        Eigen::VectorXd step = J.colPivHouseholderQr().solve(xB - cur.end);
        if (!step.allFinite()) break;

        // step halving, up to 6 times
        bool accepted = false;
        double damp = 1.0;
        for (int half = 0; half <= 6; ++half, damp *= 0.5) {
            const Eigen::VectorXd vtry = v + damp * step;
            try {
                GeodesicSegment trial = endpoint(vtry);
                const double rtry = (trial.end - xB).norm();
                if (rtry < res) {
                    v = vtry;
                    cur = std::move(trial);
                    res = rtry;
                    accepted = true;
                    break;
                }
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::LeftDomain && e.kind() != ErrorKind::StepFailure) throw;
            }
        }
        if (!accepted) break; // stagnated; best recorded so far decides
    }

    if (!(best_res <= opt.bvp_tol))
        throw Error(ErrorKind::NoConvergence,
                    "shooting residual " + std::to_string(best_res) + " above bvp_tol");
    best.bvp_residual = best_res;

    if (m.indefinite()) {
        const double e = std::abs(best.energy);
        const double vn = best.v_start.squaredNorm();
        if (e < opt.light_tol * vn)
            throw Error(ErrorKind::LightLike, "connecting geodesic is numerically light-like");
    }
    return best;
}

// All-pairs BVP sweep; entry (i,j) connects sources[i] to targets[j].
// Independent solves run concurrently; results are collected positionally so
// the output does not depend on scheduling. The failure with the smallest
// row-major index is the one reported.
inline std::vector<std::vector<GeodesicSegment>> batch_connect(
    const MetricField& m, const std::vector<Eigen::VectorXd>& sources,
    const std::vector<Eigen::VectorXd>& targets, const BvpOptions& opt = {}, int workers = 0) {
    for (std::size_t i = 0; i < sources.size(); ++i)
        for (std::size_t j = 0; j < targets.size(); ++j)
            if ((sources[i] - targets[j]).norm() == 0.0)
                throw Error(ErrorKind::ConfigError, "batch_connect: coincident points");

    const int rows = static_cast<int>(sources.size());
    const int cols = static_cast<int>(targets.size());
    std::vector<std::vector<GeodesicSegment>> out(static_cast<std::size_t>(rows),
                                                  std::vector<GeodesicSegment>(
                                                      static_cast<std::size_t>(cols)));
    parallel_for(rows * cols,
                 [&](int idx) {
                     const int i = idx / cols, j = idx % cols;
                     try {
                         out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                             solve_bvp(m, sources[static_cast<std::size_t>(i)],
                                       targets[static_cast<std::size_t>(j)], opt);
                     } catch (const Error& e) {
                         throw Error(e.kind(), "pair (" + std::to_string(i) + "," +
                                                   std::to_string(j) + "): " + e.what());
                     }
                 },
                 workers);
    return out;
}

} // namespace kprobe
