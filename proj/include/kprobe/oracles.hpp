#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "kprobe/geodesic.hpp"
#include "kprobe/kernel.hpp"
#include "kprobe/metric.hpp"
#include "kprobe/rng.hpp"
#include "kprobe/sym_poly.hpp"

namespace kprobe {

struct OracleOptions {
    double gap_min = 1e6;
    double abs_floor = 1e-9;
    IvpOptions ivp;
};

// multi-indices of total degree <= m in n variables, graded-lex per degree
inline std::vector<MultiIndex> position_monomials(int n, int m) {
    std::vector<MultiIndex> out;
    out.emplace_back(static_cast<std::size_t>(n), 0);
    for (int deg = 1; deg <= m; ++deg) {
        const SymPolySpace s(n, deg);
        for (const auto& mi : s.basis()) out.push_back(mi);
    }
    return out;
}

// Counts degree-d integrals whose coefficient fields are polynomial in x of
// degree <= x_degree, by collocating the symmetrized covariant-derivative
// equation at seeded interior points. A lower-bound instrument: integrals
// with non-polynomial coefficients are invisible to the ansatz.
inline KernelDecision collocation_kernel_dim(const MetricField& m, const SymPolySpace& space,
                                             int x_degree, int sample_count, std::uint64_t seed,
                                             const OracleOptions& opt = {}) {
    const int n = m.dim();
    const int d = space.d();
    const int N = space.size();
    const auto mons = position_monomials(n, x_degree);
    const int P = static_cast<int>(mons.size());
    const int unknowns = N * P;
    if (sample_count < 3 * unknowns)
        throw Error(ErrorKind::ConfigError, "collocation needs sample_count >= 3 x unknown count");

    const SymPolySpace eq_space(n, d + 1); // symmetrized index of the equation
    const int Q = eq_space.size();

    // index tuples (sorted positions) for each component multi-index
    auto tuple_of = [n](const MultiIndex& mi) {
        std::vector<int> t;
        for (int k = 0; k < n; ++k)
            for (int e = 0; e < mi[static_cast<std::size_t>(k)]; ++e) t.push_back(k);
        return t;
    };
    auto index_of_tuple = [&](std::vector<int> t) {
        MultiIndex mi(static_cast<std::size_t>(n), 0);
        for (int k : t) ++mi[static_cast<std::size_t>(k)];
        return space.index_of(mi);
    };

    Eigen::MatrixXd rows(sample_count * Q, unknowns);
    rows.setZero();
    Rng rng(seed);
    const double w = 1.0 / static_cast<double>(d + 1);

    for (int s = 0; s < sample_count; ++s) {
        const Eigen::VectorXd x = rng.in_ball(n, 0.9 * m.domain_radius());
        const auto gamma = m.christoffel(x);
        // monomial values and their first derivatives at x
        Eigen::VectorXd mon(P);
        Eigen::MatrixXd dmon(P, n);
        for (int p = 0; p < P; ++p) {
            double v = 1.0;
            for (int k = 0; k < n; ++k)
                for (int e = 0; e < mons[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)];
                     ++e)
                    v *= x[k];
            mon[p] = v;
            for (int c = 0; c < n; ++c) {
                const int ec = mons[static_cast<std::size_t>(p)][static_cast<std::size_t>(c)];
                if (ec == 0) {
                    dmon(p, c) = 0.0;
                    continue;
                }
                double dv = static_cast<double>(ec);
                for (int k = 0; k < n; ++k) {
                    const int e = mons[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)] -
                                  (k == c ? 1 : 0);
                    for (int q2 = 0; q2 < e; ++q2) dv *= x[k];
                }
                dmon(p, c) = dv;
            }
        }

        for (int e = 0; e < Q; ++e) {
            const auto U = tuple_of(eq_space.basis()[static_cast<std::size_t>(e)]); // d+1 indices
            const int row = s * Q + e;
            for (int pslot = 0; pslot <= d; ++pslot) {
                const int c = U[static_cast<std::size_t>(pslot)];
                std::vector<int> T;
                for (int q2 = 0; q2 <= d; ++q2)
                    if (q2 != pslot) T.push_back(U[static_cast<std::size_t>(q2)]);
                const int comp = index_of_tuple(T);
                // partial-derivative part of nabla_c K_T
                for (int p = 0; p < P; ++p) rows(row, comp * P + p) += w * dmon(p, c);
                // connection part: - sum over slots of Gamma^wdx_{c,T_a} K_{T: a -> wdx}
                for (std::size_t a = 0; a < T.size(); ++a) {
                    for (int wdx = 0; wdx < n; ++wdx) {
                        std::vector<int> T2 = T;
                        T2[a] = wdx;
                        const int comp2 = index_of_tuple(T2);
                        const double gval = gamma[static_cast<std::size_t>(wdx)](c, T[a]);
                        if (gval == 0.0) continue;
                        for (int p = 0; p < P; ++p)
                            rows(row, comp2 * P + p) -= w * gval * mon[p];
                    }
                }
            }
        }
    }
    return kernel_analysis(rows, opt.gap_min, opt.abs_floor);
}

// Max relative drift of F(t) = field(x(t), v(t)) along seeded geodesics.
// Speeds shrink (up to 4 halvings) when a trial trajectory leaves the disc;
// if it still leaves, LeftDomain propagates.
inline double conservation_residual(
    const MetricField& m, const std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>& field,
    int trials, std::uint64_t seed, const OracleOptions& opt = {}) {
    const int n = m.dim();
    Rng rng(seed);
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const Eigen::VectorXd x0 = rng.in_ball(n, 0.5 * m.domain_radius());
        const Eigen::VectorXd dir = rng.on_sphere(n);
        double speed = rng.uniform(0.15, 0.4) * m.domain_radius();
        GeodesicSegment seg;
        bool done = false;
        for (int shrink = 0; shrink <= 4; ++shrink) {
            try {
                seg = integrate_ivp(m, x0, speed * dir, 1.0, opt.ivp);
                done = true;
                break;
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::LeftDomain || shrink == 4) throw;
                speed *= 0.5;
            }
        }
        if (!done) continue;
        const double f0 = field(seg.samples.front().x, seg.samples.front().v);
        for (const auto& s : seg.samples)
            worst = std::max(worst, std::abs(field(s.x, s.v) - f0) / (std::abs(f0) + 1e-12));
    }
    return worst;
}

// Fiber transport of the d=1 prolongation system (K_j, L_jk = nabla_j K_k,
// L antisymmetric) along the straight chart segment p0 -> p1:
//   dK_j/dt  = u^i (L_ij + Gamma^m_ij K_m)
//   dL_jk/dt = u^i (riem(m,i,j,k) K_m + Gamma^m_ij L_mk + Gamma^m_ik L_jm)
// Returns the F x F transport matrix, F = n(n+1)/2.
inline Eigen::MatrixXd prolongation_transport_d1(const MetricField& m, const Eigen::VectorXd& p0,
                                                 const Eigen::VectorXd& p1,
                                                 const IvpOptions& opt = {}) {
    const int n = m.dim();
    const int F = n * (n + 1) / 2;
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
    const Eigen::VectorXd u = p1 - p0;

    auto lval = [&](const Eigen::VectorXd& y, int i, int j) -> double {
        if (i == j) return 0.0;
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            if (pairs[p].first == i && pairs[p].second == j) return y[n + static_cast<int>(p)];
            if (pairs[p].first == j && pairs[p].second == i) return -y[n + static_cast<int>(p)];
        }
        return 0.0;
    };

    auto rhs_col = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                       const std::vector<Eigen::MatrixXd>& gamma,
                       const MetricField::Curvature& R) {
        Eigen::VectorXd dy(F);
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) {
                s += u[i] * lval(y, i, j);
                for (int mm = 0; mm < n; ++mm)
                    s += u[i] * gamma[static_cast<std::size_t>(mm)](i, j) * y[mm];
            }
            dy[j] = s;
        }
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            const int j = pairs[p].first, k = pairs[p].second;
            double s = 0.0;
            for (int i = 0; i < n; ++i) {
                for (int mm = 0; mm < n; ++mm) {
                    s += u[i] * R(mm, i, j, k) * y[mm];
                    s += u[i] * (gamma[static_cast<std::size_t>(mm)](i, j) * lval(y, mm, k) +
                                 gamma[static_cast<std::size_t>(mm)](i, k) * lval(y, j, mm));
                }
            }
            dy[n + static_cast<int>(p)] = s;
        }
        return dy;
    };

    auto rhs = [&](double t, const Eigen::VectorXd& yflat) {
        const Eigen::VectorXd x = p0 + t * u;
        if (x.norm() >= m.domain_radius())
            throw Error(ErrorKind::LeftDomain, "holonomy loop left the disc");
        const auto gamma = m.christoffel_raw(x);
        const auto R = m.curvature(x);
        Eigen::VectorXd dy(F * F);
        for (int col = 0; col < F; ++col)
            dy.segment(col * F, F) = rhs_col(x, yflat.segment(col * F, F), gamma, R);
        return dy;
    };

    Eigen::VectorXd y0(F * F);
    Eigen::MatrixXd id = Eigen::MatrixXd::Identity(F, F);
    for (int col = 0; col < F; ++col) y0.segment(col * F, F) = id.col(col);

    Eigen::MatrixXd Y(F, F);
    detail::integrate_grid(rhs, y0, 1.0, opt, 1, [&](int g, double, const Eigen::VectorXd& y) {
        if (g == 1)
            for (int col = 0; col < F; ++col) Y.col(col) = y.segment(col * F, F);
    });
    return Y;
}

inline Eigen::MatrixXd holonomy_loop_d1(const MetricField& m, const Eigen::VectorXd& base, int p,
                                        int q, double a, double b, const IvpOptions& opt = {}) {
    const int n = m.dim();
    Eigen::VectorXd c0 = base, c1 = base, c2 = base, c3 = base;
    c1[p] += a;
    c2[p] += a;
    c2[q] += b;
    c3[q] += b;
    Eigen::MatrixXd Y = prolongation_transport_d1(m, c0, c1, opt);
    Y = prolongation_transport_d1(m, c1, c2, opt) * Y;
    Y = prolongation_transport_d1(m, c2, c3, opt) * Y;
    Y = prolongation_transport_d1(m, c3, c0, opt) * Y;
    return Y;
}

// Dimension of the Killing vector space as the common fixed space of the
// prolongation-connection holonomies around seeded rectangular loops based at
// the origin. The noise floor is anchored at the O(1) scale of the transports
// (a flat connection yields Hol = Id up to integrator error, which must read
// as kernel, not as rank).
inline KernelDecision holonomy_kernel_dim_d1(const MetricField& m, int loop_count,
                                             std::uint64_t seed, const OracleOptions& opt = {}) {
    const int n = m.dim();
    if (n < 2) throw Error(ErrorKind::ConfigError, "holonomy oracle needs n >= 2");
    const int F = n * (n + 1) / 2;
    Rng rng(seed);
    Eigen::MatrixXd stack(loop_count * F, F);
    const Eigen::VectorXd base = Eigen::VectorXd::Zero(n);
    for (int l = 0; l < loop_count; ++l) {
        int p = 0, q = 1;
        if (n > 2) {
            p = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n)));
            q = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(n - 1)));
            if (q >= p) ++q;
            if (p > q) std::swap(p, q);
        }
        const double a = rng.uniform(0.1, 0.5) * m.domain_radius();
        const double b = rng.uniform(0.1, 0.5) * m.domain_radius();
        stack.middleRows(l * F, F) =
            holonomy_loop_d1(m, base, p, q, a, b, opt.ivp) - Eigen::MatrixXd::Identity(F, F);
    }
    return kernel_analysis(stack, opt.gap_min, opt.abs_floor, /*scale_ref=*/1.0);
}

struct RankFormulaResult {
    std::uint64_t rank = 0;      // fiber rank of the prolongation bundle
    std::uint64_t jet_order = 0; // N(n,d) = d + 1 + rank
};

// Exact integer evaluation of the fiber-rank formula
// (n+d-1)! (n+d)! / ((n-1)! n! d! (d+1)!) and of the jet order d+1+rank.
inline RankFormulaResult rank_formula(int n, int d) {
    if (n < 2 || d < 1) throw Error(ErrorKind::ConfigError, "rank_formula needs n >= 2, d >= 1");
    auto binom = [](int a, int b) -> unsigned __int128 {
        unsigned __int128 r = 1;
        for (int i = 1; i <= b; ++i) {
            r = r * static_cast<unsigned __int128>(a - b + i);
            r = r / static_cast<unsigned __int128>(i);
        }
        return r;
    };
    // (n+d-1)!(n+d)! / ((n-1)! n! d! (d+1)!) = C(n+d-1,d) * C(n+d,d+1) / n
    const unsigned __int128 num = binom(n + d - 1, d) * binom(n + d, d + 1);
    if (num % static_cast<unsigned __int128>(n) != 0)
        throw Error(ErrorKind::ConfigError, "rank_formula internal inconsistency");
    const unsigned __int128 rank = num / static_cast<unsigned __int128>(n);
    if (rank > static_cast<unsigned __int128>(UINT64_MAX - 100))
        throw Error(ErrorKind::ConfigError, "rank_formula overflow for these n, d");
    RankFormulaResult out;
    out.rank = static_cast<std::uint64_t>(rank);
    out.jet_order = static_cast<std::uint64_t>(d) + 1 + out.rank;
    return out;
}

} // namespace kprobe
