#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "kprobe/errors.hpp"
#include "kprobe/rng.hpp"
#include "kprobe/sym_poly.hpp"

namespace kprobe {

enum class DerivMode { Analytic, FiniteDifference };

// C0 scale, trig-polynomial frequency cutoff and support of a seeded metric
// perturbation. The generated term is certified in closed form:
// C2 norm on the disc <= amplitude * (1 + frequency_cutoff)^2.
struct PerturbationSpec {
    double amplitude = 0.0;
    int frequency_cutoff = 3;
    std::uint64_t seed = 0;
    bool bump = false; // false: global support
    Eigen::VectorXd bump_center;
    double bump_radius = 0.5;
};

namespace detail {

// triple Horner: value, first and second derivative of an ascending-coefficient polynomial
inline void polyval(const std::vector<double>& c, double t, double& p, double& dp, double& ddp) {
    p = dp = ddp = 0.0;
    for (int i = static_cast<int>(c.size()) - 1; i >= 0; --i) {
        ddp = ddp * t + dp;
        dp = dp * t + p;
        p = p * t + c[static_cast<std::size_t>(i)];
    }
    ddp *= 2.0;
}

// Smooth bump exp(1 - 1/(1-q)) of q = |x-c|^2 / rho^2, with certified
// derivative bounds |phi'| <= 1.5, |phi''| <= 7 in q.
inline void bump_eval(double q, double& b, double& dbdq, double& ddbdq2) {
    if (q >= 1.0) {
        b = dbdq = ddbdq2 = 0.0;
        return;
    }
    const double v = 1.0 / (1.0 - q);
    b = std::exp(1.0 - v);
    dbdq = -v * v * b;
    ddbdq2 = (v * v * v * v - 2.0 * v * v * v) * b;
}

// Seeded trigonometric-polynomial perturbation of the metric coefficients.
// Shape per component: sum over frequencies of (a cos(k.x) + b sin(k.x)),
// normalized by sum(|a|+|b|) so the C^j norms are bounded by cutoff^j.
struct TrigShape {
    int n = 2;
    double scale = 0.0; // amplitude / Theta
    std::vector<Eigen::VectorXd> freqs;
    std::vector<std::pair<int, int>> comps;    // (i,j) with i<=j
    std::vector<std::vector<double>> ca, sa;   // [comp][freq]
    std::vector<double> inv_w;
    bool bump = false;
    Eigen::VectorXd center;
    double radius = 1.0;

    static TrigShape generate(int n, const PerturbationSpec& spec) {
        TrigShape s;
        s.n = n;
        // integer frequency vectors with 0 < |k|_inf <= cutoff, one per +-pair
        const int c = spec.frequency_cutoff;
        std::vector<int> k(static_cast<std::size_t>(n), -c);
        for (;;) {
            bool zero = true, lead_positive = false;
            for (int i = 0; i < n; ++i) {
                if (k[static_cast<std::size_t>(i)] != 0) {
                    zero = false;
                    lead_positive = k[static_cast<std::size_t>(i)] > 0;
                    break;
                }
            }
            if (!zero && lead_positive) {
                Eigen::VectorXd f(n);
                for (int i = 0; i < n; ++i) f[i] = k[static_cast<std::size_t>(i)];
                s.freqs.push_back(f);
            }
            int pos = n - 1;
            while (pos >= 0 && k[static_cast<std::size_t>(pos)] == c) k[static_cast<std::size_t>(pos--)] = -c;
            if (pos < 0) break;
            ++k[static_cast<std::size_t>(pos)];
        }
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) s.comps.emplace_back(i, j);

        Rng rng(spec.seed);
        const std::size_t F = s.freqs.size();
        s.ca.resize(s.comps.size());
        s.sa.resize(s.comps.size());
        s.inv_w.resize(s.comps.size());
        for (std::size_t cc = 0; cc < s.comps.size(); ++cc) {
            s.ca[cc].resize(F);
            s.sa[cc].resize(F);
            double w = 0.0;
            for (std::size_t f = 0; f < F; ++f) {
                s.ca[cc][f] = rng.uniform(-1.0, 1.0);
                s.sa[cc][f] = rng.uniform(-1.0, 1.0);
                w += std::abs(s.ca[cc][f]) + std::abs(s.sa[cc][f]);
            }
            s.inv_w[cc] = w > 0.0 ? 1.0 / w : 0.0;
        }

        // certificate: scale so that the C^j norm stays <= amplitude*(1+cutoff)^j
        double theta = 1.0;
        if (spec.bump) {
            s.bump = true;
            s.center = spec.bump_center;
            if (s.center.size() != n) s.center = Eigen::VectorXd::Zero(n);
            s.radius = spec.bump_radius;
            const double c1 = 3.0 / s.radius;                                  // sup |grad phi|
            const double c2 = 32.0 / (s.radius * s.radius);                    // sup |hess phi|
            const double cut = static_cast<double>(spec.frequency_cutoff);
            const double b1 = (c1 + cut) / (1.0 + cut);
            const double b2 = (c2 + 2.0 * c1 * cut + cut * cut) / ((1.0 + cut) * (1.0 + cut));
            theta = std::max({1.0, b1, b2});
        }
        s.scale = spec.amplitude / theta;
        return s;
    }

    // Accumulates the term into g / dg / ddg (any may be null).
    void add_to(const Eigen::VectorXd& x, Eigen::MatrixXd* g, std::vector<Eigen::MatrixXd>* dg,
                std::vector<std::vector<Eigen::MatrixXd>>* ddg) const {
        if (scale == 0.0) return;
        const std::size_t F = freqs.size();
        std::vector<double> cs(F), sn(F);
        for (std::size_t f = 0; f < F; ++f) {
            const double ph = freqs[f].dot(x);
            cs[f] = std::cos(ph);
            sn[f] = std::sin(ph);
        }
        double b = 1.0, db_dq = 0.0, ddb_dq2 = 0.0;
        Eigen::VectorXd dq;
        if (bump) {
            const Eigen::VectorXd r = x - center;
            const double q = r.squaredNorm() / (radius * radius);
            bump_eval(q, b, db_dq, ddb_dq2);
            dq = 2.0 * r / (radius * radius);
        }
        for (std::size_t cc = 0; cc < comps.size(); ++cc) {
            const auto [i, j] = comps[cc];
            double s = 0.0;
            Eigen::VectorXd ds = Eigen::VectorXd::Zero(n);
            Eigen::MatrixXd dds = Eigen::MatrixXd::Zero(n, n);
            for (std::size_t f = 0; f < F; ++f) {
                const double a1 = ca[cc][f], a2 = sa[cc][f];
                s += a1 * cs[f] + a2 * sn[f];
                if (dg || ddg) ds += (-a1 * sn[f] + a2 * cs[f]) * freqs[f];
                if (ddg) dds += (-a1 * cs[f] - a2 * sn[f]) * (freqs[f] * freqs[f].transpose());
            }
            s *= inv_w[cc];
            ds *= inv_w[cc];
            dds *= inv_w[cc];

            double val = s * b;
            Eigen::VectorXd dval;
            Eigen::MatrixXd ddval;
            if (bump) {
                if (dg || ddg) dval = ds * b + s * db_dq * dq;
                if (ddg)
                    ddval = dds * b + db_dq * (dq * ds.transpose() + ds * dq.transpose()) +
                            s * (ddb_dq2 * dq * dq.transpose() +
                                 db_dq * 2.0 / (radius * radius) * Eigen::MatrixXd::Identity(n, n));
            } else {
                if (dg || ddg) dval = ds;
                if (ddg) ddval = dds;
            }

            if (g) {
                (*g)(i, j) += scale * val;
                if (i != j) (*g)(j, i) += scale * val;
            }
            if (dg)
                for (int p = 0; p < n; ++p) {
                    (*dg)[static_cast<std::size_t>(p)](i, j) += scale * dval[p];
                    if (i != j) (*dg)[static_cast<std::size_t>(p)](j, i) += scale * dval[p];
                }
            if (ddg)
                for (int p = 0; p < n; ++p)
                    for (int q2 = 0; q2 < n; ++q2) {
                        (*ddg)[static_cast<std::size_t>(p)][static_cast<std::size_t>(q2)](i, j) +=
                            scale * ddval(p, q2);
                        if (i != j)
                            (*ddg)[static_cast<std::size_t>(p)][static_cast<std::size_t>(q2)](j, i) +=
                                scale * ddval(p, q2);
                    }
        }
    }
};

} // namespace detail

// A smooth metric on the disc |x| < domain_radius, represented by closed-form
// coefficient evaluators (base catalog form plus optional perturbation terms)
// so geodesic solving can sample it anywhere off-grid. Immutable after
// construction; all evaluations are pure.
class MetricField {
public:
    using CoeffFn = std::function<void(const Eigen::VectorXd&, Eigen::MatrixXd&)>;
    using DerivFn = std::function<void(const Eigen::VectorXd&, std::vector<Eigen::MatrixXd>&)>;
    using Deriv2Fn =
        std::function<void(const Eigen::VectorXd&, std::vector<std::vector<Eigen::MatrixXd>>&)>;

    MetricField(int n, std::vector<int> signature, double domain_radius, std::string label,
                CoeffFn coeff, DerivFn deriv = nullptr, Deriv2Fn deriv2 = nullptr)
        : n_(n),
          signature_(std::move(signature)),
          domain_radius_(domain_radius),
          label_(std::move(label)),
          coeff_(std::move(coeff)),
          deriv_(std::move(deriv)),
          deriv2_(std::move(deriv2)) {
        fd_step_ = 1e-4 * domain_radius_;
    }

    int dim() const { return n_; }
    const std::vector<int>& signature() const { return signature_; }
    bool indefinite() const {
        for (int s : signature_)
            if (s < 0) return true;
        return false;
    }
    double domain_radius() const { return domain_radius_; }
    const std::string& label() const { return label_; }
    DerivMode deriv_mode() const { return mode_; }
    double fd_step() const { return fd_step_; }
    double det_margin() const { return det_margin_; }
    const std::vector<detail::TrigShape>& perturbation_terms() const { return terms_; }

    MetricField with_finite_difference(double h = 0.0) const {
        MetricField m = *this;
        m.mode_ = DerivMode::FiniteDifference;
        if (h > 0.0) m.fd_step_ = h;
        return m;
    }

    void check_inside(const Eigen::VectorXd& x) const {
        if (x.size() != n_) throw Error(ErrorKind::ConfigError, "point dimension mismatch");
        if (x.norm() >= domain_radius_)
            throw Error(ErrorKind::OutOfDomain, "point outside disc of radius " +
                                                    std::to_string(domain_radius_));
    }

    // g_ij(x); exact symmetry is structural (only the upper triangle is computed)
    Eigen::MatrixXd coeff(const Eigen::VectorXd& x) const {
        check_inside(x);
        return coeff_raw(x);
    }

    // unchecked evaluation; finite-difference stencils may poke slightly
    // past the boundary, the closed forms extend smoothly
    Eigen::MatrixXd coeff_raw(const Eigen::VectorXd& x) const {
        Eigen::MatrixXd g(n_, n_);
        coeff_(x, g);
        for (auto& t : terms_) t.add_to(x, &g, nullptr, nullptr);
        return g;
    }

    Eigen::MatrixXd inverse(const Eigen::VectorXd& x) const {
        const Eigen::MatrixXd g = coeff(x);
        const double det = g.determinant();
        if (std::abs(det) < det_margin_)
            throw Error(ErrorKind::SingularMetric, "|det g| = " + std::to_string(det) + " at sample");
        return g.inverse();
    }

    // dg[k](i,j) = d g_ij / d x^k
    std::vector<Eigen::MatrixXd> coeff_deriv(const Eigen::VectorXd& x) const {
        if (mode_ == DerivMode::Analytic && deriv_) {
            std::vector<Eigen::MatrixXd> dg(static_cast<std::size_t>(n_),
                                            Eigen::MatrixXd::Zero(n_, n_));
            deriv_(x, dg);
            for (auto& t : terms_) t.add_to(x, nullptr, &dg, nullptr);
            return dg;
        }
        return coeff_deriv_fd(x, fd_step_);
    }

    // 4th-order central stencil fallback / validation path
    std::vector<Eigen::MatrixXd> coeff_deriv_fd(const Eigen::VectorXd& x, double h) const {
        std::vector<Eigen::MatrixXd> dg(static_cast<std::size_t>(n_));
        for (int k = 0; k < n_; ++k) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(n_);
            e[k] = 1.0;
            dg[static_cast<std::size_t>(k)] =
                (-coeff_raw(x + 2 * h * e) + 8 * coeff_raw(x + h * e) - 8 * coeff_raw(x - h * e) +
                 coeff_raw(x - 2 * h * e)) /
                (12 * h);
        }
        return dg;
    }

    // ddg[p][q](i,j) = d^2 g_ij / dx^p dx^q
    std::vector<std::vector<Eigen::MatrixXd>> coeff_deriv2(const Eigen::VectorXd& x) const {
        if (mode_ == DerivMode::Analytic && deriv2_) {
            std::vector<std::vector<Eigen::MatrixXd>> ddg(
                static_cast<std::size_t>(n_),
                std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(n_),
                                             Eigen::MatrixXd::Zero(n_, n_)));
            deriv2_(x, ddg);
            for (auto& t : terms_) t.add_to(x, nullptr, nullptr, &ddg);
            return ddg;
        }
        // stencil on first derivatives
        std::vector<std::vector<Eigen::MatrixXd>> ddg(
            static_cast<std::size_t>(n_),
            std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(n_)));
        const double h = fd_step_;
        for (int p = 0; p < n_; ++p) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(n_);
            e[p] = 1.0;
            const auto dp2 = coeff_deriv_or_fd(x + 2 * h * e);
            const auto dp1 = coeff_deriv_or_fd(x + h * e);
            const auto dm1 = coeff_deriv_or_fd(x - h * e);
            const auto dm2 = coeff_deriv_or_fd(x - 2 * h * e);
            for (int q = 0; q < n_; ++q)
                ddg[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] =
                    (-dp2[static_cast<std::size_t>(q)] + 8 * dp1[static_cast<std::size_t>(q)] -
                     8 * dm1[static_cast<std::size_t>(q)] + dm2[static_cast<std::size_t>(q)]) /
                    (12 * h);
        }
        return ddg;
    }

    // Gamma^k_ij, symmetric in (i,j); Levi-Civita connection
    std::vector<Eigen::MatrixXd> christoffel(const Eigen::VectorXd& x) const {
        check_inside(x);
        return christoffel_raw(x);
    }

    std::vector<Eigen::MatrixXd> christoffel_raw(const Eigen::VectorXd& x) const {
        const Eigen::MatrixXd g = coeff_raw(x);
        const double det = g.determinant();
        if (std::abs(det) < det_margin_)
            throw Error(ErrorKind::SingularMetric, "|det g| below margin");
        const Eigen::MatrixXd ginv = g.inverse();
        const auto dg = coeff_deriv(x);
        std::vector<Eigen::MatrixXd> gamma(static_cast<std::size_t>(n_),
                                           Eigen::MatrixXd::Zero(n_, n_));
        for (int k = 0; k < n_; ++k)
            for (int i = 0; i < n_; ++i)
                for (int j = i; j < n_; ++j) {
                    double s = 0.0;
                    for (int l = 0; l < n_; ++l)
                        s += ginv(k, l) * (dg[static_cast<std::size_t>(i)](j, l) +
                                           dg[static_cast<std::size_t>(j)](i, l) -
                                           dg[static_cast<std::size_t>(l)](i, j));
                    gamma[static_cast<std::size_t>(k)](i, j) = 0.5 * s;
                    gamma[static_cast<std::size_t>(k)](j, i) = 0.5 * s;
                }
        return gamma;
    }

    // dgamma[p][k](i,j) = d Gamma^k_ij / dx^p
    std::vector<std::vector<Eigen::MatrixXd>> christoffel_deriv(const Eigen::VectorXd& x) const {
        if (mode_ == DerivMode::Analytic && deriv2_) {
            const Eigen::MatrixXd g = coeff_raw(x);
            const Eigen::MatrixXd ginv = g.inverse();
            const auto dg = coeff_deriv(x);
            const auto ddg = coeff_deriv2(x);
            std::vector<std::vector<Eigen::MatrixXd>> out(
                static_cast<std::size_t>(n_),
                std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(n_),
                                             Eigen::MatrixXd::Zero(n_, n_)));
            for (int p = 0; p < n_; ++p) {
                const Eigen::MatrixXd dginv = -ginv * dg[static_cast<std::size_t>(p)] * ginv;
                for (int k = 0; k < n_; ++k)
                    for (int i = 0; i < n_; ++i)
                        for (int j = i; j < n_; ++j) {
                            double s = 0.0;
                            for (int l = 0; l < n_; ++l) {
                                const double br = dg[static_cast<std::size_t>(i)](j, l) +
                                                  dg[static_cast<std::size_t>(j)](i, l) -
                                                  dg[static_cast<std::size_t>(l)](i, j);
                                const double dbr =
                                    ddg[static_cast<std::size_t>(p)][static_cast<std::size_t>(i)](j, l) +
                                    ddg[static_cast<std::size_t>(p)][static_cast<std::size_t>(j)](i, l) -
                                    ddg[static_cast<std::size_t>(p)][static_cast<std::size_t>(l)](i, j);
                                s += dginv(k, l) * br + ginv(k, l) * dbr;
                            }
                            out[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)](i, j) = 0.5 * s;
                            out[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)](j, i) = 0.5 * s;
                        }
            }
            return out;
        }
        std::vector<std::vector<Eigen::MatrixXd>> out(
            static_cast<std::size_t>(n_),
            std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(n_)));
        const double h = fd_step_;
        for (int p = 0; p < n_; ++p) {
            Eigen::VectorXd e = Eigen::VectorXd::Zero(n_);
            e[p] = 1.0;
            const auto gp2 = christoffel_raw(x + 2 * h * e);
            const auto gp1 = christoffel_raw(x + h * e);
            const auto gm1 = christoffel_raw(x - h * e);
            const auto gm2 = christoffel_raw(x - 2 * h * e);
            for (int k = 0; k < n_; ++k)
                out[static_cast<std::size_t>(p)][static_cast<std::size_t>(k)] =
                    (-gp2[static_cast<std::size_t>(k)] + 8 * gp1[static_cast<std::size_t>(k)] -
                     8 * gm1[static_cast<std::size_t>(k)] + gm2[static_cast<std::size_t>(k)]) /
                    (12 * h);
        }
        return out;
    }

    // riem(m,a,b,c): Ricci identity (nabla_b nabla_c - nabla_c nabla_b)V^m = riem(m,a,b,c)V^a
    struct Curvature {
        int n;
        std::vector<double> v; // size n^4
        double operator()(int m, int a, int b, int c) const {
            return v[static_cast<std::size_t>(((m * n + a) * n + b) * n + c)];
        }
        double& at(int m, int a, int b, int c) {
            return v[static_cast<std::size_t>(((m * n + a) * n + b) * n + c)];
        }
    };

    Curvature curvature(const Eigen::VectorXd& x) const {
        const auto gamma = christoffel_raw(x);
        const auto dgamma = christoffel_deriv(x);
        Curvature R{n_, std::vector<double>(static_cast<std::size_t>(n_ * n_ * n_ * n_), 0.0)};
        for (int m = 0; m < n_; ++m)
            for (int a = 0; a < n_; ++a)
                for (int b = 0; b < n_; ++b)
                    for (int c = 0; c < n_; ++c) {
                        double s = dgamma[static_cast<std::size_t>(b)][static_cast<std::size_t>(m)](c, a) -
                                   dgamma[static_cast<std::size_t>(c)][static_cast<std::size_t>(m)](b, a);
                        for (int l = 0; l < n_; ++l)
                            s += gamma[static_cast<std::size_t>(m)](b, l) *
                                     gamma[static_cast<std::size_t>(l)](c, a) -
                                 gamma[static_cast<std::size_t>(m)](c, l) *
                                     gamma[static_cast<std::size_t>(l)](b, a);
                        R.at(m, a, b, c) = s;
                    }
        return R;
    }

    // Frame E with E^T g(x) E = diag(signature); velocities are expressed in
    // this per-point orthonormal basis before Veronese evaluation.
    Eigen::MatrixXd frame(const Eigen::VectorXd& x) const {
        const Eigen::MatrixXd g = coeff(x);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
        if (es.info() != Eigen::Success)
            throw Error(ErrorKind::SingularMetric, "eigendecomposition failed");
        const Eigen::VectorXd ev = es.eigenvalues(); // ascending
        std::vector<int> neg, pos;
        for (int i = 0; i < n_; ++i) {
            if (ev[i] < 0)
                neg.push_back(i);
            else
                pos.push_back(i);
        }
        int want_neg = 0;
        for (int s : signature_)
            if (s < 0) ++want_neg;
        if (static_cast<int>(neg.size()) != want_neg)
            throw Error(ErrorKind::SingularMetric, "signature mismatch at sample point");
        Eigen::MatrixXd E(n_, n_);
        std::size_t ineg = 0, ipos = 0;
        for (int slot = 0; slot < n_; ++slot) {
            const int src = signature_[static_cast<std::size_t>(slot)] < 0 ? neg[ineg++] : pos[ipos++];
            Eigen::VectorXd col = es.eigenvectors().col(src) / std::sqrt(std::abs(ev[src]));
            int imax = 0;
            for (int i = 1; i < n_; ++i)
                if (std::abs(col[i]) > std::abs(col[imax])) imax = i;
            if (col[imax] < 0) col = -col;
            E.col(slot) = col;
        }
        return E;
    }

    double energy(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const {
        return v.dot(coeff_raw(x) * v);
    }

    // Nondegeneracy and signature certificate on a grid_per_axis^n sample of
    // the disc. Throws DegenerateResult on failure.
    void certify_nondegenerate(int grid_per_axis = 64) const {
        Eigen::VectorXd x(n_);
        std::vector<int> idx(static_cast<std::size_t>(n_), 0);
        int want_neg = 0;
        for (int s : signature_)
            if (s < 0) ++want_neg;
        for (;;) {
            for (int i = 0; i < n_; ++i)
                x[i] = domain_radius_ * (-1.0 + 2.0 * (idx[static_cast<std::size_t>(i)] + 0.5) /
                                                    grid_per_axis);
            if (x.norm() < domain_radius_) {
                const Eigen::MatrixXd g = coeff_raw(x);
                if (std::abs(g.determinant()) < det_margin_)
                    throw Error(ErrorKind::DegenerateResult, "|det g| below margin on sample grid");
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g, Eigen::EigenvaluesOnly);
                int got_neg = 0;
                for (int i = 0; i < n_; ++i)
                    if (es.eigenvalues()[i] < 0) ++got_neg;
                if (got_neg != want_neg)
                    throw Error(ErrorKind::DegenerateResult, "signature flip on sample grid");
            }
            int pos = n_ - 1;
            while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == grid_per_axis - 1)
                idx[static_cast<std::size_t>(pos--)] = 0;
            if (pos < 0) break;
            ++idx[static_cast<std::size_t>(pos)];
        }
    }

    friend MetricField perturb(const MetricField& m, const PerturbationSpec& spec);

private:
    int n_;
    std::vector<int> signature_;
    double domain_radius_;
    std::string label_;
    CoeffFn coeff_;
    DerivFn deriv_;
    Deriv2Fn deriv2_;
    std::vector<detail::TrigShape> terms_;
    DerivMode mode_ = DerivMode::Analytic;
    double fd_step_ = 1e-4;
    double det_margin_ = 1e-6;

    std::vector<Eigen::MatrixXd> coeff_deriv_or_fd(const Eigen::VectorXd& x) const {
        if (mode_ == DerivMode::Analytic && deriv_) {
            std::vector<Eigen::MatrixXd> dg(static_cast<std::size_t>(n_),
                                            Eigen::MatrixXd::Zero(n_, n_));
            deriv_(x, dg);
            for (auto& t : terms_) t.add_to(x, nullptr, &dg, nullptr);
            return dg;
        }
        return coeff_deriv_fd(x, fd_step_);
    }
};

// Adds a seeded trigonometric-polynomial term; deterministic in (m, spec).
// The result keeps the declared signature; a grid scan certifies it.
inline MetricField perturb(const MetricField& m, const PerturbationSpec& spec) {
    MetricField out = m;
    if (spec.amplitude != 0.0) {
        out.terms_.push_back(detail::TrigShape::generate(m.dim(), spec));
        out.label_ = m.label() + "+pert(a=" + std::to_string(spec.amplitude) +
                     ",cut=" + std::to_string(spec.frequency_cutoff) +
                     ",seed=" + std::to_string(spec.seed) + ")";
        out.certify_nondegenerate();
    }
    return out;
}

// ---- catalog -------------------------------------------------------------

struct MetricParams {
    int n = 2;
    double domain_radius = 1.0;
    std::map<std::string, std::vector<double>> poly; // fx, hy, rho coefficient lists
    std::map<std::string, double> num;               // sphere_radius, amplitude, cutoff
    std::uint64_t seed = 0;
};

// Named metrics with documented closed-form coefficients:
//   flat            identity metric, any n
//   lorentz_flat    diag(-1, 1, ..., 1)
//   sphere_cap      round sphere of radius R in the stereographic chart,
//                   g = 4 R^4 / (R^2 + |x|^2)^2 * Id
//   liouville       g = (f(x1) + h(x2)) (dx1^2 + dx2^2), n = 2
//   revolution      g = dr^2 + rho(r)^2 dtheta^2, n = 2
//   random_analytic identity plus a seeded trig-polynomial perturbation
inline MetricField catalog(const std::string& name, const MetricParams& params = {}) {
    const int n = params.n;
    auto getpoly = [&](const char* key, std::vector<double> dflt) {
        auto it = params.poly.find(key);
        return it == params.poly.end() ? dflt : it->second;
    };
    auto getnum = [&](const char* key, double dflt) {
        auto it = params.num.find(key);
        return it == params.num.end() ? dflt : it->second;
    };

    if (name == "flat") {
        return MetricField(
            n, std::vector<int>(static_cast<std::size_t>(n), 1), params.domain_radius,
            "flat(n=" + std::to_string(n) + ")",
            [n](const Eigen::VectorXd&, Eigen::MatrixXd& g) { g.setIdentity(n, n); },
            [](const Eigen::VectorXd&, std::vector<Eigen::MatrixXd>&) {},
            [](const Eigen::VectorXd&, std::vector<std::vector<Eigen::MatrixXd>>&) {});
    }
    if (name == "lorentz_flat") {
        std::vector<int> sig(static_cast<std::size_t>(n), 1);
        sig[0] = -1;
        return MetricField(
            n, sig, params.domain_radius, "lorentz_flat(n=" + std::to_string(n) + ")",
            [n](const Eigen::VectorXd&, Eigen::MatrixXd& g) {
                g.setIdentity(n, n);
                g(0, 0) = -1.0;
            },
            [](const Eigen::VectorXd&, std::vector<Eigen::MatrixXd>&) {},
            [](const Eigen::VectorXd&, std::vector<std::vector<Eigen::MatrixXd>>&) {});
    }
    if (name == "sphere_cap") {
        const double R = getnum("sphere_radius", 1.0);
        const double R4 = R * R * R * R;
        return MetricField(
            n, std::vector<int>(static_cast<std::size_t>(n), 1), params.domain_radius,
            "sphere_cap(R=" + std::to_string(R) + ",n=" + std::to_string(n) + ")",
            [n, R, R4](const Eigen::VectorXd& x, Eigen::MatrixXd& g) {
                const double u = R * R + x.squaredNorm();
                g = (4.0 * R4 / (u * u)) * Eigen::MatrixXd::Identity(n, n);
            },
            [n, R, R4](const Eigen::VectorXd& x, std::vector<Eigen::MatrixXd>& dg) {
                const double u = R * R + x.squaredNorm();
                const double dc = -16.0 * R4 / (u * u * u);
                for (int p = 0; p < n; ++p)
                    dg[static_cast<std::size_t>(p)] = dc * x[p] * Eigen::MatrixXd::Identity(n, n);
            },
            [n, R, R4](const Eigen::VectorXd& x, std::vector<std::vector<Eigen::MatrixXd>>& ddg) {
                const double u = R * R + x.squaredNorm();
                const double u3 = u * u * u;
                for (int p = 0; p < n; ++p)
                    for (int q = 0; q < n; ++q) {
                        const double c2 = -16.0 * R4 * (p == q ? 1.0 : 0.0) / u3 +
                                          96.0 * R4 * x[p] * x[q] / (u3 * u);
                        ddg[static_cast<std::size_t>(p)][static_cast<std::size_t>(q)] =
                            c2 * Eigen::MatrixXd::Identity(n, n);
                    }
            });
    }
    if (name == "liouville") {
        if (n != 2) throw Error(ErrorKind::ConfigError, "liouville metric needs n=2");
        const auto f = getpoly("fx", {1.0, 0.0, 1.0});       // 1 + x^2
        const auto h = getpoly("hy", {1.0, 0.2, 0.6});       // 1 + 0.2 y + 0.6 y^2
        return MetricField(
            2, {1, 1}, params.domain_radius, "liouville",
            [f, h](const Eigen::VectorXd& x, Eigen::MatrixXd& g) {
                double fv, fd, fdd, hv, hd, hdd;
                detail::polyval(f, x[0], fv, fd, fdd);
                detail::polyval(h, x[1], hv, hd, hdd);
                g = (fv + hv) * Eigen::MatrixXd::Identity(2, 2);
            },
            [f, h](const Eigen::VectorXd& x, std::vector<Eigen::MatrixXd>& dg) {
                double fv, fd, fdd, hv, hd, hdd;
                detail::polyval(f, x[0], fv, fd, fdd);
                detail::polyval(h, x[1], hv, hd, hdd);
                dg[0] = fd * Eigen::MatrixXd::Identity(2, 2);
                dg[1] = hd * Eigen::MatrixXd::Identity(2, 2);
            },
            [f, h](const Eigen::VectorXd& x, std::vector<std::vector<Eigen::MatrixXd>>& ddg) {
                double fv, fd, fdd, hv, hd, hdd;
                detail::polyval(f, x[0], fv, fd, fdd);
                detail::polyval(h, x[1], hv, hd, hdd);
                ddg[0][0] = fdd * Eigen::MatrixXd::Identity(2, 2);
                ddg[1][1] = hdd * Eigen::MatrixXd::Identity(2, 2);
                ddg[0][1].setZero(2, 2);
                ddg[1][0].setZero(2, 2);
            });
    }
    if (name == "revolution") {
        if (n != 2) throw Error(ErrorKind::ConfigError, "revolution metric needs n=2");
        const auto rho = getpoly("rho", {1.0, 0.0, 0.25}); // 1 + r^2/4
        return MetricField(
            2, {1, 1}, params.domain_radius, "revolution",
            [rho](const Eigen::VectorXd& x, Eigen::MatrixXd& g) {
                double rv, rd, rdd;
                detail::polyval(rho, x[0], rv, rd, rdd);
                g.setZero(2, 2);
                g(0, 0) = 1.0;
                g(1, 1) = rv * rv;
            },
            [rho](const Eigen::VectorXd& x, std::vector<Eigen::MatrixXd>& dg) {
                double rv, rd, rdd;
                detail::polyval(rho, x[0], rv, rd, rdd);
                dg[0].setZero(2, 2);
                dg[0](1, 1) = 2.0 * rv * rd;
                dg[1].setZero(2, 2);
            },
            [rho](const Eigen::VectorXd& x, std::vector<std::vector<Eigen::MatrixXd>>& ddg) {
                double rv, rd, rdd;
                detail::polyval(rho, x[0], rv, rd, rdd);
                for (auto& row : ddg)
                    for (auto& m2 : row) m2.setZero(2, 2);
                ddg[0][0](1, 1) = 2.0 * (rd * rd + rv * rdd);
            });
    }
    if (name == "random_analytic") {
        // identity plus a seeded trig term; generic, admits no nontrivial integral

        PerturbationSpec spec;
        spec.amplitude = getnum("amplitude", 0.05);
        spec.frequency_cutoff = static_cast<int>(getnum("cutoff", 2));
        spec.seed = params.seed;
        MetricParams base = params;
        MetricField m = perturb(catalog("flat", base), spec);
        return m;
    }
    throw Error(ErrorKind::UnknownMetric, name);
}

// Coefficients of (1/2 g_ij(x) v^i v^j)^q in the monomial basis of S^{2q};
// the trivial integral for even degree d = 2q.
inline SymPolyElement hamiltonian_power_restriction(const MetricField& m, const Eigen::VectorXd& x,
                                                    int q) {
    return quadratic_form_power(m.coeff(x), q);
}

} // namespace kprobe
