#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kprobe/geodesic.hpp"
#include "kprobe/kernel.hpp"
#include "kprobe/metric.hpp"
#include "kprobe/rng.hpp"
#include "kprobe/sym_poly.hpp"

namespace kprobe {

struct ObstructionOptions {
    int kappa = 3;
    double cond_max = 1e8;        // decisiveness certificate threshold
    double gap_min = 1e6;         // spectral-gap rank rule
    double abs_floor = 1e-9;      // noise floor relative to sigma_1
    double defl_floor = 1e-5;     // deflation floor, absolute on unit kernel vectors
    double sample_factor = 0.8;   // points drawn inside sample_factor * radius
    double min_separation = 1e-3; // times domain radius, between sampled points
    int max_attempts = 100;
    BvpOptions bvp;
    int workers = 0;
};

// The A / B_l / C sets with all connecting geodesics, the g-orthonormal frame
// at every point, and the decisiveness certificates for each linear system the
// transport maps invert. Velocities are expressed in the per-point frames
// (E^T g E = diag(signature)) before any Veronese evaluation; this equalizes
// scales across points and makes the trivial even-degree ray the same
// coefficient vector at every A-point.
struct PointConfiguration {
    SymPolySpace space;
    int kappa = 0;
    std::uint64_t seed = 0;
    std::vector<Eigen::VectorXd> A, C;            // N points each
    std::vector<std::vector<Eigen::VectorXd>> B;  // kappa x N
    // seg_AB[l][i][j]: A_i -> B_{l,j};  seg_BC[l][i][j]: B_{l,i} -> C_j
    std::vector<std::vector<std::vector<GeodesicSegment>>> seg_AB, seg_BC;
    std::vector<Eigen::MatrixXd> frame_inv_A, frame_inv_C;
    std::vector<std::vector<Eigen::MatrixXd>> frame_inv_B;
    std::map<std::string, double> decisive_certs;

    double max_bvp_residual = 0.0;
    double max_energy_drift = 0.0;
    double max_decisive_cond = 0.0;
};

enum class Leg { AB, BC };

namespace detail {

// Transport map from data on src points to data on dst points, given the
// grid of connecting segments segs[i][j]: src_i -> dst_j. Block row j solves
// beta_j(w_end(i,j)) = alpha_i(w_start(i,j)) over i. Each segment's velocity
// pair is rescaled by a common factor (exact for homogeneous data), which
// keeps the Veronese rows at unit scale regardless of geodesic speeds.
inline Eigen::MatrixXd transport_from_segments(
    const SymPolySpace& space, const std::vector<Eigen::MatrixXd>& frame_inv_src,
    const std::vector<Eigen::MatrixXd>& frame_inv_dst,
    const std::vector<std::vector<GeodesicSegment>>& segs, double cond_max) {
    const int N = space.size();
    Eigen::MatrixXd phi(N * N, N * N);
    for (int j = 0; j < N; ++j) {
        Eigen::MatrixXd Mj(N, N);
        Eigen::MatrixXd Rj = Eigen::MatrixXd::Zero(N, N * N);
        for (int i = 0; i < N; ++i) {
            const auto& seg = segs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            const Eigen::VectorXd w_end =
                frame_inv_dst[static_cast<std::size_t>(j)] * seg.v_end;
            const Eigen::VectorXd w_start =
                frame_inv_src[static_cast<std::size_t>(i)] * seg.v_start;
            const double s = w_end.norm();
            Mj.row(i) = space.veronese(w_end / s).transpose();
            Rj.block(i, i * N, 1, N) = space.veronese(w_start / s).transpose();
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(Mj);
        const double smin = svd.singularValues()(N - 1);
        if (!(smin > 0.0) || svd.singularValues()(0) / smin > cond_max)
            throw Error(ErrorKind::IllConditioned, "transport system at dst point " +
                                                       std::to_string(j));
        phi.middleRows(j * N, N) = Mj.colPivHouseholderQr().solve(Rj);
    }
    return phi;
}

} // namespace detail

inline Eigen::MatrixXd transport_map(const PointConfiguration& cfg, int l, Leg leg,
                                     double cond_max = 1e8) {
    if (l < 0 || l >= cfg.kappa) throw Error(ErrorKind::ConfigError, "leg index out of range");
    if (leg == Leg::AB)
        return detail::transport_from_segments(cfg.space, cfg.frame_inv_A,
                                               cfg.frame_inv_B[static_cast<std::size_t>(l)],
                                               cfg.seg_AB[static_cast<std::size_t>(l)], cond_max);
    return detail::transport_from_segments(cfg.space, cfg.frame_inv_B[static_cast<std::size_t>(l)],
                                           cfg.frame_inv_C,
                                           cfg.seg_BC[static_cast<std::size_t>(l)], cond_max);
}

// Vertical stack of Phi_l^{BC} Phi_l^{AB} - Phi_1^{BC} Phi_1^{AB}, l = 2..kappa.
// Restrictions of every degree-d integral lie in its kernel.
inline Eigen::MatrixXd obstruction_matrix(const PointConfiguration& cfg, double cond_max = 1e8) {
    const int N = cfg.space.size();
    const int NN = N * N;
    const Eigen::MatrixXd P1 =
        transport_map(cfg, 0, Leg::BC, cond_max) * transport_map(cfg, 0, Leg::AB, cond_max);
    Eigen::MatrixXd out((cfg.kappa - 1) * NN, NN);
    for (int l = 1; l < cfg.kappa; ++l) {
        const Eigen::MatrixXd Pl =
            transport_map(cfg, l, Leg::BC, cond_max) * transport_map(cfg, l, Leg::AB, cond_max);
        out.middleRows((l - 1) * NN, NN) = Pl - P1;
    }
    return out;
}

// Draws the (kappa+2)N points from the seeded generator, solves all
// 2 kappa N^2 connecting geodesics and certifies every decisive set the
// construction relies on. Resamples with a fresh sub-seed on any failure.
inline PointConfiguration sample_configuration(const MetricField& m, const SymPolySpace& space,
                                               int kappa, std::uint64_t seed,
                                               const ObstructionOptions& opt = {}) {
    if (kappa < 2) throw Error(ErrorKind::ConfigError, "kappa must be >= 2");
    if (space.n() != m.dim()) throw Error(ErrorKind::ConfigError, "space/metric dimension mismatch");
    const int N = space.size();
    const int n = m.dim();
    const double R = opt.sample_factor * m.domain_radius();
    const double min_sep = opt.min_separation * m.domain_radius();

    Rng root(seed);
    for (int attempt = 0; attempt < opt.max_attempts; ++attempt) {
        Rng rng = root.fork(static_cast<std::uint64_t>(attempt));

        std::vector<Eigen::VectorXd> all;
        all.reserve(static_cast<std::size_t>((kappa + 2) * N));
        for (int i = 0; i < (kappa + 2) * N; ++i) all.push_back(rng.in_ball(n, R));
        bool separated = true;
        for (std::size_t i = 0; i < all.size() && separated; ++i)
            for (std::size_t j = i + 1; j < all.size(); ++j)
                if ((all[i] - all[j]).norm() < min_sep) {
                    separated = false;
                    break;
                }
        if (!separated) continue;

        PointConfiguration cfg{space};
        cfg.kappa = kappa;
        cfg.seed = seed;
        cfg.A.assign(all.begin(), all.begin() + N);
        cfg.B.resize(static_cast<std::size_t>(kappa));
        for (int l = 0; l < kappa; ++l)
            cfg.B[static_cast<std::size_t>(l)].assign(all.begin() + N * (l + 1),
                                                      all.begin() + N * (l + 2));
        cfg.C.assign(all.begin() + N * (kappa + 1), all.begin() + N * (kappa + 2));

        try {
            cfg.seg_AB.resize(static_cast<std::size_t>(kappa));
            cfg.seg_BC.resize(static_cast<std::size_t>(kappa));
            for (int l = 0; l < kappa; ++l) {
                cfg.seg_AB[static_cast<std::size_t>(l)] =
                    batch_connect(m, cfg.A, cfg.B[static_cast<std::size_t>(l)], opt.bvp, opt.workers);
                cfg.seg_BC[static_cast<std::size_t>(l)] =
                    batch_connect(m, cfg.B[static_cast<std::size_t>(l)], cfg.C, opt.bvp, opt.workers);
            }

            auto inv_frame = [&](const Eigen::VectorXd& x) {
                return Eigen::MatrixXd(m.frame(x).inverse());
            };
            for (const auto& p : cfg.A) cfg.frame_inv_A.push_back(inv_frame(p));
            for (const auto& p : cfg.C) cfg.frame_inv_C.push_back(inv_frame(p));
            cfg.frame_inv_B.resize(static_cast<std::size_t>(kappa));
            for (int l = 0; l < kappa; ++l)
                for (const auto& p : cfg.B[static_cast<std::size_t>(l)])
                    cfg.frame_inv_B[static_cast<std::size_t>(l)].push_back(inv_frame(p));

            // decisiveness certificates for every set the construction uses:
            // incoming sets are inverted by the transport solves, outgoing sets
            // make the maps invertible (reversal) and reconstruction stable.
            // Certified on unit directions, the scale the transports use.
            bool ok = true;
            auto certify = [&](const std::string& key, std::vector<Eigen::VectorXd> vs) {
                for (auto& v : vs) v /= v.norm();
                const auto [decisive, cond] = is_decisive(space, vs, opt.cond_max);
                cfg.decisive_certs[key] = cond;
                if (decisive) cfg.max_decisive_cond = std::max(cfg.max_decisive_cond, cond);
                ok = ok && decisive;
            };
            for (int l = 0; l < kappa && ok; ++l) {
                const auto& ab = cfg.seg_AB[static_cast<std::size_t>(l)];
                const auto& bc = cfg.seg_BC[static_cast<std::size_t>(l)];
                for (int j = 0; j < N && ok; ++j) {
                    std::vector<Eigen::VectorXd> in_b, in_c;
                    for (int i = 0; i < N; ++i) {
                        in_b.push_back(cfg.frame_inv_B[static_cast<std::size_t>(l)]
                                                      [static_cast<std::size_t>(j)] *
                                       ab[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
                                           .v_end);
                        in_c.push_back(cfg.frame_inv_C[static_cast<std::size_t>(j)] *
                                       bc[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
                                           .v_end);
                    }
                    certify("in@B[" + std::to_string(l) + "," + std::to_string(j) + "]", in_b);
                    certify("in@C[" + std::to_string(j) + "]<-B" + std::to_string(l), in_c);
                }
                for (int i = 0; i < N && ok; ++i) {
                    std::vector<Eigen::VectorXd> out_a, out_b;
                    for (int j = 0; j < N; ++j) {
                        out_a.push_back(cfg.frame_inv_A[static_cast<std::size_t>(i)] *
                                        ab[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
                                            .v_start);
                        out_b.push_back(cfg.frame_inv_B[static_cast<std::size_t>(l)]
                                                       [static_cast<std::size_t>(i)] *
                                        bc[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]
                                            .v_start);
                    }
                    certify("out@A[" + std::to_string(i) + "]->B" + std::to_string(l), out_a);
                    certify("out@B[" + std::to_string(l) + "," + std::to_string(i) + "]", out_b);
                }
            }
            if (!ok) continue;

            for (const auto& grid : {cfg.seg_AB, cfg.seg_BC})
                for (const auto& mat : grid)
                    for (const auto& row : mat)
                        for (const auto& seg : row) {
                            cfg.max_bvp_residual = std::max(cfg.max_bvp_residual, seg.bvp_residual);
                            cfg.max_energy_drift = std::max(cfg.max_energy_drift, seg.energy_drift);
                        }
            return cfg;
        } catch (const Error& e) {
            switch (e.kind()) {
                case ErrorKind::NoConvergence:
                case ErrorKind::LightLike:
                case ErrorKind::LeftDomain:
                case ErrorKind::StepFailure:
                case ErrorKind::IllConditioned:
                    continue; // resample with the next sub-seed
                default:
                    throw;
            }
        }
    }
    throw Error(ErrorKind::ConfigurationExhausted,
                "no admissible configuration after " + std::to_string(opt.max_attempts) +
                    " attempts");
}

// Scales every row to unit norm so the spectral floor is meaningful across
// heterogeneously scaled equation blocks; near-zero rows are left alone (they
// carry no information and must not be amplified into noise). Row scaling
// never changes the exact kernel.
inline Eigen::MatrixXd row_equilibrated(const Eigen::MatrixXd& M) {
    double max_norm = 0.0;
    for (int r = 0; r < M.rows(); ++r) max_norm = std::max(max_norm, M.row(r).norm());
    if (max_norm == 0.0) return M;
    Eigen::MatrixXd out = M;
    for (int r = 0; r < out.rows(); ++r) {
        const double nr = out.row(r).norm();
        if (nr > 1e-10 * max_norm) out.row(r) /= nr;
    }
    return out;
}

// Trivial even-degree ray (H^q restrictions) in the stacked frame coordinates:
// the same (1/2 w^T eta w)^q coefficient block at every A-point. Unit norm.
inline Eigen::VectorXd trivial_ray(const PointConfiguration& cfg,
                                   const std::vector<int>& signature) {
    const int N = cfg.space.size();
    const int d = cfg.space.d();
    if (d % 2 != 0) throw Error(ErrorKind::ConfigError, "trivial ray exists only for even d");
    Eigen::MatrixXd eta = Eigen::MatrixXd::Zero(cfg.space.n(), cfg.space.n());
    for (int i = 0; i < cfg.space.n(); ++i) eta(i, i) = signature[static_cast<std::size_t>(i)];
    const SymPolyElement h = quadratic_form_power(eta, d / 2);
    Eigen::VectorXd t(N * N);
    for (int i = 0; i < N; ++i) t.segment(i * N, N) = h.coeffs;
    return t / t.norm();
}

struct DeflationResult {
    bool determinate = true;
    int dim = 0;                    // nontrivial kernel dimension
    double trivial_alignment = 0.0; // |t^T V|, how much of the ray the kernel holds
};

// For even d, projects the kernel basis onto the orthogonal complement of the
// trivial H^q ray and counts the surviving directions; odd d passes through.
// The floor is absolute (kernel vectors are unit), so a one-dimensional kernel
// that IS the trivial ray deflates to zero as it should.
inline DeflationResult deflate_trivial(const KernelDecision& kd, const MetricField& m,
                                       const PointConfiguration& cfg,
                                       const ObstructionOptions& opt = {}) {
    DeflationResult out;
    if (!kd.determinate) {
        out.determinate = false;
        return out;
    }
    if (cfg.space.d() % 2 != 0 || kd.dim == 0) {
        out.dim = kd.dim;
        return out;
    }
    const Eigen::VectorXd t = trivial_ray(cfg, m.signature());
    const Eigen::MatrixXd& V = kd.kernel_basis;
    out.trivial_alignment = (t.transpose() * V).norm();
    const Eigen::MatrixXd W = V - t * (t.transpose() * V);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(W);
    const auto& s = svd.singularValues();
    int kept = 0;
    while (kept < s.size() && s(kept) >= opt.defl_floor) ++kept;
    // clean cut wanted between kept and dropped values
    if (kept < s.size() && kept > 0) {
        const double gap = s(kept) > 0.0 ? s(kept - 1) / s(kept)
                                         : std::numeric_limits<double>::infinity();
        if (gap < opt.gap_min) out.determinate = false;
    }
    out.dim = kept;
    return out;
}

// Solves the decisive N x N system candidate(w_in,i) = alpha_i(w_out,i) at a
// query point: the kernel vector's data at the A-points determines the value
// of the candidate integral on the incoming directions at x.
inline SymPolyElement reconstruct_integral(const Eigen::VectorXd& kernel_vec,
                                           const PointConfiguration& cfg, const MetricField& m,
                                           const Eigen::VectorXd& x,
                                           const ObstructionOptions& opt = {}) {
    m.check_inside(x);
    const int N = cfg.space.size();
    if (kernel_vec.size() != N * N)
        throw Error(ErrorKind::ConfigError, "kernel vector has wrong length");
    for (const auto& a : cfg.A)
        if ((a - x).norm() < opt.min_separation * m.domain_radius())
            throw Error(ErrorKind::ConfigError, "query point coincides with an A-point");

    const Eigen::MatrixXd Einv_x = m.frame(x).inverse();
    Eigen::MatrixXd M(N, N);
    Eigen::VectorXd rhs(N);
    for (int i = 0; i < N; ++i) {
        const GeodesicSegment seg =
            solve_bvp(m, cfg.A[static_cast<std::size_t>(i)], x, opt.bvp);
        const Eigen::VectorXd w_in = Einv_x * seg.v_end;
        const Eigen::VectorXd w_out =
            cfg.frame_inv_A[static_cast<std::size_t>(i)] * seg.v_start;
        const double s = w_in.norm();
        M.row(i) = cfg.space.veronese(w_in / s).transpose();
        rhs[i] = kernel_vec.segment(i * N, N).dot(cfg.space.veronese(w_out / s));
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const double smin = svd.singularValues()(N - 1);
    if (!(smin > 0.0) || svd.singularValues()(0) / smin > opt.cond_max)
        throw Error(ErrorKind::IllConditioned, "incoming directions at query point not decisive");
    return {cfg.space, M.colPivHouseholderQr().solve(rhs)};
}

// Restriction vector of a known integral: block i holds the frame-basis
// coefficients at A_i of the chart-coefficient field coeffs_at(x).
inline Eigen::VectorXd restriction_vector(
    const PointConfiguration& cfg, const MetricField& m,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& coeffs_at) {
    const int N = cfg.space.size();
    Eigen::VectorXd out(N * N);
    for (int i = 0; i < N; ++i) {
        const Eigen::MatrixXd E = m.frame(cfg.A[static_cast<std::size_t>(i)]);
        out.segment(i * N, N) =
            induced_map(cfg.space, E.transpose()) * coeffs_at(cfg.A[static_cast<std::size_t>(i)]);
    }
    return out;
}

// Full per-(metric, d, seed) pipeline result.
struct ObstructionReport {
    std::string metric_label;
    int n = 0, d = 0, N = 0, kappa = 0;
    std::uint64_t seed = 0;
    Eigen::VectorXd singular_values;
    bool determinate = false;
    int raw_kernel_dim = -1;
    bool deflation_determinate = false;
    int nontrivial_kernel_dim = -1;
    double gap_ratio = 0.0;
    double trivial_alignment = 0.0;
    Eigen::MatrixXd kernel_basis;
    double max_bvp_residual = 0.0;
    double max_energy_drift = 0.0;
    double max_decisive_cond = 0.0;
};

inline ObstructionReport run_obstruction(const MetricField& m, int d, std::uint64_t seed,
                                         const ObstructionOptions& opt = {},
                                         PointConfiguration* cfg_out = nullptr) {
    const SymPolySpace space(m.dim(), d);
    PointConfiguration cfg = sample_configuration(m, space, opt.kappa, seed, opt);
    const Eigen::MatrixXd M = obstruction_matrix(cfg, opt.cond_max);
    const KernelDecision kd = kernel_analysis(row_equilibrated(M), opt.gap_min, opt.abs_floor);
    const DeflationResult defl = deflate_trivial(kd, m, cfg, opt);

    ObstructionReport rep;
    rep.metric_label = m.label();
    rep.n = m.dim();
    rep.d = d;
    rep.N = space.size();
    rep.kappa = opt.kappa;
    rep.seed = seed;
    rep.singular_values = kd.singular_values;
    rep.determinate = kd.determinate;
    rep.raw_kernel_dim = kd.dim;
    rep.deflation_determinate = defl.determinate;
    rep.nontrivial_kernel_dim = defl.determinate ? defl.dim : -1;
    rep.gap_ratio = kd.gap_ratio;
    rep.trivial_alignment = defl.trivial_alignment;
    rep.kernel_basis = kd.kernel_basis;
    rep.max_bvp_residual = cfg.max_bvp_residual;
    rep.max_energy_drift = cfg.max_energy_drift;
    rep.max_decisive_cond = cfg.max_decisive_cond;
    if (cfg_out) *cfg_out = std::move(cfg);
    return rep;
}

} // namespace kprobe
