#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "kprobe/obstruction.hpp"
#include "kprobe/oracles.hpp"

namespace kprobe {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

using Json = nlohmann::ordered_json;

// floating-point values serialize as decimal strings at 17 significant digits
inline std::string fp17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

struct ToleranceSet {
    double ivp_tol = 1e-10;
    double bvp_tol = 1e-8;
    int max_iter = 50;
    double light_tol = 1e-8;
    double cond_max = 1e8;
    double gap_min = 1e6;
    double abs_floor = 1e-9;
    double defl_floor = 1e-5;
};

struct OracleToggles {
    bool collocation = false;
    int x_degree = -1; // -1: default d + 2
    bool holonomy = false;
    int loops = 12;
    bool conservation = false;
    int conservation_trials = 20;
};

struct RunConfig {
    std::string metric_name;
    MetricParams params;
    std::optional<PerturbationSpec> pert;
    std::vector<int> degrees;
    int kappa = 3;
    std::vector<std::uint64_t> seeds;
    ToleranceSet tol;
    OracleToggles oracles;
    std::string output = "out";
    std::vector<double> amplitudes; // sweep grid
    Json echo;                      // raw config document for the report
};

// ---- config parsing --------------------------------------------------------

inline Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ConfigError, "cannot open config file " + path);
    try {
        return Json::parse(in);
    } catch (const std::exception& e) {
        throw Error(ErrorKind::ConfigError, std::string("config parse failure: ") + e.what());
    }
}

inline RunConfig parse_config(const Json& j) {
    RunConfig cfg;
    cfg.echo = j;
    if (!j.contains("metric") || !j["metric"].contains("catalog"))
        throw Error(ErrorKind::ConfigError, "config needs metric.catalog");
    const Json& jm = j["metric"];
    cfg.metric_name = jm["catalog"].get<std::string>();
    cfg.params.n = jm.value("n", 2);
    cfg.params.domain_radius = jm.value("domain_radius", 1.0);
    if (jm.contains("params")) {
        for (auto& [key, val] : jm["params"].items()) {
            if (val.is_array())
                cfg.params.poly[key] = val.get<std::vector<double>>();
            else if (key == "seed")
                cfg.params.seed = val.get<std::uint64_t>();
            else
                cfg.params.num[key] = val.get<double>();
        }
    }
    if (jm.contains("perturbation")) {
        const Json& jp = jm["perturbation"];
        PerturbationSpec p;
        p.amplitude = jp.value("amplitude", 0.0);
        p.frequency_cutoff = jp.value("frequency_cutoff", 3);
        p.seed = jp.value("seed", 0ull);
        if (jp.contains("support") && jp["support"].is_object() &&
            jp["support"].contains("bump")) {
            p.bump = true;
            const Json& jb = jp["support"]["bump"];
            if (jb.contains("center")) {
                const auto c = jb["center"].get<std::vector<double>>();
                p.bump_center = Eigen::Map<const Eigen::VectorXd>(c.data(),
                                                                  static_cast<int>(c.size()));
            }
            p.bump_radius = jb.value("radius", 0.5);
        }
        cfg.pert = p;
    }
    if (!j.contains("degrees")) throw Error(ErrorKind::ConfigError, "config needs degrees");
    cfg.degrees = j["degrees"].get<std::vector<int>>();
    for (int d : cfg.degrees)
        if (d < 1) throw Error(ErrorKind::ConfigError, "degrees must be >= 1");
    cfg.kappa = j.value("kappa", 3);
    if (cfg.kappa < 2) throw Error(ErrorKind::ConfigError, "kappa must be >= 2");
    if (!j.contains("seeds") || j["seeds"].empty())
        throw Error(ErrorKind::ConfigError, "config needs a nonempty seeds list");
    cfg.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (j.contains("tolerances")) {
        const Json& jt = j["tolerances"];
        cfg.tol.ivp_tol = jt.value("ivp_tol", cfg.tol.ivp_tol);
        cfg.tol.bvp_tol = jt.value("bvp_tol", cfg.tol.bvp_tol);
        cfg.tol.max_iter = jt.value("max_iter", cfg.tol.max_iter);
        cfg.tol.light_tol = jt.value("light_tol", cfg.tol.light_tol);
        cfg.tol.cond_max = jt.value("cond_max", cfg.tol.cond_max);
        cfg.tol.gap_min = jt.value("gap_min", cfg.tol.gap_min);
        cfg.tol.abs_floor = jt.value("abs_floor", cfg.tol.abs_floor);
        cfg.tol.defl_floor = jt.value("defl_floor", cfg.tol.defl_floor);
    }
    if (j.contains("oracles")) {
        const Json& jo = j["oracles"];
        if (jo.contains("collocation")) {
            const Json& jc = jo["collocation"];
            cfg.oracles.collocation = jc.is_boolean() ? jc.get<bool>() : jc.value("enabled", true);
            if (jc.is_object()) cfg.oracles.x_degree = jc.value("x_degree", -1);
        }
        if (jo.contains("holonomy")) {
            const Json& jh = jo["holonomy"];
            cfg.oracles.holonomy = jh.is_boolean() ? jh.get<bool>() : jh.value("enabled", true);
            if (jh.is_object()) cfg.oracles.loops = jh.value("loops", 12);
        }
        if (jo.contains("conservation")) {
            const Json& jc = jo["conservation"];
            cfg.oracles.conservation =
                jc.is_boolean() ? jc.get<bool>() : jc.value("enabled", true);
            if (jc.is_object())
                cfg.oracles.conservation_trials = jc.value("trials", 20);
        }
    }
    cfg.output = j.value("output", std::string("out"));
    if (j.contains("amplitudes")) cfg.amplitudes = j["amplitudes"].get<std::vector<double>>();
    return cfg;
}

inline MetricField build_metric(const RunConfig& cfg,
                                std::optional<double> amplitude_override = std::nullopt) {
    MetricField m = catalog(cfg.metric_name, cfg.params);
    if (cfg.pert) {
        PerturbationSpec p = *cfg.pert;
        if (amplitude_override) p.amplitude = *amplitude_override;
        m = perturb(m, p);
    }
    return m;
}

inline ObstructionOptions obstruction_options(const RunConfig& cfg) {
    ObstructionOptions o;
    o.kappa = cfg.kappa;
    o.cond_max = cfg.tol.cond_max;
    o.gap_min = cfg.tol.gap_min;
    o.abs_floor = cfg.tol.abs_floor;
    o.defl_floor = cfg.tol.defl_floor;
    o.bvp.ivp.ivp_tol = cfg.tol.ivp_tol;
    o.bvp.bvp_tol = cfg.tol.bvp_tol;
    o.bvp.max_iter = cfg.tol.max_iter;
    o.bvp.light_tol = cfg.tol.light_tol;
    return o;
}

// ---- per-cell execution ----------------------------------------------------

struct OracleOutcome {
    bool ran = false;
    bool determinate = false;
    int dim = -1;
    double gap_ratio = 0.0;
};

struct CrossvalEntry {
    double max_drift = 0.0;
    bool certified = false;
    double trivial_alignment = 0.0;
};

struct CellResult {
    int d = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error_kind, error_message;
    ObstructionReport rep;
    OracleOutcome colloc, holo;
    double conservation_drift = -1.0;
    std::vector<CrossvalEntry> crossval;
    std::string verdict;
    double seconds = 0.0;
};

inline std::string cell_verdict(const CellResult& c) {
    if (!c.ok) return "INDETERMINATE";
    if (!c.rep.determinate || !c.rep.deflation_determinate) return "INDETERMINATE";
    // enabled oracles must agree with the raw kernel dimension
    if (c.colloc.ran && (!c.colloc.determinate || c.colloc.dim != c.rep.raw_kernel_dim))
        return "INDETERMINATE";
    if (c.holo.ran && (!c.holo.determinate || c.holo.dim != c.rep.raw_kernel_dim))
        return "INDETERMINATE";
    if (c.rep.nontrivial_kernel_dim == 0) return "TRIVIAL_ONLY";
    return "DIM=" + std::to_string(c.rep.nontrivial_kernel_dim);
}

inline CellResult run_cell(const MetricField& m, const RunConfig& cfg, int d,
                           std::uint64_t seed) {
    CellResult cell;
    cell.d = d;
    cell.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const ObstructionOptions opt = obstruction_options(cfg);
        cell.rep = run_obstruction(m, d, seed, opt);

        OracleOptions oopt;
        oopt.gap_min = cfg.tol.gap_min;
        oopt.abs_floor = cfg.tol.abs_floor;
        oopt.ivp.ivp_tol = cfg.tol.ivp_tol;

        if (cfg.oracles.collocation) {
            const int xdeg = cfg.oracles.x_degree > 0 ? cfg.oracles.x_degree : d + 2;
            const SymPolySpace space(m.dim(), d);
            const int unknowns =
                space.size() * static_cast<int>(position_monomials(m.dim(), xdeg).size());
            const KernelDecision kd =
                collocation_kernel_dim(m, space, xdeg, 3 * unknowns, seed ^ 0xC0110Cull, oopt);
            cell.colloc = {true, kd.determinate, kd.dim, kd.gap_ratio};
        }
        if (cfg.oracles.holonomy && d == 1) {
            const KernelDecision kd =
                holonomy_kernel_dim_d1(m, cfg.oracles.loops, seed ^ 0x401Dull, oopt);
            cell.holo = {true, kd.determinate, kd.dim, kd.gap_ratio};
        }
        cell.ok = true;
    } catch (const Error& e) {
        cell.error_kind = to_string(e.kind());
        cell.error_message = e.what();
    }
    cell.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    cell.verdict = cell_verdict(cell);
    return cell;
}

// ---- reports ----------------------------------------------------------------

struct RunReport {
    RunConfig cfg;
    std::string metric_label;
    std::vector<CellResult> cells;
    std::map<int, std::string> verdict_per_d;
    double total_seconds = 0.0;
    std::optional<double> amplitude;        // set for sweep cells
    std::string error_kind, error_message;  // whole-report failure (sweep records it)
};

inline void finalize_verdicts(RunReport& rep) {
    for (int d : rep.cfg.degrees) {
        std::string v;
        bool mixed = false;
        for (const auto& c : rep.cells) {
            if (c.d != d) continue;
            if (v.empty())
                v = c.verdict;
            else if (v != c.verdict)
                mixed = true;
        }
        rep.verdict_per_d[d] = (mixed || v.empty()) ? "INDETERMINATE" : v;
    }
}

inline Json cell_to_json(const CellResult& c) {
    Json j;
    j["d"] = c.d;
    j["seed"] = c.seed;
    if (!c.ok) {
        j["error"] = Json{{"kind", c.error_kind}, {"message", c.error_message}};
        j["verdict"] = c.verdict;
        return j;
    }
    Json jr;
    jr["metric"] = c.rep.metric_label;
    jr["n"] = c.rep.n;
    jr["N"] = c.rep.N;
    jr["kappa"] = c.rep.kappa;
    Json sv = Json::array();
    for (int i = 0; i < c.rep.singular_values.size(); ++i)
        sv.push_back(fp17(c.rep.singular_values[i]));
    jr["singular_values"] = sv;
    jr["determinate"] = c.rep.determinate;
    jr["raw_kernel_dim"] = c.rep.raw_kernel_dim;
    jr["deflation_determinate"] = c.rep.deflation_determinate;
    jr["nontrivial_kernel_dim"] = c.rep.nontrivial_kernel_dim;
    jr["gap_ratio"] = fp17(c.rep.gap_ratio);
    jr["trivial_alignment"] = fp17(c.rep.trivial_alignment);
    Json kb = Json::array();
    for (int col = 0; col < c.rep.kernel_basis.cols(); ++col) {
        Json v = Json::array();
        for (int r = 0; r < c.rep.kernel_basis.rows(); ++r)
            v.push_back(fp17(c.rep.kernel_basis(r, col)));
        kb.push_back(v);
    }
    jr["kernel_basis"] = kb;
    jr["max_bvp_residual"] = fp17(c.rep.max_bvp_residual);
    jr["max_energy_drift"] = fp17(c.rep.max_energy_drift);
    jr["max_decisive_cond"] = fp17(c.rep.max_decisive_cond);
    j["obstruction"] = jr;

    Json jo;
    if (c.colloc.ran)
        jo["collocation"] = Json{{"determinate", c.colloc.determinate},
                                 {"dim", c.colloc.dim},
                                 {"gap_ratio", fp17(c.colloc.gap_ratio)}};
    if (c.holo.ran)
        jo["holonomy"] = Json{{"determinate", c.holo.determinate},
                              {"dim", c.holo.dim},
                              {"gap_ratio", fp17(c.holo.gap_ratio)}};
    if (c.conservation_drift >= 0.0) jo["conservation_drift"] = fp17(c.conservation_drift);
    j["oracles"] = jo;

    if (!c.crossval.empty()) {
        Json cv = Json::array();
        for (const auto& e : c.crossval)
            cv.push_back(Json{{"max_drift", fp17(e.max_drift)},
                              {"certified", e.certified},
                              {"trivial_alignment", fp17(e.trivial_alignment)}});
        j["crossvalidate"] = cv;
    }
    j["verdict"] = c.verdict;
    return j;
}

inline Json report_to_json(const RunReport& rep, bool with_timings = true) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["tool_version"] = kToolVersion;
    j["config"] = rep.cfg.echo;
    j["metric_label"] = rep.metric_label;
    if (rep.amplitude) j["amplitude"] = fp17(*rep.amplitude);
    if (!rep.error_kind.empty())
        j["error"] = Json{{"kind", rep.error_kind}, {"message", rep.error_message}};
    Json cells = Json::array();
    for (const auto& c : rep.cells) cells.push_back(cell_to_json(c));
    j["results"] = cells;
    Json verdicts;
    for (const auto& [d, v] : rep.verdict_per_d) verdicts["d=" + std::to_string(d)] = v;
    j["verdicts"] = verdicts;
    if (with_timings) {
        Json t;
        Json per = Json::array();
        for (const auto& c : rep.cells) per.push_back(fp17(c.seconds));
        t["cell_seconds"] = per;
        t["total_seconds"] = fp17(rep.total_seconds);
        j["timings"] = t;
    }
    return j;
}

inline std::string summary_table(const std::vector<RunReport>& reports) {
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof(line), "%-34s %9s %3s %10s %5s %10s %12s %-14s\n", "metric",
                  "amplitude", "d", "seed", "raw", "nontrivial", "gap_ratio", "verdict");
    os << line;
    os << std::string(102, '-') << "\n";
    for (const auto& rep : reports) {
        for (const auto& c : rep.cells) {
            char gap[32];
            if (c.ok)
                std::snprintf(gap, sizeof(gap), "%.2e", c.rep.gap_ratio);
            else
                std::snprintf(gap, sizeof(gap), "-");
            std::snprintf(line, sizeof(line), "%-34.34s %9s %3d %10llu %5s %10s %12s %-14s\n",
                          rep.metric_label.c_str(),
                          rep.amplitude ? fp17(*rep.amplitude).substr(0, 9).c_str() : "-", c.d,
                          static_cast<unsigned long long>(c.seed),
                          c.ok ? std::to_string(c.rep.raw_kernel_dim).c_str() : "err",
                          c.ok ? std::to_string(c.rep.nontrivial_kernel_dim).c_str() : "err", gap,
                          c.verdict.c_str());
            os << line;
        }
        for (const auto& [d, v] : rep.verdict_per_d) {
            std::snprintf(line, sizeof(line), "%-34.34s %9s %3d %10s %5s %10s %12s %-14s\n",
                          rep.metric_label.c_str(),
                          rep.amplitude ? fp17(*rep.amplitude).substr(0, 9).c_str() : "-", d,
                          "ALL", "", "", "", v.c_str());
            os << line;
        }
    }
    return os.str();
}

// ---- operations -------------------------------------------------------------

inline RunReport run_analyze(const RunConfig& cfg,
                             std::optional<double> amplitude_override = std::nullopt) {
    const auto t0 = std::chrono::steady_clock::now();
    const MetricField m = build_metric(cfg, amplitude_override);
    RunReport rep;
    rep.cfg = cfg;
    rep.metric_label = m.label();
    if (amplitude_override) rep.amplitude = *amplitude_override;
    for (int d : cfg.degrees)
        for (std::uint64_t s : cfg.seeds) rep.cells.push_back(run_cell(m, cfg, d, s));
    finalize_verdicts(rep);
    rep.total_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// One report per amplitude, ascending; per-cell errors are recorded in the
// report and the sweep continues.
inline std::vector<RunReport> run_sweep(const RunConfig& cfg) {
    if (cfg.amplitudes.size() < 2)
        throw Error(ErrorKind::ConfigError, "sweep needs an ascending amplitude grid (>= 2 values)");
    for (std::size_t i = 1; i < cfg.amplitudes.size(); ++i)
        if (cfg.amplitudes[i] <= cfg.amplitudes[i - 1])
            throw Error(ErrorKind::ConfigError, "amplitude grid must be strictly ascending");
    if (!cfg.pert)
        throw Error(ErrorKind::ConfigError, "sweep needs metric.perturbation (seed, cutoff)");
    std::vector<RunReport> out;
    for (double a : cfg.amplitudes) {
        try {
            out.push_back(run_analyze(cfg, a));
        } catch (const Error& e) {
            RunReport r;
            r.cfg = cfg;
            r.metric_label = cfg.metric_name;
            r.amplitude = a;
            r.error_kind = to_string(e.kind());
            r.error_message = e.what();
            for (int d : cfg.degrees) r.verdict_per_d[d] = "INDETERMINATE";
            out.push_back(std::move(r));
        }
    }
    return out;
}

inline std::string sweep_csv(const std::vector<RunReport>& reports) {
    std::ostringstream os;
    os << "amplitude,d,nontrivial_dim,gap_ratio\n";
    for (const auto& rep : reports)
        for (const auto& c : rep.cells) {
            os << (rep.amplitude ? fp17(*rep.amplitude) : "0") << "," << c.d << ",";
            if (c.ok && c.rep.deflation_determinate)
                os << c.rep.nontrivial_kernel_dim;
            else
                os << "indeterminate";
            os << "," << (c.ok ? fp17(c.rep.gap_ratio) : "nan") << "\n";
        }
    return os.str();
}

// Reconstructs every kernel-basis vector on a 5x5 query grid and audits its
// conservation along 20 fresh geodesics; vectors with drift < 1e-6 are
// certified as numerical integrals. Empty kernels report an empty list.
inline RunReport run_crossvalidate(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const MetricField m = build_metric(cfg);
    RunReport rep;
    rep.cfg = cfg;
    rep.metric_label = m.label();
    const ObstructionOptions opt = obstruction_options(cfg);

    for (int d : cfg.degrees)
        for (std::uint64_t seed : cfg.seeds) {
            CellResult cell;
            cell.d = d;
            cell.seed = seed;
            const auto c0 = std::chrono::steady_clock::now();
            try {
                PointConfiguration pc;
                cell.rep = run_obstruction(m, d, seed, opt, &pc);
                cell.ok = true;
                const int k = cell.rep.determinate ? cell.rep.raw_kernel_dim : 0;
                const int N = pc.space.size();
                Eigen::VectorXd trivial;
                if (d % 2 == 0) trivial = trivial_ray(pc, m.signature());

                // all kernel vectors share the N decisive BVPs at a query point;
                // returns the N x k frame-basis coefficient matrix at x
                auto reconstruct_all = [&](const Eigen::VectorXd& x,
                                           Eigen::MatrixXd& coef) -> bool {
                    Eigen::MatrixXd M(N, N);
                    Eigen::MatrixXd rhs(N, k);
                    try {
                        const Eigen::MatrixXd Einv = m.frame(x).inverse();
                        for (int i = 0; i < N; ++i) {
                            const GeodesicSegment leg =
                                solve_bvp(m, pc.A[static_cast<std::size_t>(i)], x, opt.bvp);
                            const Eigen::VectorXd w_in = Einv * leg.v_end;
                            const double s = w_in.norm();
                            M.row(i) = pc.space.veronese(w_in / s).transpose();
                            const Eigen::VectorXd vr = pc.space.veronese(
                                (pc.frame_inv_A[static_cast<std::size_t>(i)] * leg.v_start) / s);
                            for (int col = 0; col < k; ++col)
                                rhs(i, col) =
                                    cell.rep.kernel_basis.col(col).segment(i * N, N).dot(vr);
                        }
                    } catch (const Error&) {
                        return false; // unusable query point
                    }
                    coef = M.colPivHouseholderQr().solve(rhs);
                    return true;
                };

                if (k > 0) {
                    // 5x5 reconstruction grid of every kernel vector
                    const double r = 0.5 * m.domain_radius();
                    Eigen::MatrixXd coef;
                    for (int gx = 0; gx < 5; ++gx)
                        for (int gy = 0; gy < 5; ++gy) {
                            Eigen::VectorXd x = Eigen::VectorXd::Zero(m.dim());
                            x[0] = -r + 0.5 * r * gx;
                            x[1 % m.dim()] = -r + 0.5 * r * gy;
                            if (x.norm() >= m.domain_radius()) continue;
                            (void)reconstruct_all(x, coef);
                        }

                    cell.crossval.assign(static_cast<std::size_t>(k), {});
                    for (int col = 0; col < k && d % 2 == 0; ++col)
                        cell.crossval[static_cast<std::size_t>(col)].trivial_alignment =
                            std::abs(trivial.dot(cell.rep.kernel_basis.col(col)));

                    // conservation audit along 20 fresh geodesics
                    Rng rng(seed ^ 0xAAD17ull);
                    for (int trial = 0; trial < 20; ++trial) {
                        const Eigen::VectorXd x0 = rng.in_ball(m.dim(), 0.5 * m.domain_radius());
                        const Eigen::VectorXd dir = rng.on_sphere(m.dim());
                        double speed = rng.uniform(0.15, 0.4) * m.domain_radius();
                        GeodesicSegment seg;
                        bool have = false;
                        for (int shrink = 0; shrink <= 4 && !have; ++shrink) {
                            try {
                                seg = integrate_ivp(m, x0, speed * dir, 1.0, opt.bvp.ivp);
                                have = true;
                            } catch (const Error& e) {
                                if (e.kind() != ErrorKind::LeftDomain) throw;
                                speed *= 0.5;
                            }
                        }
                        if (!have) continue;
                        std::vector<double> f0(static_cast<std::size_t>(k),
                                               std::numeric_limits<double>::quiet_NaN());
                        for (const auto& s : seg.samples) {
                            if (!reconstruct_all(s.x, coef)) continue;
                            const Eigen::VectorXd ver =
                                pc.space.veronese(m.frame(s.x).inverse() * s.v);
                            for (int col = 0; col < k; ++col) {
                                const double f = ver.dot(coef.col(col));
                                auto& entry = cell.crossval[static_cast<std::size_t>(col)];
                                if (std::isnan(f0[static_cast<std::size_t>(col)]))
                                    f0[static_cast<std::size_t>(col)] = f;
                                else
                                    entry.max_drift = std::max(
                                        entry.max_drift,
                                        std::abs(f - f0[static_cast<std::size_t>(col)]) /
                                            (std::abs(f0[static_cast<std::size_t>(col)]) + 1e-12));
                            }
                        }
                    }
                    for (auto& e : cell.crossval) e.certified = e.max_drift < 1e-6;
                }
            } catch (const Error& e) {
                cell.ok = false;
                cell.error_kind = to_string(e.kind());
                cell.error_message = e.what();
            }
            cell.seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - c0).count();
            cell.verdict = cell_verdict(cell);
            rep.cells.push_back(std::move(cell));
        }
    finalize_verdicts(rep);
    rep.total_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

// ---- output files -----------------------------------------------------------

inline void write_text_file(const std::filesystem::path& p, const std::string& content) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw Error(ErrorKind::ConfigError, "cannot write " + p.string());
    out << content;
}

inline void write_report_files(const std::string& out_dir, const std::vector<RunReport>& reports,
                               bool is_sweep) {
    Json j;
    if (reports.size() == 1 && !is_sweep) {
        j = report_to_json(reports.front());
    } else {
        j["schema_version"] = kSchemaVersion;
        j["tool_version"] = kToolVersion;
        Json arr = Json::array();
        for (const auto& r : reports) arr.push_back(report_to_json(r));
        j["sweep"] = arr;
    }
    const std::filesystem::path dir(out_dir);
    write_text_file(dir / "report.json", j.dump(2) + "\n");
    write_text_file(dir / "summary.txt", summary_table(reports));
    if (is_sweep) write_text_file(dir / "sweep.csv", sweep_csv(reports));
}

} // namespace kprobe
