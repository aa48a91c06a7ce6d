// killing-probe: numerical detector for polynomial-in-momenta first integrals
// of geodesic flows on a disc. Subcommands:
//   analyze <config.json>        obstruction kernel + oracles, JSON report
//   sweep <config.json>          perturbation-amplitude sweep, report + CSV
//   crossvalidate <config.json>  reconstruct kernel vectors, conservation audit
//   catalog --list               built-in metrics
//   rank-formula --n N --d D     prolongation-bundle fiber rank and jet order

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "kprobe/runner.hpp"

namespace {

int run_config_command(const std::string& mode, const std::string& config_path) {
    using namespace kprobe;
    const RunConfig cfg = parse_config(load_json_file(config_path));
    std::vector<RunReport> reports;
    bool is_sweep = false;
    if (mode == "analyze") {
        reports.push_back(run_analyze(cfg));
    } else if (mode == "sweep") {
        reports = run_sweep(cfg);
        is_sweep = true;
    } else {
        reports.push_back(run_crossvalidate(cfg));
    }
    write_report_files(cfg.output, reports, is_sweep);
    std::cout << summary_table(reports);
    std::cout << "report written to " << cfg.output << "/report.json\n";
    return 0;
}

void print_catalog() {
    std::printf("%-16s %-10s %s\n", "name", "dims", "coefficients");
    std::printf("%-16s %-10s %s\n", "flat", "n >= 2", "identity matrix");
    std::printf("%-16s %-10s %s\n", "lorentz_flat", "n >= 2", "diag(-1, 1, ..., 1)");
    std::printf("%-16s %-10s %s\n", "sphere_cap", "n >= 2",
                "4 R^4 / (R^2 + |x|^2)^2 Id   [params: sphere_radius]");
    std::printf("%-16s %-10s %s\n", "liouville", "n = 2",
                "(f(x1) + h(x2)) Id            [params: fx, hy poly coeffs]");
    std::printf("%-16s %-10s %s\n", "revolution", "n = 2",
                "diag(1, rho(x1)^2)            [params: rho poly coeffs]");
    std::printf("%-16s %-10s %s\n", "random_analytic", "n >= 2",
                "Id + seeded trig polynomial   [params: amplitude, cutoff, seed]");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"killing-probe: degree-d first-integral detector for geodesic flows"};
    app.require_subcommand(1);

    std::string config_path;
    auto* analyze = app.add_subcommand("analyze", "run the obstruction analysis");
    analyze->add_option("config", config_path, "JSON run config")->required();
    auto* sweep = app.add_subcommand("sweep", "amplitude sweep");
    sweep->add_option("config", config_path, "JSON run config")->required();
    auto* crossval = app.add_subcommand("crossvalidate", "reconstruct + conservation audit");
    crossval->add_option("config", config_path, "JSON run config")->required();

    bool list = false;
    auto* cat = app.add_subcommand("catalog", "metric catalog");
    cat->add_flag("--list", list, "list catalog metrics");

    int n = 0, d = 0;
    auto* rank = app.add_subcommand("rank-formula", "prolongation bundle rank and jet order");
    rank->add_option("--n", n, "dimension")->required();
    rank->add_option("--d", d, "degree")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (analyze->parsed()) return run_config_command("analyze", config_path);
        if (sweep->parsed()) return run_config_command("sweep", config_path);
        if (crossval->parsed()) return run_config_command("crossvalidate", config_path);
        if (cat->parsed()) {
            print_catalog();
            return 0;
        }
        if (rank->parsed()) {
            const auto r = kprobe::rank_formula(n, d);
            std::printf("rank(%d,%d) = %llu\nN(%d,%d) = %llu\n", n, d,
                        static_cast<unsigned long long>(r.rank), n, d,
                        static_cast<unsigned long long>(r.jet_order));
            return 0;
        }
    } catch (const kprobe::Error& e) {
        kprobe::Json err;
        err["error"] = kprobe::Json{{"kind", to_string(e.kind())}, {"message", e.what()}};
        std::cout << err.dump(2) << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        kprobe::Json err;
        err["error"] = kprobe::Json{{"kind", "Internal"}, {"message", e.what()}};
        std::cout << err.dump(2) << "\n";
        return 1;
    }
    return 2;
}
