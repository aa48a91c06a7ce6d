#include <gtest/gtest.h>

#include "kprobe/runner.hpp"

using namespace kprobe;

namespace {

Json flat_config() {
    return Json::parse(R"({
        "metric": {"catalog": "flat", "n": 2},
        "degrees": [1],
        "kappa": 3,
        "seeds": [1],
        "oracles": {"collocation": {"enabled": true, "x_degree": 1},
                    "holonomy": {"enabled": true}},
        "output": "out"
    })");
}

} // namespace

TEST(ParseConfig, RejectsMissingFields) {
    EXPECT_THROW(parse_config(Json::parse(R"({"degrees": [1]})")), Error);
    EXPECT_THROW(parse_config(Json::parse(R"({"metric": {"catalog": "flat"}})")), Error);
    EXPECT_THROW(parse_config(Json::parse(
                     R"({"metric": {"catalog": "flat"}, "degrees": [1], "seeds": []})")),
                 Error);
    EXPECT_THROW(parse_config(Json::parse(
                     R"({"metric": {"catalog": "flat"}, "degrees": [0], "seeds": [1]})")),
                 Error);
}

TEST(ParseConfig, UnknownCatalogSurfacesWithExitCodeTwo) {
    Json j = flat_config();
    j["metric"]["catalog"] = "nonsense";
    const RunConfig cfg = parse_config(j);
    try {
        (void)run_analyze(cfg);
        FAIL() << "expected UnknownMetric";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UnknownMetric);
        EXPECT_EQ(e.exit_code(), 2);
    }
}

TEST(RunAnalyze, FlatDegreeOneVerdict) {
    const RunConfig cfg = parse_config(flat_config());
    const RunReport rep = run_analyze(cfg);
    ASSERT_EQ(rep.cells.size(), 1u);
    EXPECT_EQ(rep.cells[0].verdict, "DIM=3");
    EXPECT_EQ(rep.verdict_per_d.at(1), "DIM=3");
    EXPECT_TRUE(rep.cells[0].colloc.ran);
    EXPECT_EQ(rep.cells[0].colloc.dim, 3);
    EXPECT_TRUE(rep.cells[0].holo.ran);
    EXPECT_EQ(rep.cells[0].holo.dim, 3);
}

TEST(RunAnalyze, ReportJsonIsDeterministic) {
    const RunConfig cfg = parse_config(flat_config());
    const RunReport a = run_analyze(cfg);
    const RunReport b = run_analyze(cfg);
    EXPECT_EQ(report_to_json(a, false).dump(), report_to_json(b, false).dump());
}

TEST(RunSweep, RequiresAscendingGrid) {
    Json j = flat_config();
    j["metric"]["perturbation"] = Json{{"amplitude", 0.0}, {"frequency_cutoff", 3}, {"seed", 7}};
    {
        Json bad = j;
        bad["amplitudes"] = Json::array();
        EXPECT_THROW(run_sweep(parse_config(bad)), Error);
    }
    {
        Json bad = j;
        bad["amplitudes"] = {1e-2};
        EXPECT_THROW(run_sweep(parse_config(bad)), Error);
    }
    {
        Json bad = j;
        bad["amplitudes"] = {1e-2, 1e-3};
        EXPECT_THROW(run_sweep(parse_config(bad)), Error);
    }
}

TEST(RunSweep, RecordsPerAmplitudeErrorsAndContinues) {
    Json j = flat_config();
    j["metric"]["perturbation"] = Json{{"amplitude", 0.0}, {"frequency_cutoff", 3}, {"seed", 1}};
    j["oracles"] = Json::object();
    j["amplitudes"] = {1e-3, 8.0}; // the huge amplitude degenerates the metric
    const auto reports = run_sweep(parse_config(j));
    ASSERT_EQ(reports.size(), 2u);
    EXPECT_TRUE(reports[0].error_kind.empty());
    EXPECT_EQ(reports[1].error_kind, "DegenerateResult");
    const std::string csv = sweep_csv(reports);
    EXPECT_NE(csv.find("amplitude,d,nontrivial_dim,gap_ratio"), std::string::npos);
}

TEST(RunSweep, FlatCollapseUnderPerturbation) {
    Json j = flat_config();
    j["metric"]["perturbation"] = Json{{"amplitude", 0.0}, {"frequency_cutoff", 3}, {"seed", 7}};
    j["oracles"] = Json::object(); // obstruction only, keep it quick
    j["amplitudes"] = {1e-3, 1e-2};
    const auto reports = run_sweep(parse_config(j));
    ASSERT_EQ(reports.size(), 2u);
    for (const auto& rep : reports) {
        ASSERT_TRUE(rep.error_kind.empty());
        EXPECT_EQ(rep.verdict_per_d.at(1), "TRIVIAL_ONLY") << *rep.amplitude;
    }
}

TEST(RunCrossvalidate, FlatKernelVectorsCertified) {
    Json j = flat_config();
    j["oracles"] = Json::object();
    const RunReport rep = run_crossvalidate(parse_config(j));
    ASSERT_EQ(rep.cells.size(), 1u);
    const CellResult& c = rep.cells[0];
    ASSERT_TRUE(c.ok);
    ASSERT_EQ(static_cast<int>(c.crossval.size()), 3);
    for (const auto& e : c.crossval) {
        EXPECT_TRUE(e.certified);
        EXPECT_LT(e.max_drift, 1e-6);
    }
}

TEST(RunCrossvalidate, EmptyKernelMeansNothingToCertify) {
    Json j = flat_config();
    j["metric"]["perturbation"] = Json{{"amplitude", 1e-2}, {"frequency_cutoff", 3}, {"seed", 7}};
    j["oracles"] = Json::object();
    const RunReport rep = run_crossvalidate(parse_config(j));
    ASSERT_EQ(rep.cells.size(), 1u);
    ASSERT_TRUE(rep.cells[0].ok);
    EXPECT_TRUE(rep.cells[0].crossval.empty()); // success, empty list
    EXPECT_EQ(rep.cells[0].verdict, "TRIVIAL_ONLY");
}

TEST(Report, CellJsonCarriesObstructionBlock) {
    const RunConfig cfg = parse_config(flat_config());
    const RunReport rep = run_analyze(cfg);
    const Json j = report_to_json(rep);
    ASSERT_TRUE(j.contains("results"));
    const Json& cell = j["results"][0];
    EXPECT_EQ(cell["obstruction"]["raw_kernel_dim"].get<int>(), 3);
    EXPECT_EQ(cell["verdict"].get<std::string>(), "DIM=3");
    EXPECT_TRUE(cell["obstruction"]["singular_values"][0].is_string());
    EXPECT_TRUE(j.contains("timings"));
    EXPECT_FALSE(report_to_json(rep, false).contains("timings"));
}
