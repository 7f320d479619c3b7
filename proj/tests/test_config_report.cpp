#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "llport/config.hpp"
#include "llport/report.hpp"
#include "support.hpp"

using namespace llport;
using namespace llport::testing;
using nlohmann::json;

namespace {

const std::string kBundled = std::string(LLPORT_CONFIG_DIR) + "/three_loans.json";

json minimal() {
    return json::parse(R"({
        "universe": [
            {"id": "safe", "rate": 0.03, "pd": 0, "lgd": 0},
            {"id": "L_s", "rate": 0.09, "pd": 0.061, "lgd": 0.10},
            {"id": "L_r", "rate": 0.132, "pd": 0.122, "lgd": 0.09}
        ]
    })");
}

std::string field_of(const json& doc) {
    try {
        parse_run_config(doc);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<accepted>";
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

const std::vector<double>& row_at(const CsvTable& t, double x, double y) {
    for (const auto& r : t.rows)
        if (std::abs(r[0] - x) < 1e-12 && std::abs(r[1] - y) < 1e-12) return r;
    throw std::runtime_error("row not found");
}

} // namespace

// ---- configuration ---------------------------------------------------------------------

TEST(RunConfig, BundledThreeLoan) {
    const auto cfg = load_run_config(kBundled);
    ASSERT_EQ(cfg.universe.size(), 3u);
    EXPECT_EQ(cfg.params.delta, 1.04);
    EXPECT_EQ(cfg.params.k_lev, 0.04);
    EXPECT_EQ(cfg.params.mu, 0.098);
    EXPECT_EQ(cfg.params.theta, 0.012);
    EXPECT_EQ(cfg.params.risk_measure, RiskMeasure::EL);
    EXPECT_TRUE(cfg.params.gross_safe_leg);
    const auto u = cfg.build_universe();
    EXPECT_NEAR(u[1].capital_req, kCapS, 1e-15);
    EXPECT_NEAR(u[2].capital_req, kCapR, 1e-15);
    EXPECT_EQ(u[2].rate, 0.132);
}

TEST(RunConfig, DefaultsWhenParamsOmitted) {
    const auto cfg = parse_run_config(minimal());
    EXPECT_EQ(cfg.params.delta, 1.04);
    EXPECT_EQ(cfg.params.k_lev, 0.04);
    EXPECT_EQ(cfg.params.rho_asset, 0.15);
    EXPECT_EQ(cfg.params.confidence, 0.999);
    EXPECT_FALSE(cfg.params.mu);
    EXPECT_FALSE(cfg.params.gross_safe_leg);
    EXPECT_EQ(cfg.output_dir, ".");
}

TEST(RunConfig, ExplicitCapitalOverridesIrb) {
    auto doc = minimal();
    doc["universe"][1]["capital_req"] = 0.05;
    EXPECT_EQ(parse_run_config(doc).build_universe()[1].capital_req, 0.05);
}

TEST(RunConfig, IrbParametersFeedCapital) {
    auto doc = minimal();
    doc["params"] = {{"rho_asset", 0.24}, {"confidence", 0.99}};
    const auto u = parse_run_config(doc).build_universe();
    EXPECT_NEAR(u[1].capital_req, irb_capital(kPdS, kLgdS, IrbParams{0.24, 0.99}), 1e-15);
}

TEST(RunConfig, UnknownKeysRejectedAtEveryLevel) {
    auto a = minimal();
    a["extra"] = 1;
    EXPECT_EQ(field_of(a), "extra");
    auto b = minimal();
    b["universe"][2]["grade"] = "B";
    EXPECT_EQ(field_of(b), "universe[2].grade");
    auto c = minimal();
    c["params"] = {{"deltaa", 1.1}};
    EXPECT_EQ(field_of(c), "params.deltaa");
    auto d = minimal();
    d["solver"] = {{"iterations", 3}};
    EXPECT_EQ(field_of(d), "solver.iterations");
}

TEST(RunConfig, FieldLevelErrors) {
    EXPECT_EQ(field_of(json::object()), "<root>.universe");
    EXPECT_EQ(field_of(json::array()), "<root>");
    auto a = minimal();
    a["universe"][1]["pd"] = "high";
    EXPECT_EQ(field_of(a), "universe[1].pd");
    auto b = minimal();
    b["universe"][1]["pd"] = 1.0;
    EXPECT_EQ(field_of(b), "universe[1]");
    auto c = minimal();
    c["params"] = {{"delta", 0.9}};
    EXPECT_EQ(field_of(c), "params.delta");
    auto d = minimal();
    d["params"] = {{"risk_measure", "VaR"}};
    EXPECT_EQ(field_of(d), "params.risk_measure");
    auto e = minimal();
    e["solver"] = {{"n_starts", 0}};
    EXPECT_EQ(field_of(e), "solver.n_starts");
    auto f = minimal();
    f["universe"][2]["id"] = "L_s";
    EXPECT_EQ(field_of(f), "universe");
    auto g = minimal();
    g["params"] = {{"default_corr", {{1, 0}, {0, 1}}}};
    EXPECT_EQ(field_of(g), "<accepted>"); // size is checked when a model is built
    auto h = minimal();
    h["params"] = {{"default_corr", {{1, 2, 0}, {2, 1, 0}, {0, 0, 1}}}};
    EXPECT_EQ(field_of(h), "params.default_corr");
}

TEST(RunConfig, SolverOverrides) {
    auto doc = minimal();
    doc["solver"] = {{"n_starts", 8}, {"seed", 7}, {"threads", 2}, {"tol_feas", 1e-9}};
    const auto cfg = parse_run_config(doc);
    EXPECT_EQ(cfg.solver.n_starts, 8);
    EXPECT_EQ(cfg.solver.seed, 7u);
    EXPECT_EQ(cfg.solver.threads, 2u);
    EXPECT_EQ(cfg.solver.tol_feas, 1e-9);
    EXPECT_EQ(parse_run_config(json::parse(minimal().dump())).solver.seed, 20240607u);

    auto neg = minimal();
    neg["solver"] = {{"seed", -1}};
    EXPECT_EQ(field_of(neg), "solver.seed");
    neg["solver"] = {{"threads", -2}};
    EXPECT_EQ(field_of(neg), "solver.threads");
}

TEST(RunConfig, ProblemSpecCarriesOnlyMatchingBound) {
    const auto cfg = load_run_config(kBundled);
    const auto p2 = cfg.problem_spec(ProblemKind::P2_MIN_RISK);
    EXPECT_EQ(p2.mu, 0.098);
    EXPECT_FALSE(p2.theta);
    const auto p3 = cfg.problem_spec(ProblemKind::P3_MAX_RETURN_LL);
    EXPECT_EQ(p3.theta, 0.012);
    EXPECT_FALSE(p3.mu);
}

TEST(RunConfig, FileErrors) {
    EXPECT_THROW(load_run_config("/nonexistent/config.json"), ConfigError);
    const auto bad = std::filesystem::temp_directory_path() / "llport_bad.json";
    std::ofstream(bad) << "{ \"universe\": [";
    EXPECT_THROW(load_run_config(bad.string()), ConfigError);
}

// ---- formatting ------------------------------------------------------------------------

TEST(Formatting, TenSignificantDigits) {
    EXPECT_EQ(format_number(0.0061), "0.0061");
    EXPECT_EQ(format_number(1.0 / 3.0), "0.3333333333");
    EXPECT_EQ(format_number(-0.0), "0");
    EXPECT_EQ(format_percent(0.05722), "5.72");
    EXPECT_EQ(format_percent(-0.0), "0.00");
}

TEST(Formatting, CsvLayout) {
    CsvTable t{{"a", "b"}, {{1.0, 0.5}, {2.0, 1e-20}}};
    EXPECT_EQ(t.str(), "a,b\n1,0.5\n2,1e-20\n");
}

// ---- surface -----------------------------------------------------------------------------

TEST(Surface, CornersOfTheTriangle) {
    const auto u = three_loans(true);
    const auto el = risk_surface(u, RiskMeasure::EL, 0.01);
    const auto ul = risk_surface(u, RiskMeasure::UL, 0.01);
    EXPECT_EQ(el.header, (std::vector<std::string>{"x", "y", "expected_loss"}));
    EXPECT_EQ(el.rows.size(), 101u * 102u / 2u);
    EXPECT_NEAR(row_at(el, 1, 0)[2], 0.0061, 1e-15);
    EXPECT_NEAR(row_at(el, 0, 1)[2], 0.01098, 1e-15);
    EXPECT_NEAR(row_at(ul, 0, 1)[2], 0.0295, 5e-5);
    EXPECT_NEAR(row_at(ul, 1, 0)[2], 0.0239, 5e-5);
    EXPECT_EQ(row_at(el, 0, 0)[2], 0.0);
    EXPECT_EQ(row_at(ul, 0, 0)[2], 0.0);
}

TEST(Surface, ByteDeterministic) {
    const auto u = three_loans(true);
    EXPECT_EQ(risk_surface(u, RiskMeasure::UL, 0.01).str(), risk_surface(u, RiskMeasure::UL, 0.01).str());
}

TEST(Surface, RejectsBadStep) {
    const auto u = three_loans();
    EXPECT_THROW(risk_surface(u, RiskMeasure::EL, 0.0), ConfigError);
    EXPECT_THROW(risk_surface(u, RiskMeasure::EL, 1.0), ConfigError);
    EXPECT_THROW(risk_surface(safe_only(), RiskMeasure::EL, 0.1), ConfigError);
}

// ---- profiles ------------------------------------------------------------------------------

TEST(Profiles, SliceParsing) {
    EXPECT_EQ(parse_slice("x=0.05").fixed, 'x');
    EXPECT_EQ(parse_slice("y=0.1").value, 0.1);
    EXPECT_EQ(parse_slice("x=0.05").label(), "x0.05");
    for (const char* bad : {"z=0.1", "x0.1", "x=", "x=abc", "x=1.5", "y=-0.1", "x=0.1q"})
        EXPECT_THROW(parse_slice(bad), ConfigError) << bad;
}

TEST(Profiles, NoGapAtTenPercentCapital) {
    const auto u = three_loans(true);
    for (const char* s : {"x=0", "x=0.05", "y=0", "y=0.1"}) {
        const auto t = return_profile(u, kDelta, 0.10, parse_slice(s), 0.01);
        for (const auto& r : t.rows) EXPECT_NEAR(r[3], 0.0, 1e-12) << s << " at " << r[0];
    }
}

TEST(Profiles, GapOnFullRiskyHoldingAtFourPercent) {
    const auto u = three_loans(true);
    const auto t = return_profile(u, kDelta, 0.04, parse_slice("x=0"), 0.01);
    EXPECT_EQ(t.header, (std::vector<std::string>{"free_weight", "return_plain", "return_ll", "gap"}));
    ASSERT_EQ(t.rows.size(), 101u);
    EXPECT_NEAR(t.rows.back()[0], 1.0, 1e-12);
    EXPECT_NEAR(t.rows.back()[3], kPdR * 0.05, 1e-12);
    EXPECT_EQ(t.rows.front()[3], 0.0); // all safe
    for (const auto& r : t.rows) EXPECT_GE(r[3], -1e-15);
}

TEST(Profiles, FreeWeightStopsAtSimplexEdge) {
    const auto t = return_profile(three_loans(true), kDelta, 0.04, parse_slice("y=0.1"), 0.01);
    EXPECT_EQ(t.rows.size(), 91u);
    EXPECT_NEAR(t.rows.back()[0], 0.9, 1e-12);
}

// ---- survival ------------------------------------------------------------------------------

TEST(Survival, ThreeLoanLeverageLevels) {
    const auto u = three_loans(true);
    const auto entries = survival_sweep(u, {0.04, 0.07, 0.10});
    ASSERT_EQ(entries.size(), 3u);
    EXPECT_FALSE(entries[0].survives);
    EXPECT_FALSE(entries[1].survives);
    EXPECT_TRUE(entries[2].survives);
    EXPECT_NEAR(entries[0].single_asset_net[2], -0.05, 1e-12);
    EXPECT_NEAR(entries[1].single_asset_net[2], -0.02, 1e-12);
    EXPECT_NEAR(entries[2].single_asset_net[2], 0.01, 1e-12);
    EXPECT_NEAR(entries[2].single_asset_net[1], 0.0, 1e-12);
    // Worst case is concave in the weights, so a single-loan portfolio attains it.
    for (const auto& e : entries) {
        double lowest = 1e9;
        for (double v : e.single_asset_net) lowest = std::min(lowest, v);
        EXPECT_NEAR(e.worst_net, lowest, 1e-12);
    }
}

TEST(Survival, CsvAndErrors) {
    const auto u = three_loans(true);
    const auto t = survival_table(u, survival_sweep(u, {0.1}));
    EXPECT_EQ(t.header.size(), 3u + 3u + 3u);
    EXPECT_EQ(t.rows[0][1], 1.0);
    EXPECT_THROW(survival_sweep(u, {}), ConfigError);
    EXPECT_THROW(survival_sweep(u, {1.5}), ConfigError);
}

// ---- JSON --------------------------------------------------------------------------------

TEST(SolveReport, RoundTripsThroughPortfolioOperations) {
    const auto cfg = load_run_config(kBundled);
    for (auto kind : {ProblemKind::P1_MAX_RETURN, ProblemKind::P2_MIN_RISK, ProblemKind::P3_MAX_RETURN_LL,
                      ProblemKind::P4_MIN_RISK_LL}) {
        const auto p = build_problem(cfg.problem_spec(kind));
        const auto r = kind == ProblemKind::P3_MAX_RETURN_LL ? solve_p3(p, cfg.solver) : solve(p, cfg.solver);
        const auto dir = std::filesystem::temp_directory_path() / "llport_report_test";
        const auto path = dir / (std::string(to_string(kind)) + ".json");
        write_json(path, solve_report(p, r));
        const auto j = json::parse(slurp(path));

        const auto u = cfg.build_universe();
        Allocation a;
        for (const auto& e : j["allocation"]) a.weights.push_back(e["weight"].get<double>());
        a.capital = j["k"].get<double>();
        EXPECT_EQ(j["model"], to_string(kind));
        EXPECT_NEAR(j["expected_loss"].get<double>(), expected_loss(u, a), 1e-9);
        EXPECT_NEAR(j["unexpected_loss"].get<double>(), unexpected_loss(u, a), 1e-9);
        EXPECT_NEAR(j["return_plain"].get<double>(), expected_return_plain(u, a, cfg.params.delta), 1e-9);
        EXPECT_NEAR(j["return_limited_liability"].get<double>(),
                    expected_return_limited_liability(u, a, cfg.params.delta), 1e-9);
        const double expected_objective = kind == ProblemKind::P2_MIN_RISK || kind == ProblemKind::P4_MIN_RISK_LL
                                              ? -expected_loss(u, a)
                                          : kind == ProblemKind::P1_MAX_RETURN
                                              ? expected_return_plain(u, a, cfg.params.delta)
                                              : expected_return_limited_liability(u, a, cfg.params.delta);
        EXPECT_NEAR(j["objective"].get<double>(), expected_objective, 1e-9) << to_string(kind);
    }
}

TEST(SolveReport, StableKeyOrder) {
    const auto cfg = load_run_config(kBundled);
    const auto p = build_problem(cfg.problem_spec(ProblemKind::P2_MIN_RISK));
    const auto j = solve_report(p, solve(p, cfg.solver));
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    EXPECT_EQ(keys, (std::vector<std::string>{"model", "status", "risk_measure", "allocation", "k", "objective",
                                              "expected_loss", "unexpected_loss", "return_plain",
                                              "return_limited_liability", "feasibility_residual", "starts_used",
                                              "best_start_index", "params"}));
}
