/**
 * @file cli.hpp
 * @brief The `llport` command line: solve, compare, surface, profiles, survival.
 *
 * Exit codes: 0 success, 2 configuration/usage error, 3 infeasible model,
 * 4 internal numeric failure.
 */
#pragma once

#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "llport/config.hpp"
#include "llport/errors.hpp"
#include "llport/portfolio.hpp"
#include "llport/problems.hpp"
#include "llport/report.hpp"
#include "llport/solver.hpp"

namespace llport {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitInfeasible = 3, kExitNumeric = 4 };

namespace detail {

struct CliArgs {
    std::string config;
    std::string model;
    std::string measure = "EL";
    double step = 0.01;
    std::optional<double> k;
    std::vector<std::string> slices;
    std::string k_values;
    std::string out;
    std::optional<std::uint64_t> seed;
};

inline std::vector<double> parse_k_values(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("not a number: '" + item + "'", "k-values");
        }
    }
    if (out.empty()) throw ConfigError("at least one capital level is required", "k-values");
    return out;
}

inline RunConfig load(const CliArgs& a) {
    RunConfig cfg = load_run_config(a.config);
    if (a.seed) cfg.solver.seed = *a.seed;
    if (!a.out.empty()) cfg.output_dir = a.out;
    return cfg;
}

inline std::string allocation_row(const std::vector<double>& x) {
    std::string s;
    for (std::size_t i = 0; i < x.size(); ++i) s += (i ? ", " : "") + format_percent(x[i]);
    return s;
}

inline int cmd_solve(const CliArgs& a, std::ostream& out) {
    const RunConfig cfg = load(a);
    const auto kind = parse_problem_kind(a.model);
    if (!kind) throw ConfigError("unknown model '" + a.model + "' (expected P1, P2, P3 or P4)", "model");
    const EvaluatedProblem problem = build_problem(cfg.problem_spec(*kind));
    const SolveResult r = *kind == ProblemKind::P3_MAX_RETURN_LL ? solve_p3(problem, cfg.solver)
                                                                 : solve(problem, cfg.solver);
    const auto report = solve_report(problem, r);
    const auto path = std::filesystem::path(cfg.output_dir) / ("solve_" + std::string(to_string(*kind)) + ".json");
    write_json(path, report);

    const LoanUniverse& u = problem.spec().universe;
    out << "Model " << to_string(*kind) << " (" << to_string(r.status) << ")\n";
    out << "Loans: ";
    for (std::size_t i = 0; i < u.size(); ++i) out << (i ? ", " : "") << u[i].id;
    out << "\nAllocation (%): " << allocation_row(r.x_star) << "\n";
    out << "Capital k (%): " << format_percent(r.k_star) << "\n";
    out << "Objective: " << format_number(report["objective"].get<double>()) << "\n";
    out << "Expected loss: " << format_number(report["expected_loss"].get<double>()) << "\n";
    out << "Unexpected loss: " << format_number(report["unexpected_loss"].get<double>()) << "\n";
    out << "Feasibility residual: " << format_number(r.feasibility_residual) << "\n";
    out << "Report: " << path.string() << "\n";
    return r.status == SolveStatus::INFEASIBLE_DETECTED ? kExitInfeasible : kExitOk;
}

inline int cmd_compare(const CliArgs& a, std::ostream& out) {
    const RunConfig cfg = load(a);
    if (!cfg.params.mu && !cfg.params.theta) throw ConfigError("compare needs params.mu and/or params.theta", "params");
    const LoanUniverse u = cfg.build_universe();
    const ComparisonReport rep = compare_models(u, cfg.comparison());
    const char* measure = to_string(rep.risk_measure);
    auto print_pair = [&](const char* title, const PairComparison& p) {
        out << title << " (" << to_string(p.without_kind) << " vs " << to_string(p.with_kind) << ")\n";
        out << "  without limited liability (%): " << allocation_row(p.without_ll.x_star)
            << "  k = " << format_percent(p.without_ll.k_star) << "\n";
        out << "  with limited liability (%):    " << allocation_row(p.with_ll.x_star)
            << "  k = " << format_percent(p.with_ll.k_star) << "\n";
        out << "  " << measure << " without: " << format_number(p.risk_without) << "  with: " << format_number(p.risk_with)
            << "\n";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.2f", p.decrease_pct + 0.0);
        out << "  " << measure << " decrease: " << buf << "%\n";
    };
    if (rep.min_risk) print_pair("Min-risk pair", *rep.min_risk);
    if (rep.max_return) print_pair("Max-return pair", *rep.max_return);
    const auto path = std::filesystem::path(cfg.output_dir) / "compare.json";
    write_json(path, comparison_report(u, rep));
    out << "Report: " << path.string() << "\n";
    return kExitOk;
}

inline int cmd_surface(const CliArgs& a, std::ostream& out) {
    const RunConfig cfg = load(a);
    const auto measure = parse_risk_measure(a.measure);
    if (!measure) throw ConfigError("expected EL or UL", "measure");
    const auto table = risk_surface(cfg.build_universe(), *measure, a.step, cfg.correlation());
    const auto path = std::filesystem::path(cfg.output_dir) / ("surface_" + a.measure + ".csv");
    table.write(path);
    out << "Wrote " << table.rows.size() << " rows to " << path.string() << "\n";
    return kExitOk;
}

inline int cmd_profiles(const CliArgs& a, std::ostream& out) {
    const RunConfig cfg = load(a);
    const double k = a.k.value_or(cfg.params.k_lev);
    std::vector<ProfileSlice> slices;
    const std::vector<std::string> raw =
        a.slices.empty() ? std::vector<std::string>{"x=0", "x=0.05", "y=0", "y=0.1"} : a.slices;
    for (const auto& s : raw) slices.push_back(parse_slice(s));
    const LoanUniverse u = cfg.build_universe();
    for (const auto& s : slices) {
        const auto table = return_profile(u, cfg.params.delta, k, s, a.step);
        const auto path =
            std::filesystem::path(cfg.output_dir) / ("profiles_k" + format_number(k) + "_" + s.label() + ".csv");
        table.write(path);
        double max_gap = 0.0;
        for (const auto& row : table.rows) max_gap = std::max(max_gap, row[3]);
        out << "slice " << s.fixed << " = " << format_number(s.value) << ": " << table.rows.size()
            << " rows, max gap " << format_number(max_gap) << " -> " << path.string() << "\n";
    }
    return kExitOk;
}

inline int cmd_survival(const CliArgs& a, std::ostream& out) {
    const RunConfig cfg = load(a);
    const auto ks = parse_k_values(a.k_values);
    const LoanUniverse u = cfg.build_universe();
    const auto entries = survival_sweep(u, ks, a.step);
    for (const auto& e : entries) {
        out << "k = " << format_number(e.k) << ": " << (e.survives ? "all portfolios survive" : "FAILS");
        if (!e.survives) {
            out << "; worst portfolio (";
            for (std::size_t i = 0; i < e.worst_weights.size(); ++i)
                out << (i ? ", " : "") << u[i].id << " " << format_percent(e.worst_weights[i]) << "%";
            out << ") net " << format_number(e.worst_net);
        }
        out << "\n";
        for (std::size_t i = 0; i < u.size(); ++i)
            out << "  all in " << u[i].id << ": worst-case net " << format_number(e.single_asset_net[i])
                << (e.single_asset_net[i] < 0.0 ? " (fails)" : "") << "\n";
    }
    const auto path = std::filesystem::path(cfg.output_dir) / "survival.csv";
    survival_table(u, entries).write(path);
    out << "Wrote " << path.string() << "\n";
    return kExitOk;
}

} // namespace detail

/// Entry point shared by the `llport` binary and the integration tests.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Loan-portfolio selection with and without limited liability", "llport"};
    app.require_subcommand(1);
    detail::CliArgs args;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", args.config, "JSON run configuration")->required();
        sub->add_option("--out", args.out, "output directory (overrides output_dir)");
        sub->add_option("--seed", args.seed, "solver seed override");
    };

    auto* solve_cmd = app.add_subcommand("solve", "solve one of P1-P4");
    add_common(solve_cmd);
    solve_cmd->add_option("--model", args.model, "P1, P2, P3 or P4")->required();

    auto* compare_cmd = app.add_subcommand("compare", "risk change from adding limited liability");
    add_common(compare_cmd);

    auto* surface_cmd = app.add_subcommand("surface", "risk over the (x, y) triangle as CSV");
    add_common(surface_cmd);
    surface_cmd->add_option("--measure", args.measure, "EL or UL");
    surface_cmd->add_option("--step", args.step, "grid step in (0, 1)");

    auto* profiles_cmd = app.add_subcommand("profiles", "plain vs limited-liability returns along slices as CSV");
    add_common(profiles_cmd);
    profiles_cmd->add_option("--k", args.k, "capital level (default k_lev)");
    profiles_cmd->add_option("--slice", args.slices, "fixed weight, e.g. x=0.05 or y=0.1 (repeatable)");
    profiles_cmd->add_option("--step", args.step, "step of the free weight");

    auto* survival_cmd = app.add_subcommand("survival", "worst-case solvency across capital levels");
    add_common(survival_cmd);
    survival_cmd->add_option("--k-values", args.k_values, "comma-separated capital levels")->required();
    survival_cmd->add_option("--step", args.step, "grid step of the cross-check portfolios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n" << app.help();
        return kExitConfig;
    }

    try {
        if (*solve_cmd) return detail::cmd_solve(args, out);
        if (*compare_cmd) return detail::cmd_compare(args, out);
        if (*surface_cmd) return detail::cmd_surface(args, out);
        if (*profiles_cmd) return detail::cmd_profiles(args, out);
        if (*survival_cmd) return detail::cmd_survival(args, out);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const InfeasibleError& e) {
        err << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const CapacityError& e) {
        err << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitConfig;
}

} // namespace llport
