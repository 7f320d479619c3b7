/**
 * @file report.hpp
 * @brief Table builders behind the CLI: risk surfaces, return profiles, the
 *        leverage survival sweep, and JSON/CSV serialization.
 *
 * CSV output is UTF-8 with LF line endings, one header row, and numbers printed
 * with "%.10g" so files are byte-identical across runs.
 */
#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "llport/errors.hpp"
#include "llport/portfolio.hpp"
#include "llport/problems.hpp"
#include "llport/solver.hpp"

namespace llport {

inline std::string format_number(double v) {
    if (v == 0.0) v = 0.0; // no "-0"
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string format_percent(double fraction) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * fraction + 0.0);
    return buf;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::string str() const {
        std::string out;
        for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
        out += '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_number(row[i]);
            out += '\n';
        }
        return out;
    }

    void write(const std::filesystem::path& path) const {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        std::ofstream f(path, std::ios::binary);
        if (!f) throw ConfigError("cannot write '" + path.string() + "'", "output_dir");
        f << str();
    }
};

/// Number of grid steps of size `step` in [0, 1]; the last point is clamped to 1.
inline std::size_t grid_count(double step) {
    if (!(step > 0.0 && step < 1.0)) throw ConfigError("step must lie in (0, 1)", "step");
    return static_cast<std::size_t>(std::floor(1.0 / step + 1e-9));
}

inline void require_three_loans(const LoanUniverse& u) {
    if (u.size() != 3)
        throw ConfigError("surface and profile views need exactly three loans (safe, less risky, more risky)",
                          "universe");
}

/**
 * Risk over the triangle {x + y <= 1}: x is the weight of loan 1 (less risky),
 * y of loan 2 (more risky), and 1 - x - y goes to loan 0 (safe).
 */
inline CsvTable risk_surface(const LoanUniverse& u, RiskMeasure measure, double step,
                             const std::optional<CorrelationMatrix>& corr = std::nullopt) {
    require_three_loans(u);
    const std::size_t N = grid_count(step);
    const auto C = corr ? *corr : CorrelationMatrix::identity(3);
    CsvTable t;
    t.header = {"x", "y", measure == RiskMeasure::EL ? "expected_loss" : "unexpected_loss"};
    for (std::size_t i = 0; i <= N; ++i) {
        for (std::size_t j = 0; i + j <= N; ++j) {
            const double x = static_cast<double>(i) * step;
            const double y = static_cast<double>(j) * step;
            const std::vector<double> w{std::max(0.0, 1.0 - x - y), x, y};
            const double v = measure == RiskMeasure::EL ? expected_loss(u, w) : unexpected_loss(u, w, C);
            t.rows.push_back({x, y, v});
        }
    }
    return t;
}

/// A line through the triangle with one risky weight held fixed.
struct ProfileSlice {
    char fixed = 'x'; ///< 'x' fixes the less risky loan, 'y' the more risky one
    double value = 0.0;

    std::string label() const { return std::string(1, fixed) + format_number(value); }
};

inline ProfileSlice parse_slice(const std::string& s) {
    const auto eq = s.find('=');
    if (eq != 1 || (s[0] != 'x' && s[0] != 'y'))
        throw ConfigError("slice must look like x=0.05 or y=0.1, got '" + s + "'", "slice");
    ProfileSlice slice;
    slice.fixed = s[0];
    try {
        std::size_t used = 0;
        slice.value = std::stod(s.substr(2), &used);
        if (used != s.size() - 2) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
        throw ConfigError("slice value is not a number: '" + s + "'", "slice");
    }
    if (!(slice.value >= 0.0 && slice.value <= 1.0)) throw ConfigError("slice weight lies outside the simplex", "slice");
    return slice;
}

/// Plain and limited-liability returns along the free weight of a slice, at fixed k.
inline CsvTable return_profile(const LoanUniverse& u, double delta, double k, const ProfileSlice& slice, double step) {
    require_three_loans(u);
    if (!(k >= 0.0 && k <= 1.0)) throw ConfigError("capital level must lie in [0, 1]", "k");
    if (!(slice.value >= 0.0 && slice.value <= 1.0)) throw ConfigError("slice weight lies outside the simplex", "slice");
    const std::size_t N = grid_count(step);
    const ScenarioEvaluator ev(u);
    CsvTable t;
    t.header = {"free_weight", "return_plain", "return_ll", "gap"};
    for (std::size_t i = 0; i <= N; ++i) {
        const double free = static_cast<double>(i) * step;
        if (free > 1.0 - slice.value + 1e-12) break;
        const double x = slice.fixed == 'x' ? slice.value : free;
        const double y = slice.fixed == 'x' ? free : slice.value;
        const std::vector<double> w{std::max(0.0, 1.0 - x - y), x, y};
        const double plain = ev.plain(w, k, delta);
        const double ll = ev.limited(w, k, delta);
        t.rows.push_back({free, plain, ll, ll - plain});
    }
    return t;
}

struct SurvivalEntry {
    double k = 0.0;
    bool survives = false;
    double worst_net = 0.0;
    std::vector<double> worst_weights;
    std::vector<double> single_asset_net; ///< worst-case net value of each single-loan portfolio
};

/**
 * Worst-case net value over single-loan portfolios and, for n <= 4, every grid
 * portfolio at `step`. The worst case is concave in x, so single-loan
 * portfolios attain the minimum; the grid is a cross-check.
 */
inline std::vector<SurvivalEntry> survival_sweep(const LoanUniverse& u, const std::vector<double>& k_values,
                                                 double step = 0.01) {
    if (k_values.empty()) throw ConfigError("at least one capital level is required", "k-values");
    for (double k : k_values)
        if (!(k >= 0.0 && k <= 1.0)) throw ConfigError("capital levels must lie in [0, 1]", "k-values");
    const std::size_t n = u.size();
    const ScenarioEvaluator ev(u);
    std::vector<std::vector<double>> portfolios;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> e(n, 0.0);
        e[i] = 1.0;
        portfolios.push_back(std::move(e));
    }
    if (n <= 4) {
        const std::size_t N = grid_count(step);
        std::vector<std::size_t> counts(n, 0);
        std::function<void(std::size_t, std::size_t)> walk = [&](std::size_t i, std::size_t left) {
            if (i + 1 == n) {
                counts[i] = left;
                std::vector<double> w(n);
                for (std::size_t a = 0; a < n; ++a) w[a] = static_cast<double>(counts[a]) / static_cast<double>(N);
                portfolios.push_back(std::move(w));
                return;
            }
            for (std::size_t c = 0; c <= left; ++c) {
                counts[i] = c;
                walk(i + 1, left - c);
            }
        };
        walk(0, N);
    }

    std::vector<SurvivalEntry> out;
    for (double k : k_values) {
        SurvivalEntry e;
        e.k = k;
        e.worst_net = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < portfolios.size(); ++p) {
            const double net = ev.worst_case(portfolios[p], k);
            if (p < n) e.single_asset_net.push_back(net);
            if (net < e.worst_net) {
                e.worst_net = net;
                e.worst_weights = portfolios[p];
            }
        }
        e.survives = e.worst_net >= 0.0;
        out.push_back(std::move(e));
    }
    return out;
}

inline CsvTable survival_table(const LoanUniverse& u, const std::vector<SurvivalEntry>& entries) {
    CsvTable t;
    t.header = {"k", "survives", "worst_net"};
    for (const auto& l : u.loans()) t.header.push_back("worst_w_" + l.id);
    for (const auto& l : u.loans()) t.header.push_back("net_all_in_" + l.id);
    for (const auto& e : entries) {
        std::vector<double> row{e.k, e.survives ? 1.0 : 0.0, e.worst_net};
        row.insert(row.end(), e.worst_weights.begin(), e.worst_weights.end());
        row.insert(row.end(), e.single_asset_net.begin(), e.single_asset_net.end());
        t.rows.push_back(std::move(row));
    }
    return t;
}

// ---- JSON reports ------------------------------------------------------------------

/// Everything needed to re-evaluate a solution; keys are emitted in a fixed order.
inline nlohmann::ordered_json solve_report(const EvaluatedProblem& problem, const SolveResult& r) {
    const ProblemSpec& spec = problem.spec();
    const LoanUniverse& u = spec.universe;
    nlohmann::ordered_json j;
    j["model"] = to_string(problem.kind);
    j["status"] = to_string(r.status);
    j["risk_measure"] = to_string(spec.risk_measure);
    nlohmann::ordered_json alloc = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < u.size(); ++i) alloc.push_back({{"id", u[i].id}, {"weight", r.x_star[i]}});
    j["allocation"] = alloc;
    j["k"] = r.k_star;
    // Re-evaluated at (x*, k*) so the report is reproducible from its own fields;
    // for P3 solved through the reformulation this drops the aux round-off.
    std::vector<double> z = r.x_star;
    z.push_back(r.k_star);
    j["objective"] = z.size() == problem.num_variables() ? problem.objective(z) : r.objective;
    j["expected_loss"] = expected_loss(u, r.x_star);
    j["unexpected_loss"] = spec.default_corr ? unexpected_loss(u, r.x_star, *spec.default_corr)
                                             : unexpected_loss(u, r.x_star);
    j["return_plain"] = ScenarioEvaluator(u).plain(r.x_star, r.k_star, spec.delta);
    j["return_limited_liability"] = ScenarioEvaluator(u).limited(r.x_star, r.k_star, spec.delta);
    j["feasibility_residual"] = r.feasibility_residual;
    j["starts_used"] = r.starts_used;
    j["best_start_index"] = r.best_start_index;
    nlohmann::ordered_json params;
    params["delta"] = spec.delta;
    params["k_lev"] = spec.k_lev;
    if (spec.mu) params["mu"] = *spec.mu;
    if (spec.theta) params["theta"] = *spec.theta;
    params["gross_safe_leg"] = u.gross_safe_leg();
    j["params"] = params;
    return j;
}

inline nlohmann::ordered_json pair_report(const LoanUniverse& u, const PairComparison& p) {
    auto weights = [&](const SolveResult& r) {
        nlohmann::ordered_json a = nlohmann::ordered_json::array();
        for (std::size_t i = 0; i < u.size(); ++i) a.push_back({{"id", u[i].id}, {"weight", r.x_star[i]}});
        return a;
    };
    nlohmann::ordered_json j;
    j["without_model"] = to_string(p.without_kind);
    j["with_model"] = to_string(p.with_kind);
    j["allocation_without"] = weights(p.without_ll);
    j["allocation_with"] = weights(p.with_ll);
    j["k_without"] = p.without_ll.k_star;
    j["k_with"] = p.with_ll.k_star;
    j["risk_without"] = p.risk_without;
    j["risk_with"] = p.risk_with;
    j["decrease_pct"] = p.decrease_pct;
    j["truncated_scenarios_without"] = p.truncated_without;
    j["truncated_scenarios_with"] = p.truncated_with;
    return j;
}

inline nlohmann::ordered_json comparison_report(const LoanUniverse& u, const ComparisonReport& rep) {
    nlohmann::ordered_json j;
    j["risk_measure"] = to_string(rep.risk_measure);
    if (rep.min_risk) j["min_risk"] = pair_report(u, *rep.min_risk);
    if (rep.max_return) j["max_return"] = pair_report(u, *rep.max_return);
    return j;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + path.string() + "'", "output_dir");
    f << j.dump(2) << '\n';
}

} // namespace llport
