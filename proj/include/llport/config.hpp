/**
 * @file config.hpp
 * @brief Run configuration: one JSON document describing the loans, the model
 *        parameters and optional solver overrides.
 *
 * {
 *   "universe": [ {"id": "safe", "rate": 0.03, "pd": 0, "lgd": 0}, ... ],
 *   "params":   { "delta": 1.04, "k_lev": 0.04, "rho_asset": 0.15, "confidence": 0.999,
 *                 "mu": 0.098, "theta": 0.012, "risk_measure": "EL",
 *                 "gross_safe_leg": false, "default_corr": [[1, 0], [0, 1]] },
 *   "solver":   { "n_starts": 32, "seed": 7, ... },
 *   "output_dir": "out"
 * }
 *
 * Unknown keys are rejected at every level. A loan without "capital_req" gets
 * the IRB capital of its (pd, lgd).
 */
#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "llport/errors.hpp"
#include "llport/numerics.hpp"
#include "llport/portfolio.hpp"
#include "llport/problems.hpp"
#include "llport/solver.hpp"

namespace llport {

struct LoanRecord {
    std::string id;
    double rate = 0.0;
    double pd = 0.0;
    double lgd = 0.0;
    std::optional<double> capital_req;
};

struct RunParams {
    double delta = 1.04;
    double k_lev = 0.04;
    double rho_asset = 0.15;
    double confidence = 0.999;
    std::optional<double> mu;
    std::optional<double> theta;
    RiskMeasure risk_measure = RiskMeasure::EL;
    bool gross_safe_leg = false;
    std::optional<std::vector<std::vector<double>>> default_corr;
};

struct RunConfig {
    std::vector<LoanRecord> universe;
    RunParams params;
    SolverOptions solver;
    std::string output_dir = ".";

    IrbParams irb() const { return {params.rho_asset, params.confidence}; }

    LoanUniverse build_universe() const {
        std::vector<Loan> loans;
        for (std::size_t i = 0; i < universe.size(); ++i) {
            const auto& r = universe[i];
            const std::string field = "universe[" + std::to_string(i) + "]";
            try {
                Loan l{r.id, r.rate, r.pd, r.lgd, 0.0};
                l.capital_req = r.capital_req ? *r.capital_req : irb_capital(r.pd, r.lgd, irb());
                loans.push_back(std::move(l));
            } catch (const DomainError& e) {
                throw ConfigError(e.what(), field);
            }
        }
        try {
            return LoanUniverse(std::move(loans), params.gross_safe_leg);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what(), "universe");
        } catch (const std::domain_error& e) {
            throw ConfigError(e.what(), "universe");
        }
    }

    std::optional<CorrelationMatrix> correlation() const {
        if (!params.default_corr) return std::nullopt;
        try {
            return CorrelationMatrix(*params.default_corr);
        } catch (const std::exception& e) {
            throw ConfigError(e.what(), "params.default_corr");
        }
    }

    ComparisonParams comparison() const {
        ComparisonParams c;
        c.delta = params.delta;
        c.k_lev = params.k_lev;
        c.risk_measure = params.risk_measure;
        c.mu = params.mu;
        c.theta = params.theta;
        c.irb = irb();
        c.default_corr = correlation();
        c.solver = solver;
        return c;
    }

    /// Spec for one model; only the bound matching the model kind is carried over.
    ProblemSpec problem_spec(ProblemKind kind) const { return make_spec(kind, build_universe(), comparison()); }
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key '" + it.key() + "'", where.empty() ? it.key() : where + "." + it.key());
}

inline const json& require(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key)) throw ConfigError("missing required key", where + "." + key);
    return obj.at(key);
}

inline double as_number(const json& v, const std::string& field) {
    if (!v.is_number()) throw ConfigError("expected a number", field);
    return v.get<double>();
}

inline std::optional<double> optional_number(const json& obj, const std::string& key, const std::string& where) {
    if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
    return as_number(obj.at(key), where + "." + key);
}

inline int as_int(const json& v, const std::string& field) {
    if (!v.is_number_integer()) throw ConfigError("expected an integer", field);
    return v.get<int>();
}

} // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& doc) {
    using detail::json;
    if (!doc.is_object()) throw ConfigError("configuration must be a JSON object", "<root>");
    detail::reject_unknown(doc, {"universe", "params", "solver", "output_dir"}, "");

    RunConfig cfg;
    const json& uni = detail::require(doc, "universe", "<root>");
    if (!uni.is_array() || uni.empty()) throw ConfigError("expected a non-empty array of loans", "universe");
    for (std::size_t i = 0; i < uni.size(); ++i) {
        const std::string where = "universe[" + std::to_string(i) + "]";
        const json& l = uni[i];
        if (!l.is_object()) throw ConfigError("expected an object", where);
        detail::reject_unknown(l, {"id", "rate", "pd", "lgd", "capital_req"}, where);
        LoanRecord r;
        const json& id = detail::require(l, "id", where);
        if (!id.is_string() || id.get<std::string>().empty()) throw ConfigError("expected a non-empty string", where + ".id");
        r.id = id.get<std::string>();
        r.rate = detail::as_number(detail::require(l, "rate", where), where + ".rate");
        r.pd = detail::as_number(detail::require(l, "pd", where), where + ".pd");
        r.lgd = detail::as_number(detail::require(l, "lgd", where), where + ".lgd");
        r.capital_req = detail::optional_number(l, "capital_req", where);
        cfg.universe.push_back(std::move(r));
    }

    if (doc.contains("params")) {
        const json& p = doc.at("params");
        if (!p.is_object()) throw ConfigError("expected an object", "params");
        detail::reject_unknown(p,
                               {"delta", "k_lev", "rho_asset", "confidence", "mu", "theta", "risk_measure",
                                "gross_safe_leg", "default_corr"},
                               "params");
        auto& P = cfg.params;
        if (auto v = detail::optional_number(p, "delta", "params")) P.delta = *v;
        if (auto v = detail::optional_number(p, "k_lev", "params")) P.k_lev = *v;
        if (auto v = detail::optional_number(p, "rho_asset", "params")) P.rho_asset = *v;
        if (auto v = detail::optional_number(p, "confidence", "params")) P.confidence = *v;
        P.mu = detail::optional_number(p, "mu", "params");
        P.theta = detail::optional_number(p, "theta", "params");
        if (p.contains("risk_measure")) {
            const json& rm = p.at("risk_measure");
            auto parsed = rm.is_string() ? parse_risk_measure(rm.get<std::string>()) : std::nullopt;
            if (!parsed) throw ConfigError("expected \"EL\" or \"UL\"", "params.risk_measure");
            P.risk_measure = *parsed;
        }
        if (p.contains("gross_safe_leg")) {
            if (!p.at("gross_safe_leg").is_boolean()) throw ConfigError("expected a boolean", "params.gross_safe_leg");
            P.gross_safe_leg = p.at("gross_safe_leg").get<bool>();
        }
        if (p.contains("default_corr")) {
            const json& m = p.at("default_corr");
            if (!m.is_array()) throw ConfigError("expected a matrix (array of rows)", "params.default_corr");
            std::vector<std::vector<double>> rows;
            for (const auto& row : m) {
                if (!row.is_array()) throw ConfigError("expected a matrix (array of rows)", "params.default_corr");
                std::vector<double> r;
                for (const auto& v : row) r.push_back(detail::as_number(v, "params.default_corr"));
                rows.push_back(std::move(r));
            }
            P.default_corr = std::move(rows);
        }
        if (!(P.delta > 1.0)) throw ConfigError("must exceed 1", "params.delta");
        if (!(P.k_lev > 0.0 && P.k_lev < 1.0)) throw ConfigError("must lie in (0, 1)", "params.k_lev");
        if (!(P.rho_asset >= 0.0 && P.rho_asset < 1.0)) throw ConfigError("must lie in [0, 1)", "params.rho_asset");
        if (!(P.confidence > 0.0 && P.confidence < 1.0)) throw ConfigError("must lie in (0, 1)", "params.confidence");
        if (P.theta && !(*P.theta >= 0.0)) throw ConfigError("must be nonnegative", "params.theta");
    }

    if (doc.contains("solver")) {
        const json& s = doc.at("solver");
        if (!s.is_object()) throw ConfigError("expected an object", "solver");
        detail::reject_unknown(s,
                               {"tol_feas", "tol_opt", "max_outer", "max_inner", "penalty_init", "penalty_growth",
                                "n_starts", "seed", "threads"},
                               "solver");
        auto& o = cfg.solver;
        if (auto v = detail::optional_number(s, "tol_feas", "solver")) o.tol_feas = *v;
        if (auto v = detail::optional_number(s, "tol_opt", "solver")) o.tol_opt = *v;
        if (s.contains("max_outer")) o.max_outer = detail::as_int(s.at("max_outer"), "solver.max_outer");
        if (s.contains("max_inner")) o.max_inner = detail::as_int(s.at("max_inner"), "solver.max_inner");
        if (auto v = detail::optional_number(s, "penalty_init", "solver")) o.penalty_init = *v;
        if (auto v = detail::optional_number(s, "penalty_growth", "solver")) o.penalty_growth = *v;
        if (s.contains("n_starts")) o.n_starts = detail::as_int(s.at("n_starts"), "solver.n_starts");
        if (s.contains("seed")) {
            const json& v = s.at("seed");
            if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0))
                throw ConfigError("expected a nonnegative integer", "solver.seed");
            o.seed = s.at("seed").get<std::uint64_t>();
        }
        if (s.contains("threads")) {
            const int t = detail::as_int(s.at("threads"), "solver.threads");
            if (t < 0) throw ConfigError("must be nonnegative", "solver.threads");
            o.threads = static_cast<unsigned>(t);
        }
        o.validate();
    }

    if (doc.contains("output_dir")) {
        if (!doc.at("output_dir").is_string()) throw ConfigError("expected a string", "output_dir");
        cfg.output_dir = doc.at("output_dir").get<std::string>();
    }

    cfg.build_universe(); // surfaces loan-level errors at load time
    cfg.correlation();
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open configuration file '" + path + "'", "config");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what(), "config");
    }
    return parse_run_config(doc);
}

} // namespace llport
