#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "eigensolver.hpp"
#include "energetics.hpp"
#include "io.hpp"
#include "regions.hpp"
#include "separable.hpp"
#include "virial.hpp"

namespace sclab {

using json = nlohmann::json;

struct SolverConfig {
    double tol = 1e-8;
    std::size_t max_pairs = 16;
    std::uint64_t seed = 1234;
    std::size_t max_matvecs = 200000000;
};

// Checks are opt-in per scenario; each maps to one summary verdict.
struct CheckSet {
    bool virial = false;           // localized multiplier identity per pair
    bool regions = false;          // well-count stability + localization masses
    bool kinetic_bound = false;    // K >= c_pred inside the central window
    bool potential_bound = false;  // U >= 0.9 * 2/(c0_dual+2) * lambda
    bool energy_ratios = false;    // homogeneous K/lambda, U/lambda split
    bool hbar_derivative = false;  // d lambda/d hbar = 2K/hbar along branches
    bool separable = false;        // tensor-product oracle tables
};

struct SeparableSection {
    double alpha1 = 4.0;
    double alpha2 = 2.0;
    double lambda_target = 1.0;
    std::vector<double> u_targets;
    std::vector<double> hbars;
    std::size_t n_max = 120;
    double accuracy = 1e-4;
    double gap_tol = 0.03;
    double cross_tol = 1e-3;
};

struct ScenarioConfig {
    std::string name = "scenario";
    std::string potential_type;
    std::map<std::string, double> potential_params;
    double lambda0 = 1.0;
    double eps0 = 0.2;
    double window_lo = 0.0;
    double window_hi = 0.0;
    std::vector<double> hbars;
    ResolutionPolicy policy;
    SolverConfig solver;
    CheckSet checks;
    std::map<std::string, double> check_params;
    std::string out_dir = "out";
    std::string format = "both";  // csv | json | both
    bool has_separable = false;
    SeparableSection separable;

    double param(const std::string& key, double fallback) const {
        auto it = check_params.find(key);
        return it == check_params.end() ? fallback : it->second;
    }
};

inline PotentialModel build_potential(const ScenarioConfig& c) {
    return make_potential(c.potential_type, c.potential_params);
}

namespace detail {

inline double req_number(const json& j, const std::string& key) {
    if (!j.contains(key)) throw config_error("missing field '" + key + "'");
    if (!j.at(key).is_number()) throw config_error("field '" + key + "' must be a number");
    return j.at(key).get<double>();
}

inline std::vector<double> descending_list(const json& j, const std::string& key) {
    if (!j.is_array() || j.empty())
        throw config_error("field '" + key + "' must be a non-empty array");
    std::vector<double> out;
    for (const auto& e : j) out.push_back(e.get<double>());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(out[i] > 0.0)) throw config_error("field '" + key + "' entries must be positive");
        if (i > 0 && !(out[i] < out[i - 1]))
            throw config_error("field '" + key + "' must be strictly decreasing");
    }
    return out;
}

}  // namespace detail

inline ScenarioConfig parse_scenario(const json& j) {
    ScenarioConfig c;
    c.name = j.value("scenario", std::string("scenario"));
    if (!j.contains("potential")) throw config_error("missing field 'potential'");
    const json& jp = j.at("potential");
    c.potential_type = jp.value("type", std::string());
    if (c.potential_type.empty()) throw config_error("missing field 'potential.type'");
    if (jp.contains("params"))
        for (const auto& [k, v] : jp.at("params").items()) c.potential_params[k] = v.get<double>();

    c.lambda0 = detail::req_number(j, "lambda0");
    c.eps0 = detail::req_number(j, "eps0");
    if (!(c.lambda0 > 0.0)) throw config_error("field 'lambda0' must be positive");
    if (!(c.eps0 > 0.0 && c.eps0 < c.lambda0))
        throw config_error("field 'eps0' must lie in (0, lambda0)");

    if (!j.contains("hbar")) throw config_error("missing field 'hbar'");
    c.hbars = detail::descending_list(j.at("hbar"), "hbar");

    if (j.contains("window")) {
        const json& w = j.at("window");
        if (!w.is_array() || w.size() != 2) throw config_error("field 'window' must be [lo, hi]");
        c.window_lo = w[0].get<double>();
        c.window_hi = w[1].get<double>();
        if (!(c.window_lo < c.window_hi)) throw config_error("field 'window' must have lo < hi");
    } else {
        c.window_lo = c.lambda0 - c.eps0 / 2.0;
        c.window_hi = c.lambda0 + c.eps0 / 2.0;
    }

    if (j.contains("resolution")) {
        const json& r = j.at("resolution");
        c.policy.points_per_wavelength =
            r.value("points_per_wavelength", c.policy.points_per_wavelength);
        c.policy.box_margin_factor = r.value("box_margin_factor", c.policy.box_margin_factor);
        c.policy.max_points = r.value("max_points", c.policy.max_points);
        c.policy.refinement = r.value("refinement", c.policy.refinement);
    }
    if (j.contains("solver")) {
        const json& s = j.at("solver");
        c.solver.tol = s.value("tol", c.solver.tol);
        c.solver.max_pairs = s.value("max_pairs", c.solver.max_pairs);
        c.solver.seed = s.value("seed", c.solver.seed);
        c.solver.max_matvecs = s.value("max_matvecs", c.solver.max_matvecs);
    }
    if (j.contains("checks")) {
        for (const auto& e : j.at("checks")) {
            std::string name = e.get<std::string>();
            if (name == "virial") c.checks.virial = true;
            else if (name == "regions") c.checks.regions = true;
            else if (name == "kinetic_bound") c.checks.kinetic_bound = true;
            else if (name == "potential_bound") c.checks.potential_bound = true;
            else if (name == "energy_ratios") c.checks.energy_ratios = true;
            else if (name == "hbar_derivative") c.checks.hbar_derivative = true;
            else if (name == "separable") c.checks.separable = true;
            else
                throw config_error(
                    "unknown check '" + name +
                    "' (valid: virial, regions, kinetic_bound, potential_bound, energy_ratios, "
                    "hbar_derivative, separable)");
        }
    }
    if (j.contains("check_params"))
        for (const auto& [k, v] : j.at("check_params").items())
            c.check_params[k] = v.get<double>();
    if (j.contains("output")) {
        const json& o = j.at("output");
        c.out_dir = o.value("dir", c.out_dir);
        c.format = o.value("format", c.format);
    }
    if (c.format != "csv" && c.format != "json" && c.format != "both")
        throw config_error("field 'output.format' must be csv, json or both");

    if (j.contains("separable")) {
        c.has_separable = true;
        const json& s = j.at("separable");
        c.separable.alpha1 = s.value("alpha1", c.separable.alpha1);
        c.separable.alpha2 = s.value("alpha2", c.separable.alpha2);
        c.separable.lambda_target = s.value("lambda_target", c.separable.lambda_target);
        if (s.contains("u_targets"))
            for (const auto& e : s.at("u_targets")) c.separable.u_targets.push_back(e.get<double>());
        if (s.contains("hbar")) c.separable.hbars = detail::descending_list(s.at("hbar"), "separable.hbar");
        c.separable.n_max = s.value("n_max", c.separable.n_max);
        c.separable.accuracy = s.value("accuracy", c.separable.accuracy);
        c.separable.gap_tol = s.value("gap_tol", c.separable.gap_tol);
        c.separable.cross_tol = s.value("cross_tol", c.separable.cross_tol);
        if (c.separable.hbars.empty()) c.separable.hbars = c.hbars;
        if (c.separable.u_targets.empty())
            throw config_error("field 'separable.u_targets' must be a non-empty array");
    }
    if (c.checks.separable && !c.has_separable)
        throw config_error("check 'separable' requires a 'separable' config section");
    return c;
}

inline json scenario_to_json(const ScenarioConfig& c) {
    json j;
    j["scenario"] = c.name;
    j["potential"] = {{"type", c.potential_type}, {"params", c.potential_params}};
    j["lambda0"] = c.lambda0;
    j["eps0"] = c.eps0;
    j["window"] = {c.window_lo, c.window_hi};
    j["hbar"] = c.hbars;
    j["resolution"] = {{"points_per_wavelength", c.policy.points_per_wavelength},
                       {"box_margin_factor", c.policy.box_margin_factor},
                       {"max_points", c.policy.max_points},
                       {"refinement", c.policy.refinement}};
    j["solver"] = {{"tol", c.solver.tol},
                   {"max_pairs", c.solver.max_pairs},
                   {"seed", c.solver.seed},
                   {"max_matvecs", c.solver.max_matvecs}};
    std::vector<std::string> names;
    if (c.checks.virial) names.push_back("virial");
    if (c.checks.regions) names.push_back("regions");
    if (c.checks.kinetic_bound) names.push_back("kinetic_bound");
    if (c.checks.potential_bound) names.push_back("potential_bound");
    if (c.checks.energy_ratios) names.push_back("energy_ratios");
    if (c.checks.hbar_derivative) names.push_back("hbar_derivative");
    if (c.checks.separable) names.push_back("separable");
    j["checks"] = names;
    j["check_params"] = c.check_params;
    j["output"] = {{"dir", c.out_dir}, {"format", c.format}};
    if (c.has_separable) {
        j["separable"] = {{"alpha1", c.separable.alpha1},
                          {"alpha2", c.separable.alpha2},
                          {"lambda_target", c.separable.lambda_target},
                          {"u_targets", c.separable.u_targets},
                          {"hbar", c.separable.hbars},
                          {"n_max", c.separable.n_max},
                          {"accuracy", c.separable.accuracy},
                          {"gap_tol", c.separable.gap_tol},
                          {"cross_tol", c.separable.cross_tol}};
    }
    return j;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw error("cannot open config file " + path);
    json j;
    try {
        j = json::parse(is);
    } catch (const std::exception& e) {
        throw config_error("config parse failure in " + path + ": " + e.what());
    }
    return parse_scenario(j);
}

struct ReportRow {
    std::string scenario;
    double hbar = 0.0;
    std::size_t pair_index = 0;
    double lambda = 0.0, K = 0.0, U = 0.0;
    double K_over_lambda = 0.0, U_over_lambda = 0.0;
    std::optional<double> virial_residual, classic_residual;
    std::optional<double> forbidden_mass, forbidden_potential_mass;
    std::optional<double> c0, c1, c_pred;
    std::optional<bool> kinetic_bound_pass, potential_bound_pass;
    double eigen_residual = 0.0;
    double grid_h = 0.0;
    std::uint64_t seed = 0;
};

inline constexpr const char* report_csv_header =
    "scenario,hbar,pair_index,lambda,K,U,K_over_lambda,U_over_lambda,virial_residual,"
    "classic_residual,forbidden_mass,forbidden_potential_mass,c0,c1,c_pred,"
    "kinetic_bound_pass,potential_bound_pass,eigen_residual,grid_h,seed";

struct CheckSummary {
    std::string name;
    std::string status;  // pass | fail | insufficient-data | error: ...
    std::string detail;
};

struct HbarOutcome {
    double hbar = 0.0;
    bool grid_ok = false;
    bool solved = false;
    Grid grid;
    SolveResult result;
    std::string error;
};

struct PlotSeries {
    std::string name;
    int branch = 0;
    std::vector<std::array<double, 2>> points;  // (hbar, value)
};

struct DerivativeBranch {
    int branch = -1;
    std::vector<KatoRow> rows;
};

struct ScenarioReport {
    std::string name;
    json config_echo;
    std::vector<ReportRow> rows;
    std::vector<int> row_branch;
    std::vector<CheckSummary> checks;
    std::vector<std::string> hbar_errors;
    std::vector<HbarOutcome> outcomes;
    std::vector<PlotSeries> plots;
    std::optional<BoundConstants> constants;
    std::optional<double> c0_dual;
    std::optional<StabilityReport> stability;
    std::vector<DerivativeBranch> derivative;
    std::vector<BalanceDemo> demos;
    std::optional<CrossValidation> cross;
    double cross_hbar = 0.0;

    int exit_code() const {
        for (const CheckSummary& s : checks)
            if (s.status.rfind("error", 0) == 0) return 1;
        for (const CheckSummary& s : checks)
            if (s.status != "pass") return 2;
        return 0;
    }
};

// Declared well centers reordered to match the decomposition's component
// order; every component must claim a distinct declared center.
inline std::vector<Point> order_centers(const WellDecomposition& dec,
                                        const std::vector<Point>& declared, int d) {
    if (declared.size() != dec.N())
        throw error("well count mismatch: " + std::to_string(dec.N()) + " components, " +
                    std::to_string(declared.size()) + " declared centers");
    std::vector<Point> out;
    std::vector<bool> used(declared.size(), false);
    for (const WellComponent& comp : dec.components) {
        std::size_t best = declared.size();
        double bd = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < declared.size(); ++k) {
            if (used[k]) continue;
            double d2 = sq(declared[k][0] - comp.center[0]) +
                        (d == 2 ? sq(declared[k][1] - comp.center[1]) : 0.0);
            if (d2 < bd) {
                bd = d2;
                best = k;
            }
        }
        used[best] = true;
        out.push_back(declared[best]);
    }
    return out;
}

inline std::vector<HbarOutcome> solve_sweep(const ScenarioConfig& cfg,
                                            const PotentialModel& model) {
    std::vector<HbarOutcome> out;
    for (double hbar : cfg.hbars) {
        HbarOutcome o;
        o.hbar = hbar;
        try {
            o.grid = build_grid(model, cfg.lambda0, cfg.eps0, hbar, cfg.policy);
            o.grid_ok = true;
            WindowQuery q;
            q.lambda_lo = cfg.window_lo;
            q.lambda_hi = cfg.window_hi;
            q.max_pairs = cfg.solver.max_pairs;
            q.tol = cfg.solver.tol;
            q.seed = cfg.solver.seed;
            q.max_matvecs = cfg.solver.max_matvecs;
            o.result = solve_window(o.grid, model, hbar, q);
            if (o.result.status == SolveStatus::not_converged)
                throw error("window solve did not converge: " + o.result.message);
            o.solved = true;
        } catch (const std::exception& e) {
            o.error = e.what();
        }
        out.push_back(std::move(o));
    }
    return out;
}

// Verdict aggregation over a finished sweep. Pure function of (config, model,
// outcomes), so serialized pairs reproduce reports exactly.
inline ScenarioReport assemble_report(const ScenarioConfig& cfg, const PotentialModel& model,
                                      std::vector<HbarOutcome> outcomes) {
    ScenarioReport rep;
    rep.name = cfg.name;
    rep.config_echo = scenario_to_json(cfg);
    rep.outcomes = std::move(outcomes);

    for (const HbarOutcome& o : rep.outcomes)
        if (!o.error.empty())
            rep.hbar_errors.push_back("hbar=" + format_double(o.hbar) + ": " + o.error);

    std::vector<SolveResult*> solved;
    for (HbarOutcome& o : rep.outcomes)
        if (o.solved) solved.push_back(&o.result);
    BranchTrack branches = track_branches(solved);

    const HbarOutcome* finest = nullptr;
    for (const HbarOutcome& o : rep.outcomes)
        if (o.grid_ok) finest = &o;

    auto add = [&](const std::string& name, const std::string& status,
                   const std::string& detail) {
        rep.checks.push_back({name, status, detail});
    };

    // Constants on the finest grid.
    if (cfg.checks.kinetic_bound && finest) {
        try {
            ScalarField vf = sample_potential(model, finest->grid);
            WellDecomposition dec_hi =
                well_components(allowed_mask(finest->grid, vf, cfg.lambda0 + cfg.eps0), vf);
            WellDecomposition dec_lo =
                well_components(allowed_mask(finest->grid, vf, cfg.lambda0 - cfg.eps0), vf);
            double c0 = shell_constant_c0(model, finest->grid, dec_hi, model.well_centers,
                                          cfg.lambda0, cfg.eps0);
            double c1 = interior_constant_c1(model, finest->grid, dec_lo,
                                             order_centers(dec_lo, model.well_centers, model.d));
            rep.constants = predicted_bound(cfg.lambda0, cfg.eps0, c0, c1);
        } catch (const std::exception& e) {
            add("kinetic_bound", std::string("error: ") + e.what(), "");
        }
    }
    if (cfg.checks.potential_bound && finest) {
        try {
            ScalarField vf = sample_potential(model, finest->grid);
            WellDecomposition dec0 =
                well_components(allowed_mask(finest->grid, vf, cfg.lambda0), vf);
            rep.c0_dual = check_v8x(model, finest->grid, dec0,
                                    order_centers(dec0, model.well_centers, model.d));
        } catch (const std::exception& e) {
            add("potential_bound", std::string("error: ") + e.what(), "");
        }
    }

    // Per-pair rows.
    std::vector<std::pair<double, EnergyBalance>> sweep;
    double max_virial = 0.0, max_classic = 0.0;
    bool any_virial = false;
    for (HbarOutcome& o : rep.outcomes) {
        if (!o.solved) continue;
        ScalarField vf = sample_potential(model, o.grid);
        VirialMultiplier mult;
        bool mult_ok = false;
        std::string mult_err;
        if (cfg.checks.virial && !o.result.pairs.empty()) {
            try {
                WellDecomposition dec =
                    well_components(allowed_mask(o.grid, vf, cfg.lambda0 + cfg.eps0), vf);
                mult = build_well_multiplier(dec, o.grid);
                mult_ok = true;
            } catch (const std::exception& e) {
                mult_err = e.what();
            }
        }
        for (std::size_t pj = 0; pj < o.result.pairs.size(); ++pj) {
            const EigenPair& pair = o.result.pairs[pj];
            EnergyBalance eb = energy_balance(o.grid, vf, o.hbar, pair);
            sweep.push_back({o.hbar, eb});
            ReportRow r;
            r.scenario = cfg.name;
            r.hbar = o.hbar;
            r.pair_index = pj;
            r.lambda = eb.lambda;
            r.K = eb.K;
            r.U = eb.U;
            r.K_over_lambda = eb.K_ratio;
            r.U_over_lambda = eb.U_ratio;
            if (cfg.checks.virial) {
                if (mult_ok) {
                    r.virial_residual =
                        generalized_virial_residual(o.grid, model, o.hbar, pair.psi, mult);
                    max_virial = std::max(max_virial, std::abs(*r.virial_residual));
                    any_virial = true;
                } else if (!mult_err.empty() && pj == 0) {
                    rep.hbar_errors.push_back("hbar=" + format_double(o.hbar) +
                                              ": multiplier: " + mult_err);
                }
                r.classic_residual = classic_virial_residual(o.grid, model, o.hbar, pair.psi);
                max_classic = std::max(max_classic, std::abs(*r.classic_residual));
            }
            if (cfg.checks.regions) {
                r.forbidden_mass =
                    forbidden_mass(o.grid, o.hbar, pair.psi, vf, cfg.lambda0, cfg.eps0);
                r.forbidden_potential_mass =
                    forbidden_potential_mass(o.grid, pair.psi, vf, cfg.lambda0, cfg.eps0);
            }
            if (rep.constants && rep.constants->hypothesis_ok) {
                r.c0 = rep.constants->c0;
                r.c1 = rep.constants->c1;
                r.c_pred = rep.constants->c_pred;
                if (eb.lambda > cfg.lambda0 - cfg.eps0 / 2.0 &&
                    eb.lambda < cfg.lambda0 + cfg.eps0 / 2.0)
                    r.kinetic_bound_pass = eb.K >= rep.constants->c_pred &&
                                           eb.U <= eb.lambda - rep.constants->c_pred;
            }
            if (rep.c0_dual && std::isfinite(*rep.c0_dual)) {
                double bound = 0.9 * 2.0 / (*rep.c0_dual + 2.0) * eb.lambda;
                r.potential_bound_pass = eb.U >= bound && eb.K <= eb.lambda - bound;
            }
            r.eigen_residual = pair.residual;
            r.grid_h = o.grid.h(0);
            r.seed = o.result.seed;
            rep.rows.push_back(r);
            rep.row_branch.push_back(pair.branch_id);
        }
    }

    // Summaries, one per enabled check, in a fixed order.
    if (cfg.checks.virial) {
        double tol = cfg.param("virial_tol", 1e-3);
        if (!any_virial)
            add("virial", "insufficient-data", "no localized multiplier evaluations");
        else
            add("virial", max_virial <= tol ? "pass" : "fail",
                "max residual " + format_double(max_virial) + " (tol " + format_double(tol) +
                    "), max classic " + format_double(max_classic));
    }
    if (cfg.checks.regions) {
        if (!finest) {
            add("regions", "insufficient-data", "no grid available");
        } else {
            try {
                rep.stability = stability_check(model, finest->grid, cfg.lambda0, cfg.eps0);
                add("regions", rep.stability->pass ? "pass" : "fail", rep.stability->message);
            } catch (const std::exception& e) {
                add("regions", std::string("error: ") + e.what(), "");
            }
        }
    }
    if (cfg.checks.kinetic_bound && rep.constants) {
        VerdictTable t = theorem33_verdict(sweep, *rep.constants);
        if (!t.hypothesis_ok)
            add("kinetic_bound", "fail", t.note);
        else if (t.rows.empty())
            add("kinetic_bound", "insufficient-data", "no pair inside the central window");
        else
            add("kinetic_bound", t.all_pass ? "pass" : "fail",
                "c0 " + format_double(rep.constants->c0) + ", c1 " +
                    format_double(rep.constants->c1) + ", c_pred " +
                    format_double(rep.constants->c_pred) + ", " + std::to_string(t.rows.size()) +
                    " pairs checked");
    }
    if (cfg.checks.potential_bound && rep.c0_dual) {
        VerdictTable t = prop37_verdict(sweep, *rep.c0_dual);
        if (!t.hypothesis_ok)
            add("potential_bound", "fail", t.note);
        else if (t.rows.empty())
            add("potential_bound", "insufficient-data", "no pairs");
        else
            add("potential_bound", t.all_pass ? "pass" : "fail",
                "c0_dual " + format_double(*rep.c0_dual) + ", " + std::to_string(t.rows.size()) +
                    " pairs checked");
    }
    if (cfg.checks.energy_ratios) {
        if (!model.homogeneity) {
            add("energy_ratios", "error: potential is not homogeneous", "");
        } else if (sweep.empty()) {
            add("energy_ratios", "insufficient-data", "no pairs");
        } else {
            double tol = cfg.param("ratio_tol", 1e-3);
            double hmin = std::numeric_limits<double>::infinity();
            for (const auto& [hb, eb] : sweep) hmin = std::min(hmin, hb);
            double worst = 0.0;
            for (const BalanceDeviation& d : prop32_balance_check(sweep, *model.homogeneity))
                if (d.hbar == hmin) worst = std::max(worst, std::max(d.K_dev, d.U_dev));
            add("energy_ratios", worst <= tol ? "pass" : "fail",
                "max ratio deviation " + format_double(worst) + " at hbar " +
                    format_double(hmin) + " (tol " + format_double(tol) + ")");
        }
    }
    if (cfg.checks.hbar_derivative) {
        std::map<int, std::vector<KatoSample>> by_branch;
        for (const HbarOutcome& o : rep.outcomes) {
            if (!o.solved) continue;
            for (const EigenPair& p : o.result.pairs)
                by_branch[p.branch_id].push_back(
                    {o.hbar, p.lambda, kinetic_energy(o.grid, o.hbar, p.psi)});
        }
        double tol = cfg.param("derivative_tol", 1e-3);
        double worst = -1.0;
        for (auto& [id, samples] : by_branch) {
            if (samples.size() < 3) continue;
            DerivativeBranch db;
            db.branch = id;
            db.rows = kato_derivative_check(samples);
            for (const KatoRow& kr : db.rows)
                if (!kr.one_sided) worst = std::max(worst, kr.rel_gap);
            rep.derivative.push_back(std::move(db));
        }
        if (rep.derivative.empty())
            add("hbar_derivative", "insufficient-data",
                "no branch tracked across 3 or more hbar values" +
                    (branches.ambiguous ? "; " + branches.message : std::string()));
        else
            add("hbar_derivative", worst <= tol ? "pass" : "fail",
                "max interior relative gap " + format_double(worst) + " (tol " +
                    format_double(tol) + ")");
    }
    if (cfg.checks.separable) {
        try {
            const SeparableSection& sc = cfg.separable;
            SeparableScaling s1 = make_scaling(sc.alpha1), s2 = make_scaling(sc.alpha2);
            std::size_t need1 = 0, need2 = 0;
            for (double u : sc.u_targets) {
                double mu1 = (u - s2.beta * sc.lambda_target) / (s1.beta - s2.beta);
                double mu2 = sc.lambda_target - mu1;
                if (!(mu1 > 0.0 && mu2 > 0.0)) continue;
                for (double hb : sc.hbars) {
                    auto [n1, n2] = select_quantum_numbers(mu1, mu2, hb, s1, s2);
                    need1 = std::max(need1, n1);
                    need2 = std::max(need2, n2);
                }
            }
            std::size_t nmax1 = std::max(sc.n_max, need1 + 4);
            std::size_t nmax2 = std::max(sc.n_max, need2 + 4);
            std::string cache = cfg.out_dir + "/cache";
            OneDimSpectrum sp1 = solve_1d_power(sc.alpha1, nmax1, sc.accuracy, cache);
            OneDimSpectrum sp2 = solve_1d_power(sc.alpha2, nmax2, sc.accuracy, cache);
            double fit1 = weyl_constant(sc.alpha1, sp1);
            double fit2 = weyl_constant(sc.alpha2, sp2);
            bool ok = true;
            std::string detail = "fits " + format_double(fit1) + "/" + format_double(fit2);
            for (double u : sc.u_targets) {
                BalanceDemo demo = balance_demo(sc.lambda_target, u, sc.alpha1, sc.alpha2,
                                                sc.hbars, sp1, sp2);
                const BalanceRow& last = demo.rows.back();
                bool upass = demo.gaps_shrink && last.gap_lambda <= sc.gap_tol &&
                             last.gap_U <= sc.gap_tol;
                ok = ok && upass;
                detail += "; u " + format_double(u) + " final gaps " +
                          format_double(last.gap_lambda) + "/" + format_double(last.gap_U);
                rep.demos.push_back(std::move(demo));
            }
            if (model.name == "separable_power") {
                const HbarOutcome* coarse = nullptr;
                for (const HbarOutcome& o : rep.outcomes)
                    if (o.solved && !o.result.pairs.empty()) {
                        coarse = &o;
                        break;
                    }
                if (coarse) {
                    std::vector<double> lams;
                    for (const EigenPair& p : coarse->result.pairs) lams.push_back(p.lambda);
                    rep.cross = cross_validate_2d(lams, coarse->hbar, sp1, sp2, s1, s2,
                                                  cfg.window_hi, sc.cross_tol);
                    rep.cross_hbar = coarse->hbar;
                    ok = ok && rep.cross->all_matched;
                    detail += "; 2d max gap " + format_double(rep.cross->max_gap) + " over " +
                              std::to_string(rep.cross->rows.size()) + " eigenvalues";
                }
            }
            add("separable", ok ? "pass" : "fail", detail);
        } catch (const std::exception& e) {
            add("separable", std::string("error: ") + e.what(), "");
        }
    }

    // Plot series per branch.
    auto series_value = [](const ReportRow& r, const std::string& name) -> std::optional<double> {
        if (name == "lambda") return r.lambda;
        if (name == "K") return r.K;
        if (name == "U") return r.U;
        if (name == "eigen_residual") return r.eigen_residual;
        if (name == "virial_residual") return r.virial_residual;
        if (name == "classic_residual") return r.classic_residual;
        if (name == "forbidden_mass") return r.forbidden_mass;
        if (name == "forbidden_potential_mass") return r.forbidden_potential_mass;
        return std::nullopt;
    };
    for (const char* name : {"lambda", "K", "U", "eigen_residual", "virial_residual",
                             "classic_residual", "forbidden_mass", "forbidden_potential_mass"}) {
        std::map<int, PlotSeries> per;
        for (std::size_t i = 0; i < rep.rows.size(); ++i) {
            std::optional<double> v = series_value(rep.rows[i], name);
            if (!v) continue;
            int b = rep.row_branch[i];
            PlotSeries& ps = per[b];
            ps.name = name;
            ps.branch = b;
            ps.points.push_back({rep.rows[i].hbar, *v});
        }
        for (auto& [b, ps] : per) rep.plots.push_back(std::move(ps));
    }
    return rep;
}

inline ScenarioReport run_scenario(const ScenarioConfig& cfg) {
    PotentialModel model = build_potential(cfg);
    if (cfg.checks.energy_ratios && !model.homogeneity)
        throw config_error("check 'energy_ratios' requires a homogeneous potential");
    std::vector<HbarOutcome> outcomes = solve_sweep(cfg, model);
    bool any = false;
    for (const HbarOutcome& o : outcomes) any = any || o.solved;
    if (!any && !outcomes.empty())
        throw error("all hbar entries failed; first: " + outcomes.front().error);
    return assemble_report(cfg, model, std::move(outcomes));
}

inline json row_to_json(const ReportRow& r) {
    json j;
    j["scenario"] = r.scenario;
    j["hbar"] = r.hbar;
    j["pair_index"] = r.pair_index;
    j["lambda"] = r.lambda;
    j["K"] = r.K;
    j["U"] = r.U;
    j["K_over_lambda"] = r.K_over_lambda;
    j["U_over_lambda"] = r.U_over_lambda;
    auto opt = [&j](const char* k, const std::optional<double>& v) {
        if (v) j[k] = *v;
        else j[k] = nullptr;
    };
    opt("virial_residual", r.virial_residual);
    opt("classic_residual", r.classic_residual);
    opt("forbidden_mass", r.forbidden_mass);
    opt("forbidden_potential_mass", r.forbidden_potential_mass);
    opt("c0", r.c0);
    opt("c1", r.c1);
    opt("c_pred", r.c_pred);
    if (r.kinetic_bound_pass) j["kinetic_bound_pass"] = *r.kinetic_bound_pass;
    else j["kinetic_bound_pass"] = nullptr;
    if (r.potential_bound_pass) j["potential_bound_pass"] = *r.potential_bound_pass;
    else j["potential_bound_pass"] = nullptr;
    j["eigen_residual"] = r.eigen_residual;
    j["grid_h"] = r.grid_h;
    j["seed"] = r.seed;
    return j;
}

inline ReportRow row_from_json(const json& j) {
    ReportRow r;
    r.scenario = j.at("scenario").get<std::string>();
    r.hbar = j.at("hbar").get<double>();
    r.pair_index = j.at("pair_index").get<std::size_t>();
    r.lambda = j.at("lambda").get<double>();
    r.K = j.at("K").get<double>();
    r.U = j.at("U").get<double>();
    r.K_over_lambda = j.at("K_over_lambda").get<double>();
    r.U_over_lambda = j.at("U_over_lambda").get<double>();
    auto opt = [&j](const char* k) -> std::optional<double> {
        if (j.at(k).is_null()) return std::nullopt;
        return j.at(k).get<double>();
    };
    r.virial_residual = opt("virial_residual");
    r.classic_residual = opt("classic_residual");
    r.forbidden_mass = opt("forbidden_mass");
    r.forbidden_potential_mass = opt("forbidden_potential_mass");
    r.c0 = opt("c0");
    r.c1 = opt("c1");
    r.c_pred = opt("c_pred");
    if (!j.at("kinetic_bound_pass").is_null())
        r.kinetic_bound_pass = j.at("kinetic_bound_pass").get<bool>();
    if (!j.at("potential_bound_pass").is_null())
        r.potential_bound_pass = j.at("potential_bound_pass").get<bool>();
    r.eigen_residual = j.at("eigen_residual").get<double>();
    r.grid_h = j.at("grid_h").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
}

inline std::string report_csv(const ScenarioReport& rep) {
    auto cell = [](const std::optional<double>& v) {
        return v ? format_double(*v) : std::string();
    };
    auto bcell = [](const std::optional<bool>& v) {
        return v ? std::string(*v ? "true" : "false") : std::string();
    };
    std::string out = report_csv_header;
    out += '\n';
    for (const ReportRow& r : rep.rows) {
        out += r.scenario + ',' + format_double(r.hbar) + ',' + std::to_string(r.pair_index) +
               ',' + format_double(r.lambda) + ',' + format_double(r.K) + ',' +
               format_double(r.U) + ',' + format_double(r.K_over_lambda) + ',' +
               format_double(r.U_over_lambda) + ',' + cell(r.virial_residual) + ',' +
               cell(r.classic_residual) + ',' + cell(r.forbidden_mass) + ',' +
               cell(r.forbidden_potential_mass) + ',' + cell(r.c0) + ',' + cell(r.c1) + ',' +
               cell(r.c_pred) + ',' + bcell(r.kinetic_bound_pass) + ',' +
               bcell(r.potential_bound_pass) + ',' + format_double(r.eigen_residual) + ',' +
               format_double(r.grid_h) + ',' + std::to_string(r.seed) + '\n';
    }
    return out;
}

inline json report_json(const ScenarioReport& rep) {
    json j;
    j["schema_version"] = "1";
    j["scenario"] = rep.name;
    j["config"] = rep.config_echo;
    j["rows"] = json::array();
    for (const ReportRow& r : rep.rows) j["rows"].push_back(row_to_json(r));
    j["checks"] = json::array();
    for (const CheckSummary& s : rep.checks)
        j["checks"].push_back({{"name", s.name}, {"status", s.status}, {"detail", s.detail}});
    j["errors"] = rep.hbar_errors;
    if (rep.constants) {
        j["constants"] = {{"c0", rep.constants->c0},
                          {"c1", rep.constants->c1},
                          {"c2", rep.constants->c2},
                          {"c_pred", rep.constants->c_pred},
                          {"hypothesis_ok", rep.constants->hypothesis_ok},
                          {"note", rep.constants->note}};
    } else {
        j["constants"] = nullptr;
    }
    j["c0_dual"] = rep.c0_dual ? json(*rep.c0_dual) : json(nullptr);
    if (rep.stability) {
        j["stability"] = {{"pass", rep.stability->pass},
                          {"counts", rep.stability->counts},
                          {"min_grad_shell", rep.stability->min_grad_shell},
                          {"message", rep.stability->message}};
    } else {
        j["stability"] = nullptr;
    }
    j["demos"] = json::array();
    for (const BalanceDemo& d : rep.demos) {
        json jr = json::array();
        for (const BalanceRow& r : d.rows)
            jr.push_back({{"hbar", r.hbar},
                          {"n1", r.n1},
                          {"n2", r.n2},
                          {"lambda", r.lambda},
                          {"U", r.U},
                          {"K", r.K},
                          {"gap_lambda", r.gap_lambda},
                          {"gap_U", r.gap_U}});
        j["demos"].push_back({{"lambda_target", d.lambda_target},
                              {"u_target", d.u_target},
                              {"mu1", d.mu1},
                              {"mu2", d.mu2},
                              {"gaps_shrink", d.gaps_shrink},
                              {"rows", jr}});
    }
    if (rep.cross) {
        json jr = json::array();
        for (const TensorMatch& m : rep.cross->rows)
            jr.push_back({{"lambda_2d", m.lambda_2d},
                          {"tensor", m.tensor},
                          {"n1", m.n1},
                          {"n2", m.n2},
                          {"gap", m.gap},
                          {"matched", m.matched}});
        j["cross"] = {{"hbar", rep.cross_hbar},
                      {"max_gap", rep.cross->max_gap},
                      {"all_matched", rep.cross->all_matched},
                      {"rows", jr}};
    } else {
        j["cross"] = nullptr;
    }
    return j;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw error("cannot write " + path);
    os << text;
    if (!os) throw error("write failure on " + path);
}

// Emits report.csv / report.json, two-column plot series per branch,
// the balance tables, and the raw eigenpairs with an index.
inline void write_outputs(const ScenarioReport& rep, const std::string& dir,
                          const std::string& format) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    if (format == "csv" || format == "both") write_text(dir + "/report.csv", report_csv(rep));
    if (format == "json" || format == "both")
        write_text(dir + "/report.json", report_json(rep).dump(2) + "\n");

    if (!rep.plots.empty()) fs::create_directories(dir + "/plots");
    for (const PlotSeries& ps : rep.plots) {
        std::string text = "hbar," + ps.name + "\n";
        for (const auto& p : ps.points)
            text += format_double(p[0]) + "," + format_double(p[1]) + "\n";
        write_text(dir + "/plots/" + ps.name + "_branch" + std::to_string(ps.branch) + ".csv",
                   text);
    }

    for (std::size_t k = 0; k < rep.demos.size(); ++k) {
        std::string text = "hbar,n1,n2,lambda,U,K,gap_lambda,gap_U\n";
        for (const BalanceRow& r : rep.demos[k].rows)
            text += format_double(r.hbar) + "," + std::to_string(r.n1) + "," +
                    std::to_string(r.n2) + "," + format_double(r.lambda) + "," +
                    format_double(r.U) + "," + format_double(r.K) + "," +
                    format_double(r.gap_lambda) + "," + format_double(r.gap_U) + "\n";
        write_text(dir + "/balance_" + std::to_string(k) + ".csv", text);
    }

    fs::create_directories(dir + "/pairs");
    json idx;
    idx["schema_version"] = "1";
    idx["scenario"] = rep.name;
    idx["config"] = rep.config_echo;
    idx["entries"] = json::array();
    for (std::size_t i = 0; i < rep.outcomes.size(); ++i) {
        const HbarOutcome& o = rep.outcomes[i];
        json e;
        e["hbar"] = o.hbar;
        e["error"] = o.error;
        e["status"] = o.solved ? to_string(o.result.status) : "failed";
        e["seed"] = o.result.seed;
        e["expected"] = o.result.window_count_expected;
        e["count_reliable"] = o.result.count_reliable;
        e["message"] = o.result.message;
        e["files"] = json::array();
        for (std::size_t pj = 0; o.solved && pj < o.result.pairs.size(); ++pj) {
            const EigenPair& p = o.result.pairs[pj];
            std::string rel =
                "pairs/h" + std::to_string(i) + "_p" + std::to_string(pj) + ".bin";
            StoredPair sp;
            sp.hbar = o.hbar;
            sp.lambda = p.lambda;
            sp.residual = p.residual;
            sp.seed = o.result.seed;
            sp.psi = p.psi;
            write_pair_binary(dir + "/" + rel, sp);
            e["files"].push_back(rel);
        }
        idx["entries"].push_back(e);
    }
    write_text(dir + "/pairs/index.json", idx.dump(2) + "\n");
}

// Rebuilds the full report from serialized pairs; byte-identical CSV because
// assembly is a pure function of (config, pairs).
inline ScenarioReport reemit_report(const std::string& dir) {
    std::ifstream is(dir + "/pairs/index.json");
    if (!is) throw error("cannot open " + dir + "/pairs/index.json");
    json idx = json::parse(is);
    ScenarioConfig cfg = parse_scenario(idx.at("config"));
    PotentialModel model = build_potential(cfg);
    std::vector<HbarOutcome> outcomes;
    for (const json& e : idx.at("entries")) {
        HbarOutcome o;
        o.hbar = e.at("hbar").get<double>();
        o.error = e.value("error", std::string());
        if (o.error.empty()) {
            o.solved = true;
            std::string st = e.value("status", std::string("ok"));
            o.result.status = st == "empty"         ? SolveStatus::empty
                              : st == "uncertified" ? SolveStatus::uncertified
                                                    : SolveStatus::ok;
            o.result.seed = e.at("seed").get<std::uint64_t>();
            o.result.window_count_expected = e.at("expected").get<std::size_t>();
            o.result.count_reliable = e.at("count_reliable").get<bool>();
            o.result.message = e.value("message", std::string());
            for (const json& f : e.at("files")) {
                StoredPair sp = read_pair_binary(dir + "/" + f.get<std::string>());
                EigenPair p;
                p.lambda = sp.lambda;
                p.psi = sp.psi;
                p.residual = sp.residual;
                p.hbar = sp.hbar;
                o.result.pairs.push_back(std::move(p));
            }
            if (!o.result.pairs.empty()) {
                o.grid = o.result.pairs.front().psi.grid;
                o.grid_ok = true;
            } else {
                try {
                    o.grid = build_grid(model, cfg.lambda0, cfg.eps0, o.hbar, cfg.policy);
                    o.grid_ok = true;
                } catch (const std::exception&) {
                }
            }
        } else {
            try {
                o.grid = build_grid(model, cfg.lambda0, cfg.eps0, o.hbar, cfg.policy);
                o.grid_ok = true;
            } catch (const std::exception&) {
            }
        }
        outcomes.push_back(std::move(o));
    }
    return assemble_report(cfg, model, std::move(outcomes));
}

struct ConditionsReport {
    StabilityReport stability;
    BoundConstants constants;
    double c0_dual = 0.0;
    std::size_t wells = 0;
    double grid_h = 0.0;

    int exit_code() const { return stability.pass && constants.hypothesis_ok ? 0 : 2; }
};

// Hypothesis constants and stability only; never invokes the window solver.
inline ConditionsReport check_conditions(const ScenarioConfig& cfg) {
    PotentialModel model = build_potential(cfg);
    ConditionsReport rep;
    Grid g = build_grid(model, cfg.lambda0, cfg.eps0, cfg.hbars.back(), cfg.policy);
    rep.grid_h = g.h(0);
    rep.stability = stability_check(model, g, cfg.lambda0, cfg.eps0);
    ScalarField vf = sample_potential(model, g);
    WellDecomposition dec_hi = well_components(allowed_mask(g, vf, cfg.lambda0 + cfg.eps0), vf);
    WellDecomposition dec_lo = well_components(allowed_mask(g, vf, cfg.lambda0 - cfg.eps0), vf);
    rep.wells = dec_hi.N();
    double c0 = shell_constant_c0(model, g, dec_hi, model.well_centers, cfg.lambda0, cfg.eps0);
    double c1 = interior_constant_c1(model, g, dec_lo,
                                     order_centers(dec_lo, model.well_centers, model.d));
    rep.constants = predicted_bound(cfg.lambda0, cfg.eps0, c0, c1);
    WellDecomposition dec0 = well_components(allowed_mask(g, vf, cfg.lambda0), vf);
    rep.c0_dual = check_v8x(model, g, dec0, order_centers(dec0, model.well_centers, model.d));
    return rep;
}

inline json conditions_json(const ConditionsReport& rep) {
    json j;
    j["schema_version"] = "1";
    j["stability"] = {{"pass", rep.stability.pass},
                      {"counts", rep.stability.counts},
                      {"min_grad_shell", rep.stability.min_grad_shell},
                      {"message", rep.stability.message}};
    j["constants"] = {{"c0", rep.constants.c0},
                      {"c1", rep.constants.c1},
                      {"c2", rep.constants.c2},
                      {"c_sup", rep.constants.c_sup},
                      {"c_pred", rep.constants.c_pred},
                      {"hypothesis_ok", rep.constants.hypothesis_ok},
                      {"note", rep.constants.note}};
    j["c0_dual"] = rep.c0_dual;
    j["wells"] = rep.wells;
    j["grid_h"] = rep.grid_h;
    return j;
}

}  // namespace sclab
