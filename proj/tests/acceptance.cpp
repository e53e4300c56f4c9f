// End-to-end acceptance battery. Runs every shipped scenario once, then
// evaluates ten independent pass/fail gates against the collected reports.
// Exit status is the number of failed gates.

#include <cstdio>
#include <functional>
#include <map>
#include <sclab/harness.hpp>
#include <string>

using namespace sclab;

namespace {

int failures = 0;

void verdict(int num, const std::string& what, bool pass, const std::string& detail) {
    std::printf("%s %2d. %s: %s\n", pass ? "PASS" : "FAIL", num, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

void criterion(int num, const std::string& what,
               const std::function<std::pair<bool, std::string>()>& body) {
    try {
        auto [ok, detail] = body();
        verdict(num, what, ok, detail);
    } catch (const std::exception& e) {
        verdict(num, what, false, std::string("exception: ") + e.what());
    }
}

std::string status_of(const ScenarioReport& rep, const std::string& check) {
    for (const CheckSummary& s : rep.checks)
        if (s.name == check) return s.status;
    return "missing";
}

double min_hbar(const ScenarioReport& rep) {
    double h = std::numeric_limits<double>::infinity();
    for (const ReportRow& r : rep.rows) h = std::min(h, r.hbar);
    return h;
}

double ratio_deviation(const ScenarioReport& rep, double alpha) {
    double kt = alpha / (alpha + 2.0), ut = 2.0 / (alpha + 2.0);
    double hmin = min_hbar(rep), dev = 0.0;
    for (const ReportRow& r : rep.rows) {
        if (r.hbar != hmin) continue;
        dev = std::max(dev, std::abs(r.K_over_lambda - kt));
        dev = std::max(dev, std::abs(r.U_over_lambda - ut));
    }
    return dev;
}

const HbarOutcome* finest_solved(const ScenarioReport& rep) {
    const HbarOutcome* out = nullptr;
    for (const HbarOutcome& o : rep.outcomes)
        if (o.solved && !o.result.pairs.empty()) out = &o;
    return out;
}

ScenarioReport timed_run(const ScenarioConfig& cfg) {
    std::printf("running scenario '%s'...\n", cfg.name.c_str());
    std::fflush(stdout);
    return run_scenario(cfg);
}

}  // namespace

int main() {
    const std::string root = SCLAB_ROOT;
    ScenarioConfig harmonic_cfg, quartic_cfg, dw_cfg, fine_cfg, kato_cfg, sep_cfg;
    ScenarioReport harmonic, quartic, dw, kato, sep;
    try {
        harmonic_cfg = load_scenario(root + "/scenarios/harmonic.json");
        quartic_cfg = load_scenario(root + "/scenarios/quartic.json");
        dw_cfg = load_scenario(root + "/scenarios/double_well.json");
        fine_cfg = load_scenario(root + "/scenarios/harmonic_fine.json");
        kato_cfg = load_scenario(root + "/scenarios/harmonic_kato.json");
        sep_cfg = load_scenario(root + "/scenarios/separable.json");
        harmonic = timed_run(harmonic_cfg);
        quartic = timed_run(quartic_cfg);
        dw = timed_run(dw_cfg);
        kato = timed_run(kato_cfg);
        sep = timed_run(sep_cfg);
    } catch (const std::exception& e) {
        std::printf("FAIL setup: %s\n", e.what());
        return 1;
    }

    criterion(1, "homogeneous potentials reach the predicted energy split", [&] {
        double dh = ratio_deviation(harmonic, 2.0);
        double dq = ratio_deviation(quartic, 4.0);
        bool ok = dh <= 1e-3 && dq <= 2e-3 && status_of(harmonic, "energy_ratios") == "pass" &&
                  status_of(quartic, "energy_ratios") == "pass";
        return std::make_pair(ok, "harmonic dev " + format_double(dh) +
                                      " (tol 0.001), quartic dev " + format_double(dq) +
                                      " (tol 0.002)");
    });

    criterion(2, "window eigenvalue converges at second order under refinement", [&] {
        PotentialModel model = build_potential(fine_cfg);
        double hbar = fine_cfg.hbars.front();
        double err[2] = {0.0, 0.0};
        for (int r : {1, 2}) {
            ResolutionPolicy pol = fine_cfg.policy;
            pol.refinement = r;
            Grid g = build_grid(model, fine_cfg.lambda0, fine_cfg.eps0, hbar, pol);
            WindowQuery q;
            q.lambda_lo = 0.8;
            q.lambda_hi = 1.2;
            q.tol = fine_cfg.solver.tol;
            q.seed = fine_cfg.solver.seed;
            SolveResult res = solve_window(g, model, hbar, q);
            if (res.status != SolveStatus::ok || res.pairs.empty())
                throw error("refinement solve failed: " + res.message);
            double best = std::numeric_limits<double>::infinity();
            for (const EigenPair& p : res.pairs)
                best = std::min(best, std::abs(p.lambda - 1.0));
            err[r - 1] = best;
        }
        double factor = err[0] / err[1];
        bool ok = err[1] <= 1e-5 && factor >= 3.0 && factor <= 5.0;
        return std::make_pair(ok, "errors " + format_double(err[0]) + " -> " +
                                      format_double(err[1]) + ", factor " +
                                      format_double(factor) + " (want [3,5], fine <= 1e-05)");
    });

    criterion(3, "localized identity residual decays at second order", [&] {
        PotentialModel model = build_potential(harmonic_cfg);
        const double hbar = 0.1;
        Grid grids[2];
        SolveResult res[2];
        for (int k : {0, 1}) {
            ResolutionPolicy pol = harmonic_cfg.policy;
            pol.points_per_wavelength = k == 0 ? 128.0 : 256.0;
            grids[k] = build_grid(model, harmonic_cfg.lambda0, harmonic_cfg.eps0, hbar, pol);
            WindowQuery q;
            q.lambda_lo = harmonic_cfg.window_lo;
            q.lambda_hi = harmonic_cfg.window_hi;
            q.tol = harmonic_cfg.solver.tol;
            q.seed = harmonic_cfg.solver.seed;
            res[k] = solve_window(grids[k], model, hbar, q);
            if (res[k].status != SolveStatus::ok) throw error("solve failed: " + res[k].message);
        }
        if (res[0].pairs.size() != res[1].pairs.size() || res[0].pairs.size() < 3)
            throw error("pair count mismatch across refinements");

        // one multiplier, frozen from the coarse grid decomposition
        ScalarField vc = sample_potential(model, grids[0]);
        WellDecomposition dec = well_components(
            allowed_mask(grids[0], vc, harmonic_cfg.lambda0 + harmonic_cfg.eps0), vc);
        VirialMultiplier mult = build_well_multiplier(dec, grids[0]);

        double fine_max = 0.0, ratio_lo = 1e300, ratio_hi = 0.0;
        for (std::size_t i = 0; i < res[0].pairs.size(); ++i) {
            double rc = std::abs(
                generalized_virial_residual(grids[0], model, hbar, res[0].pairs[i].psi, mult));
            double rf = std::abs(
                generalized_virial_residual(grids[1], model, hbar, res[1].pairs[i].psi, mult));
            fine_max = std::max(fine_max, rf);
            ratio_lo = std::min(ratio_lo, rc / rf);
            ratio_hi = std::max(ratio_hi, rc / rf);
        }
        VirialMultiplier quad = make_quadratic_multiplier(model.d);
        double gen =
            generalized_virial_residual(grids[0], model, hbar, res[0].pairs[0].psi, quad);
        double cls = classic_virial_residual(grids[0], model, hbar, res[0].pairs[0].psi);
        double quad_gap = std::abs(gen - 4.0 * cls);

        bool ok = fine_max <= 1e-3 && ratio_lo >= 3.0 && ratio_hi <= 5.0 &&
                  quad_gap <= 1e-12 * (1.0 + std::abs(gen));
        return std::make_pair(ok, "fine residual " + format_double(fine_max) +
                                      ", coarse/fine in [" + format_double(ratio_lo) + ", " +
                                      format_double(ratio_hi) + "], quadratic vs 4x classic gap " +
                                      format_double(quad_gap));
    });

    criterion(4, "classically forbidden mass decays with hbar", [&] {
        std::vector<double> masses;
        for (double hb : harmonic_cfg.hbars) {
            const ReportRow* pick = nullptr;
            for (const ReportRow& r : harmonic.rows)
                if (r.hbar == hb && (!pick || r.lambda < pick->lambda)) pick = &r;
            if (!pick || !pick->forbidden_mass) throw error("missing mass row");
            masses.push_back(*pick->forbidden_mass);
        }
        bool ok = masses.size() == harmonic_cfg.hbars.size();
        std::string detail = "lowest-state masses";
        for (std::size_t i = 0; i < masses.size(); ++i) {
            detail += " " + format_double(masses[i]);
            if (i > 0) ok = ok && masses[i] <= 0.5 * masses[i - 1];
        }
        ok = ok && masses.back() <= 1e-2;
        return std::make_pair(ok, detail + " (each <= half the previous, final <= 0.01)");
    });

    criterion(5, "kinetic energy clears the predicted lower bound", [&] {
        bool ok = status_of(dw, "regions") == "pass" &&
                  status_of(dw, "kinetic_bound") == "pass" &&
                  status_of(harmonic, "kinetic_bound") == "pass";
        if (!dw.constants || !harmonic.constants) return std::make_pair(false, std::string("no constants"));
        double c0_dw = dw.constants->c0, c0_h = harmonic.constants->c0;
        double cp_h = harmonic.constants->c_pred;
        ok = ok && std::abs(c0_dw - 0.4825) / 0.4825 <= 0.02;
        ok = ok && std::abs(c0_h - 1.6) / 1.6 <= 0.02;
        ok = ok && std::abs(cp_h - 0.0553846) / 0.0553846 <= 0.02;

        double margin = 1e300;
        std::size_t checked = 0;
        for (const ScenarioReport* rep : {&harmonic, &dw})
            for (const ReportRow& r : rep->rows)
                if (r.kinetic_bound_pass) {
                    ++checked;
                    ok = ok && *r.kinetic_bound_pass;
                    if (rep == &harmonic) margin = std::min(margin, r.K / cp_h);
                }
        ok = ok && checked >= 4 && margin >= 8.0;
        return std::make_pair(
            ok, "c0 " + format_double(c0_h) + "/" + format_double(c0_dw) +
                    " (want 1.6/0.4825 within 2%), c_pred " + format_double(cp_h) +
                    ", min K margin " + format_double(margin) + " (want >= 8), " +
                    std::to_string(checked) + " central pairs");
    });

    criterion(6, "potential energy clears its scaled lower bound", [&] {
        if (!harmonic.c0_dual || !quartic.c0_dual) return std::make_pair(false, std::string("no constants"));
        double dh = *harmonic.c0_dual, dq = *quartic.c0_dual;
        bool ok = std::abs(dh - 2.0) / 2.0 <= 0.02 && std::abs(dq - 4.0) / 4.0 <= 0.02;
        ok = ok && status_of(harmonic, "potential_bound") == "pass" &&
             status_of(quartic, "potential_bound") == "pass";
        std::size_t checked = 0;
        for (const ScenarioReport* rep : {&harmonic, &quartic}) {
            const std::vector<double>& hbars =
                rep == &harmonic ? harmonic_cfg.hbars : quartic_cfg.hbars;
            std::vector<double> small(hbars.end() - 2, hbars.end());
            for (const ReportRow& r : rep->rows) {
                if (r.hbar != small[0] && r.hbar != small[1]) continue;
                ok = ok && r.potential_bound_pass && *r.potential_bound_pass;
                ++checked;
            }
        }
        ok = ok && checked >= 8;
        return std::make_pair(ok, "scaling constants " + format_double(dh) + "/" +
                                      format_double(dq) + " (want 2/4 within 2%), " +
                                      std::to_string(checked) + " pairs at the two finest hbar");
    });

    criterion(7, "separable ladders reach any admissible energy split", [&] {
        bool ok = status_of(sep, "separable") == "pass" && sep.demos.size() == 2;
        std::string detail;
        for (const BalanceDemo& d : sep.demos) {
            if (d.rows.empty()) return std::make_pair(false, std::string("empty demo"));
            ok = ok && d.gaps_shrink && d.rows.back().gap_lambda <= 0.03 &&
                 d.rows.back().gap_U <= 0.03;
            detail += " u=" + format_double(d.u_target) + " gaps " +
                      format_double(d.rows.back().gap_lambda) + "/" +
                      format_double(d.rows.back().gap_U);
        }
        return std::make_pair(ok, "final" + detail + " (tol 0.03, gaps non-increasing)");
    });

    criterion(8, "eigenvalue branches obey the hbar derivative identity", [&] {
        bool ok = status_of(kato, "hbar_derivative") == "pass";
        double worst = -1.0;
        for (const DerivativeBranch& b : kato.derivative)
            for (const KatoRow& r : b.rows)
                if (!r.one_sided) worst = std::max(worst, r.rel_gap);
        ok = ok && worst >= 0.0 && worst <= 1e-3;
        return std::make_pair(ok, "max interior relative gap " + format_double(worst) +
                                      " (tol 0.001)");
    });

    criterion(9, "two dimensional window levels match tensor sums", [&] {
        if (!sep.cross) return std::make_pair(false, std::string("no cross validation table"));
        bool ok = sep.cross->all_matched && sep.cross->max_gap <= 1e-3 &&
                  sep.cross->rows.size() >= 4;
        return std::make_pair(ok, "max gap " + format_double(sep.cross->max_gap) + " over " +
                                      std::to_string(sep.cross->rows.size()) +
                                      " eigenvalues (tol 0.001)");
    });

    criterion(10, "determinism, orthonormality and energy closure hold", [&] {
        ScenarioReport again = run_scenario(harmonic_cfg);
        bool det = report_csv(again) == report_csv(harmonic);

        const HbarOutcome* fo = finest_solved(harmonic);
        if (!fo) return std::make_pair(false, std::string("no solved outcome"));
        double w = fo->grid.weight(), gram_dev = 0.0;
        for (std::size_t i = 0; i < fo->result.pairs.size(); ++i)
            for (std::size_t j = i; j < fo->result.pairs.size(); ++j) {
                double dot = 0.0;
                const auto& a = fo->result.pairs[i].psi.a;
                const auto& b = fo->result.pairs[j].psi.a;
                for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * b[k];
                gram_dev = std::max(gram_dev, std::abs(dot * w - (i == j ? 1.0 : 0.0)));
            }

        double closure = 0.0;
        for (const ScenarioReport* rep : {&harmonic, &quartic})
            for (const ReportRow& r : rep->rows)
                closure = std::max(closure,
                                   std::abs(r.K + r.U - r.lambda) / (1.0 + std::abs(r.lambda)));

        const HbarOutcome* fq = finest_solved(quartic);
        if (!fq) return std::make_pair(false, std::string("no solved quartic outcome"));
        PotentialModel qm = build_potential(quartic_cfg);
        VirialMultiplier quad = make_quadratic_multiplier(qm.d);
        double gen = generalized_virial_residual(fq->grid, qm, fq->hbar,
                                                 fq->result.pairs[0].psi, quad);
        double cls = classic_virial_residual(fq->grid, qm, fq->hbar, fq->result.pairs[0].psi);
        double qgap = std::abs(gen - 4.0 * cls) / (1.0 + std::abs(gen));

        bool ok = det && gram_dev <= 1e-8 && closure <= 1e-10 && qgap <= 1e-12;
        return std::make_pair(ok, std::string("rerun ") + (det ? "identical" : "DIFFERS") +
                                      ", gram deviation " + format_double(gram_dev) +
                                      ", closure " + format_double(closure) +
                                      ", quadratic gap " + format_double(qgap));
    });

    std::printf("%d of 10 criteria passed\n", 10 - failures);
    return failures;
}
