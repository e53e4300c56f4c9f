#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "energetics.hpp"
#include "operators.hpp"

namespace sclab {

// Classically allowed set F(level) = {v < level} on the grid.
struct RegionMask {
    Grid grid;
    std::vector<std::uint8_t> allowed;
    double level = 0.0;
};

inline RegionMask allowed_mask(const Grid& g, const ScalarField& v, double level) {
    check_same_grid(g, v.grid);
    RegionMask m;
    m.grid = g;
    m.level = level;
    m.allowed.resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) m.allowed[i] = v.a[i] < level ? 1 : 0;
    const std::size_t m0 = g.m[0], m1 = g.cols();
    auto ring = [&](std::size_t i, std::size_t j) {
        if (g.d == 1) return i == 0 || i + 1 == m0;
        return i == 0 || i + 1 == m0 || j == 0 || j + 1 == m1;
    };
    for (std::size_t i = 0; i < m0; ++i)
        for (std::size_t j = 0; j < m1; ++j)
            if (ring(i, j) && m.allowed[i * m1 + j])
                throw error("allowed region touches the box boundary at level " +
                            format_double(level));
    return m;
}

inline RegionMask allowed_mask(const Grid& g, const PotentialModel& v, double level) {
    return allowed_mask(g, sample_potential(v, g), level);
}

inline std::vector<std::uint8_t> complement(const std::vector<std::uint8_t>& m) {
    std::vector<std::uint8_t> out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] ? 0 : 1;
    return out;
}

struct WellComponent {
    std::vector<std::uint8_t> mask;
    Point center{0.0, 0.0};
    std::size_t center_index = 0;
    std::size_t points = 0;
    std::array<double, 2> bbox_lo{0.0, 0.0}, bbox_hi{0.0, 0.0};
    double r_in = 0.0;  // max euclidean distance from center over the component
};

struct WellDecomposition {
    double level = 0.0;
    std::vector<WellComponent> components;
    std::size_t N() const { return components.size(); }
};

// Face-adjacency flood fill; centers are the per-component argmin of v
// (first in row-major order on ties).
inline WellDecomposition well_components(const RegionMask& mask, const ScalarField& v) {
    check_same_grid(mask.grid, v.grid);
    const Grid& g = mask.grid;
    WellDecomposition dec;
    dec.level = mask.level;
    const std::size_t n = g.size(), m1 = g.cols();
    std::vector<int> label(n, -1);
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < n; ++start) {
        if (!mask.allowed[start] || label[start] >= 0) continue;
        int id = int(dec.components.size());
        WellComponent comp;
        comp.mask.assign(n, 0);
        stack.push_back(start);
        label[start] = id;
        std::size_t best = start;
        while (!stack.empty()) {
            std::size_t p = stack.back();
            stack.pop_back();
            comp.mask[p] = 1;
            ++comp.points;
            if (v.a[p] < v.a[best]) best = p;
            std::size_t i = p / m1, j = p % m1;
            auto push = [&](std::size_t qn) {
                if (mask.allowed[qn] && label[qn] < 0) {
                    label[qn] = id;
                    stack.push_back(qn);
                }
            };
            if (i > 0) push(p - m1);
            if (i + 1 < g.m[0]) push(p + m1);
            if (g.d == 2 && j > 0) push(p - 1);
            if (g.d == 2 && j + 1 < g.m[1]) push(p + 1);
        }
        comp.center_index = best;
        comp.center = g.point(best);
        dec.components.push_back(std::move(comp));
    }
    // Geometry per component.
    for (WellComponent& c : dec.components) {
        c.bbox_lo = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
        c.bbox_hi = {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
        for (std::size_t p = 0; p < n; ++p) {
            if (!c.mask[p]) continue;
            Point x = g.point(p);
            double d2 = sq(x[0] - c.center[0]) + (g.d == 2 ? sq(x[1] - c.center[1]) : 0.0);
            c.r_in = std::max(c.r_in, std::sqrt(d2));
            for (int ax = 0; ax < g.d; ++ax) {
                c.bbox_lo[ax] = std::min(c.bbox_lo[ax], x[ax]);
                c.bbox_hi[ax] = std::max(c.bbox_hi[ax], x[ax]);
            }
        }
    }
    std::sort(dec.components.begin(), dec.components.end(),
              [](const WellComponent& a, const WellComponent& b) {
                  return a.center_index < b.center_index;
              });
    return dec;
}

struct StabilityReport {
    bool pass = false;
    bool count_stable = false;
    bool non_critical = false;
    std::vector<std::size_t> counts;
    double min_grad_shell = 0.0;
    double threshold = 0.0;
    std::string message;
};

// Theorem hypothesis scan: constant well count across the window and no
// near-critical point on the shell lambda0-eps0 <= v < lambda0+eps0.
inline StabilityReport stability_check(const PotentialModel& v, const Grid& g, double lambda0,
                                       double eps0, double grad_threshold_scale = 1e-6) {
    ScalarField vf = sample_potential(v, g);
    StabilityReport rep;
    rep.threshold = grad_threshold_scale * (lambda0 + eps0);
    const double samples[5] = {lambda0 - eps0, lambda0 - eps0 / 2.0, lambda0,
                               lambda0 + eps0 / 2.0, lambda0 + eps0};
    for (double lam : samples) {
        WellDecomposition dec = well_components(allowed_mask(g, vf, lam), vf);
        rep.counts.push_back(dec.N());
    }
    rep.count_stable = std::all_of(rep.counts.begin(), rep.counts.end(),
                                   [&](std::size_t c) { return c == rep.counts[0] && c > 0; });
    rep.min_grad_shell = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (vf.a[i] >= lambda0 - eps0 && vf.a[i] < lambda0 + eps0) {
            Point gr = v.gradient(g.point(i));
            double mag = std::sqrt(sq(gr[0]) + (g.d == 2 ? sq(gr[1]) : 0.0));
            rep.min_grad_shell = std::min(rep.min_grad_shell, mag);
        }
    }
    rep.non_critical = rep.min_grad_shell > rep.threshold;
    rep.pass = rep.count_stable && rep.non_critical;
    if (!rep.count_stable)
        rep.message = "well count varies across the window";
    else if (!rep.non_critical)
        rep.message = "near-critical point on the shell (|grad v| = " +
                      format_double(rep.min_grad_shell) + ")";
    else
        rep.message = "stable: N = " + std::to_string(rep.counts[0]);
    return rep;
}

// Localization mass over G(lambda+eps): int (hbar^2 |grad psi|^2 + psi^2).
inline double forbidden_mass(const Grid& g, double hbar, const ScalarField& psi,
                             const ScalarField& v, double lambda, double eps) {
    RegionMask allowed = allowed_mask(g, v, lambda + eps);
    std::vector<std::uint8_t> G = complement(allowed.allowed);
    double kin = kinetic_energy_masked(g, hbar, psi, G);
    std::vector<double> terms;
    terms.reserve(psi.a.size());
    for (std::size_t i = 0; i < psi.a.size(); ++i)
        if (G[i]) terms.push_back(sq(psi.a[i]));
    return kin + g.weight() * pairwise_sum(terms);
}

inline double forbidden_potential_mass(const Grid& g, const ScalarField& psi,
                                       const ScalarField& v, double lambda, double eps) {
    RegionMask allowed = allowed_mask(g, v, lambda + eps);
    std::vector<double> terms;
    terms.reserve(psi.a.size());
    for (std::size_t i = 0; i < psi.a.size(); ++i)
        if (!allowed.allowed[i]) terms.push_back(v.a[i] * sq(psi.a[i]));
    return g.weight() * pairwise_sum(terms);
}

// Matches each center to the component of dec_hi containing it; throws if a
// center falls outside every component.
inline std::vector<std::size_t> match_centers(const WellDecomposition& dec_hi, const Grid& g,
                                              const std::vector<Point>& centers) {
    std::vector<std::size_t> idx;
    for (const Point& c : centers) {
        bool found = false;
        for (std::size_t k = 0; k < dec_hi.components.size(); ++k) {
            // nearest grid node to the center
            std::size_t bi = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (std::size_t p = 0; p < g.size(); ++p) {
                if (!dec_hi.components[k].mask[p]) continue;
                Point x = g.point(p);
                double d2 = sq(x[0] - c[0]) + (g.d == 2 ? sq(x[1] - c[1]) : 0.0);
                if (d2 < bd) { bd = d2; bi = p; }
            }
            (void)bi;
            double hmax = (g.d == 2) ? std::max(g.h(0), g.h(1)) : g.h(0);
            if (bd <= sq(1.5 * hmax)) { idx.push_back(k); found = true; break; }
        }
        if (!found) throw error("well center not inside any component at the upper level");
    }
    return idx;
}

// inf over the shells F_n(lambda0+eps0) \ F(lambda0-eps0) of <x-x_n, grad v>.
inline double shell_constant_c0(const PotentialModel& v, const Grid& g,
                                const WellDecomposition& dec_hi,
                                const std::vector<Point>& centers, double lambda0, double eps0) {
    ScalarField vf = sample_potential(v, g);
    RegionMask lower = allowed_mask(g, vf, lambda0 - eps0);
    std::vector<std::size_t> match = match_centers(dec_hi, g, centers);
    double c0 = std::numeric_limits<double>::infinity();
    bool shell_seen = false;
    for (std::size_t n = 0; n < centers.size(); ++n) {
        const WellComponent& comp = dec_hi.components[match[n]];
        for (std::size_t p = 0; p < g.size(); ++p) {
            if (!comp.mask[p] || lower.allowed[p]) continue;
            shell_seen = true;
            Point x = g.point(p);
            Point gr = v.gradient(x);
            double t = (x[0] - centers[n][0]) * gr[0];
            if (g.d == 2) t += (x[1] - centers[n][1]) * gr[1];
            c0 = std::min(c0, t);
        }
    }
    if (!shell_seen) throw error("empty shell: no grid point between the levels");
    return c0;
}

// max_n sup over F_n(lambda0-eps0) of -<x-x_n, grad v>.
inline double interior_constant_c1(const PotentialModel& v, const Grid& g,
                                   const WellDecomposition& dec_lo,
                                   const std::vector<Point>& centers) {
    if (dec_lo.components.empty()) throw error("empty interior: no allowed grid point");
    if (centers.size() != dec_lo.components.size())
        throw error("center count does not match component count");
    double c1 = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < dec_lo.components.size(); ++n) {
        const WellComponent& comp = dec_lo.components[n];
        for (std::size_t p = 0; p < g.size(); ++p) {
            if (!comp.mask[p]) continue;
            Point x = g.point(p);
            Point gr = v.gradient(x);
            double t = (x[0] - centers[n][0]) * gr[0];
            if (g.d == 2) t += (x[1] - centers[n][1]) * gr[1];
            c1 = std::max(c1, -t);
        }
    }
    return c1;
}

struct BoundConstants {
    double lambda0 = 0.0, eps0 = 0.0;
    double c0 = 0.0, c1 = 0.0, c2 = 0.0;
    double c_sup = 0.0;   // 0.5 eps0 c0 / (1 + c0 + c1)
    double c_pred = 0.0;  // 0.9 c_sup
    bool hypothesis_ok = false;
    bool c2_short_circuit = false;
    std::string note;
};

inline BoundConstants predicted_bound(double lambda0, double eps0, double c0, double c1) {
    BoundConstants b;
    b.lambda0 = lambda0;
    b.eps0 = eps0;
    b.c0 = c0;
    b.c1 = c1;
    b.c2 = c0 + c1;
    double eps_eff = eps0;
    if (eps_eff > 1.0) {
        eps_eff = 1.0;
        b.note = "eps0 clamped to 1 for the bound";
    }
    if (!(c0 > 0.0)) {
        b.hypothesis_ok = false;
        b.note = "hypothesis fails: c0 <= 0";
        return b;
    }
    b.hypothesis_ok = true;
    if (b.c2 <= 0.0) {
        b.c2_short_circuit = true;
        b.note = "c2 <= 0: potential-energy bound holds directly";
    }
    b.c_sup = 0.5 * eps_eff * c0 / (1.0 + c0 + c1);
    b.c_pred = 0.9 * b.c_sup;
    return b;
}

struct VerdictRow {
    double hbar = 0.0;
    double lambda = 0.0;
    double K = 0.0;
    double U = 0.0;
    double bound = 0.0;
    bool pass_K = false;
    bool pass_U = false;
};

struct VerdictTable {
    std::vector<VerdictRow> rows;
    bool hypothesis_ok = false;
    bool all_pass = false;
    bool summary_pass = false;  // all rows pass at the smallest swept hbar
    std::string note;
};

// Kinetic lower bound K >= c_pred and its dual U <= lambda - c_pred for every
// pair with lambda in (lambda0 - eps0/2, lambda0 + eps0/2).
inline VerdictTable theorem33_verdict(const std::vector<std::pair<double, EnergyBalance>>& sweep,
                                      const BoundConstants& c) {
    VerdictTable t;
    t.hypothesis_ok = c.hypothesis_ok;
    if (!c.hypothesis_ok) {
        t.note = c.note;
        return t;
    }
    double hbar_min = std::numeric_limits<double>::infinity();
    for (const auto& [hbar, eb] : sweep) hbar_min = std::min(hbar_min, hbar);
    t.all_pass = true;
    t.summary_pass = true;
    for (const auto& [hbar, eb] : sweep) {
        if (eb.lambda <= c.lambda0 - c.eps0 / 2.0 || eb.lambda >= c.lambda0 + c.eps0 / 2.0)
            continue;
        VerdictRow r;
        r.hbar = hbar;
        r.lambda = eb.lambda;
        r.K = eb.K;
        r.U = eb.U;
        r.bound = c.c_pred;
        r.pass_K = eb.K >= c.c_pred;
        r.pass_U = eb.U <= eb.lambda - c.c_pred;
        t.all_pass = t.all_pass && r.pass_K && r.pass_U;
        if (hbar == hbar_min) t.summary_pass = t.summary_pass && r.pass_K && r.pass_U;
        t.rows.push_back(r);
    }
    return t;
}

// Lemma: int_{F(lambda+eps)} v psi^2 <= lambda + eps - delta int_{F(lambda-delta)} psi^2.
inline std::pair<double, double> lemma_l1_margin(const Grid& g, const ScalarField& v,
                                                 const ScalarField& psi, double lambda,
                                                 double eps, double delta) {
    if (!(delta > 0.0 && delta < lambda)) throw config_error("lemma margin: need 0 < delta < lambda");
    RegionMask upper = allowed_mask(g, v, lambda + eps);
    RegionMask lower = allowed_mask(g, v, lambda - delta);
    std::vector<double> t1, t2;
    for (std::size_t i = 0; i < psi.a.size(); ++i) {
        if (upper.allowed[i]) t1.push_back(v.a[i] * sq(psi.a[i]));
        if (lower.allowed[i]) t2.push_back(sq(psi.a[i]));
    }
    double lhs = g.weight() * pairwise_sum(t1.data(), t1.size());
    double rhs = lambda + eps - delta * g.weight() * pairwise_sum(t2.data(), t2.size());
    return {lhs, rhs};
}

// Kinetic shell bound: 2 hbar^2 int |grad psi|^2 >= c0 - c2 int_{F(lambda0-eps0)} psi^2
// up to a vanishing term; returns (lhs, rhs without that term).
inline std::pair<double, double> lemma_vir8_margin(const Grid& g, const ScalarField& v,
                                                   double hbar, const ScalarField& psi,
                                                   const BoundConstants& c) {
    RegionMask lower = allowed_mask(g, v, c.lambda0 - c.eps0);
    std::vector<double> terms;
    for (std::size_t i = 0; i < psi.a.size(); ++i)
        if (lower.allowed[i]) terms.push_back(sq(psi.a[i]));
    double inside = g.weight() * pairwise_sum(terms.data(), terms.size());
    double lhs = 2.0 * kinetic_energy(g, hbar, psi);
    double rhs = c.c0 - c.c2 * inside;
    return {lhs, rhs};
}

// sup over allowed points of <x-x_n, grad v>/v; +inf when the condition fails
// at a zero of v away from a center.
inline double check_v8x(const PotentialModel& v, const Grid& g, const WellDecomposition& dec,
                        const std::vector<Point>& centers) {
    if (centers.size() != dec.components.size())
        throw error("center count does not match component count");
    ScalarField vf = sample_potential(v, g);
    double c0d = -std::numeric_limits<double>::infinity();
    const double vtiny = 1e-12 * (1.0 + dec.level);
    for (std::size_t n = 0; n < dec.components.size(); ++n) {
        const WellComponent& comp = dec.components[n];
        for (std::size_t p = 0; p < g.size(); ++p) {
            if (!comp.mask[p]) continue;
            Point x = g.point(p);
            Point gr = v.gradient(x);
            double num = (x[0] - centers[n][0]) * gr[0];
            if (g.d == 2) num += (x[1] - centers[n][1]) * gr[1];
            if (vf.a[p] <= vtiny) {
                if (num > 1e-12) return std::numeric_limits<double>::infinity();
                continue;
            }
            c0d = std::max(c0d, num / vf.a[p]);
        }
    }
    return c0d;
}

// Potential-energy lower bound U >= 0.9 * 2/(c0_dual+2) * lambda per pair.
inline VerdictTable prop37_verdict(const std::vector<std::pair<double, EnergyBalance>>& sweep,
                                   double c0_dual) {
    VerdictTable t;
    if (!std::isfinite(c0_dual)) {
        t.hypothesis_ok = false;
        t.note = "hypothesis fails: c0_dual not finite";
        return t;
    }
    t.hypothesis_ok = true;
    double hbar_min = std::numeric_limits<double>::infinity();
    for (const auto& [hbar, eb] : sweep) hbar_min = std::min(hbar_min, hbar);
    t.all_pass = true;
    t.summary_pass = true;
    const double frac = 0.9 * 2.0 / (c0_dual + 2.0);
    for (const auto& [hbar, eb] : sweep) {
        VerdictRow r;
        r.hbar = hbar;
        r.lambda = eb.lambda;
        r.K = eb.K;
        r.U = eb.U;
        r.bound = frac * eb.lambda;
        r.pass_U = eb.U >= r.bound;
        r.pass_K = eb.K <= eb.lambda - r.bound;  // dual form
        t.all_pass = t.all_pass && r.pass_U && r.pass_K;
        if (hbar == hbar_min) t.summary_pass = t.summary_pass && r.pass_U && r.pass_K;
        t.rows.push_back(r);
    }
    return t;
}

struct BalanceDeviation {
    double hbar = 0.0;
    double lambda = 0.0;
    double K_dev = 0.0;
    double U_dev = 0.0;
};

inline std::vector<BalanceDeviation> prop32_balance_check(
    const std::vector<std::pair<double, EnergyBalance>>& sweep, double alpha) {
    std::vector<BalanceDeviation> rows;
    for (const auto& [hbar, eb] : sweep) {
        BalanceDeviation r;
        r.hbar = hbar;
        r.lambda = eb.lambda;
        r.K_dev = std::abs(eb.K_ratio - alpha / (alpha + 2.0));
        r.U_dev = std::abs(eb.U_ratio - 2.0 / (alpha + 2.0));
        rows.push_back(r);
    }
    return rows;
}

}  // namespace sclab
