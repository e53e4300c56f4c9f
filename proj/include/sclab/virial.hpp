#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "regions.hpp"

namespace sclab {

// Order-9 polynomial smoothstep: s(0)=0, s(1)=1, with four vanishing
// derivatives at both ends.
struct Smootherstep {
    static double s0(double t) {
        return ((((70.0 * t - 315.0) * t + 540.0) * t - 420.0) * t + 126.0) * t * t * t * t * t;
    }
    static double s1(double t) {
        double u = t * (1.0 - t);
        return 630.0 * u * u * u * u;
    }
    static double s2(double t) {
        return t * t * t * ((((5040.0 * t - 17640.0) * t + 22680.0) * t - 12600.0) * t + 2520.0);
    }
    static double s3(double t) {
        return t * t * ((((35280.0 * t - 105840.0) * t + 113400.0) * t - 50400.0) * t + 7560.0);
    }
    static double s4(double t) {
        return t * ((((211680.0 * t - 529200.0) * t + 453600.0) * t - 151200.0) * t + 15120.0);
    }
};

struct WellBump {
    Point center{0.0, 0.0};
    double r_in = 0.0;
    double r_out = 0.0;
};

namespace detail {

struct RadialEval {
    double w = 0.0, w1 = 0.0, w2 = 0.0, w3 = 0.0, w4 = 0.0;
};

// w(rho) = rho^2 phi(rho) for the bump profile phi (1 inside r_in, smooth
// order-9 step down to 0 at r_out), with four radial derivatives.
inline RadialEval bump_radial(double rho, double r_in, double r_out) {
    RadialEval e;
    if (rho >= r_out) return e;
    if (rho <= r_in) {
        e.w = rho * rho;
        e.w1 = 2.0 * rho;
        e.w2 = 2.0;
        return e;
    }
    const double del = r_out - r_in;
    const double t = (rho - r_in) / del;
    const double p = 1.0 - Smootherstep::s0(t);
    const double p1 = -Smootherstep::s1(t) / del;
    const double p2 = -Smootherstep::s2(t) / (del * del);
    const double p3 = -Smootherstep::s3(t) / (del * del * del);
    const double p4 = -Smootherstep::s4(t) / (del * del * del * del);
    e.w = rho * rho * p;
    e.w1 = 2.0 * rho * p + rho * rho * p1;
    e.w2 = 2.0 * p + 4.0 * rho * p1 + rho * rho * p2;
    e.w3 = 6.0 * p1 + 6.0 * rho * p2 + rho * rho * p3;
    e.w4 = 12.0 * p2 + 8.0 * rho * p3 + rho * rho * p4;
    return e;
}

}  // namespace detail

// Multiplier a(x) with analytic derivatives. hessian is row-major
// [a00, a01, a10, a11] (only [0] meaningful in d=1). pair_bilaplacian selects
// the self-adjoint pairing discretization of the Delta^2 a term.
struct VirialMultiplier {
    std::function<double(const Point&)> a;
    std::function<Point(const Point&)> grad_a;
    std::function<std::array<double, 4>(const Point&)> hessian_a;
    std::function<double(const Point&)> laplacian_a;
    std::function<double(const Point&)> bilaplacian_a;
    bool bounded = true;
    bool pair_bilaplacian = false;
    std::vector<WellBump> wells;
    std::string name;
};

inline VirialMultiplier make_constant_multiplier(double c) {
    VirialMultiplier m;
    m.name = "constant";
    m.a = [c](const Point&) { return c; };
    m.grad_a = [](const Point&) { return Point{0.0, 0.0}; };
    m.hessian_a = [](const Point&) { return std::array<double, 4>{0.0, 0.0, 0.0, 0.0}; };
    m.laplacian_a = [](const Point&) { return 0.0; };
    m.bilaplacian_a = [](const Point&) { return 0.0; };
    return m;
}

inline VirialMultiplier make_quadratic_multiplier(int d) {
    VirialMultiplier m;
    m.name = "quadratic";
    m.bounded = false;
    m.a = [d](const Point& x) { return sq(x[0]) + (d == 2 ? sq(x[1]) : 0.0); };
    m.grad_a = [d](const Point& x) { return Point{2.0 * x[0], d == 2 ? 2.0 * x[1] : 0.0}; };
    m.hessian_a = [d](const Point&) {
        return std::array<double, 4>{2.0, 0.0, 0.0, d == 2 ? 2.0 : 0.0};
    };
    m.laplacian_a = [d](const Point&) { return 2.0 * d; };
    m.bilaplacian_a = [](const Point&) { return 0.0; };
    return m;
}

// Sum of per-well bumps |x-x_n|^2 phi_n(|x-x_n|). Supports must stay pairwise
// disjoint; r_out = r_in + max(r_in/2, 2 max h).
inline VirialMultiplier build_well_multiplier(const WellDecomposition& dec, const Grid& g) {
    if (dec.components.empty()) throw error("well multiplier: empty decomposition");
    const double hmax = (g.d == 2) ? std::max(g.h(0), g.h(1)) : g.h(0);
    std::vector<WellBump> wells;
    for (const WellComponent& c : dec.components) {
        WellBump b;
        b.center = c.center;
        b.r_in = c.r_in;
        b.r_out = c.r_in + std::max(0.5 * c.r_in, 2.0 * hmax);
        wells.push_back(b);
    }
    for (std::size_t i = 0; i < wells.size(); ++i)
        for (std::size_t j = i + 1; j < wells.size(); ++j) {
            double dx = wells[i].center[0] - wells[j].center[0];
            double dy = (g.d == 2) ? wells[i].center[1] - wells[j].center[1] : 0.0;
            double dist = std::sqrt(dx * dx + dy * dy);
            if (dist < wells[i].r_out + wells[j].r_out)
                throw error("well multiplier: supports of wells " + std::to_string(i) + " and " +
                            std::to_string(j) + " overlap (distance " + format_double(dist) +
                            ", radii " + format_double(wells[i].r_out) + " + " +
                            format_double(wells[j].r_out) + ")");
        }

    const int d = g.d;
    auto radial = [wells, d](const Point& x, std::size_t& which, double& rho) -> bool {
        for (std::size_t n = 0; n < wells.size(); ++n) {
            double dx = x[0] - wells[n].center[0];
            double dy = (d == 2) ? x[1] - wells[n].center[1] : 0.0;
            double r = std::sqrt(dx * dx + dy * dy);
            if (r < wells[n].r_out) {
                which = n;
                rho = r;
                return true;
            }
        }
        return false;
    };

    VirialMultiplier m;
    m.name = "wells";
    m.wells = wells;
    m.pair_bilaplacian = true;
    m.a = [radial, wells](const Point& x) {
        std::size_t n;
        double rho;
        if (!radial(x, n, rho)) return 0.0;
        return detail::bump_radial(rho, wells[n].r_in, wells[n].r_out).w;
    };
    m.grad_a = [radial, wells, d](const Point& x) {
        std::size_t n;
        double rho;
        Point out{0.0, 0.0};
        if (!radial(x, n, rho) || rho < 1e-14) return out;
        auto e = detail::bump_radial(rho, wells[n].r_in, wells[n].r_out);
        double f = e.w1 / rho;
        out[0] = f * (x[0] - wells[n].center[0]);
        if (d == 2) out[1] = f * (x[1] - wells[n].center[1]);
        return out;
    };
    m.hessian_a = [radial, wells, d](const Point& x) {
        std::array<double, 4> H{0.0, 0.0, 0.0, 0.0};
        std::size_t n;
        double rho;
        if (!radial(x, n, rho)) return H;
        if (rho < 1e-14) {
            H[0] = 2.0;
            if (d == 2) H[3] = 2.0;
            return H;
        }
        auto e = detail::bump_radial(rho, wells[n].r_in, wells[n].r_out);
        double ux = (x[0] - wells[n].center[0]) / rho;
        double uy = (d == 2) ? (x[1] - wells[n].center[1]) / rho : 0.0;
        double radial_part = e.w2 - e.w1 / rho, iso = e.w1 / rho;
        H[0] = radial_part * ux * ux + iso;
        if (d == 2) {
            H[1] = H[2] = radial_part * ux * uy;
            H[3] = radial_part * uy * uy + iso;
        }
        return H;
    };
    m.laplacian_a = [radial, wells, d](const Point& x) {
        std::size_t n;
        double rho;
        if (!radial(x, n, rho)) return 0.0;
        if (rho < 1e-14) return 2.0 * d;
        auto e = detail::bump_radial(rho, wells[n].r_in, wells[n].r_out);
        return e.w2 + double(d - 1) * e.w1 / rho;
    };
    m.bilaplacian_a = [radial, wells, d](const Point& x) {
        std::size_t n;
        double rho;
        if (!radial(x, n, rho) || rho < 1e-14) return 0.0;
        if (rho <= wells[n].r_in) return 0.0;
        auto e = detail::bump_radial(rho, wells[n].r_in, wells[n].r_out);
        double dd = double(d);
        return e.w4 + 2.0 * (dd - 1.0) * e.w3 / rho +
               (dd - 1.0) * (dd - 3.0) * (e.w2 / (rho * rho) - e.w1 / (rho * rho * rho));
    };
    return m;
}

// Discrete left side of the generalized virial identity
//   int (4 hbar^2 sum_jk a_jk d_k psi d_j psi - hbar^2 (Delta^2 a) psi^2
//        - 2 <grad a, grad v> psi^2) dx.
// Diagonal Hessian terms pair squared forward differences with the Hessian
// evaluated at the face midpoint; the bilaplacian term uses
// <Delta a, Delta_h psi^2> when pair_bilaplacian is set.
inline double generalized_virial_residual(const Grid& g, const PotentialModel& v, double hbar,
                                          const ScalarField& psi, const VirialMultiplier& mult) {
    check_same_grid(g, psi.grid);
    const double w = g.weight();
    const double hb2 = hbar * hbar;
    GradField dpsi = gradient_apply(g, psi);

    std::vector<double> t1;
    if (g.d == 1) {
        const std::size_t m = g.m[0];
        const double h0 = g.h(0);
        t1.reserve(m + 1);
        for (std::size_t k = 0; k <= m; ++k) {
            // face midpoint between nodes k-1 and k (boundary ghosts at the box edge)
            Point xf{g.lo[0] + (double(k) + 0.5) * h0, 0.0};
            double a00 = mult.hessian_a(xf)[0];
            t1.push_back(a00 * sq(dpsi.comp[0][k]));
        }
    } else {
        const std::size_t m0 = g.m[0], m1 = g.m[1];
        const double h0 = g.h(0), h1 = g.h(1);
        t1.reserve((m0 + 1) * m1 + m0 * (m1 + 1) + g.size());
        for (std::size_t k = 0; k <= m0; ++k)
            for (std::size_t j = 0; j < m1; ++j) {
                Point xf{g.lo[0] + (double(k) + 0.5) * h0, g.lo[1] + double(j + 1) * h1};
                double a00 = mult.hessian_a(xf)[0];
                t1.push_back(a00 * sq(dpsi.comp[0][k * m1 + j]));
            }
        for (std::size_t i = 0; i < m0; ++i)
            for (std::size_t k = 0; k <= m1; ++k) {
                Point xf{g.lo[0] + double(i + 1) * h0, g.lo[1] + (double(k) + 0.5) * h1};
                double a11 = mult.hessian_a(xf)[3];
                t1.push_back(a11 * sq(dpsi.comp[1][i * (m1 + 1) + k]));
            }
        // Off-diagonal terms with node-centered average differences.
        for (std::size_t i = 0; i < m0; ++i)
            for (std::size_t j = 0; j < m1; ++j) {
                double a01 = mult.hessian_a(g.point(i * m1 + j))[1];
                if (a01 == 0.0) continue;
                double d0 = 0.5 * (dpsi.comp[0][i * m1 + j] + dpsi.comp[0][(i + 1) * m1 + j]);
                double d1 = 0.5 * (dpsi.comp[1][i * (m1 + 1) + j] + dpsi.comp[1][i * (m1 + 1) + j + 1]);
                t1.push_back(2.0 * a01 * d0 * d1);
            }
    }
    double T1 = 4.0 * hb2 * w * pairwise_sum(t1.data(), t1.size());

    double T2 = 0.0;
    if (mult.pair_bilaplacian) {
        ScalarField psi2(g);
        for (std::size_t i = 0; i < g.size(); ++i) psi2.a[i] = sq(psi.a[i]);
        ScalarField nl = laplacian_apply(g, psi2);
        std::vector<double> t2(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) t2[i] = mult.laplacian_a(g.point(i)) * nl.a[i];
        T2 = hb2 * w * pairwise_sum(t2);
    } else {
        std::vector<double> t2(g.size());
        for (std::size_t i = 0; i < g.size(); ++i)
            t2[i] = mult.bilaplacian_a(g.point(i)) * sq(psi.a[i]);
        T2 = -hb2 * w * pairwise_sum(t2);
    }

    std::vector<double> t3(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        Point x = g.point(i);
        Point ga = mult.grad_a(x);
        Point gv = v.gradient(x);
        double dot = ga[0] * gv[0] + (g.d == 2 ? ga[1] * gv[1] : 0.0);
        t3[i] = dot * sq(psi.a[i]);
    }
    double T3 = -2.0 * w * pairwise_sum(t3);

    return T1 + T2 + T3;
}

// 2 hbar^2 int |grad psi|^2 - int <x, grad v> psi^2.
inline double classic_virial_residual(const Grid& g, const PotentialModel& v, double hbar,
                                      const ScalarField& psi) {
    check_same_grid(g, psi.grid);
    std::vector<double> t(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        Point x = g.point(i);
        Point gv = v.gradient(x);
        double dot = x[0] * gv[0] + (g.d == 2 ? x[1] * gv[1] : 0.0);
        t[i] = dot * sq(psi.a[i]);
    }
    return 2.0 * kinetic_energy(g, hbar, psi) - g.weight() * pairwise_sum(t);
}

// int (<x, grad v>/2 + v) psi^2 - lambda.
inline double virial_energy_identity_residual(const Grid& g, const PotentialModel& v,
                                              double hbar, const EigenPair& pair) {
    (void)hbar;
    check_same_grid(g, pair.psi.grid);
    std::vector<double> t(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        Point x = g.point(i);
        Point gv = v.gradient(x);
        double dot = x[0] * gv[0] + (g.d == 2 ? x[1] * gv[1] : 0.0);
        t[i] = (0.5 * dot + v.value(x)) * sq(pair.psi.a[i]);
    }
    return g.weight() * pairwise_sum(t) - pair.lambda;
}

// sum_n int_{F_n} (2 hbar^2 |grad psi|^2 - <x - x_n, grad v> psi^2).
inline double localized_virial_defect(const Grid& g, const PotentialModel& v, double hbar,
                                      const ScalarField& psi, const WellDecomposition& dec) {
    check_same_grid(g, psi.grid);
    double total = 0.0;
    for (const WellComponent& comp : dec.components) {
        double kin = 2.0 * kinetic_energy_masked(g, hbar, psi, comp.mask);
        std::vector<double> t;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!comp.mask[i]) continue;
            Point x = g.point(i);
            Point gv = v.gradient(x);
            double dot = (x[0] - comp.center[0]) * gv[0] +
                         (g.d == 2 ? (x[1] - comp.center[1]) * gv[1] : 0.0);
            t.push_back(dot * sq(psi.a[i]));
        }
        total += kin - g.weight() * pairwise_sum(t.data(), t.size());
    }
    return total;
}

}  // namespace sclab
