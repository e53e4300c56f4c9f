#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "common.hpp"
#include "linalg.hpp"

namespace sclab {

// Eigenvalues a_n of -D^2 + |x|^alpha at unit Planck parameter, 1-indexed.
struct OneDimSpectrum {
    double alpha = 0.0;
    std::vector<double> values;
    double err_est = 0.0;
    double box_half = 0.0;
    std::size_t points = 0;

    double a(std::size_t n) const {
        if (n < 1 || n > values.size())
            throw error("spectrum index " + std::to_string(n) + " out of range (have " +
                        std::to_string(values.size()) + ")");
        return values[n - 1];
    }
};

struct SeparableScaling {
    double alpha = 0.0;
    double gamma = 0.0;  // 2 alpha/(alpha+2)
    double beta = 0.0;   // 2/(alpha+2)
    double c = 0.0;      // Weyl constant, a_n ~ c n^gamma
};

namespace detail {

inline double simpson(const std::function<double(double)>& f, double a, double b, double fa,
                      double fm, double fb, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson(f, a, m, fa, flm, fm, tol / 2.0, depth - 1) +
           simpson(f, m, b, fm, frm, fb, tol / 2.0, depth - 1);
}

inline double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                                 double tol) {
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return simpson(f, a, b, fa, fm, fb, tol, 48);
}

// Eigenvalues 1..n_max of the tridiagonal FD operator by Sturm bisection.
inline std::vector<double> sturm_eigenvalues(const std::vector<double>& diag,
                                             const std::vector<double>& off, std::size_t n_max,
                                             double upper) {
    for (int tries = 0; sturm_count_below(diag, off, upper) < n_max; ++tries) {
        if (tries > 60) throw error("spectrum upper bound search failed");
        upper *= 2.0;
    }
    std::vector<double> out(n_max);
    for (std::size_t n = 1; n <= n_max; ++n) {
        double lo = 0.0, hi = upper;
        for (int it = 0; it < 80; ++it) {
            double mid = 0.5 * (lo + hi);
            if (sturm_count_below(diag, off, mid) >= n) hi = mid;
            else lo = mid;
        }
        out[n - 1] = 0.5 * (lo + hi);
    }
    return out;
}

inline std::vector<double> fd_power_levels(double alpha, std::size_t n_max, double R,
                                           std::size_t m, double upper) {
    const double h = 2.0 * R / double(m + 1);
    std::vector<double> diag(m), off(m - 1, -1.0 / (h * h));
    for (std::size_t i = 0; i < m; ++i) {
        double x = -R + double(i + 1) * h;
        diag[i] = 2.0 / (h * h) + std::pow(std::abs(x), alpha);
    }
    return sturm_eigenvalues(diag, off, n_max, upper);
}

}  // namespace detail

// Bohr-Sommerfeld constant c = [pi / (2 int_0^1 sqrt(1-t^alpha) dt)]^{2a/(a+2)}.
// The integral is computed after t = 1-u^2, which removes the endpoint cusp.
inline double weyl_constant_quadrature(double alpha) {
    if (!(alpha > 0.0)) throw config_error("weyl constant: alpha must be positive");
    auto f = [alpha](double u) {
        double t = 1.0 - u * u;
        double inner = 1.0 - std::pow(t, alpha);
        if (inner < 0.0) inner = 0.0;
        return 2.0 * u * std::sqrt(inner);
    };
    double I = detail::integrate_adaptive(f, 0.0, 1.0, 1e-13);
    return std::pow(M_PI / (2.0 * I), 2.0 * alpha / (alpha + 2.0));
}

inline SeparableScaling make_scaling(double alpha) {
    SeparableScaling s;
    s.alpha = alpha;
    s.gamma = 2.0 * alpha / (alpha + 2.0);
    s.beta = 2.0 / (alpha + 2.0);
    s.c = weyl_constant_quadrature(alpha);
    return s;
}

// First n_max eigenvalues of -D^2 + |x|^alpha, Richardson-extrapolated over
// grid doublings until the per-level relative error estimate meets `accuracy`.
// Results are cached on disk when cache_dir is nonempty.
inline OneDimSpectrum solve_1d_power(double alpha, std::size_t n_max, double accuracy,
                                     const std::string& cache_dir = "") {
    if (!(alpha > 0.0)) throw config_error("solve_1d_power: alpha must be positive");
    if (n_max < 1) throw config_error("solve_1d_power: n_max must be >= 1");

    std::string cache_path;
    if (!cache_dir.empty()) {
        std::filesystem::create_directories(cache_dir);
        cache_path = cache_dir + "/spectrum_a" + format_double(alpha) + "_n" +
                     std::to_string(n_max) + "_e" + format_double(accuracy) + ".json";
        std::ifstream is(cache_path);
        if (is) {
            nlohmann::json j = nlohmann::json::parse(is);
            OneDimSpectrum s;
            s.alpha = j["alpha"].get<double>();
            s.values = j["values"].get<std::vector<double>>();
            s.err_est = j["err_est"].get<double>();
            s.box_half = j["box_half"].get<double>();
            s.points = j["points"].get<std::size_t>();
            return s;
        }
    }

    const double gamma = 2.0 * alpha / (alpha + 2.0);
    const double a_top = weyl_constant_quadrature(alpha) * std::pow(double(n_max + 2), gamma);
    const double R = std::pow(a_top, 1.0 / alpha) * 1.6;
    const double upper = a_top * 1.5 + 10.0;

    std::size_t m = std::size_t(2.0 * R * std::sqrt(a_top) * 160.0 / (2.0 * M_PI));
    m = std::max<std::size_t>(m | 1, 801);

    std::vector<double> coarse = detail::fd_power_levels(alpha, n_max, R, m, upper);
    OneDimSpectrum s;
    s.alpha = alpha;
    for (int round = 0; round < 4; ++round) {
        std::size_t m2 = 2 * m + 1;
        if (m2 > 3000000) throw budget_error(m2, 3000000);
        std::vector<double> fine = detail::fd_power_levels(alpha, n_max, R, m2, upper);
        double emax = 0.0;
        s.values.resize(n_max);
        for (std::size_t i = 0; i < n_max; ++i) {
            s.values[i] = (4.0 * fine[i] - coarse[i]) / 3.0;
            emax = std::max(emax, std::abs(fine[i] - coarse[i]) / (3.0 * std::abs(fine[i])));
        }
        s.err_est = emax;
        s.box_half = R;
        s.points = m2;
        if (emax <= accuracy) break;
        coarse = std::move(fine);
        m = m2;
    }
    if (s.err_est > accuracy)
        throw error("spectrum accuracy " + format_double(accuracy) + " not reached (estimate " +
                    format_double(s.err_est) + ")");

    if (!cache_path.empty()) {
        nlohmann::json j;
        j["alpha"] = s.alpha;
        j["values"] = s.values;
        j["err_est"] = s.err_est;
        j["box_half"] = s.box_half;
        j["points"] = s.points;
        std::ofstream os(cache_path);
        os << j.dump(2) << '\n';
    }
    return s;
}

// Fit of c in a_n ~ c n^gamma over the top half of the spectrum, slope pinned
// to gamma; cross-checked against the quadrature constant.
inline double weyl_constant(double alpha, const OneDimSpectrum& spectrum) {
    if (spectrum.values.size() < 50) throw config_error("weyl fit: need at least 50 levels");
    const double gamma = 2.0 * alpha / (alpha + 2.0);
    double acc = 0.0;
    std::size_t n0 = spectrum.values.size() / 2, cnt = 0;
    for (std::size_t n = n0; n <= spectrum.values.size(); ++n) {
        acc += std::log(spectrum.a(n)) - gamma * std::log(double(n));
        ++cnt;
    }
    double c_fit = std::exp(acc / double(cnt));
    double c_bs = weyl_constant_quadrature(alpha);
    if (std::abs(c_fit - c_bs) / c_bs > 0.05)
        throw error("weyl constant fit " + format_double(c_fit) +
                    " disagrees with quadrature value " + format_double(c_bs) + " by more than 5%");
    return c_fit;
}

inline std::pair<std::size_t, std::size_t> select_quantum_numbers(double mu1, double mu2,
                                                                  double hbar,
                                                                  const SeparableScaling& s1,
                                                                  const SeparableScaling& s2) {
    if (!(mu1 > 0.0 && mu2 > 0.0)) throw config_error("quantum numbers: mu must be positive");
    auto pick = [hbar](double mu, const SeparableScaling& s) {
        return std::size_t(std::floor(std::pow(mu / s.c, 1.0 / s.gamma) / hbar));
    };
    std::size_t n1 = pick(mu1, s1), n2 = pick(mu2, s2);
    if (n1 == 0 || n2 == 0)
        throw error("hbar too large: quantum number floors to zero at hbar " +
                    format_double(hbar));
    return {n1, n2};
}

struct TensorEnergies {
    double lambda = 0.0;
    double U = 0.0;
    double K = 0.0;
};

inline TensorEnergies tensor_energies(double hbar, std::size_t n1, std::size_t n2,
                                      const OneDimSpectrum& sp1, const OneDimSpectrum& sp2,
                                      const SeparableScaling& s1, const SeparableScaling& s2) {
    double t1 = std::pow(hbar, s1.gamma) * sp1.a(n1);
    double t2 = std::pow(hbar, s2.gamma) * sp2.a(n2);
    TensorEnergies e;
    e.lambda = t1 + t2;
    e.U = s1.beta * t1 + s2.beta * t2;
    e.K = e.lambda - e.U;
    return e;
}

struct BalanceRow {
    double hbar = 0.0;
    std::size_t n1 = 0, n2 = 0;
    double lambda = 0.0, U = 0.0, K = 0.0;
    double gap_lambda = 0.0, gap_U = 0.0;
};

struct BalanceDemo {
    double lambda_target = 0.0, u_target = 0.0;
    double mu1 = 0.0, mu2 = 0.0;
    std::vector<BalanceRow> rows;
    bool gaps_shrink = false;  // both gap columns non-increasing after the first two rows
};

// The limiting potential energy 2(a1+2)^{-1} mu1 + 2(a2+2)^{-1} mu2 takes any
// value strictly between the single-exponent extremes; solve for the energy
// split (mu1, mu2) and tabulate the approach along the hbar list.
inline BalanceDemo balance_demo(double lambda_target, double u_target, double alpha1,
                                double alpha2, const std::vector<double>& hbars,
                                const OneDimSpectrum& sp1, const OneDimSpectrum& sp2) {
    if (alpha1 == alpha2)
        throw config_error("balance demo: equal exponents pin U/lambda to a single value");
    SeparableScaling s1 = make_scaling(alpha1), s2 = make_scaling(alpha2);
    double e1 = s1.beta * lambda_target, e2 = s2.beta * lambda_target;
    double lo = std::min(e1, e2), hi = std::max(e1, e2);
    if (!(u_target > lo + 1e-12 && u_target < hi - 1e-12))
        throw config_error("balance demo: u_target " + format_double(u_target) +
                           " outside the open interval (" + format_double(lo) + ", " +
                           format_double(hi) + ")");
    BalanceDemo demo;
    demo.lambda_target = lambda_target;
    demo.u_target = u_target;
    demo.mu1 = (u_target - s2.beta * lambda_target) / (s1.beta - s2.beta);
    demo.mu2 = lambda_target - demo.mu1;
    for (double hbar : hbars) {
        auto [n1, n2] = select_quantum_numbers(demo.mu1, demo.mu2, hbar, s1, s2);
        TensorEnergies e = tensor_energies(hbar, n1, n2, sp1, sp2, s1, s2);
        BalanceRow r;
        r.hbar = hbar;
        r.n1 = n1;
        r.n2 = n2;
        r.lambda = e.lambda;
        r.U = e.U;
        r.K = e.K;
        r.gap_lambda = std::abs(e.lambda - lambda_target);
        r.gap_U = std::abs(e.U - u_target);
        demo.rows.push_back(r);
    }
    demo.gaps_shrink = true;
    for (std::size_t i = 3; i < demo.rows.size(); ++i) {
        if (demo.rows[i].gap_lambda > demo.rows[i - 1].gap_lambda ||
            demo.rows[i].gap_U > demo.rows[i - 1].gap_U)
            demo.gaps_shrink = false;
    }
    return demo;
}

struct TensorMatch {
    double lambda_2d = 0.0;
    double tensor = 0.0;
    std::size_t n1 = 0, n2 = 0;
    double gap = 0.0;
    bool matched = false;
};

struct CrossValidation {
    std::vector<TensorMatch> rows;
    double max_gap = 0.0;
    bool all_matched = false;
};

// Every 2D window eigenvalue must match some tensor sum
// hbar^g1 a_{n1} + hbar^g2 a_{n2} within tol.
inline CrossValidation cross_validate_2d(const std::vector<double>& lambdas_2d, double hbar,
                                         const OneDimSpectrum& sp1, const OneDimSpectrum& sp2,
                                         const SeparableScaling& s1, const SeparableScaling& s2,
                                         double window_hi, double tol) {
    std::vector<std::array<double, 3>> sums;  // value, n1, n2
    const double f1 = std::pow(hbar, s1.gamma), f2 = std::pow(hbar, s2.gamma);
    for (std::size_t n1 = 1; n1 <= sp1.values.size(); ++n1) {
        double t1 = f1 * sp1.a(n1);
        if (t1 > window_hi + tol) break;
        for (std::size_t n2 = 1; n2 <= sp2.values.size(); ++n2) {
            double t = t1 + f2 * sp2.a(n2);
            if (t > window_hi + tol) break;
            sums.push_back({t, double(n1), double(n2)});
        }
    }
    CrossValidation cv;
    cv.all_matched = true;
    for (double lam : lambdas_2d) {
        TensorMatch m;
        m.lambda_2d = lam;
        m.gap = std::numeric_limits<double>::infinity();
        for (const auto& s : sums) {
            double g = std::abs(lam - s[0]);
            if (g < m.gap) {
                m.gap = g;
                m.tensor = s[0];
                m.n1 = std::size_t(s[1]);
                m.n2 = std::size_t(s[2]);
            }
        }
        m.matched = m.gap <= tol;
        cv.all_matched = cv.all_matched && m.matched;
        cv.max_gap = std::max(cv.max_gap, std::isfinite(m.gap) ? m.gap : 1e300);
        cv.rows.push_back(m);
    }
    return cv;
}

}  // namespace sclab
