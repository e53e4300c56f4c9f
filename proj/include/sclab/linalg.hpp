#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "operators.hpp"

namespace sclab {

struct InertiaResult {
    std::size_t below = 0;
    bool reliable = false;
};

// Eigenvalues of the symmetric tridiagonal (diag, off) strictly below sigma,
// by the Sturm-sequence LDL^T pivot count.
inline std::size_t sturm_count_below(const std::vector<double>& diag,
                                     const std::vector<double>& off, double sigma) {
    std::size_t count = 0;
    double d = 1.0;
    double scale = 1.0;
    for (double a : diag) scale = std::max(scale, std::abs(a));
    const double tiny = scale * 1e-30;
    for (std::size_t i = 0; i < diag.size(); ++i) {
        double prev = d;
        d = diag[i] - sigma;
        if (i > 0) d -= off[i - 1] * off[i - 1] / prev;
        if (d == 0.0) d = -tiny;
        if (d < 0.0) ++count;
    }
    return count;
}

namespace detail {

// Banded LDL^T pivot count with a ring buffer of the last b factor rows, so
// memory stays O(b^2) for any n. row_fill(i, out) writes A[i][i-b..i] into
// out[0..b]. Returns false on a pivot too small to trust.
inline bool banded_count_below(std::size_t n, std::size_t b,
                               const std::function<void(std::size_t, double*)>& row_fill,
                               double pivot_tol, std::size_t& count_out) {
    // Row r lives in ring slot r % (b+1); slots for rows i-b..i are distinct.
    // Row storage: slot[t] = L[r][column r-b+t], t = 0..b-1.
    const std::size_t ring = b + 1;
    std::vector<std::vector<double>> Lring(ring, std::vector<double>(b, 0.0));
    std::vector<double> Dring(ring, 0.0), arow(b + 1);
    auto col_slot = [b](std::size_t row, std::size_t col) {
        return std::size_t((long long)col - (long long)row + (long long)b);
    };
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        row_fill(i, arow.data());
        std::vector<double>& Li = Lring[i % ring];
        const std::size_t k0 = (i >= b) ? i - b : 0;
        for (std::size_t t = 0; t < b; ++t) {
            if (i < b && t < b - i) { Li[t] = 0.0; continue; }
            std::size_t j = i - b + t;
            double s = arow[t];
            const std::vector<double>& Lj = Lring[j % ring];
            for (std::size_t k = k0; k < j; ++k)
                s -= Li[col_slot(i, k)] * Dring[k % ring] * Lj[col_slot(j, k)];
            Li[t] = s / Dring[j % ring];
        }
        double s = arow[b];
        for (std::size_t k = k0; k < i; ++k) {
            double lik = Li[col_slot(i, k)];
            s -= lik * lik * Dring[k % ring];
        }
        if (std::abs(s) < pivot_tol) return false;
        if (s < 0.0) ++count;
        Dring[i % ring] = s;
    }
    count_out = count;
    return true;
}

}  // namespace detail

// Number of eigenvalues of the discrete H = hbar^2(-Delta) + v below sigma.
// 2D uses the banded path and retries with nudged shifts on pivot breakdown;
// an unresolvable breakdown is reported as unreliable rather than guessed.
inline InertiaResult inertia_below(const Grid& g, const ScalarField& v, double hbar,
                                   double sigma) {
    check_same_grid(g, v.grid);
    InertiaResult res;
    const double hb2 = hbar * hbar;
    if (g.d == 1) {
        const double c = hb2 / (g.h(0) * g.h(0));
        std::vector<double> diag(g.m[0]);
        for (std::size_t i = 0; i < g.m[0]; ++i) diag[i] = 2.0 * c + v.a[i];
        std::vector<double> off(g.m[0] >= 1 ? g.m[0] - 1 : 0, -c);
        res.below = sturm_count_below(diag, off, sigma);
        res.reliable = true;
        return res;
    }
    const std::size_t m0 = g.m[0], m1 = g.m[1], n = g.size();
    const double c0 = hb2 / (g.h(0) * g.h(0)), c1 = hb2 / (g.h(1) * g.h(1));
    double scale = 2.0 * (c0 + c1);
    for (double x : v.a) scale = std::max(scale, std::abs(x));
    for (int attempt = 0; attempt < 5; ++attempt) {
        double shift = sigma + double(attempt) * 1e-11 * scale;
        auto fill = [&](std::size_t i, double* out) {
            for (std::size_t t = 0; t <= m1; ++t) out[t] = 0.0;
            out[0] = (i >= m1) ? -c0 : 0.0;
            out[m1 - 1] = (i % m1 != 0) ? -c1 : 0.0;
            out[m1] = 2.0 * (c0 + c1) + v.a[i] - shift;
        };
        std::size_t cnt = 0;
        if (detail::banded_count_below(n, m1, fill, 1e-13 * scale, cnt)) {
            res.below = cnt;
            res.reliable = true;
            return res;
        }
    }
    res.reliable = false;
    return res;
}

inline std::size_t count_in_window(const Grid& g, const ScalarField& v, double hbar,
                                   double lo, double hi, bool& reliable) {
    InertiaResult a = inertia_below(g, v, hbar, lo);
    InertiaResult b = inertia_below(g, v, hbar, hi);
    reliable = a.reliable && b.reliable;
    return (b.below >= a.below) ? b.below - a.below : 0;
}

}  // namespace sclab
