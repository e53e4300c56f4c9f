#pragma once

#include <vector>

#include "grid.hpp"

namespace sclab {

// Forward differences on cell faces, one component per axis. Along axis ax the
// face index runs 0..m_ax (both Dirichlet ghost faces included); face k has
// left node k-1 and right node k. Component layouts:
//   d=1: comp[0][k], k = 0..m0
//   d=2: comp[0][k*m1 + j] (k = 0..m0), comp[1][i*(m1+1) + k] (k = 0..m1)
struct GradField {
    Grid grid;
    std::array<std::vector<double>, 2> comp;
};

// Applies -Delta (positive semidefinite): (2f_i - f_{i-1} - f_{i+1})/h^2 per
// axis with zero ghost values.
inline void neg_laplacian_into(const Grid& g, const double* f, double* out) {
    if (g.d == 1) {
        const std::size_t m = g.m[0];
        const double c = 1.0 / (g.h(0) * g.h(0));
        for (std::size_t i = 0; i < m; ++i) {
            double left = i > 0 ? f[i - 1] : 0.0;
            double right = i + 1 < m ? f[i + 1] : 0.0;
            out[i] = c * (2.0 * f[i] - left - right);
        }
        return;
    }
    const std::size_t m0 = g.m[0], m1 = g.m[1];
    const double c0 = 1.0 / (g.h(0) * g.h(0)), c1 = 1.0 / (g.h(1) * g.h(1));
    for (std::size_t i = 0; i < m0; ++i) {
        const double* row = f + i * m1;
        const double* up = i > 0 ? row - m1 : nullptr;
        const double* dn = i + 1 < m0 ? row + m1 : nullptr;
        double* o = out + i * m1;
        for (std::size_t j = 0; j < m1; ++j) {
            double lft = j > 0 ? row[j - 1] : 0.0;
            double rgt = j + 1 < m1 ? row[j + 1] : 0.0;
            double vert = (up ? up[j] : 0.0) + (dn ? dn[j] : 0.0);
            o[j] = c0 * (2.0 * row[j] - vert) + c1 * (2.0 * row[j] - lft - rgt);
        }
    }
}

inline ScalarField laplacian_apply(const Grid& g, const ScalarField& f) {
    check_same_grid(g, f.grid);
    ScalarField out(g);
    neg_laplacian_into(g, f.a.data(), out.a.data());
    return out;
}

inline GradField gradient_apply(const Grid& g, const ScalarField& f) {
    check_same_grid(g, f.grid);
    GradField out;
    out.grid = g;
    if (g.d == 1) {
        const std::size_t m = g.m[0];
        const double ih = 1.0 / g.h(0);
        out.comp[0].resize(m + 1);
        for (std::size_t k = 0; k <= m; ++k) {
            double right = k < m ? f.a[k] : 0.0;
            double left = k > 0 ? f.a[k - 1] : 0.0;
            out.comp[0][k] = (right - left) * ih;
        }
        return out;
    }
    const std::size_t m0 = g.m[0], m1 = g.m[1];
    const double ih0 = 1.0 / g.h(0), ih1 = 1.0 / g.h(1);
    out.comp[0].resize((m0 + 1) * m1);
    for (std::size_t k = 0; k <= m0; ++k)
        for (std::size_t j = 0; j < m1; ++j) {
            double right = k < m0 ? f.a[k * m1 + j] : 0.0;
            double left = k > 0 ? f.a[(k - 1) * m1 + j] : 0.0;
            out.comp[0][k * m1 + j] = (right - left) * ih0;
        }
    out.comp[1].resize(m0 * (m1 + 1));
    for (std::size_t i = 0; i < m0; ++i)
        for (std::size_t k = 0; k <= m1; ++k) {
            double right = k < m1 ? f.a[i * m1 + k] : 0.0;
            double left = k > 0 ? f.a[i * m1 + k - 1] : 0.0;
            out.comp[1][i * (m1 + 1) + k] = (right - left) * ih1;
        }
    return out;
}

inline double integrate(const Grid& g, const ScalarField& f) {
    check_same_grid(g, f.grid);
    return g.weight() * pairwise_sum(f.a);
}

inline double inner(const Grid& g, const ScalarField& f, const ScalarField& p) {
    check_same_grid(g, f.grid);
    check_same_grid(g, p.grid);
    std::vector<double> prod(f.a.size());
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = f.a[i] * p.a[i];
    return g.weight() * pairwise_sum(prod);
}

inline void hamiltonian_into(const Grid& g, const double* v, double hbar2, const double* f,
                             double* out) {
    neg_laplacian_into(g, f, out);
    const std::size_t n = g.size();
    for (std::size_t i = 0; i < n; ++i) out[i] = hbar2 * out[i] + v[i] * f[i];
}

inline ScalarField hamiltonian_apply(const Grid& g, const ScalarField& v, double hbar,
                                     const ScalarField& f) {
    check_same_grid(g, v.grid);
    check_same_grid(g, f.grid);
    ScalarField out(g);
    hamiltonian_into(g, v.a.data(), hbar * hbar, f.a.data(), out.a.data());
    return out;
}

inline ScalarField hamiltonian_apply(const Grid& g, const PotentialModel& v, double hbar,
                                     const ScalarField& f) {
    return hamiltonian_apply(g, sample_potential(v, g), hbar, f);
}

// hbar^2 sum_axes ||D_j psi||^2 w; equals <hbar^2(-Delta)psi, psi> w exactly
// (summation by parts).
inline double kinetic_energy(const Grid& g, double hbar, const ScalarField& psi) {
    GradField d = gradient_apply(g, psi);
    double s = 0.0;
    for (int ax = 0; ax < g.d; ++ax) {
        std::vector<double> sqv(d.comp[ax].size());
        for (std::size_t i = 0; i < sqv.size(); ++i) sqv[i] = sq(d.comp[ax][i]);
        s += pairwise_sum(sqv);
    }
    return hbar * hbar * g.weight() * s;
}

// Kinetic contribution restricted to a node mask; a face contributes when its
// left node exists and is inside the mask.
inline double kinetic_energy_masked(const Grid& g, double hbar, const ScalarField& psi,
                                    const std::vector<std::uint8_t>& mask) {
    if (mask.size() != g.size()) throw error("mask size mismatch");
    GradField d = gradient_apply(g, psi);
    std::vector<double> terms;
    terms.reserve(g.size() * g.d);
    if (g.d == 1) {
        for (std::size_t k = 1; k <= g.m[0]; ++k)
            if (mask[k - 1]) terms.push_back(sq(d.comp[0][k]));
    } else {
        const std::size_t m0 = g.m[0], m1 = g.m[1];
        for (std::size_t k = 1; k <= m0; ++k)
            for (std::size_t j = 0; j < m1; ++j)
                if (mask[(k - 1) * m1 + j]) terms.push_back(sq(d.comp[0][k * m1 + j]));
        for (std::size_t i = 0; i < m0; ++i)
            for (std::size_t k = 1; k <= m1; ++k)
                if (mask[i * m1 + k - 1]) terms.push_back(sq(d.comp[1][i * (m1 + 1) + k]));
    }
    return hbar * hbar * g.weight() * pairwise_sum(terms);
}

inline double integrate_masked(const Grid& g, const ScalarField& f,
                               const std::vector<std::uint8_t>& mask) {
    if (mask.size() != g.size()) throw error("mask size mismatch");
    std::vector<double> terms;
    terms.reserve(f.a.size());
    for (std::size_t i = 0; i < f.a.size(); ++i)
        if (mask[i]) terms.push_back(f.a[i]);
    return g.weight() * pairwise_sum(terms);
}

}  // namespace sclab
