#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "common.hpp"
#include "potentials.hpp"

namespace sclab {

// Tensor-product Dirichlet grid. Interior points only:
// x_j(i) = lo_j + (i+1) h_j, i = 0..m_j-1. Row-major over axes in
// declaration order (axis 1 fastest in d=2).
struct Grid {
    int d = 1;
    std::array<double, 2> lo{0.0, 0.0};
    std::array<double, 2> hi{0.0, 0.0};
    std::array<std::size_t, 2> m{0, 1};

    double h(int axis) const { return (hi[axis] - lo[axis]) / double(m[axis] + 1); }
    double weight() const { return d == 1 ? h(0) : h(0) * h(1); }
    std::size_t size() const { return m[0] * (d == 1 ? 1 : m[1]); }
    std::size_t cols() const { return d == 1 ? 1 : m[1]; }
    double coord(int axis, std::size_t i) const { return lo[axis] + double(i + 1) * h(axis); }
    std::size_t index(std::size_t i, std::size_t j) const { return i * cols() + j; }
    Point point(std::size_t flat) const {
        if (d == 1) return Point{coord(0, flat), 0.0};
        return Point{coord(0, flat / m[1]), coord(1, flat % m[1])};
    }
    bool operator==(const Grid& o) const {
        return d == o.d && lo == o.lo && hi == o.hi && m == o.m;
    }
};

struct ScalarField {
    Grid grid;
    std::vector<double> a;

    ScalarField() = default;
    explicit ScalarField(const Grid& g) : grid(g), a(g.size(), 0.0) {}
};

struct ResolutionPolicy {
    double points_per_wavelength = 8.0;
    double box_margin_factor = 1.5;
    std::size_t max_points = 4000000;
    int refinement = 1;
};

inline void check_same_grid(const Grid& a, const Grid& b) {
    if (!(a == b)) throw error("grid mismatch");
}

namespace detail {

struct BoxScan {
    std::array<double, 2> mn, mx;
};

// Expanding lattice scan for the bounding box of {v < level}. Errors if the
// allowed set still touches the scan boundary at the largest scale.
inline BoxScan locate_allowed_box(const PotentialModel& v, double level) {
    const std::size_t n = 257;
    for (double R = 1.0; R <= 1.0e5; R *= 2.0) {
        double cell = 2.0 * R / double(n - 1);
        BoxScan box{{R, R}, {-R, -R}};
        bool any = false, edge = false;
        auto visit = [&](const Point& p, bool boundary) {
            if (v.value(p) < level) {
                if (boundary) { edge = true; return; }
                any = true;
                for (int ax = 0; ax < v.d; ++ax) {
                    box.mn[ax] = std::min(box.mn[ax], p[ax]);
                    box.mx[ax] = std::max(box.mx[ax], p[ax]);
                }
            }
        };
        if (v.d == 1) {
            for (std::size_t i = 0; i < n; ++i) {
                double x = -R + double(i) * cell;
                visit(Point{x, 0.0}, i == 0 || i == n - 1);
            }
        } else {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    Point p{-R + double(i) * cell, -R + double(j) * cell};
                    visit(p, i == 0 || i == n - 1 || j == 0 || j == n - 1);
                }
        }
        if (edge || !any) continue;
        for (int ax = 0; ax < v.d; ++ax) {
            box.mn[ax] -= cell;
            box.mx[ax] += cell;
        }
        return box;
    }
    throw error("allowed region unbounded or not locatable by sampling");
}

}  // namespace detail

// Box containing {v <= lambda0 + eps0} enlarged by the margin factor, with
// spacing giving at least points_per_wavelength points per local de Broglie
// wavelength 2*pi*hbar/sqrt(lambda0).
inline Grid build_grid(const PotentialModel& v, double lambda0, double eps0, double hbar,
                       const ResolutionPolicy& policy) {
    if (policy.points_per_wavelength < 4.0)
        throw config_error("points_per_wavelength must be >= 4");
    if (!(lambda0 > 0.0)) throw config_error("lambda0 must be positive");
    if (!(hbar > 0.0)) throw config_error("hbar must be positive");
    if (policy.refinement < 1) throw config_error("refinement must be >= 1");
    if (lambda0 + eps0 >= v.v_infinity_floor)
        throw config_error("lambda0 + eps0 not below the potential floor at infinity");

    auto box = detail::locate_allowed_box(v, lambda0 + eps0);
    double h_target = 2.0 * M_PI * hbar / (policy.points_per_wavelength * std::sqrt(lambda0));
    h_target /= double(policy.refinement);

    Grid g;
    g.d = v.d;
    std::size_t total = 1;
    for (int ax = 0; ax < v.d; ++ax) {
        double c = 0.5 * (box.mn[ax] + box.mx[ax]);
        double half = 0.5 * (box.mx[ax] - box.mn[ax]) * policy.box_margin_factor;
        g.lo[ax] = c - half;
        g.hi[ax] = c + half;
        std::size_t mp1 = std::size_t(std::ceil(2.0 * half / h_target));
        std::size_t m = std::max<std::size_t>(mp1 >= 2 ? mp1 - 1 : 8, 8);
        g.m[ax] = m;
        total *= m;
    }
    if (g.d == 1) g.m[1] = 1;
    if (total > policy.max_points) throw budget_error(total, policy.max_points);
    return g;
}

inline ScalarField sample_potential(const PotentialModel& v, const Grid& g) {
    ScalarField f(g);
    for (std::size_t i = 0; i < g.size(); ++i) f.a[i] = v.value(g.point(i));
    return f;
}

}  // namespace sclab
