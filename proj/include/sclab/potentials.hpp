#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "common.hpp"

namespace sclab {

// Confining potential with min v = 0. Gradients are analytic; the catalog
// factories fill every field. well_centers lists the minima used as x_n.
struct PotentialModel {
    std::string name;
    int d = 1;
    std::function<double(const Point&)> value;
    std::function<Point(const Point&)> gradient;
    std::optional<double> homogeneity;
    std::vector<Point> well_centers;
    double v_infinity_floor = std::numeric_limits<double>::infinity();
    std::map<std::string, double> params;
};

inline Point fd_gradient(const PotentialModel& m, const Point& x) {
    Point g{0.0, 0.0};
    for (int j = 0; j < m.d; ++j) {
        double step = 1e-5 * (1.0 + std::abs(x[j]));
        Point xp = x, xm = x;
        xp[j] += step;
        xm[j] -= step;
        g[j] = (m.value(xp) - m.value(xm)) / (2.0 * step);
    }
    return g;
}

inline PotentialModel make_power_well(int d, double alpha) {
    if (d != 1 && d != 2) throw config_error("power well: dimension must be 1 or 2");
    if (!(alpha > 0.0)) throw config_error("power well: exponent must be positive");
    PotentialModel m;
    m.name = "power";
    m.d = d;
    m.homogeneity = alpha;
    m.well_centers = {Point{0.0, 0.0}};
    m.params = {{"alpha", alpha}, {"d", double(d)}};
    m.value = [d, alpha](const Point& x) {
        double r = (d == 1) ? std::abs(x[0]) : std::hypot(x[0], x[1]);
        return std::pow(r, alpha);
    };
    m.gradient = [d, alpha](const Point& x) {
        double r = (d == 1) ? std::abs(x[0]) : std::hypot(x[0], x[1]);
        if (r == 0.0) return Point{0.0, 0.0};
        double f = alpha * std::pow(r, alpha - 2.0);
        Point g{f * x[0], f * x[1]};
        if (d == 1) g[1] = 0.0;
        return g;
    };
    return m;
}

inline PotentialModel make_separable_power(double alpha1, double alpha2) {
    if (!(alpha1 > 0.0) || !(alpha2 > 0.0))
        throw config_error("separable power: exponents must be positive");
    PotentialModel m;
    m.name = "separable_power";
    m.d = 2;
    if (alpha1 == alpha2) m.homogeneity = alpha1;
    m.well_centers = {Point{0.0, 0.0}};
    m.params = {{"alpha1", alpha1}, {"alpha2", alpha2}};
    m.value = [alpha1, alpha2](const Point& x) {
        return std::pow(std::abs(x[0]), alpha1) + std::pow(std::abs(x[1]), alpha2);
    };
    m.gradient = [alpha1, alpha2](const Point& x) {
        auto part = [](double t, double a) {
            if (t == 0.0) return 0.0;
            return a * std::pow(std::abs(t), a - 1.0) * (t > 0.0 ? 1.0 : -1.0);
        };
        return Point{part(x[0], alpha1), part(x[1], alpha2)};
    };
    return m;
}

inline PotentialModel make_double_well(double gap, double scale) {
    if (!(gap > 0.0)) throw config_error("double well: gap must be positive");
    if (!(scale > 0.0)) throw config_error("double well: scale must be positive");
    PotentialModel m;
    m.name = "double_well";
    m.d = 1;
    m.well_centers = {Point{-gap, 0.0}, Point{gap, 0.0}};
    m.params = {{"gap", gap}, {"scale", scale}};
    double g2 = gap * gap;
    m.value = [scale, g2](const Point& x) { return scale * sq(x[0] * x[0] - g2); };
    m.gradient = [scale, g2](const Point& x) {
        return Point{4.0 * scale * x[0] * (x[0] * x[0] - g2), 0.0};
    };
    return m;
}

// v = v0 ln^2|x| in d=2. Values inside |x| < 1e-6 are clamped to the value on
// that circle (gradient 0 there); exact origin is a domain error.
inline PotentialModel make_log_squared(double v0) {
    if (!(v0 > 0.0)) throw config_error("log well: v0 must be positive");
    PotentialModel m;
    m.name = "log_squared";
    m.d = 2;
    m.well_centers = {Point{1.0, 0.0}};
    m.params = {{"v0", v0}};
    constexpr double rmin = 1e-6;
    m.value = [v0](const Point& x) {
        double r = std::hypot(x[0], x[1]);
        if (r == 0.0) throw error("log_squared: value at origin undefined");
        if (r < rmin) r = rmin;
        return v0 * sq(std::log(r));
    };
    m.gradient = [v0](const Point& x) {
        double r = std::hypot(x[0], x[1]);
        if (r == 0.0) throw error("log_squared: gradient at origin undefined");
        if (r < rmin) return Point{0.0, 0.0};
        double f = 2.0 * v0 * std::log(r) / (r * r);
        return Point{f * x[0], f * x[1]};
    };
    return m;
}

inline PotentialModel make_potential(const std::string& type,
                                     const std::map<std::string, double>& p) {
    auto get = [&p](const std::string& key, double dflt) {
        auto it = p.find(key);
        return it == p.end() ? dflt : it->second;
    };
    if (type == "power") return make_power_well(int(get("d", 1)), get("alpha", 2.0));
    if (type == "harmonic") return make_power_well(int(get("d", 1)), 2.0);
    if (type == "quartic") return make_power_well(int(get("d", 1)), 4.0);
    if (type == "double_well") return make_double_well(get("gap", 1.0), get("scale", 1.0));
    if (type == "separable_power")
        return make_separable_power(get("alpha1", 4.0), get("alpha2", 2.0));
    if (type == "log_squared") return make_log_squared(get("v0", 1.0));
    throw config_error("unknown potential type '" + type + "'");
}

}  // namespace sclab
