#pragma once

#include <algorithm>
#include <vector>

#include "eigensolver.hpp"
#include "operators.hpp"

namespace sclab {

struct EnergyBalance {
    double K = 0.0;
    double U = 0.0;
    double lambda = 0.0;
    double closure = 0.0;
    double K_ratio = 0.0;
    double U_ratio = 0.0;
};

inline double potential_energy(const Grid& g, const ScalarField& v, const ScalarField& psi) {
    check_same_grid(g, v.grid);
    check_same_grid(g, psi.grid);
    std::vector<double> terms(psi.a.size());
    for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = v.a[i] * sq(psi.a[i]);
    return g.weight() * pairwise_sum(terms);
}

inline double potential_energy(const Grid& g, const PotentialModel& v, const ScalarField& psi) {
    return potential_energy(g, sample_potential(v, g), psi);
}

inline EnergyBalance energy_balance(const Grid& g, const ScalarField& v, double hbar,
                                    const EigenPair& pair) {
    EnergyBalance b;
    b.K = kinetic_energy(g, hbar, pair.psi);
    b.U = potential_energy(g, v, pair.psi);
    b.lambda = pair.lambda;
    b.closure = b.K + b.U - b.lambda;
    b.K_ratio = b.K / b.lambda;
    b.U_ratio = b.U / b.lambda;
    return b;
}

inline EnergyBalance energy_balance(const Grid& g, const PotentialModel& v, double hbar,
                                    const EigenPair& pair) {
    return energy_balance(g, sample_potential(v, g), hbar, pair);
}

struct KatoSample {
    double hbar = 0.0;
    double lambda = 0.0;
    double K = 0.0;
};

struct KatoRow {
    double hbar = 0.0;
    double lhs = 0.0;       // finite-difference d lambda / d hbar
    double rhs = 0.0;       // 2 K / hbar
    double rel_gap = 0.0;
    bool one_sided = false;
};

// Derivative identity along one eigenvalue branch: d lambda/d hbar = 2K/hbar.
// Central differences at interior samples, one-sided (flagged) at the ends.
inline std::vector<KatoRow> kato_derivative_check(std::vector<KatoSample> branch) {
    if (branch.size() < 3) throw error("kato check: branch too short (need >= 3 samples)");
    std::sort(branch.begin(), branch.end(),
              [](const KatoSample& a, const KatoSample& b) { return a.hbar < b.hbar; });
    std::vector<KatoRow> rows;
    for (std::size_t i = 0; i < branch.size(); ++i) {
        KatoRow r;
        r.hbar = branch[i].hbar;
        if (i == 0) {
            r.lhs = (branch[1].lambda - branch[0].lambda) / (branch[1].hbar - branch[0].hbar);
            r.one_sided = true;
        } else if (i + 1 == branch.size()) {
            r.lhs = (branch[i].lambda - branch[i - 1].lambda) /
                    (branch[i].hbar - branch[i - 1].hbar);
            r.one_sided = true;
        } else {
            r.lhs = (branch[i + 1].lambda - branch[i - 1].lambda) /
                    (branch[i + 1].hbar - branch[i - 1].hbar);
        }
        r.rhs = 2.0 * branch[i].K / branch[i].hbar;
        r.rel_gap = std::abs(r.lhs - r.rhs) / std::max(std::abs(r.rhs), 1e-300);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace sclab
