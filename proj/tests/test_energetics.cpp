#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sclab/eigensolver.hpp>
#include <sclab/energetics.hpp>
#include <sclab/potentials.hpp>
#include <sclab/regions.hpp>

using namespace sclab;

namespace {

Grid line_grid(double halfwidth, std::size_t m) {
    Grid g;
    g.d = 1;
    g.lo = {-halfwidth, 0.0};
    g.hi = {halfwidth, 0.0};
    g.m = {m, 1};
    return g;
}

SolveResult ground_state(const PotentialModel& vm, const Grid& g, double hbar, double lo,
                         double hi) {
    WindowQuery q;
    q.lambda_lo = lo;
    q.lambda_hi = hi;
    q.seed = 77;
    SolveResult r = solve_window(g, vm, hbar, q);
    REQUIRE(r.status == SolveStatus::ok);
    REQUIRE(!r.pairs.empty());
    return r;
}

}  // namespace

TEST_CASE("kinetic plus potential closes to the eigenvalue") {
    PotentialModel vm = make_power_well(1, 2.0);
    Grid g = line_grid(4.0, 800);
    SolveResult r = ground_state(vm, g, 0.3, 0.2, 1.1);
    for (const EigenPair& p : r.pairs) {
        EnergyBalance eb = energy_balance(g, vm, 0.3, p);
        CHECK(std::abs(eb.closure) < 1e-10 * (1.0 + eb.lambda));
        CHECK(std::abs(eb.closure) <= 10.0 * std::max(p.residual, 1e-12));
        CHECK(eb.K > 0.0);
        CHECK(eb.U > 0.0);
        CHECK(std::abs(eb.K_ratio + eb.U_ratio - 1.0) < 1e-9);
    }
}

TEST_CASE("harmonic states split energy evenly between kinetic and potential") {
    PotentialModel vm = make_power_well(1, 2.0);
    Grid g = line_grid(5.0, 2000);
    SolveResult r = ground_state(vm, g, 0.1, 0.05, 0.75);
    REQUIRE(r.pairs.size() >= 3);
    for (const EigenPair& p : r.pairs) {
        EnergyBalance eb = energy_balance(g, vm, 0.1, p);
        CHECK(std::abs(eb.K_ratio - 0.5) < 2e-4);
        CHECK(std::abs(eb.U_ratio - 0.5) < 2e-4);
    }
}

TEST_CASE("quartic states put two thirds of the energy into kinetic") {
    PotentialModel vm = make_power_well(1, 4.0);
    Grid g = line_grid(2.2, 2400);
    SolveResult r = ground_state(vm, g, 0.05, 0.3, 0.9);
    for (const EigenPair& p : r.pairs) {
        EnergyBalance eb = energy_balance(g, vm, 0.05, p);
        CHECK(std::abs(eb.K_ratio - 4.0 / 6.0) < 5e-4);
        CHECK(std::abs(eb.U_ratio - 2.0 / 6.0) < 5e-4);
    }
}

TEST_CASE("homogeneous ratio deviations are what the balance table reports") {
    std::vector<std::pair<double, EnergyBalance>> sweep;
    EnergyBalance a;
    a.lambda = 1.0;
    a.K = 0.52;
    a.U = 0.48;
    a.K_ratio = 0.52;
    a.U_ratio = 0.48;
    sweep.push_back({0.2, a});
    EnergyBalance b = a;
    b.K_ratio = 0.5;
    b.U_ratio = 0.5;
    sweep.push_back({0.1, b});
    std::vector<BalanceDeviation> rows = prop32_balance_check(sweep, 2.0);
    REQUIRE(rows.size() == 2);
    CHECK(std::abs(rows[0].K_dev - 0.02) < 1e-15);
    CHECK(std::abs(rows[0].U_dev - 0.02) < 1e-15);
    CHECK(rows[1].K_dev == 0.0);
    CHECK(rows[1].U_dev == 0.0);
}

TEST_CASE("eigenvalue derivative in hbar equals twice kinetic over hbar") {
    // fixed grid, exact discrete branch: the identity is Feynman-Hellmann for
    // the discrete operator, so only the finite difference error remains
    PotentialModel vm = make_power_well(1, 2.0);
    Grid g = line_grid(4.0, 1000);
    std::vector<KatoSample> branch;
    for (double hb : {0.295, 0.3, 0.305}) {
        SolveResult r = ground_state(vm, g, hb, 0.2, 0.5);
        KatoSample s;
        s.hbar = hb;
        s.lambda = r.pairs[0].lambda;
        s.K = energy_balance(g, vm, hb, r.pairs[0]).K;
        branch.push_back(s);
    }
    std::vector<KatoRow> rows = kato_derivative_check(branch);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].one_sided);
    CHECK(rows[2].one_sided);
    CHECK_FALSE(rows[1].one_sided);
    CHECK(rows[1].rel_gap < 1e-3);
    // the one-sided rows are first-order accurate, still close here
    CHECK(rows[0].rel_gap < 2e-2);
}

TEST_CASE("derivative check needs at least three samples") {
    std::vector<KatoSample> two(2);
    two[0].hbar = 0.1;
    two[1].hbar = 0.2;
    CHECK_THROWS_AS(kato_derivative_check(two), error);
}

TEST_CASE("derivative rows sort by hbar regardless of input order") {
    std::vector<KatoSample> branch(3);
    branch[0] = {0.3, 3.0, 0.45};
    branch[1] = {0.1, 1.0, 0.15};
    branch[2] = {0.2, 2.0, 0.30};
    std::vector<KatoRow> rows = kato_derivative_check(branch);
    CHECK(rows[0].hbar == 0.1);
    CHECK(rows[1].hbar == 0.2);
    CHECK(rows[2].hbar == 0.3);
    // lambda = 10 hbar and K = 1.5 hbar give lhs = 10, rhs = 2K/hbar = 3
    CHECK(std::abs(rows[1].lhs - 10.0) < 1e-12);
    CHECK(std::abs(rows[1].rhs - 3.0) < 1e-12);
    CHECK(std::abs(rows[1].rel_gap - 7.0 / 3.0) < 1e-12);
}
