#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <sclab/linalg.hpp>
#include <sclab/potentials.hpp>

using namespace sclab;

namespace {

std::size_t dense_count_below(const Eigen::VectorXd& evals, double sigma) {
    std::size_t c = 0;
    for (Eigen::Index i = 0; i < evals.size(); ++i)
        if (evals(i) < sigma) ++c;
    return c;
}

Eigen::VectorXd dense_tridiag_eigenvalues(const std::vector<double>& diag,
                                          const std::vector<double>& off) {
    Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(diag.data(), Eigen::Index(diag.size()));
    Eigen::VectorXd e = Eigen::Map<const Eigen::VectorXd>(off.data(), Eigen::Index(off.size()));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

Eigen::MatrixXd dense_operator(const Grid& g, const ScalarField& v, double hbar) {
    const std::size_t n = g.size();
    const double hb2 = hbar * hbar;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
    if (g.d == 1) {
        const double c = hb2 / sq(g.h(0));
        for (std::size_t i = 0; i < n; ++i) {
            A(Eigen::Index(i), Eigen::Index(i)) = 2.0 * c + v.a[i];
            if (i + 1 < n) A(Eigen::Index(i), Eigen::Index(i + 1)) = A(Eigen::Index(i + 1), Eigen::Index(i)) = -c;
        }
        return A;
    }
    const std::size_t m0 = g.m[0], m1 = g.m[1];
    const double c0 = hb2 / sq(g.h(0)), c1 = hb2 / sq(g.h(1));
    for (std::size_t i = 0; i < m0; ++i)
        for (std::size_t j = 0; j < m1; ++j) {
            Eigen::Index p = Eigen::Index(i * m1 + j);
            A(p, p) = 2.0 * (c0 + c1) + v.a[i * m1 + j];
            if (i + 1 < m0) A(p, p + Eigen::Index(m1)) = A(p + Eigen::Index(m1), p) = -c0;
            if (j + 1 < m1) A(p, p + 1) = A(p + 1, p) = -c1;
        }
    return A;
}

}  // namespace

TEST_CASE("sturm pivot counts agree with dense eigenvalue counts") {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 12; ++trial) {
        std::size_t n = 5 + std::size_t(rng() % 60);
        std::vector<double> diag(n), off(n - 1);
        for (double& t : diag) t = u(rng);
        for (double& t : off) t = u(rng);
        Eigen::VectorXd ev = dense_tridiag_eigenvalues(diag, off);
        for (int s = 0; s < 8; ++s) {
            double sigma = u(rng) * 2.0;
            CHECK(sturm_count_below(diag, off, sigma) == dense_count_below(ev, sigma));
        }
        // shifts bracketing everything
        CHECK(sturm_count_below(diag, off, -1e6) == 0);
        CHECK(sturm_count_below(diag, off, 1e6) == n);
    }
}

TEST_CASE("banded pivot counts agree with dense counts on 2d operators") {
    std::mt19937_64 rng(202);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    Grid g;
    g.d = 2;
    g.lo = {-1.0, -1.0};
    g.hi = {1.0, 1.0};
    g.m = {7, 9};
    ScalarField v(g);
    for (double& t : v.a) t = u(rng);
    const double hbar = 0.4;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_operator(g, v, hbar));
    const Eigen::VectorXd& ev = es.eigenvalues();

    for (int s = 0; s < 12; ++s) {
        double sigma = ev(0) + (ev(ev.size() - 1) - ev(0)) * double(s) / 11.0 + 1e-7;
        InertiaResult r = inertia_below(g, v, hbar, sigma);
        REQUIRE(r.reliable);
        CHECK(r.below == dense_count_below(ev, sigma));
    }
}

TEST_CASE("1d inertia counts match dense counts for a confining potential") {
    PotentialModel vm = make_power_well(1, 2.0);
    Grid g;
    g.d = 1;
    g.lo = {-6.0, 0.0};
    g.hi = {6.0, 0.0};
    g.m = {220, 1};
    ScalarField v = sample_potential(vm, g);
    const double hbar = 0.5;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_operator(g, v, hbar));
    const Eigen::VectorXd& ev = es.eigenvalues();
    for (double sigma : {0.3, 0.5001, 1.2, 2.0, 3.3, 7.0}) {
        InertiaResult r = inertia_below(g, v, hbar, sigma);
        REQUIRE(r.reliable);
        CHECK(r.below == dense_count_below(ev, sigma));
    }
}

TEST_CASE("window counts are shift differences and certify reliability") {
    PotentialModel vm = make_power_well(1, 2.0);
    Grid g;
    g.d = 1;
    g.lo = {-6.0, 0.0};
    g.hi = {6.0, 0.0};
    g.m = {180, 1};
    ScalarField v = sample_potential(vm, g);
    // harmonic levels at hbar = 0.5 are near 0.5, 1.5, 2.5, ...
    bool ok = false;
    CHECK(count_in_window(g, v, 0.5, 0.4, 1.6, ok) == 2);
    CHECK(ok);
    CHECK(count_in_window(g, v, 0.5, 0.6, 1.4, ok) == 0);
    CHECK(ok);
    CHECK(count_in_window(g, v, 0.5, 0.4, 3.6, ok) == 4);
    CHECK(ok);
    // inverted bounds collapse to zero instead of wrapping
    CHECK(count_in_window(g, v, 0.5, 3.6, 0.4, ok) == 0);
}

TEST_CASE("banded factorization reports breakdown instead of guessing") {
    // A 2x2 block with an exactly zero pivot after one elimination step:
    // A = [[1, 1], [1, 1]] has D = diag(1, 0).
    std::size_t cnt = 982;
    bool ok = detail::banded_count_below(
        2, 1,
        [](std::size_t i, double* out) {
            out[0] = i == 1 ? 1.0 : 0.0;
            out[1] = 1.0;
        },
        1e-13, cnt);
    CHECK_FALSE(ok);
    CHECK(cnt == 982);
}
