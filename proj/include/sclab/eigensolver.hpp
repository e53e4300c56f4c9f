#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "linalg.hpp"
#include "operators.hpp"

namespace sclab {

struct WindowQuery {
    double lambda_lo = 0.0;
    double lambda_hi = 1.0;
    std::size_t max_pairs = 64;
    double tol = 1e-8;
    std::uint64_t seed = 1234;
    std::size_t max_matvecs = 200000000;
};

struct EigenPair {
    double lambda = 0.0;
    ScalarField psi;
    double residual = 0.0;
    double hbar = 0.0;
    int branch_id = -1;
};

enum class SolveStatus { ok, empty, uncertified, not_converged };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::ok: return "ok";
        case SolveStatus::empty: return "empty";
        case SolveStatus::uncertified: return "uncertified";
        case SolveStatus::not_converged: return "not_converged";
    }
    return "?";
}

struct SolveResult {
    std::vector<EigenPair> pairs;
    SolveStatus status = SolveStatus::ok;
    std::size_t window_count_expected = 0;
    bool count_reliable = false;
    std::size_t matvec_count = 0;
    std::uint64_t seed = 0;
    std::string message;
};

inline std::atomic<std::uint64_t> solve_invocations{0};

// Piecewise-linear resample between grids sharing a box (zero beyond the
// Dirichlet boundary). Used for ladder prolongation and branch overlap.
inline ScalarField resample_linear(const ScalarField& src, const Grid& dst) {
    const Grid& gs = src.grid;
    ScalarField out(dst);
    auto axis_weights = [](const Grid& from, const Grid& to, int ax,
                           std::vector<std::array<double, 2>>& wts,
                           std::vector<std::ptrdiff_t>& idx) {
        const double h = from.h(ax);
        const std::size_t mt = to.m[ax];
        wts.resize(mt);
        idx.resize(mt);
        for (std::size_t i = 0; i < mt; ++i) {
            double s = (to.coord(ax, i) - from.lo[ax]) / h - 1.0;
            double fl = std::floor(s);
            std::ptrdiff_t j = std::ptrdiff_t(fl);
            double f = s - fl;
            idx[i] = j;
            wts[i] = {1.0 - f, f};
        }
    };
    auto fetch1 = [&](std::ptrdiff_t j) {
        return (j >= 0 && j < std::ptrdiff_t(gs.m[0])) ? src.a[std::size_t(j)] : 0.0;
    };
    if (dst.d == 1) {
        std::vector<std::array<double, 2>> w0;
        std::vector<std::ptrdiff_t> i0;
        axis_weights(gs, dst, 0, w0, i0);
        for (std::size_t i = 0; i < dst.m[0]; ++i)
            out.a[i] = w0[i][0] * fetch1(i0[i]) + w0[i][1] * fetch1(i0[i] + 1);
        return out;
    }
    std::vector<std::array<double, 2>> w0, w1;
    std::vector<std::ptrdiff_t> i0, i1;
    axis_weights(gs, dst, 0, w0, i0);
    axis_weights(gs, dst, 1, w1, i1);
    auto fetch2 = [&](std::ptrdiff_t r, std::ptrdiff_t c) {
        if (r < 0 || c < 0 || r >= std::ptrdiff_t(gs.m[0]) || c >= std::ptrdiff_t(gs.m[1]))
            return 0.0;
        return src.a[std::size_t(r) * gs.m[1] + std::size_t(c)];
    };
    for (std::size_t i = 0; i < dst.m[0]; ++i)
        for (std::size_t j = 0; j < dst.m[1]; ++j) {
            double v00 = fetch2(i0[i], i1[j]), v01 = fetch2(i0[i], i1[j] + 1);
            double v10 = fetch2(i0[i] + 1, i1[j]), v11 = fetch2(i0[i] + 1, i1[j] + 1);
            out.a[i * dst.m[1] + j] = w0[i][0] * (w1[j][0] * v00 + w1[j][1] * v01) +
                                      w0[i][1] * (w1[j][0] * v10 + w1[j][1] * v11);
        }
    return out;
}

namespace detail {

struct LevelOp {
    Grid grid;
    ScalarField v;
    double hbar2 = 0.0;
    std::size_t* matvecs = nullptr;

    void apply(const double* x, double* y) const {
        hamiltonian_into(grid, v.a.data(), hbar2, x, y);
        ++(*matvecs);
    }
};

inline Eigen::SparseMatrix<double> assemble_shifted(const LevelOp& op, double sigma) {
    const Grid& g = op.grid;
    const Eigen::Index n = Eigen::Index(g.size());
    std::vector<Eigen::Triplet<double>> trip;
    if (g.d == 1) {
        const double c = op.hbar2 / (g.h(0) * g.h(0));
        trip.reserve(std::size_t(3 * n));
        for (Eigen::Index i = 0; i < n; ++i) {
            trip.emplace_back(i, i, 2.0 * c + op.v.a[std::size_t(i)] - sigma);
            if (i + 1 < n) {
                trip.emplace_back(i, i + 1, -c);
                trip.emplace_back(i + 1, i, -c);
            }
        }
    } else {
        const double c0 = op.hbar2 / (g.h(0) * g.h(0)), c1 = op.hbar2 / (g.h(1) * g.h(1));
        const Eigen::Index m0 = Eigen::Index(g.m[0]), m1 = Eigen::Index(g.m[1]);
        trip.reserve(std::size_t(5 * n));
        for (Eigen::Index i = 0; i < m0; ++i)
            for (Eigen::Index j = 0; j < m1; ++j) {
                Eigen::Index p = i * m1 + j;
                trip.emplace_back(p, p, 2.0 * (c0 + c1) + op.v.a[std::size_t(p)] - sigma);
                if (i + 1 < m0) {
                    trip.emplace_back(p, p + m1, -c0);
                    trip.emplace_back(p + m1, p, -c0);
                }
                if (j + 1 < m1) {
                    trip.emplace_back(p, p + 1, -c1);
                    trip.emplace_back(p + 1, p, -c1);
                }
            }
    }
    Eigen::SparseMatrix<double> A(n, n);
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

// Sparse LU of H - sigma*I; interior-window states become dominant under
// repeated solves. A nudged retry covers the (unlikely) singular shift.
struct ShiftSolver {
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    double sigma = 0.0;

    void factor(const LevelOp& op, double sigma0, double halfw) {
        for (int tries = 0; tries < 3; ++tries) {
            sigma = sigma0 + double(tries) * 1e-3 * halfw;
            Eigen::SparseMatrix<double> A = assemble_shifted(op, sigma);
            lu.compute(A);
            if (lu.info() == Eigen::Success) return;
        }
        throw error("shifted factorization failed near " + format_double(sigma0));
    }
};

struct RitzInfo {
    Eigen::VectorXd theta;
    Eigen::VectorXd resid;
};

inline RitzInfo rayleigh_ritz(const LevelOp& op, Eigen::MatrixXd& X) {
    const Eigen::Index n = X.rows(), b = X.cols();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(X);
    X = qr.householderQ() * Eigen::MatrixXd::Identity(n, b);
    Eigen::MatrixXd HX(n, b);
    for (Eigen::Index j = 0; j < b; ++j) op.apply(X.col(j).data(), HX.col(j).data());
    Eigen::MatrixXd S = X.transpose() * HX;
    S = 0.5 * (S + S.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    X = (X * es.eigenvectors()).eval();
    HX = (HX * es.eigenvectors()).eval();
    RitzInfo info;
    info.theta = es.eigenvalues();
    info.resid.resize(b);
    for (Eigen::Index j = 0; j < b; ++j)
        info.resid(j) = (HX.col(j) - info.theta(j) * X.col(j)).norm();
    return info;
}

inline Grid coarsen(const Grid& g) {
    Grid c = g;
    for (int ax = 0; ax < g.d; ++ax) c.m[ax] = std::max<std::size_t>(g.m[ax] / 2, 8);
    if (c.d == 1) c.m[1] = 1;
    return c;
}

// Full dense solve at the coarsest ladder level.
inline void dense_spectrum(const LevelOp& op, Eigen::VectorXd& vals, Eigen::MatrixXd& vecs) {
    const Grid& g = op.grid;
    const std::size_t n = g.size();
    if (g.d == 1) {
        const double c = op.hbar2 / (g.h(0) * g.h(0));
        Eigen::VectorXd diag(n), sub(n - 1);
        for (std::size_t i = 0; i < n; ++i) diag(Eigen::Index(i)) = 2.0 * c + op.v.a[i];
        sub.setConstant(-c);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        es.computeFromTridiagonal(diag, sub);
        vals = es.eigenvalues();
        vecs = es.eigenvectors();
        return;
    }
    const double c0 = op.hbar2 / (g.h(0) * g.h(0)), c1 = op.hbar2 / (g.h(1) * g.h(1));
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
    const std::size_t m0 = g.m[0], m1 = g.m[1];
    for (std::size_t i = 0; i < m0; ++i)
        for (std::size_t j = 0; j < m1; ++j) {
            Eigen::Index p = Eigen::Index(i * m1 + j);
            A(p, p) = 2.0 * (c0 + c1) + op.v.a[std::size_t(p)];
            if (i + 1 < m0) A(p, p + Eigen::Index(m1)) = A(p + Eigen::Index(m1), p) = -c0;
            if (j + 1 < m1) A(p, p + 1) = A(p + 1, p) = -c1;
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    vals = es.eigenvalues();
    vecs = es.eigenvectors();
}

}  // namespace detail

inline SolveResult solve_window(const Grid& grid, const PotentialModel& vm, double hbar,
                                const WindowQuery& q) {
    if (!(q.lambda_lo < q.lambda_hi)) throw config_error("window: lambda_lo must be < lambda_hi");
    solve_invocations.fetch_add(1, std::memory_order_relaxed);

    SolveResult res;
    res.seed = q.seed;
    const double sigma = 0.5 * (q.lambda_lo + q.lambda_hi);
    const double halfw = 0.5 * (q.lambda_hi - q.lambda_lo);

    ScalarField vfine = sample_potential(vm, grid);
    bool count_ok = false;
    std::size_t expected =
        count_in_window(grid, vfine, hbar, q.lambda_lo, q.lambda_hi, count_ok);
    res.window_count_expected = expected;
    res.count_reliable = count_ok;
    if (count_ok && expected == 0) {
        res.status = SolveStatus::empty;
        res.message = "no eigenvalue in window";
        return res;
    }

    // Grid ladder down to a dense-solvable level.
    std::vector<Grid> ladder{grid};
    const std::size_t dense_cap = (grid.d == 1) ? 1200 : 2600;
    while (ladder.back().size() > dense_cap) ladder.push_back(detail::coarsen(ladder.back()));

    detail::LevelOp op;
    op.hbar2 = hbar * hbar;
    op.matvecs = &res.matvec_count;
    op.grid = ladder.back();
    op.v = sample_potential(vm, op.grid);

    Eigen::VectorXd cvals;
    Eigen::MatrixXd cvecs;
    detail::dense_spectrum(op, cvals, cvecs);

    const double pad = 0.3 * (q.lambda_hi - q.lambda_lo);
    std::vector<Eigen::Index> pick;
    std::vector<Eigen::Index> below, above;
    for (Eigen::Index i = 0; i < cvals.size(); ++i) {
        double t = cvals(i);
        if (t >= q.lambda_lo - pad && t <= q.lambda_hi + pad) pick.push_back(i);
        else if (t < q.lambda_lo - pad) below.push_back(i);
        else above.push_back(i);
    }
    for (std::size_t k = 0; k < 2 && k < below.size(); ++k) pick.push_back(below[below.size() - 1 - k]);
    for (std::size_t k = 0; k < 2 && k < above.size(); ++k) pick.push_back(above[k]);
    std::sort(pick.begin(), pick.end());

    double out_dist_coarse = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < cvals.size(); ++i) {
        double t = cvals(i);
        if (t < q.lambda_lo - 0.02 * halfw || t > q.lambda_hi + 0.02 * halfw)
            out_dist_coarse = std::min(out_dist_coarse, std::abs(t - sigma));
    }

    std::size_t block = std::max<std::size_t>({pick.size(), expected + 2, 4});
    block = std::min<std::size_t>(block, std::min<std::size_t>(q.max_pairs + 6, 64));

    std::mt19937_64 rng(q.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd X(Eigen::Index(op.grid.size()), Eigen::Index(block));
    for (std::size_t j = 0; j < block; ++j) {
        if (j < pick.size()) X.col(Eigen::Index(j)) = cvecs.col(pick[j]);
        else
            for (Eigen::Index i = 0; i < X.rows(); ++i) X(i, Eigen::Index(j)) = gauss(rng);
    }
    cvals.resize(0);
    cvecs.resize(0, 0);

    bool converged = false;
    std::size_t enlargements = 0;

    for (std::size_t lvl = ladder.size(); lvl-- > 0;) {
        if (!(op.grid == ladder[lvl])) {
            Grid fine = ladder[lvl];
            Eigen::MatrixXd Xf(Eigen::Index(fine.size()), X.cols());
            ScalarField tmp(op.grid);
            for (Eigen::Index j = 0; j < X.cols(); ++j) {
                for (std::size_t i = 0; i < op.grid.size(); ++i) tmp.a[i] = X(Eigen::Index(i), j);
                ScalarField up = resample_linear(tmp, fine);
                for (std::size_t i = 0; i < fine.size(); ++i) Xf(Eigen::Index(i), j) = up.a[i];
            }
            X = std::move(Xf);
            op.grid = fine;
            op.v = (lvl == 0) ? vfine : sample_potential(vm, fine);
        }
        const bool final_level = (lvl == 0);
        const double tol_here = final_level ? q.tol : std::max(q.tol, 1e-6);
        const std::size_t max_passes = final_level ? 60 : 12;

        detail::ShiftSolver shift;
        shift.factor(op, sigma, halfw);

        double out_dist = out_dist_coarse;
        const double wlo = final_level ? q.lambda_lo : q.lambda_lo - pad;
        const double whi = final_level ? q.lambda_hi : q.lambda_hi + pad;
        converged = false;
        for (std::size_t pass = 0; pass < max_passes; ++pass) {
            detail::RitzInfo ritz = detail::rayleigh_ritz(op, X);
            std::vector<Eigen::Index> wanted;
            double rworst = 0.0;
            for (Eigen::Index j = 0; j < ritz.theta.size(); ++j) {
                double t = ritz.theta(j);
                if (t >= wlo && t <= whi) {
                    wanted.push_back(j);
                    rworst = std::max(rworst, ritz.resid(j));
                }
                else
                    out_dist = std::min(out_dist, std::abs(t - sigma));
            }
            bool count_match = !final_level || !count_ok || wanted.size() == expected;
            if (!wanted.empty() && count_match && rworst <= tol_here) {
                converged = true;
                if (final_level) {
                    std::sort(wanted.begin(), wanted.end(), [&](auto a2, auto b2) {
                        return ritz.theta(a2) < ritz.theta(b2);
                    });
                    for (Eigen::Index j : wanted) {
                        if (res.pairs.size() >= q.max_pairs) break;
                        EigenPair p;
                        p.lambda = ritz.theta(j);
                        p.residual = ritz.resid(j);
                        p.hbar = hbar;
                        p.psi = ScalarField(op.grid);
                        for (std::size_t i = 0; i < op.grid.size(); ++i)
                            p.psi.a[i] = X(Eigen::Index(i), j);
                        res.pairs.push_back(std::move(p));
                    }
                }
                break;
            }
            if (final_level && count_ok && wanted.size() != expected && pass >= 6 &&
                pass % 6 == 0 && enlargements < 2) {
                ++enlargements;
                Eigen::MatrixXd Xb(X.rows(), X.cols() + 2);
                Xb.leftCols(X.cols()) = X;
                for (Eigen::Index j = X.cols(); j < Xb.cols(); ++j)
                    for (Eigen::Index i = 0; i < X.rows(); ++i) Xb(i, j) = gauss(rng);
                X = std::move(Xb);
            }

            // Per-solve gain for an edge-of-window state is |lambda_out - sigma| / halfw;
            // pick enough inner solves to close the residual gap, capped so the
            // block is re-orthogonalized before it degenerates.
            double gain = std::max(out_dist / halfw, 1.05);
            double need = std::log(std::max(100.0 * rworst / tol_here, 1e2)) / std::log(gain);
            std::size_t inner = std::min<std::size_t>(std::max<std::size_t>(std::size_t(need) + 1, 1), 8);
            std::size_t projected =
                res.matvec_count + (inner + 1) * std::size_t(X.cols());
            if (projected > q.max_matvecs) {
                res.status = SolveStatus::not_converged;
                res.message = "matvec budget exhausted (best residual " +
                              format_double(rworst) + ")";
                return res;
            }
            for (Eigen::Index j = 0; j < X.cols(); ++j) {
                Eigen::VectorXd col = X.col(j);
                for (std::size_t k = 0; k < inner; ++k) {
                    col = shift.lu.solve(col);
                    double nrm = col.norm();
                    if (!(nrm > 0.0) || !std::isfinite(nrm)) throw error("shifted solve produced a non-finite vector");
                    col /= nrm;
                    ++res.matvec_count;
                }
                X.col(j) = col;
            }
        }
    }

    if (!converged) {
        res.status = SolveStatus::not_converged;
        res.message = "window iteration did not converge";
        return res;
    }

    // Normalize in the grid measure, fix sign at the largest-magnitude node.
    for (EigenPair& p : res.pairs) {
        double nrm = std::sqrt(inner(grid, p.psi, p.psi));
        double scale = 1.0 / nrm;
        std::size_t imax = 0;
        for (std::size_t i = 1; i < p.psi.a.size(); ++i)
            if (std::abs(p.psi.a[i]) > std::abs(p.psi.a[imax])) imax = i;
        if (p.psi.a[imax] < 0.0) scale = -scale;
        for (double& t : p.psi.a) t *= scale;
        ScalarField Hpsi = hamiltonian_apply(grid, vfine, hbar, p.psi);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < Hpsi.a.size(); ++i) {
            num += sq(Hpsi.a[i] - p.lambda * p.psi.a[i]);
            den += sq(p.psi.a[i]);
        }
        p.residual = std::sqrt(num / den);
    }

    if (count_ok && res.pairs.size() != std::min<std::size_t>(expected, q.max_pairs)) {
        res.status = SolveStatus::uncertified;
        res.message = "window count mismatch: found " + std::to_string(res.pairs.size()) +
                      ", inertia count " + std::to_string(expected);
    } else if (!count_ok) {
        res.status = SolveStatus::uncertified;
        res.message = "window count could not be certified";
    } else {
        res.status = SolveStatus::ok;
    }
    return res;
}

inline double residual_norm(const Grid& g, const PotentialModel& vm, double hbar,
                            const EigenPair& pair) {
    ScalarField Hpsi = hamiltonian_apply(g, sample_potential(vm, g), hbar, pair.psi);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < Hpsi.a.size(); ++i) {
        num += sq(Hpsi.a[i] - pair.lambda * pair.psi.a[i]);
        den += sq(pair.psi.a[i]);
    }
    return std::sqrt(num / den);
}

struct BranchTrack {
    std::vector<std::vector<int>> labels;
    bool ambiguous = false;
    std::string message;
};

// Greedy overlap matching of eigenpairs across consecutive hbar entries;
// fields are resampled to the later grid when grids differ.
inline BranchTrack track_branches(std::vector<SolveResult*> sweep) {
    BranchTrack out;
    int next_id = 0;
    std::vector<EigenPair>* prev = nullptr;
    for (SolveResult* sr : sweep) {
        std::vector<int> lab(sr->pairs.size(), -1);
        if (!prev || prev->empty()) {
            for (std::size_t j = 0; j < sr->pairs.size(); ++j) lab[j] = next_id++;
        } else {
            const Grid& gdst = sr->pairs.empty() ? (*prev)[0].psi.grid : sr->pairs[0].psi.grid;
            std::vector<ScalarField> prev_rs;
            for (const EigenPair& p : *prev)
                prev_rs.push_back(p.psi.grid == gdst ? p.psi : resample_linear(p.psi, gdst));
            std::vector<std::vector<double>> ov(prev->size(),
                                                std::vector<double>(sr->pairs.size(), 0.0));
            for (std::size_t i = 0; i < prev->size(); ++i)
                for (std::size_t j = 0; j < sr->pairs.size(); ++j)
                    ov[i][j] = std::abs(inner(gdst, prev_rs[i], sr->pairs[j].psi)) /
                               std::sqrt(inner(gdst, prev_rs[i], prev_rs[i]));
            std::vector<bool> usedi(prev->size(), false), usedj(sr->pairs.size(), false);
            for (std::size_t step = 0; step < std::min(prev->size(), sr->pairs.size()); ++step) {
                double best = -1.0;
                std::size_t bi = 0, bj = 0;
                for (std::size_t i = 0; i < prev->size(); ++i) {
                    if (usedi[i]) continue;
                    for (std::size_t j = 0; j < sr->pairs.size(); ++j) {
                        if (usedj[j]) continue;
                        double score = ov[i][j];
                        if (score > best + 1e-15 ||
                            (std::abs(score - best) <= 1e-15 &&
                             std::abs((*prev)[i].lambda - sr->pairs[j].lambda) <
                                 std::abs((*prev)[bi].lambda - sr->pairs[bj].lambda))) {
                            best = score;
                            bi = i;
                            bj = j;
                        }
                    }
                }
                usedi[bi] = usedj[bj] = true;
                if (best < 0.5) {
                    out.ambiguous = true;
                    out.message = "ambiguous overlap " + format_double(best);
                    lab[bj] = next_id++;
                } else {
                    lab[bj] = (*prev)[bi].branch_id;
                }
            }
            for (std::size_t j = 0; j < sr->pairs.size(); ++j)
                if (lab[j] < 0) lab[j] = next_id++;
        }
        for (std::size_t j = 0; j < sr->pairs.size(); ++j) sr->pairs[j].branch_id = lab[j];
        out.labels.push_back(lab);
        prev = &sr->pairs;
    }
    return out;
}

}  // namespace sclab
