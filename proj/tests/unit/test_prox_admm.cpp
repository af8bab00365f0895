#include "lscggm/admm.hpp"
#include "lscggm/metrics.hpp"
#include "lscggm/prox.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <Eigen/SVD>

#include <chrono>
#include <cmath>

using namespace lscggm;
using oracle::TestRng;

namespace {

const double kGolden = (1.0 + std::sqrt(5.0)) / 2.0;

Matrix kron(const Matrix &a, const Matrix &b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

SolverOptions tight_options() {
    SolverOptions o;
    o.tol_primal = 1e-9;
    o.tol_dual = 1e-9;
    o.max_iter = 20000;
    o.inner_tol = 1e-12;
    return o;
}

} // namespace

TEST(SoftThreshold, Examples) {
    EXPECT_DOUBLE_EQ(soft_threshold(Matrix::Constant(1, 1, 1.5), 1.0)(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(soft_threshold(Matrix::Constant(1, 1, -0.3), 1.0)(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(soft_threshold(Matrix::Constant(1, 1, -1.5), 1.0)(0, 0), -0.5);
    TestRng rng(1);
    const Matrix x = rng.gaussian(4, 3);
    EXPECT_EQ(soft_threshold(x, 0.0), x);
    EXPECT_THROW(soft_threshold(x, -1.0), std::invalid_argument);
}

TEST(SvtProx, Examples) {
    Matrix x = Matrix::Zero(3, 2);
    x(0, 0) = 3;
    x(1, 1) = 1;
    const Matrix y = svt_prox(x, 2.0);
    Matrix expected = Matrix::Zero(3, 2);
    expected(0, 0) = 1;
    EXPECT_LE((y - expected).cwiseAbs().maxCoeff(), 1e-14);

    Vector u = Vector::Ones(3) / std::sqrt(3.0);
    Vector v = Vector::Ones(2) / std::sqrt(2.0);
    const Matrix r1 = svt_prox(3.0 * u * v.transpose(), 1.0);
    EXPECT_LE((r1 - 2.0 * u * v.transpose()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(SvtProx, NuclearNormShift) {
    TestRng rng(2);
    const Matrix x = rng.gaussian(5, 3);
    Eigen::JacobiSVD<Matrix> in(x);
    double expected = 0.0;
    for (Eigen::Index k = 0; k < in.singularValues().size(); ++k)
        expected += std::max(in.singularValues()(k) - 0.7, 0.0);
    EXPECT_NEAR(nuclear_norm(svt_prox(x, 0.7)), expected, 1e-10);
}

TEST(PsdProject, Examples) {
    Matrix x(2, 2);
    x << 1, 0, 0, -2;
    Matrix expected(2, 2);
    expected << 1, 0, 0, 0;
    EXPECT_LE((psd_project(x) - expected).cwiseAbs().maxCoeff(), 1e-15);
    TestRng rng(3);
    const Matrix a = rng.gaussian(4, 4);
    const Matrix psd = a * a.transpose();
    EXPECT_LE((psd_project(psd) - psd).cwiseAbs().maxCoeff(), 1e-12);
    const Matrix once = psd_project(x);
    EXPECT_LE((psd_project(once) - once).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(PsdProject, NearestAmongRandomPsdMatrices) {
    TestRng rng(4);
    Matrix x = rng.gaussian(4, 4);
    x = 0.5 * (x + x.transpose()).eval();
    const Matrix proj = psd_project(x);
    const double d0 = (x - proj).norm();
    for (int k = 0; k < 1000; ++k) {
        const Matrix a = rng.gaussian(4, 4) * rng.uniform(0.0, 1.5);
        const Matrix cand = a * a.transpose();
        EXPECT_LE(d0, (x - cand).norm() + 1e-12);
        // also perturbations of the projection itself
        const Matrix near = psd_project(proj + 1e-3 * rng.gaussian(4, 4));
        EXPECT_LE(d0, (x - near).norm() + 1e-12);
    }
}

TEST(AdmmResiduals, Examples) {
    AdmmState st;
    st.r = Matrix::Constant(1, 1, 1.3);
    st.s = Matrix::Constant(1, 1, 1.5);
    st.l = Matrix::Constant(1, 1, 0.5);
    st.p_block = Matrix::Constant(1, 1, 0.9);
    st.u = st.v = Matrix::Zero(1, 1);
    const auto r = admm_residuals(st, st, 1.0);
    EXPECT_NEAR(r.primal, 0.5, 1e-15);
    EXPECT_EQ(r.dual, 0.0);

    AdmmState ok = st;
    ok.r = ok.s - ok.l;
    ok.p_block = ok.l;
    EXPECT_EQ(admm_residuals(st, ok, 1.0).primal, 0.0);
}

TEST(SolveRzx, ZeroSigmaZ) {
    TestRng rng(5);
    const int m = 3, p = 2;
    CovarianceTriple cov(Matrix::Zero(m, m), Matrix::Identity(p, p), rng.gaussian(m, p), 10);
    const Matrix target = rng.gaussian(m, p);
    const Matrix r = solve_rzx_block(2.0 * Matrix::Identity(p, p), cov, 0.7, target);
    EXPECT_LE((r - (target - (2.0 / 0.7) * cov.sigma_zx())).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(SolveRzx, Scalar) {
    CovarianceTriple cov(Matrix::Identity(1, 1), Matrix::Identity(1, 1), Matrix::Zero(1, 1), 10);
    const Matrix r = solve_rzx_block(Matrix::Constant(1, 1, 2.0), cov, 1.0,
                                     Matrix::Constant(1, 1, 3.0));
    EXPECT_NEAR(r(0, 0), 1.5, 1e-14);
}

TEST(SolveRzx, MatchesKroneckerSolve) {
    TestRng rng(6);
    const int m = 4, p = 3;
    const auto cov = oracle::random_covariance(rng, p, m, 40);
    const Matrix a = rng.gaussian(p, p);
    const Matrix rx = a * a.transpose() + Matrix::Identity(p, p);
    const Matrix target = rng.gaussian(m, p);
    const double rho = 1.3;
    const Matrix r = solve_rzx_block(rx, cov, rho, target);
    // vec(Σ_Z R R_X⁻¹) = (R_X⁻ᵀ ⊗ Σ_Z) vec(R)
    const Matrix sys = 2.0 * kron(rx.inverse().transpose(), cov.sigma_z()) +
                       rho * Matrix::Identity(m * p, m * p);
    const Matrix rhs = rho * target - 2.0 * cov.sigma_zx();
    const Vector vec = sys.fullPivLu().solve(Eigen::Map<const Vector>(rhs.data(), m * p));
    const Matrix expected = Eigen::Map<const Matrix>(vec.data(), m, p);
    EXPECT_LE((r - expected).cwiseAbs().maxCoeff(), 1e-10);
    const Matrix residual = 2.0 * cov.sigma_z() * r * rx.inverse() + rho * r - rhs;
    EXPECT_LE(residual.norm(), 1e-10 * (1.0 + rhs.norm()));
}

TEST(SolveRx, GoldenRatioFixedPoint) {
    const int p = 3;
    CovarianceTriple cov(Matrix(0, 0), Matrix::Zero(p, p), Matrix(0, p), 10);
    const auto sol = solve_rx_block(Matrix(0, p), cov, 1.0, Matrix::Identity(p, p),
                                    Matrix::Identity(p, p), 1e-12);
    EXPECT_LE((sol.r_x - kGolden * Matrix::Identity(p, p)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(SolveRx, ScalarMatchesBisection) {
    CovarianceTriple cov(Matrix::Identity(1, 1), Matrix::Identity(1, 1), Matrix::Zero(1, 1), 10);
    const auto sol = solve_rx_block(Matrix::Constant(1, 1, 1.0), cov, 1.0,
                                    Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0),
                                    1e-13);
    const double root = oracle::bisect_root(
        [](double r) { return -1.0 / r + 1.0 - 1.0 / (r * r) + (r - 1.0); }, 0.5, 3.0);
    EXPECT_NEAR(sol.r_x(0, 0), root, 1e-10);
}

TEST(SolveRx, WarmAtOptimumTakesNoSteps) {
    CovarianceTriple cov(Matrix::Identity(1, 1), Matrix::Identity(1, 1), Matrix::Zero(1, 1), 10);
    const auto first = solve_rx_block(Matrix::Constant(1, 1, 1.0), cov, 1.0,
                                      Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 1.0),
                                      1e-13);
    const auto again = solve_rx_block(Matrix::Constant(1, 1, 1.0), cov, 1.0,
                                      Matrix::Constant(1, 1, 1.0), first.r_x, 1e-10);
    EXPECT_EQ(again.newton_steps, 0);
}

TEST(ProxLoss, GoldenRatio) {
    const int p = 2;
    CovarianceTriple cov(Matrix(0, 0), Matrix::Zero(p, p), Matrix(0, p), 10);
    SolverOptions opts;
    const auto res = prox_loss(Matrix::Identity(p, p), cov, 1.0,
                               MarginalParams(Matrix::Identity(p, p), Matrix(0, p)), opts);
    EXPECT_TRUE(res.converged);
    EXPECT_LE((res.params.r_x() - kGolden * Matrix::Identity(p, p)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(ProxLoss, ScalarMatchesGridSearch) {
    CovarianceTriple cov(Matrix::Constant(1, 1, 0.8), Matrix::Constant(1, 1, 1.2),
                         Matrix::Constant(1, 1, 0.3), 10);
    const double rho = 1.5, tx = 0.9, tzx = -0.4;
    auto f = [&](double rx, double rzx) {
        if (rx <= 0)
            return std::numeric_limits<double>::infinity();
        return -std::log(rx) + 1.2 * rx + 2 * 0.3 * rzx + rzx * rzx * 0.8 / rx +
               0.5 * rho * ((rx - tx) * (rx - tx) + (rzx - tzx) * (rzx - tzx));
    };
    // Dense grid, then repeated local refinement.
    double bx = 1, bz = 0, best = f(bx, bz);
    double span = 4.0;
    for (int round = 0; round < 60; ++round) {
        const double cx = bx, cz = bz;
        for (int i = -20; i <= 20; ++i)
            for (int j = -20; j <= 20; ++j) {
                const double x = cx + span * i / 20.0, z = cz + span * j / 20.0;
                const double v = f(x, z);
                if (v < best) {
                    best = v;
                    bx = x;
                    bz = z;
                }
            }
        span *= 0.5;
    }
    Matrix target(2, 1);
    target << tx, tzx;
    SolverOptions opts;
    opts.inner_tol = 1e-12;
    const auto res = prox_loss(target, cov, rho,
                               MarginalParams(Matrix::Constant(1, 1, 1.0), Matrix::Zero(1, 1)),
                               opts);
    EXPECT_NEAR(res.params.r_x()(0, 0), bx, 1e-6);
    EXPECT_NEAR(res.params.r_zx()(0, 0), bz, 1e-6);
}

TEST(ProxLoss, WarmStartAtOptimumIsFixedPoint) {
    TestRng rng(7);
    const auto cov = oracle::random_covariance(rng, 3, 2, 40);
    const Matrix target = 0.3 * rng.gaussian(5, 3) + oracle::random_feasible_params(rng, 3, 2, 0).s();
    SolverOptions opts;
    opts.inner_tol = 1e-12;
    const auto first = prox_loss(target, cov, 1.0,
                                 MarginalParams(Matrix::Identity(3, 3), Matrix::Zero(2, 3)), opts);
    ASSERT_TRUE(first.converged);
    opts.inner_tol = 1e-9;
    const auto again = prox_loss(target, cov, 1.0, first.params, opts);
    EXPECT_LE(again.iterations, 1);
    EXPECT_LE((again.params.stacked() - first.params.stacked()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(ProxLoss, ResidualDecreasesAcrossSweeps) {
    TestRng rng(8);
    for (int rep = 0; rep < 10; ++rep) {
        const auto cov = oracle::random_covariance(rng, 4, 3, 40);
        const Matrix target = rng.gaussian(7, 4);
        // Cold starts far from the data can need more than the default 50 sweeps.
        SolverOptions opts;
        opts.inner_max_iter = 1000;
        const auto res = prox_loss(target, cov, 0.8,
                                   MarginalParams(Matrix::Identity(4, 4), Matrix::Zero(3, 4)),
                                   opts);
        EXPECT_TRUE(res.converged);
        EXPECT_LE(res.residual, opts.inner_tol);
        EXPECT_NEAR(prox_residual(res.params, target, cov, 0.8), res.residual, 1e-12);
        for (std::size_t k = 1; k < res.residual_history.size(); ++k)
            if (res.residual_history[k - 1] > opts.inner_tol)
                EXPECT_LT(res.residual_history[k], res.residual_history[k - 1]);
    }
}

TEST(ProxLoss, ExhaustedSweepsAreFlagged) {
    TestRng rng(8);
    const auto cov = oracle::random_covariance(rng, 4, 3, 40);
    SolverOptions opts;
    opts.inner_max_iter = 2;
    opts.inner_tol = 1e-14;
    const auto res = prox_loss(rng.gaussian(7, 4), cov, 0.8,
                               MarginalParams(Matrix::Identity(4, 4), Matrix::Zero(3, 4)), opts);
    EXPECT_FALSE(res.converged);
    EXPECT_EQ(res.iterations, 2);
    EXPECT_TRUE(is_positive_definite(res.params.r_x()));
}

TEST(Fit, UnpenalisedMle) {
    CovarianceTriple cov(Matrix(0, 0), 2.0 * Matrix::Identity(2, 2), Matrix(0, 2), 100);
    PenaltyConfig pen;
    pen.lambda = 0.0;
    const auto res = fit(cov, pen, tight_options(), FitMode::no_latent);
    EXPECT_TRUE(res.converged);
    EXPECT_LE((res.params.s_x() - 0.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Fit, FullShrinkageAtHugeLambda) {
    TestRng rng(9);
    const auto cov = oracle::random_covariance(rng, 4, 3, 50);
    PenaltyConfig pen;
    pen.lambda = 1e3 * std::max(cov.sigma_x().cwiseAbs().maxCoeff(),
                                cov.sigma_zx().cwiseAbs().maxCoeff());
    const auto res = fit(cov, pen, SolverOptions{});
    EXPECT_TRUE(res.converged);
    Matrix off = res.params.s_x();
    off.diagonal().setZero();
    EXPECT_EQ(off.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_GT(res.params.s_x().diagonal().minCoeff(), 0.0);
    EXPECT_EQ(res.params.s_zx().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_LE(res.params.l().cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_EQ(res.rank_l, 0);
}

TEST(Fit, KktAndBookkeeping) {
    TestRng rng(10);
    for (int rep = 0; rep < 6; ++rep) {
        const int p = rng.integer(2, 5), m = rng.integer(0, 4);
        const auto cov = oracle::random_covariance(rng, p, m, 30);
        PenaltyConfig pen;
        pen.lambda = rng.uniform(0.05, 0.4);
        pen.gamma = rng.uniform(0.2, 0.8);
        SolverOptions opts;
        opts.tol_primal = opts.tol_dual = 1e-8;
        opts.max_iter = 5000;
        const auto res = fit(cov, pen, opts);
        ASSERT_TRUE(res.converged);
        EXPECT_LE(res.primal_residuals.back(), res.tol_primal);
        EXPECT_LE(res.dual_residuals.back(), res.tol_dual);
        EXPECT_EQ(res.rank_l, numerical_rank(res.params.l(), 1e-8));
        EXPECT_EQ(static_cast<int>(res.inner_iteration_counts.size()), res.iterations);
        EXPECT_TRUE(res.params.is_feasible());
        const auto kkt = kkt_certificate(res, cov, pen);
        EXPECT_LE(kkt.worst(), 10.0 * std::max(res.tol_primal, res.tol_dual));
        EXPECT_NEAR(res.objective, objective(res.params, cov, pen), 1e-12 * std::abs(res.objective) + 1e-12);
        // last ten recorded objectives are non-increasing up to 1e-7
        const auto &h = res.objective_history;
        for (std::size_t k = h.size() > 10 ? h.size() - 10 : 1; k < h.size(); ++k)
            if (std::isfinite(h[k]) && std::isfinite(h[k - 1]))
                EXPECT_LE(h[k], h[k - 1] + 1e-7);
    }
}

TEST(Fit, NotBelowRandomFeasiblePoints) {
    TestRng rng(11);
    const auto cov = oracle::random_covariance(rng, 3, 2, 40);
    PenaltyConfig pen;
    pen.lambda = 0.2;
    const auto res = fit(cov, pen, tight_options());
    for (int k = 0; k < 200; ++k) {
        const auto pt = oracle::random_feasible_params(rng, 3, 2, rng.integer(0, 2));
        EXPECT_LE(res.objective, objective(pt, cov, pen) + 1e-9);
        // and small perturbations of the optimum
        const Matrix ds = 1e-3 * rng.gaussian(5, 3);
        DecomposedParams near(res.params.s_x() + ds.topRows(3), res.params.l_x(),
                              res.params.s_zx() + ds.bottomRows(2), res.params.l_zx());
        if (near.is_feasible())
            EXPECT_LE(res.objective, objective(near, cov, pen) + 1e-9);
    }
}

TEST(Fit, MaxIterExhaustedIsReported) {
    TestRng rng(12);
    const auto cov = oracle::random_covariance(rng, 4, 3, 30);
    PenaltyConfig pen;
    pen.lambda = 0.1;
    SolverOptions opts;
    opts.max_iter = 2;
    const auto res = fit(cov, pen, opts);
    EXPECT_FALSE(res.converged);
    EXPECT_EQ(res.iterations, 2);
}

TEST(Fit, NoLatentModeKeepsLZero) {
    TestRng rng(13);
    const auto cov = oracle::random_covariance(rng, 4, 2, 30);
    PenaltyConfig pen;
    pen.lambda = 0.1;
    const auto res = fit(cov, pen, SolverOptions{}, FitMode::no_latent);
    EXPECT_EQ(res.params.l().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Fit, GraphicalLassoStationarity) {
    TestRng rng(14);
    for (int rep = 0; rep < 4; ++rep) {
        const auto cov = oracle::random_covariance(rng, 3, 3, 40);
        PenaltyConfig pen;
        pen.lambda = 0.2;
        pen.gamma = 0.5;
        const auto mf = fit_method(cov, pen, tight_options(), Method::glasso);
        const Matrix s = mf.fit.params.s_x();
        const Matrix g = cov.joint() - s.inverse();
        const double kappa = pen.sparse_weight();
        for (Eigen::Index i = 0; i < s.rows(); ++i)
            for (Eigen::Index j = 0; j < s.cols(); ++j) {
                if (s(i, j) != 0.0)
                    EXPECT_NEAR(g(i, j), -kappa * (s(i, j) > 0 ? 1 : -1), 1e-5);
                else
                    EXPECT_LE(std::abs(g(i, j)), kappa + 1e-5);
            }
    }
}

TEST(Fit, RejectsBadOptions) {
    SolverOptions o;
    o.rho = 0;
    EXPECT_THROW(o.validate(), std::invalid_argument);
    o = SolverOptions{};
    o.inner_max_iter = 0;
    EXPECT_THROW(o.validate(), std::invalid_argument);
}

TEST(Fit, PerIterationCostNearCubic) {
    // Wall time per outer iteration over p ∈ {32, 64, 128} with m fixed.
    const int m = 8;
    std::vector<double> per_iter;
    for (int p : {32, 64, 128}) {
        TestRng rng(15);
        const auto cov = oracle::random_covariance(rng, p, m, 4 * (p + m));
        PenaltyConfig pen;
        pen.lambda = 0.1;
        SolverOptions opts;
        opts.max_iter = 3;
        opts.record_objective = false;
        double best = 1e300;
        for (int rep = 0; rep < (p < 128 ? 3 : 1); ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto res = fit(cov, pen, opts);
            const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            best = std::min(best, dt / res.iterations);
        }
        per_iter.push_back(best);
    }
    const double slope = std::log(per_iter[2] / per_iter[0]) / std::log(4.0);
    EXPECT_LE(slope, 3.5) << per_iter[0] << ' ' << per_iter[1] << ' ' << per_iter[2];
}
