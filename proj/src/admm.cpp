#include "lscggm/admm.hpp"

#include "lscggm/prox.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace lscggm {

void SolverOptions::validate() const {
    require(rho > 0.0 && std::isfinite(rho), "solver: rho must be positive");
    require(max_iter >= 1, "solver: max_iter must be positive");
    require(!tol_primal || *tol_primal > 0.0, "solver: tol_primal must be positive");
    require(!tol_dual || *tol_dual > 0.0, "solver: tol_dual must be positive");
    require(inner_max_iter >= 1, "solver: inner_max_iter must be at least 1");
    require(inner_tol > 0.0, "solver: inner_tol must be positive");
    require(newton_max_iter >= 1, "solver: newton_max_iter must be at least 1");
}

double SolverOptions::primal_tol_for(int m, int p) const {
    return tol_primal ? *tol_primal : 1e-6 * std::sqrt(static_cast<double>((m + p) * p));
}

double SolverOptions::dual_tol_for(int m, int p) const {
    return tol_dual ? *tol_dual : 1e-6 * std::sqrt(static_cast<double>((m + p) * p));
}

AdmmState AdmmState::initial(const CovarianceTriple &cov, double shift) {
    const int p = cov.p(), m = cov.m();
    AdmmState st;
    st.r = Matrix::Zero(m + p, p);
    for (int i = 0; i < p; ++i)
        st.r(i, i) = 1.0 / (cov.sigma_x()(i, i) + shift + 1e-8);
    st.s = st.r;
    st.l = Matrix::Zero(m + p, p);
    st.p_block = Matrix::Zero(m + p, p);
    st.u = Matrix::Zero(m + p, p);
    st.v = Matrix::Zero(m + p, p);
    return st;
}

SigmaZEigen::SigmaZEigen(const Matrix &sigma_z) {
    if (sigma_z.size() == 0)
        return;
    Eigen::SelfAdjointEigenSolver<Matrix> es(sigma_z);
    vectors = es.eigenvectors();
    values = es.eigenvalues().cwiseMax(0.0);
}

Matrix solve_rzx_block(const Matrix &r_x, const CovarianceTriple &cov, double rho,
                       const Matrix &target_zx) {
    return solve_rzx_block(r_x, cov, rho, target_zx, SigmaZEigen(cov.sigma_z()));
}

Matrix solve_rzx_block(const Matrix &r_x, const CovarianceTriple &cov, double rho,
                       const Matrix &target_zx, const SigmaZEigen &sz) {
    require(rho > 0.0, "solve_rzx_block: rho must be positive");
    const int m = cov.m(), p = cov.p();
    require(target_zx.rows() == m && target_zx.cols() == p, "solve_rzx_block: target must be m×p");
    if (m == 0)
        return Matrix(0, p);
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(r_x));
    const Vector &rv = es.eigenvalues();
    if (rv(0) <= 0.0)
        throw DomainError("solve_rzx_block: R_X is not positive definite");
    const Matrix &v = es.eigenvectors();
    const Matrix rhs = rho * target_zx - 2.0 * cov.sigma_zx();
    Matrix t = sz.vectors.transpose() * rhs * v;
    for (int j = 0; j < p; ++j)
        for (int i = 0; i < m; ++i)
            t(i, j) /= 2.0 * sz.values(i) / rv(j) + rho;
    return sz.vectors * t * v.transpose();
}

namespace {

// φ(R) = −logdet R + Tr(Σ_X R) + Tr(R⁻¹C) + (ρ/2)‖R − T‖²; +∞ outside R ≻ 0.
double rx_value(const Matrix &r, const Matrix &sigma_x, const Matrix &c, bool c_zero, double rho,
                const Matrix &target) {
    Eigen::LLT<Matrix> llt(r);
    if (llt.info() != Eigen::Success)
        return std::numeric_limits<double>::infinity();
    double v = -2.0 * llt.matrixLLT().diagonal().array().log().sum();
    v += sigma_x.cwiseProduct(r).sum();
    if (!c_zero)
        v += llt.solve(c).trace();
    v += 0.5 * rho * (r - target).squaredNorm();
    return v;
}

// Positive root of ρr − 1/r = a, written to avoid cancellation.
double logdet_prox_root(double a, double rho) {
    const double disc = std::sqrt(a * a + 4.0 * rho);
    return a >= 0.0 ? (a + disc) / (2.0 * rho) : 2.0 / (disc - a);
}

} // namespace

RxSolve solve_rx_block(const Matrix &r_zx, const CovarianceTriple &cov, double rho,
                       const Matrix &target_x, const Matrix &warm, double tol, int max_steps) {
    require(rho > 0.0, "solve_rx_block: rho must be positive");
    const int p = cov.p();
    require(target_x.rows() == p && target_x.cols() == p && warm.rows() == p && warm.cols() == p,
            "solve_rx_block: target and warm must be p×p");
    const Matrix target = symmetrize(target_x);
    Matrix c = Matrix::Zero(p, p);
    if (cov.m() > 0 && r_zx.size() > 0)
        c = symmetrize(r_zx.transpose() * cov.sigma_z() * r_zx);
    const bool c_zero = c.cwiseAbs().maxCoeff() == 0.0;
    const Matrix &sx = cov.sigma_x();

    RxSolve out;
    out.r_x = symmetrize(warm);
    if (!is_positive_definite(out.r_x))
        throw DomainError("solve_rx_block: warm start is not positive definite");

    for (;;) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(out.r_x);
        const Matrix &vec = es.eigenvectors();
        const Vector d = es.eigenvalues().cwiseInverse();
        const Matrix rinv = vec * d.asDiagonal() * vec.transpose();
        const Matrix g_c = rinv * c * rinv;
        const Matrix grad = symmetrize(-rinv + sx - g_c + rho * (out.r_x - target));
        out.grad_norm = grad.norm();
        if (out.grad_norm <= tol || out.newton_steps >= max_steps)
            return out;

        ++out.newton_steps;
        if (c_zero) {
            // Stationarity reads ρR − R⁻¹ = ρT − Σ_X, diagonalised by one eigendecomposition.
            Eigen::SelfAdjointEigenSolver<Matrix> ea(symmetrize(rho * target - sx));
            Vector roots(p);
            for (int i = 0; i < p; ++i)
                roots(i) = logdet_prox_root(ea.eigenvalues()(i), rho);
            out.r_x = symmetrize(ea.eigenvectors() * roots.asDiagonal() * ea.eigenvectors().transpose());
            continue;
        }

        // Newton direction by preconditioned CG in the eigenbasis of R, where
        // the Hessian acts as Δ ↦ DΔD + DΔG + GΔD + ρΔ.
        const Matrix gt = vec.transpose() * g_c * vec;
        const Matrix b = -(vec.transpose() * grad * vec);
        Matrix precond(p, p);
        for (int j = 0; j < p; ++j)
            for (int i = 0; i < p; ++i)
                precond(i, j) = d(i) * d(j) + rho + d(i) * gt(j, j) + gt(i, i) * d(j);
        auto hess = [&](const Matrix &x) -> Matrix {
            Matrix y = d.asDiagonal() * x * d.asDiagonal();
            y.noalias() += d.asDiagonal() * (x * gt);
            y.noalias() += (gt * x) * d.asDiagonal();
            y += rho * x;
            return y;
        };
        const double bnorm = b.norm();
        const double eta = std::min(0.1, bnorm);
        Matrix x = Matrix::Zero(p, p);
        Matrix res = b;
        Matrix z = res.cwiseQuotient(precond);
        Matrix dir = z;
        double rz = res.cwiseProduct(z).sum();
        const int cg_max = std::max(50, p * (p + 1) / 2);
        for (int it = 0; it < cg_max && res.norm() > eta * bnorm; ++it) {
            const Matrix hd = hess(dir);
            const double curv = dir.cwiseProduct(hd).sum();
            if (!(curv > 0.0))
                break;
            const double alpha = rz / curv;
            x += alpha * dir;
            res -= alpha * hd;
            z = res.cwiseQuotient(precond);
            const double rz_new = res.cwiseProduct(z).sum();
            dir = z + (rz_new / rz) * dir;
            rz = rz_new;
        }
        const Matrix step = symmetrize(vec * x * vec.transpose());

        const double phi0 = rx_value(out.r_x, sx, c, c_zero, rho, target);
        const double slope = grad.cwiseProduct(step).sum();
        double t = 1.0;
        for (;;) {
            const Matrix cand = out.r_x + t * step;
            const double phi = rx_value(cand, sx, c, c_zero, rho, target);
            const bool below_resolution =
                std::abs(t * slope) < 1e-13 * std::max(1.0, std::abs(phi0)) && std::isfinite(phi);
            if (phi <= phi0 + 1e-4 * t * slope || below_resolution) {
                out.r_x = cand;
                break;
            }
            t *= 0.5;
            if (t < 1e-14) {
                std::ostringstream msg;
                msg << "solve_rx_block: line search failed (grad norm " << out.grad_norm
                    << ", directional slope " << slope << ", rho " << rho << ")";
                throw NumericalError(msg.str());
            }
        }
    }
}

double prox_residual(const MarginalParams &r, const Matrix &target, const CovarianceTriple &cov,
                     double rho) {
    // R_X is symmetric, so only the symmetric part of the target's top block matters.
    Matrix t = target;
    t.topRows(r.p()) = symmetrize(target.topRows(r.p()));
    const NllGradient g = nll_gradient(r, cov);
    return (g.stacked() + rho * (r.stacked() - t)).norm();
}

ProxResult prox_loss(const Matrix &target, const CovarianceTriple &cov, double rho,
                     const MarginalParams &warm_start, const SolverOptions &opts) {
    return prox_loss(target, cov, rho, warm_start, opts, SigmaZEigen(cov.sigma_z()));
}

ProxResult prox_loss(const Matrix &target, const CovarianceTriple &cov, double rho,
                     const MarginalParams &warm_start, const SolverOptions &opts,
                     const SigmaZEigen &sz) {
    const int p = cov.p(), m = cov.m();
    require(target.rows() == m + p && target.cols() == p, "prox_loss: target must be (m+p)×p");
    require(rho > 0.0, "prox_loss: rho must be positive");
    Matrix r_x = warm_start.r_x();
    Matrix r_zx = warm_start.r_zx();
    const Matrix t_x = symmetrize(target.topRows(p));
    const Matrix t_zx = target.bottomRows(m);

    ProxResult out;
    out.residual = prox_residual(warm_start, target, cov, rho);
    if (out.residual <= opts.inner_tol) {
        out.params = warm_start;
        out.converged = true;
        return out;
    }
    const double newton_tol = 0.5 * opts.inner_tol;
    for (int sweep = 1; sweep <= opts.inner_max_iter; ++sweep) {
        if (m > 0)
            r_zx = solve_rzx_block(r_x, cov, rho, t_zx, sz);
        r_x = solve_rx_block(r_zx, cov, rho, t_x, r_x, newton_tol, opts.newton_max_iter).r_x;
        out.iterations = sweep;
        out.residual = prox_residual(MarginalParams(r_x, r_zx), target, cov, rho);
        out.residual_history.push_back(out.residual);
        if (out.residual <= opts.inner_tol) {
            out.converged = true;
            break;
        }
    }
    out.params = MarginalParams(r_x, r_zx);
    return out;
}

Residuals admm_residuals(const AdmmState &prev, const AdmmState &curr, double rho) {
    Residuals res;
    const double c1 = (curr.r - curr.s + curr.l).squaredNorm();
    const double c2 = (curr.p_block - curr.l).squaredNorm();
    res.primal = std::sqrt(c1 + c2);
    const Matrix ds = curr.s - prev.s;
    const Matrix dl = curr.l - prev.l;
    res.dual = rho * std::sqrt((ds - dl).squaredNorm() + dl.squaredNorm());
    return res;
}

namespace {

bool mode_has_latent(FitMode mode) {
    return mode == FitMode::full || mode == FitMode::no_conditioning_joint;
}

Matrix sparse_update(const Matrix &a, int p, double kappa, bool penalize_diagonal) {
    Matrix arg = a;
    arg.topRows(p) = symmetrize(a.topRows(p));
    Matrix s = soft_threshold(arg, kappa);
    if (!penalize_diagonal)
        for (int i = 0; i < p; ++i)
            s(i, i) = arg(i, i);
    return s;
}

DecomposedParams params_from_state(const AdmmState &st, int p, bool latent) {
    const int m = static_cast<int>(st.s.rows()) - p;
    Matrix l_x = Matrix::Zero(p, p);
    Matrix l_zx = Matrix::Zero(m, p);
    if (latent) {
        l_x = psd_project(st.l.topRows(p));
        l_zx = st.l.bottomRows(m);
    }
    return {symmetrize(st.s.topRows(p)), l_x, st.s.bottomRows(m), l_zx};
}

double safe_objective(const DecomposedParams &params, const CovarianceTriple &cov,
                      const PenaltyConfig &pen) {
    try {
        return objective(params, cov, pen);
    } catch (const DomainError &) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

} // namespace

FitResult fit(const CovarianceTriple &cov, const PenaltyConfig &pen, const SolverOptions &opts,
              FitMode mode, const AdmmState *warm_start) {
    pen.validate();
    opts.validate();
    const int p = cov.p(), m = cov.m();
    if (mode == FitMode::no_conditioning_joint || mode == FitMode::no_conditioning_joint_sparse)
        require(m == 0, "fit: joint modes expect the joint covariance packed into sigma_x with m = 0");
    const bool latent = mode_has_latent(mode);
    const SigmaZEigen sz(cov.sigma_z());

    AdmmState st;
    if (warm_start) {
        require(warm_start->r.rows() == m + p && warm_start->r.cols() == p,
                "fit: warm start has the wrong shape");
        st = *warm_start;
        if (!latent) {
            st.l.setZero();
            st.p_block.setZero();
            st.v.setZero();
        }
    } else {
        st = AdmmState::initial(cov, pen.sparse_weight());
        st.rho = opts.rho;
    }
    double rho = st.rho > 0.0 ? st.rho : opts.rho;

    FitResult out;
    out.tol_primal = opts.primal_tol_for(m, p);
    out.tol_dual = opts.dual_tol_for(m, p);
    const double w = pen.nuclear_weight();

    for (int k = 1; k <= opts.max_iter; ++k) {
        const AdmmState prev = st;

        const ProxResult prox = prox_loss(st.s - st.l - st.u, cov, rho,
                                          MarginalParams::from_stacked(st.r, p), opts, sz);
        st.r = prox.params.stacked();
        out.inner_iteration_counts.push_back(prox.iterations);
        if (!prox.converged)
            out.inner_converged = false;

        if (latent) {
            st.p_block = st.l - st.v;
            st.p_block.topRows(p) = psd_project(st.p_block.topRows(p));
        }
        st.s = sparse_update(st.r + st.l + st.u, p, pen.sparse_weight() / rho, pen.penalize_diagonal);
        if (latent)
            st.l = svt_prox(0.5 * ((st.s - st.r - st.u) + (st.p_block + st.v)), w / (2.0 * rho));

        st.u += st.r - st.s + st.l;
        if (latent)
            st.v += st.p_block - st.l;

        const Residuals res = admm_residuals(prev, st, rho);
        out.primal_residuals.push_back(res.primal);
        out.dual_residuals.push_back(res.dual);
        out.iterations = k;
        if (opts.record_objective)
            out.objective_history.push_back(safe_objective(params_from_state(st, p, latent), cov, pen));

        if (res.primal <= out.tol_primal && res.dual <= out.tol_dual && prox.converged) {
            out.converged = true;
            break;
        }
        if (opts.rho_adapt && k % 5 == 0) {
            if (res.primal > 10.0 * res.dual) {
                rho *= 2.0;
                st.u /= 2.0;
                st.v /= 2.0;
            } else if (res.dual > 10.0 * res.primal) {
                rho /= 2.0;
                st.u *= 2.0;
                st.v *= 2.0;
            }
        }
    }
    st.rho = rho;
    out.params = params_from_state(st, p, latent);
    out.objective = safe_objective(out.params, cov, pen);
    if (std::isnan(out.objective))
        out.converged = false;
    out.rank_l = numerical_rank(out.params.l(), 1e-8);
    out.state = std::move(st);
    return out;
}

double KktReport::worst() const {
    return std::max({sparse_support, sparse_offsupport, nuclear_norm_bound, nuclear_alignment,
                     psd_multiplier});
}

KktReport kkt_certificate(const FitResult &result, const CovarianceTriple &cov,
                          const PenaltyConfig &pen, FitMode mode) {
    const DecomposedParams &prm = result.params;
    const int p = prm.p();
    const Matrix g = nll_gradient(prm.marginal(), cov).stacked();
    const Matrix s = prm.s();
    const double kappa = pen.sparse_weight();
    KktReport rep;
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
        for (Eigen::Index i = 0; i < s.rows(); ++i) {
            const bool diag = i == j && i < p;
            const double k = (diag && !pen.penalize_diagonal) ? 0.0 : kappa;
            if (s(i, j) != 0.0 || k == 0.0) {
                const double sign = s(i, j) > 0.0 ? 1.0 : (s(i, j) < 0.0 ? -1.0 : 0.0);
                rep.sparse_support = std::max(rep.sparse_support, std::abs(g(i, j) + k * sign));
            } else {
                rep.sparse_offsupport = std::max(rep.sparse_offsupport, std::abs(g(i, j)) - k);
            }
        }
    }
    if (!mode_has_latent(mode))
        return rep;
    // Multiplier of L_X ∈ {symmetric PSD}: ρV plus the antisymmetric part of −ρU,
    // which prices the symmetry that R − S + L = 0 imposes on L_X.
    Matrix y = result.state.rho * result.state.v;
    const Matrix u_x = result.state.u.topRows(p);
    y.topRows(p) -= result.state.rho * 0.5 * (u_x - u_x.transpose());
    const Matrix h = g + y;
    const Matrix l = prm.l();
    const double w = pen.nuclear_weight();
    rep.nuclear_norm_bound = std::max(spectral_norm(h) - w, 0.0);
    rep.nuclear_alignment = std::abs(h.cwiseProduct(l).sum() - w * nuclear_norm(l));
    const Matrix y_x = symmetrize(y.topRows(p));
    double psd = std::max(-min_eigenvalue(y_x), 0.0);
    psd = std::max(psd, std::abs(y_x.cwiseProduct(prm.l_x()).sum()));
    if (y.rows() > p)
        psd = std::max(psd, y.bottomRows(y.rows() - p).cwiseAbs().maxCoeff());
    rep.psd_multiplier = psd;
    return rep;
}

double lambda_max(const CovarianceTriple &cov, const PenaltyConfig &pen) {
    Matrix off = cov.sigma_x();
    off.diagonal().setZero();
    double mx = off.cwiseAbs().maxCoeff();
    if (cov.m() > 0)
        mx = std::max(mx, 2.0 * cov.sigma_zx().cwiseAbs().maxCoeff());
    return mx / pen.gamma;
}

} // namespace lscggm
