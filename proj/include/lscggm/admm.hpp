#pragma once

// ADMM for the penalised conditional likelihood.
//
// Variables: R (stacked marginal parameters), S, L (stacked sparse and
// low-rank parts) and P, a consensus copy of L whose top block is kept PSD.
// Constraints R = S − L and P = L. One outer iteration updates (R, P), then
// S, then L, then the scaled duals U and V.
//
// The R-update is the proximal operator of the negative log-likelihood,
// which has no closed form. It is computed by block-coordinate descent: an
// exact Sylvester-type solve for R_ZX alternating with a damped Newton solve
// for R_X.

#include "lscggm/model.hpp"

#include <optional>
#include <vector>

namespace lscggm {

struct SolverOptions {
    double rho = 1.0;
    int max_iter = 500;
    /// Absolute tolerances; default to 1e-6·√((m+p)·p) when unset.
    std::optional<double> tol_primal;
    std::optional<double> tol_dual;
    int inner_max_iter = 50;
    double inner_tol = 1e-8;
    bool rho_adapt = true;
    int newton_max_iter = 50;
    /// Record the objective at every outer iteration (costs one SVD each).
    bool record_objective = true;

    void validate() const;
    double primal_tol_for(int m, int p) const;
    double dual_tol_for(int m, int p) const;
};

enum class FitMode {
    full,                         ///< latent-variable conditional model
    no_latent,                    ///< L ≡ 0 (sparse conditional GGM)
    no_conditioning_joint,        ///< joint (Z∪X) covariance packed with m = 0 (low-rank + sparse)
    no_conditioning_joint_sparse, ///< as above with L ≡ 0 (graphical lasso)
};

struct AdmmState {
    Matrix r;       ///< (m+p)×p
    Matrix s;       ///< (m+p)×p
    Matrix l;       ///< (m+p)×p
    Matrix p_block; ///< (m+p)×p consensus copy of L, top block PSD
    Matrix u;       ///< scaled dual of R − S + L = 0
    Matrix v;       ///< scaled dual of P − L = 0
    double rho = 1.0;

    /// Identity-like start: R_X = S_X = diag(1/(Σ_X,ii + shift)), everything else 0.
    static AdmmState initial(const CovarianceTriple &cov, double shift);
};

struct FitResult {
    DecomposedParams params;
    double objective = 0.0;
    int iterations = 0;
    std::vector<int> inner_iteration_counts;
    std::vector<double> primal_residuals;
    std::vector<double> dual_residuals;
    std::vector<double> objective_history; ///< NaN where the iterate is infeasible
    int rank_l = 0;
    bool converged = false;
    bool inner_converged = true; ///< every prox solve met inner_tol
    double tol_primal = 0.0;
    double tol_dual = 0.0;
    AdmmState state; ///< final iterate, reusable as a warm start
};

FitResult fit(const CovarianceTriple &cov, const PenaltyConfig &pen, const SolverOptions &opts,
              FitMode mode = FitMode::full, const AdmmState *warm_start = nullptr);

/// Cached eigendecomposition Σ_Z = Q diag(w) Qᵀ, shared by every R_ZX solve of a fit.
struct SigmaZEigen {
    Matrix vectors;
    Vector values;
    explicit SigmaZEigen(const Matrix &sigma_z);
};

/// Solves 2Σ_Z R R_X⁻¹ + ρR = ρ·target_zx − 2Σ_ZX for R (m×p).
Matrix solve_rzx_block(const Matrix &r_x, const CovarianceTriple &cov, double rho,
                       const Matrix &target_zx);
Matrix solve_rzx_block(const Matrix &r_x, const CovarianceTriple &cov, double rho,
                       const Matrix &target_zx, const SigmaZEigen &sigma_z_eig);

struct RxSolve {
    Matrix r_x;
    int newton_steps = 0;
    double grad_norm = 0.0;
};

/// Minimises −logdet R + Tr(Σ_X R) + Tr(R⁻¹C) + (ρ/2)‖R − target_x‖² over
/// R ≻ 0 with C = R_ZXᵀ Σ_Z R_ZX, by damped Newton (conjugate-gradient
/// directions, backtracking until the Cholesky factorisation succeeds and
/// the Armijo condition holds). Throws NumericalError if the step underflows.
RxSolve solve_rx_block(const Matrix &r_zx, const CovarianceTriple &cov, double rho,
                       const Matrix &target_x, const Matrix &warm, double tol,
                       int max_steps = 50);

struct ProxResult {
    MarginalParams params;
    int iterations = 0; ///< block sweeps
    bool converged = false;
    double residual = 0.0;
    std::vector<double> residual_history; ///< after each sweep
};

/// Frobenius norm of the gradient of −ℓ(R) + (ρ/2)‖R − target‖².
double prox_residual(const MarginalParams &r, const Matrix &target, const CovarianceTriple &cov,
                     double rho);

/// argmin_R −ℓ(R) + (ρ/2)‖R − target‖_F², target (m+p)×p stacked.
ProxResult prox_loss(const Matrix &target, const CovarianceTriple &cov, double rho,
                     const MarginalParams &warm_start, const SolverOptions &opts);
ProxResult prox_loss(const Matrix &target, const CovarianceTriple &cov, double rho,
                     const MarginalParams &warm_start, const SolverOptions &opts,
                     const SigmaZEigen &sigma_z_eig);

struct Residuals {
    double primal = 0.0;
    double dual = 0.0;
};

/// primal = √(‖R−S+L‖² + ‖P−L‖²), dual = ρ·√(‖ΔS−ΔL‖² + ‖ΔL‖²).
Residuals admm_residuals(const AdmmState &prev, const AdmmState &curr, double rho);

/// Optimality certificate for a fit, from the smooth gradient G at Ŝ − L̂ and
/// the PSD multiplier Y = ρV of the consensus constraint.
struct KktReport {
    /// max over Ŝ_ij ≠ 0 of |G_ij + λγ·sign(Ŝ_ij)|
    double sparse_support = 0.0;
    /// max over Ŝ_ij = 0 of max(|G_ij| − λγ, 0)
    double sparse_offsupport = 0.0;
    /// max(‖G + Y‖₂ − w, 0), w the nuclear-norm weight
    double nuclear_norm_bound = 0.0;
    /// |⟨G + Y, L̂⟩ − w‖L̂‖_*|
    double nuclear_alignment = 0.0;
    /// max(−λ_min(Y_X), 0) plus |⟨Y_X, L̂_X⟩| and ‖Y_ZX‖_max
    double psd_multiplier = 0.0;

    double worst() const;
};

KktReport kkt_certificate(const FitResult &result, const CovarianceTriple &cov,
                          const PenaltyConfig &pen, FitMode mode = FitMode::full);

/// Smallest λ at which (for the sparse part) the diagonal start is optimal:
/// max |off-diagonal Σ_X| and max 2|Σ_ZX|, divided by γ.
double lambda_max(const CovarianceTriple &cov, const PenaltyConfig &pen);

} // namespace lscggm
