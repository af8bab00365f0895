#pragma once

// Conditional Gaussian model with latent confounders: shared types, the
// marginal negative log-likelihood and the penalised objective.
//
// Stacked conventions used throughout: an "(m+p)×p stacked" matrix has the
// p×p output block on top and the m×p input→output block underneath, i.e.
// S = [S_X; S_ZX], L = [L_X; L_ZX].

#include "lscggm/linalg.hpp"

#include <utility>

namespace lscggm {

/// Second-moment matrices of inputs Z (m) and outputs X (p) over n samples.
class CovarianceTriple {
  public:
    CovarianceTriple() = default;
    /// Validates dimensions and PSD-ness; sigma_z and sigma_x are symmetrised.
    CovarianceTriple(Matrix sigma_z, Matrix sigma_x, Matrix sigma_zx, long n);

    const Matrix &sigma_z() const { return sigma_z_; }
    const Matrix &sigma_x() const { return sigma_x_; }
    const Matrix &sigma_zx() const { return sigma_zx_; }
    long n() const { return n_; }
    int m() const { return static_cast<int>(sigma_z_.rows()); }
    int p() const { return static_cast<int>(sigma_x_.rows()); }

    /// The (m+p)×(m+p) second-moment matrix [[Σ_Z, Σ_ZX], [Σ_ZXᵀ, Σ_X]].
    Matrix joint() const;

  private:
    Matrix sigma_z_, sigma_x_, sigma_zx_;
    long n_ = 0;
};

/// R_X = S_X − L_X and R_ZX = S_ZX − L_ZX; the only quantities the
/// likelihood depends on.
class MarginalParams {
  public:
    MarginalParams() = default;
    MarginalParams(Matrix r_x, Matrix r_zx);
    /// Splits an (m+p)×p stacked matrix.
    static MarginalParams from_stacked(const Matrix &stacked, int p);

    const Matrix &r_x() const { return r_x_; }
    const Matrix &r_zx() const { return r_zx_; }
    int p() const { return static_cast<int>(r_x_.rows()); }
    int m() const { return static_cast<int>(r_zx_.rows()); }
    Matrix stacked() const { return stack_rows(r_x_, r_zx_); }

  private:
    Matrix r_x_, r_zx_;
};

class DecomposedParams {
  public:
    DecomposedParams() = default;
    /// s_x and l_x are symmetrised. Feasibility (S_X − L_X ≻ 0, L_X ⪰ 0) is
    /// checked by `is_feasible`, not here, so that infeasible points can be
    /// represented and rejected by the objective.
    DecomposedParams(Matrix s_x, Matrix l_x, Matrix s_zx, Matrix l_zx);
    static DecomposedParams from_stacked(const Matrix &s, const Matrix &l, int p);

    const Matrix &s_x() const { return s_x_; }
    const Matrix &l_x() const { return l_x_; }
    const Matrix &s_zx() const { return s_zx_; }
    const Matrix &l_zx() const { return l_zx_; }
    int p() const { return static_cast<int>(s_x_.rows()); }
    int m() const { return static_cast<int>(s_zx_.rows()); }

    Matrix s() const { return stack_rows(s_x_, s_zx_); }
    Matrix l() const { return stack_rows(l_x_, l_zx_); }
    MarginalParams marginal() const { return {s_x_ - l_x_, s_zx_ - l_zx_}; }

    bool is_feasible() const;

  private:
    Matrix s_x_, l_x_, s_zx_, l_zx_;
};

enum class Parametrisation {
    ratio01, ///< λ(γ‖S‖₁ + (1−γ)‖L‖_*), 0 < γ < 1
    raw,     ///< λ(γ‖S‖₁ + ‖L‖_*), γ > 0
};

struct PenaltyConfig {
    double lambda = 0.0;
    double gamma = 0.5;
    Parametrisation parametrisation = Parametrisation::ratio01;
    /// When false the diagonal of S_X is excluded from ‖S‖₁.
    bool penalize_diagonal = true;

    void validate() const;
    /// Weight multiplying ‖S‖₁ (λγ).
    double sparse_weight() const { return lambda * gamma; }
    /// Weight multiplying ‖L‖_*.
    double nuclear_weight() const {
        return parametrisation == Parametrisation::ratio01 ? lambda * (1.0 - gamma) : lambda;
    }
};

/// Nominal parameters of the joint (X, H) | Z model with h hidden variables.
struct GroundTruthModel {
    Matrix m_x;  ///< p×p
    Matrix m_xh; ///< p×h
    Matrix m_h;  ///< h×h
    Matrix m_zx; ///< m×p
    Matrix m_zh; ///< m×h

    int p() const { return static_cast<int>(m_x.rows()); }
    int m() const { return static_cast<int>(m_zx.rows()); }
    int h() const { return static_cast<int>(m_h.rows()); }

    /// [[M_X, M_XH], [M_XHᵀ, M_H]].
    Matrix joint_precision() const;
    void validate() const;
};

struct MarginalizedTruth {
    Matrix s_star; ///< (m+p)×p stacked
    Matrix l_star; ///< (m+p)×p stacked
};

/// (1/n) cross products of the rows of already-centred data.
CovarianceTriple sample_covariances(const Matrix &data_z, const Matrix &data_x);

/// −ℓ(R) = −logdet R_X + Tr(Σ_X R_X) + 2Tr(Σ_ZX R_ZXᵀ) + Tr(R_X⁻¹ R_ZXᵀ Σ_Z R_ZX).
/// Throws DomainError if R_X is not positive definite.
double neg_log_likelihood(const MarginalParams &params, const CovarianceTriple &cov);

struct NllGradient {
    Matrix r_x;  ///< p×p, symmetric
    Matrix r_zx; ///< m×p
    Matrix stacked() const { return stack_rows(r_x, r_zx); }
};

NllGradient nll_gradient(const MarginalParams &params, const CovarianceTriple &cov);

/// Penalty term alone: λγ‖S‖₁ + w‖L‖_* with w from the parametrisation.
double penalty_value(const DecomposedParams &params, const PenaltyConfig &pen);

/// Negative log-likelihood of S − L plus the penalty. Throws DomainError for
/// infeasible parameters.
double objective(const DecomposedParams &params, const CovarianceTriple &cov,
                 const PenaltyConfig &pen);

/// Marginalises the hidden block: S*_X = M_X, L*_X = M_XH M_H⁻¹ M_XHᵀ,
/// S*_ZX = M_ZX, L*_ZX = M_ZH M_H⁻¹ M_XHᵀ.
MarginalizedTruth marginalize_ground_truth(const GroundTruthModel &model);

} // namespace lscggm
