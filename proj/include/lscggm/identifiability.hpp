#pragma once

// Rank-sparsity incoherence quantities ξ(T(L)) and μ(Ω(S)), the admissible
// γ interval and the scaling quantities of the consistency theorem.

#include "lscggm/model.hpp"

#include <array>
#include <cstdint>

namespace lscggm {

/// P_T(N) = P_U N + N P_V − P_U N P_V, with P_U, P_V the projectors onto the
/// column and row spaces of l (rank at 1e-10·σ_max).
Matrix tangent_project(const Matrix &l, const Matrix &target);

/// max over (i, j) of ‖P_T(e_i e_jᵀ)‖_*, capped at 1.
///
/// ‖P_T(E)‖_* is the dual norm of E restricted to T only when the maximising
/// matrix happens to lie in T; in general it bounds ξ from above, and can
/// exceed the trivial bound ξ ≤ 1, hence the cap.
double xi_tangent(const Matrix &l);

/// Largest |entry| over unit-spectral-norm elements of T: the normalised
/// projections P_T(e_i e_jᵀ) plus `samples` random projections. A lower
/// bound on ξ.
double xi_sampled_lower_bound(const Matrix &l, int samples, std::uint64_t seed);

struct MuResult {
    double mu = 0.0;
    bool exact = false;
};

/// Supports with at most this many entries are enumerated exactly.
constexpr int kMuEnumerationLimit = 16;

/// max ‖N‖₂ over N supported on Ω(s) with entries in [−1, 1]: vertex
/// enumeration for small supports, power iteration otherwise.
MuResult mu_omega(const Matrix &s, double support_tol = 0.0);

/// Vertex enumeration over ±1 sign patterns on the support.
double mu_enumerate(const Matrix &s, double support_tol = 0.0);

/// Power iteration on the 0/1 support indicator. Because the maximiser can
/// take N_ij = sign(x_i y_j), the optimum equals the indicator's spectral
/// norm, which this converges to from below; clamped by the degree bound.
double mu_power_iteration(const Matrix &s, double support_tol = 0.0, int max_iter = 10000);

struct GammaRange {
    double low = 0.0;
    double high = 0.0;
    bool feasible = false;
};

/// [3ξ/c, c/(2μ)], feasible iff ξμ ≤ c²/6.
GammaRange gamma_range(double xi, double mu, double c_const = 1.0);

struct IdentifiabilityReport {
    double xi = 0.0;
    double mu = 0.0;
    bool mu_is_exact = false;
    bool product_bound_ok = false;
    double gamma_low = 0.0;
    double gamma_high = 0.0;
    double c_const = 1.0;
};

IdentifiabilityReport identifiability_report(const Matrix &s, const Matrix &l,
                                             double c_const = 1.0);

struct TheoremQuantities {
    double psi_z = 0.0;
    double psi_x_star = 0.0;
    double phi_zx_star = 0.0;
    double psi = 0.0;
    double w = 0.0;
    double big_m = 1.0;
    double lambda_n = 0.0;
    /// Placeholders for Q₁..Q₆; not recoverable from the model itself.
    std::array<double, 6> q_constants{1, 1, 1, 1, 1, 1};

    // Derived conditions and the error bound, all under the placeholder constants.
    double n_required = 0.0;      ///< sample-size condition
    double sigma_min = 0.0;       ///< smallest nonzero singular value of L*
    double sigma_threshold = 0.0; ///< Q₄λ_n/ξ²
    double theta_min = 0.0;       ///< smallest nonzero |entry| of S*
    double theta_threshold = 0.0; ///< Q₅λ_n/μ
    double error_bound = 0.0;     ///< Q₆ψ*_X/ξ·√(pM/n)
};

TheoremQuantities theorem_quantities(const MarginalizedTruth &truth, const CovarianceTriple &cov,
                                     double xi, double mu = 1.0,
                                     const std::array<double, 6> &q = {1, 1, 1, 1, 1, 1});

} // namespace lscggm
