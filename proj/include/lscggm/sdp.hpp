#pragma once

// Semidefinite reformulation of the penalised likelihood, written in sparse
// SDPA format for external log-det-capable solvers.
//
// The problem is stored in the block-diagonal "max ⟨C, X⟩ s.t. ⟨A_k, X⟩ = b_k,
// X ⪰ 0" form, where C is the negated minimisation cost. Blocks:
//   K      (m+p)  [[W, R_ZX], [R_ZXᵀ, R_X]], R = S − L, W free
//   S_X    p
//   L_X    p
//   SUPER  m+2p   [[H₁, L], [Lᵀ, H₂]]
//   R_X    p      copy of K's lower-right block; carries −logdet
//   E      p      R_X − εI (strict feasibility)
//   F      (m+p)p diagonal, F ≥ |S| entrywise
//   SLACK  2(m+p)p diagonal, F − S and F + S
// S_ZX has no block of its own: it is the sum of K's off-diagonal block and
// the L_ZX part of SUPER. The −logdet term travels as a "*LOGDET" comment.

#include "lscggm/model.hpp"

#include <string>
#include <vector>

namespace lscggm {

enum class BlockKind { psd, diagonal };

struct SdpBlock {
    std::string name;
    int size = 0;
    BlockKind kind = BlockKind::psd;
    bool operator==(const SdpBlock &) const = default;
};

/// One nonzero of C (constraint 0) or of A_k (constraint k ≥ 1), 1-based,
/// upper triangle (i ≤ j).
struct SdpEntry {
    int constraint = 0;
    int block = 1;
    int i = 1;
    int j = 1;
    double value = 0.0;
    bool operator==(const SdpEntry &) const = default;
};

struct SdpConstraint {
    std::string role; ///< e.g. "f_upper", "tie_l_x"; empty when unknown
    double rhs = 0.0;
    bool operator==(const SdpConstraint &) const = default;
};

struct SdpMetadata {
    int m = 0;
    int p = 0;
    double lambda = 0.0;
    double gamma = 0.0;
    double epsilon = 1e-8;
    std::string parametrisation = "ratio01";
    bool penalize_diagonal = true;
    bool operator==(const SdpMetadata &) const = default;
};

struct SdpProblem {
    std::vector<SdpBlock> blocks;
    std::vector<SdpConstraint> constraints;
    std::vector<SdpEntry> entries; ///< sorted by (constraint, block, i, j)
    int logdet_block = 0;          ///< 1-based; 0 when absent
    double logdet_weight = 1.0;
    SdpMetadata metadata;

    /// 1-based index of the named block; 0 if missing.
    int block_index(const std::string &name) const;
    int count_role(const std::string &role) const;
    bool operator==(const SdpProblem &) const = default;
};

SdpProblem build_sdp_problem(const CovarianceTriple &cov, const PenaltyConfig &pen,
                             double epsilon = 1e-8);

void write_sdpa(const SdpProblem &problem, const std::string &path);
std::string to_sdpa_string(const SdpProblem &problem);
SdpProblem parse_sdpa(const std::string &text);
SdpProblem read_sdpa(const std::string &path);

/// Values of every block at one point; diagonal blocks are stored as
/// diagonal matrices.
using SdpPoint = std::vector<Matrix>;

/// The point corresponding to a parameter estimate, with the smallest
/// feasible W, H₁ = UΣUᵀ and H₂ = VΣVᵀ from the SVD of L, and F = |S|.
SdpPoint sdp_point_from_params(const SdpProblem &problem, const DecomposedParams &params);

/// Minimisation objective −⟨C, X⟩ − weight·logdet(X_logdet).
double evaluate_sdp_objective(const SdpProblem &problem, const SdpPoint &point);

/// max_k |⟨A_k, X⟩ − b_k|.
double sdp_equality_residual(const SdpProblem &problem, const SdpPoint &point);

/// Smallest eigenvalue over all blocks of the point.
double sdp_min_block_eigenvalue(const SdpPoint &point);

} // namespace lscggm
