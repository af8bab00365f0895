#pragma once

// Synthetic designs: chain-structured S*_X, 2^d_h pure confounders of X and
// a 2^d_z-block input design, with t₄ inputs.

#include "lscggm/model.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace lscggm {

struct EffectSizeConfig {
    double sx_offdiag = 0.4;
    double mxh_scale = 1.0;
    double mzx_scale = 0.5;
    double diag_boost = 0.1;

    void validate() const;
};

struct SimulationDesign {
    int p = 32; ///< power of two; m = p
    long n = 3000;
    int d_z = 2;
    int d_h = 2;
    std::uint64_t seed = 1;
    /// Selects independent random streams for replicates of one design.
    std::uint64_t replicate = 0;
    EffectSizeConfig effect;

    int log2_p() const;
    void validate() const;
};

struct SyntheticDataset {
    GroundTruthModel truth;
    Matrix data_z; ///< n×m
    Matrix data_x; ///< n×p
    SimulationDesign design;
};

/// Pairs (i, i−1), 1-based, for i in 2..p with i mod 5 ≠ 0.
std::vector<std::pair<int, int>> chain_pattern(int p);

GroundTruthModel make_ground_truth(const SimulationDesign &design);

/// Draws n rows: Z with i.i.d. standardised t₄ entries, then (X, H) | Z from
/// the joint Gaussian with precision J and mean −J⁻¹[M_ZXᵀ z; M_ZHᵀ z].
SyntheticDataset sample_dataset(const SimulationDesign &design);

} // namespace lscggm
