#pragma once

// Regularisation paths and complementary-pairs stability selection with the
// classical E(V) ≤ q²/((2τ−1)·N) error bound.

#include "lscggm/metrics.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

namespace lscggm {

/// Runs fn(0..count-1) on up to `jobs` threads. Callers write results into
/// slots indexed by the argument, so output never depends on scheduling.
/// The first exception thrown by any call is rethrown after all workers stop.
void parallel_for(int count, int jobs, const std::function<void(int)> &fn);

/// Geometric grid of `count` values from λ_max(cov of the method) down to
/// min_ratio·λ_max.
std::vector<double> default_lambda_grid(const CovarianceTriple &cov, const PenaltyConfig &pen,
                                        Method method, int count = 12, double min_ratio = 0.02);

struct PathPoint {
    double lambda = 0.0;
    MethodFit result;
};

/// Fits every λ of a strictly decreasing grid at fixed γ (pen.lambda is
/// ignored), warm-starting each fit from the previous one when asked.
/// Solver failures are rethrown as NumericalError naming the λ.
std::vector<PathPoint> lambda_path(const CovarianceTriple &cov, const PenaltyConfig &pen,
                                   const std::vector<double> &lambda_grid,
                                   const SolverOptions &opts, Method method = Method::lscggm,
                                   bool warm_start = true);

/// Edge sets of the S_X estimates along a path.
std::vector<EdgeSet> path_edge_sets(const std::vector<PathPoint> &path,
                                    double tol = kDefaultEdgeTol);

struct StabilityConfig {
    int b_pairs = 50;
    double ev_max = 1.0;
    std::vector<double> lambda_grid; ///< strictly decreasing
    std::vector<double> gamma_grid;
    std::uint64_t seed = 1;
    int jobs = 1;
    double edge_tol = kDefaultEdgeTol;

    void validate() const;
};

struct Threshold {
    double tau = 1.0;
    /// True when even τ = 1 cannot meet the bound.
    bool infeasible = false;
};

/// Smallest τ in (0.5, 1] with q²/((2τ−1)·n_candidates) ≤ ev_max.
Threshold threshold_from_ev(double q_avg, long n_candidates, double ev_max);

using InclusionMap = std::map<std::pair<int, int>, double>;

struct PointwiseSelection {
    double lambda = 0.0;
    InclusionMap inclusion_prob;
    double q_avg = 0.0;
    Threshold threshold;
    EdgeSet stable_edges; ///< empty when the bound is infeasible
};

struct StabilityResult {
    /// max over the retained λ prefix of the per-λ inclusion probability
    InclusionMap inclusion_prob;
    /// mean size of the union of selected sets over the retained prefix
    double q_avg = 0.0;
    double tau = 1.0;
    bool tau_infeasible = false;
    /// Number of leading λ values whose union keeps the bound feasible.
    int lambda_prefix = 0;
    EdgeSet stable_edges;
    std::vector<PointwiseSelection> per_lambda;
    int pairs_used = 0;
    std::vector<int> skipped_pairs;
};

/// Splits a random permutation of 0..n-1 into two disjoint halves of ⌊n/2⌋.
std::pair<std::vector<int>, std::vector<int>> complementary_halves(long n, std::uint64_t seed,
                                                                   int pair_index);

/// pen.gamma and pen.parametrisation are used; pen.lambda is ignored.
StabilityResult complementary_pairs_select(const Matrix &data_z, const Matrix &data_x,
                                           const PenaltyConfig &pen, const StabilityConfig &cfg,
                                           const SolverOptions &opts,
                                           Method method = Method::lscggm);

/// Pairwise Jaccard indices; symmetric with unit diagonal.
Matrix gamma_jaccard_matrix(const std::vector<EdgeSet> &graphs);

} // namespace lscggm
