#pragma once

// Method comparison on one dataset: a λ path per γ, AUC per path, the best
// γ by AUC, VUS and the precision profile at fixed recalls.

#include "lscggm/stability.hpp"

#include <vector>

namespace lscggm {

struct GammaPath {
    double gamma = 0.0;
    std::vector<double> lambdas;
    std::vector<EdgeSet> edges;
    AucResult auc;
    int nonconverged = 0;
};

struct MethodEvaluation {
    Method method = Method::lscggm;
    std::vector<GammaPath> per_gamma;
    double best_auc = 0.0;
    double best_gamma = 0.0;
    double vus = 0.0;
    /// Precision at recalls 0.1..1 on the best-γ path.
    std::vector<double> precision_at_recall;
    /// Inner prox sweeps of every outer iteration of every fit.
    std::vector<int> inner_iteration_counts;
    int fits = 0;
    int nonconverged = 0;
};

struct EvaluationConfig {
    std::vector<double> gamma_grid{0.1, 0.3, 0.5, 0.7, 0.9};
    int n_lambda = 12;
    double min_ratio = 0.02;
    int jobs = 1; ///< parallel over γ
    double edge_tol = kDefaultEdgeTol;
};

MethodEvaluation evaluate_method(const CovarianceTriple &cov, const EdgeSet &truth, Method method,
                                 const EvaluationConfig &cfg, const SolverOptions &opts,
                                 const PenaltyConfig &base = {});

} // namespace lscggm
