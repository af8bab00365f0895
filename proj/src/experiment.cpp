#include "lscggm/experiment.hpp"

namespace lscggm {

MethodEvaluation evaluate_method(const CovarianceTriple &cov, const EdgeSet &truth, Method method,
                                 const EvaluationConfig &cfg, const SolverOptions &opts,
                                 const PenaltyConfig &base) {
    require(!cfg.gamma_grid.empty(), "gamma grid is empty");
    MethodEvaluation ev;
    ev.method = method;
    ev.per_gamma.resize(cfg.gamma_grid.size());
    std::vector<std::vector<int>> inner(cfg.gamma_grid.size());

    parallel_for(static_cast<int>(cfg.gamma_grid.size()), cfg.jobs, [&](int g) {
        PenaltyConfig pen = base;
        pen.gamma = cfg.gamma_grid[static_cast<std::size_t>(g)];
        pen.validate();
        const auto grid = default_lambda_grid(cov, pen, method, cfg.n_lambda, cfg.min_ratio);
        const auto path = lambda_path(cov, pen, grid, opts, method);
        GammaPath &gp = ev.per_gamma[static_cast<std::size_t>(g)];
        gp.gamma = pen.gamma;
        gp.lambdas = grid;
        gp.edges = path_edge_sets(path, cfg.edge_tol);
        gp.auc = auc_from_path(gp.edges, truth);
        for (const auto &pt : path) {
            if (!pt.result.fit.converged)
                ++gp.nonconverged;
            const auto &counts = pt.result.fit.inner_iteration_counts;
            inner[static_cast<std::size_t>(g)].insert(inner[static_cast<std::size_t>(g)].end(),
                                                      counts.begin(), counts.end());
        }
    });

    std::size_t best = 0;
    double vus_sum = 0.0;
    for (std::size_t g = 0; g < ev.per_gamma.size(); ++g) {
        const auto &gp = ev.per_gamma[g];
        vus_sum += gp.auc.value;
        if (gp.auc.value > ev.per_gamma[best].auc.value)
            best = g;
        ev.fits += static_cast<int>(gp.lambdas.size());
        ev.nonconverged += gp.nonconverged;
        ev.inner_iteration_counts.insert(ev.inner_iteration_counts.end(), inner[g].begin(),
                                         inner[g].end());
    }
    ev.best_auc = ev.per_gamma[best].auc.value;
    ev.best_gamma = ev.per_gamma[best].gamma;
    ev.vus = vus_sum / static_cast<double>(ev.per_gamma.size());
    ev.precision_at_recall =
        precision_at_recalls(ev.per_gamma[best].edges, truth, standard_recall_levels());
    return ev;
}

} // namespace lscggm
