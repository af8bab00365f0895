#include "lscggm/stability.hpp"

#include "lscggm/rng.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace lscggm {

void parallel_for(int count, int jobs, const std::function<void(int)> &fn) {
    if (count <= 0)
        return;
    jobs = std::max(1, std::min(jobs, count));
    if (jobs == 1) {
        for (int i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= count)
                return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
                next.store(count);
            }
        }
    };
    std::vector<std::thread> threads;
    for (int t = 0; t < jobs; ++t)
        threads.emplace_back(worker);
    for (auto &t : threads)
        t.join();
    if (error)
        std::rethrow_exception(error);
}

std::vector<double> default_lambda_grid(const CovarianceTriple &cov, const PenaltyConfig &pen,
                                        Method method, int count, double min_ratio) {
    require(count >= 1, "grid needs at least one value");
    require(min_ratio > 0 && min_ratio < 1, "min_ratio must lie in (0, 1)");
    const double top = lambda_max(method_covariance(cov, method), pen);
    std::vector<double> grid;
    for (int k = 0; k < count; ++k) {
        const double t = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
        grid.push_back(top * std::pow(min_ratio, t));
    }
    return grid;
}

std::vector<PathPoint> lambda_path(const CovarianceTriple &cov, const PenaltyConfig &pen,
                                   const std::vector<double> &lambda_grid,
                                   const SolverOptions &opts, Method method, bool warm_start) {
    require(!lambda_grid.empty(), "lambda grid is empty");
    for (std::size_t k = 1; k < lambda_grid.size(); ++k)
        require(lambda_grid[k] < lambda_grid[k - 1], "lambda grid must be strictly decreasing");

    std::vector<PathPoint> path;
    path.reserve(lambda_grid.size());
    for (double lambda : lambda_grid) {
        PenaltyConfig p = pen;
        p.lambda = lambda;
        const AdmmState *warm =
            (warm_start && !path.empty()) ? &path.back().result.fit.state : nullptr;
        try {
            path.push_back({lambda, fit_method(cov, p, opts, method, warm)});
        } catch (const std::exception &e) {
            std::ostringstream msg;
            msg << "fit failed at lambda=" << lambda << ": " << e.what();
            throw NumericalError(msg.str());
        }
    }
    return path;
}

std::vector<EdgeSet> path_edge_sets(const std::vector<PathPoint> &path, double tol) {
    std::vector<EdgeSet> out;
    out.reserve(path.size());
    for (const auto &pt : path)
        out.push_back(edge_set(pt.result.params.s_x(), tol));
    return out;
}

void StabilityConfig::validate() const {
    require(b_pairs >= 1, "b_pairs must be positive");
    require(ev_max > 0, "ev_max must be positive");
    require(!lambda_grid.empty(), "lambda grid is empty");
    for (std::size_t k = 1; k < lambda_grid.size(); ++k)
        require(lambda_grid[k] < lambda_grid[k - 1], "lambda grid must be strictly decreasing");
    for (double l : lambda_grid)
        require(l > 0, "lambda grid values must be positive");
    require(jobs >= 1, "jobs must be positive");
}

Threshold threshold_from_ev(double q_avg, long n_candidates, double ev_max) {
    require(q_avg >= 0, "q must be nonnegative");
    require(n_candidates >= 1, "need at least one candidate");
    require(ev_max > 0, "ev_max must be positive");
    const double ratio = q_avg * q_avg / (ev_max * static_cast<double>(n_candidates));
    Threshold th;
    if (ratio > 1.0) {
        th.tau = 1.0;
        th.infeasible = true;
        return th;
    }
    th.tau = std::max(0.5 * (ratio + 1.0), std::nextafter(0.5, 1.0));
    return th;
}

std::pair<std::vector<int>, std::vector<int>> complementary_halves(long n, std::uint64_t seed,
                                                                   int pair_index) {
    require(n >= 2, "need at least two samples to split");
    CounterRng rng = CounterRng::stream(seed, "pairs", static_cast<std::uint64_t>(pair_index));
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    for (long i = n - 1; i > 0; --i)
        std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);
    const long half = n / 2;
    return {std::vector<int>(perm.begin(), perm.begin() + half),
            std::vector<int>(perm.begin() + half, perm.begin() + 2 * half)};
}

namespace {

Matrix select_rows(const Matrix &a, const std::vector<int> &rows) {
    Matrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
    for (std::size_t k = 0; k < rows.size(); ++k)
        out.row(static_cast<Eigen::Index>(k)) = a.row(rows[k]);
    return out;
}

struct SubsampleOutcome {
    bool ok = false;
    std::vector<EdgeSet> selected; ///< one per λ
};

InclusionMap to_probabilities(const std::map<std::pair<int, int>, int> &counts, int fits) {
    InclusionMap out;
    for (auto [e, c] : counts)
        out[e] = static_cast<double>(c) / fits;
    return out;
}

EdgeSet threshold_edges(const InclusionMap &probs, int p, const Threshold &th) {
    EdgeSet out(p);
    if (th.infeasible)
        return out;
    for (auto [e, prob] : probs)
        if (prob >= th.tau)
            out.insert(e.first, e.second);
    return out;
}

} // namespace

StabilityResult complementary_pairs_select(const Matrix &data_z, const Matrix &data_x,
                                           const PenaltyConfig &pen, const StabilityConfig &cfg,
                                           const SolverOptions &opts, Method method) {
    cfg.validate();
    require(data_z.rows() == data_x.rows(), "data_z and data_x row counts differ");
    const long n = data_x.rows();
    require(n >= 4, "stability selection needs n >= 4");
    const int p = static_cast<int>(data_x.cols());
    const int n_lambda = static_cast<int>(cfg.lambda_grid.size());

    std::vector<SubsampleOutcome> outcomes(2 * static_cast<std::size_t>(cfg.b_pairs));
    parallel_for(2 * cfg.b_pairs, cfg.jobs, [&](int job) {
        const int pair = job / 2;
        const auto halves = complementary_halves(n, cfg.seed, pair);
        const auto &rows = (job % 2 == 0) ? halves.first : halves.second;
        SubsampleOutcome &out = outcomes[job];
        try {
            const auto cov =
                sample_covariances(select_rows(data_z, rows), select_rows(data_x, rows));
            const auto path = lambda_path(cov, pen, cfg.lambda_grid, opts, method);
            out.selected = path_edge_sets(path, cfg.edge_tol);
            out.ok = true;
        } catch (const std::exception &) {
            out.ok = false;
        }
    });

    StabilityResult res;
    std::vector<int> used;
    for (int b = 0; b < cfg.b_pairs; ++b) {
        if (outcomes[2 * b].ok && outcomes[2 * b + 1].ok) {
            used.push_back(2 * b);
            used.push_back(2 * b + 1);
        } else {
            res.skipped_pairs.push_back(b);
        }
    }
    res.pairs_used = static_cast<int>(used.size()) / 2;
    res.stable_edges = EdgeSet(p);
    if (used.empty())
        return res;

    const long n_candidates = static_cast<long>(p) * (p - 1) / 2;
    const int fits = static_cast<int>(used.size());

    for (int k = 0; k < n_lambda; ++k) {
        std::map<std::pair<int, int>, int> counts;
        double total = 0.0;
        for (int j : used) {
            const auto &sel = outcomes[j].selected[k];
            total += static_cast<double>(sel.size());
            for (const auto &e : sel.edges())
                ++counts[e];
        }
        PointwiseSelection pw;
        pw.lambda = cfg.lambda_grid[k];
        pw.inclusion_prob = to_probabilities(counts, fits);
        pw.q_avg = total / fits;
        pw.threshold = threshold_from_ev(pw.q_avg, n_candidates, cfg.ev_max);
        pw.stable_edges = threshold_edges(pw.inclusion_prob, p, pw.threshold);
        res.per_lambda.push_back(std::move(pw));
    }

    // Union over the longest leading stretch of the grid (largest λ first)
    // whose average union size still admits a threshold τ ≤ 1.
    std::vector<EdgeSet> unions(used.size(), EdgeSet(p));
    double q_prefix = 0.0;
    for (int k = 0; k < n_lambda; ++k) {
        std::vector<EdgeSet> next = unions;
        double total = 0.0;
        for (std::size_t u = 0; u < used.size(); ++u) {
            for (const auto &e : outcomes[used[u]].selected[k].edges())
                next[u].insert(e.first, e.second);
            total += static_cast<double>(next[u].size());
        }
        const double q = total / fits;
        if (threshold_from_ev(q, n_candidates, cfg.ev_max).infeasible)
            break;
        unions = std::move(next);
        q_prefix = q;
        res.lambda_prefix = k + 1;
    }

    res.q_avg = q_prefix;
    const Threshold th = threshold_from_ev(q_prefix, n_candidates, cfg.ev_max);
    res.tau = th.tau;
    res.tau_infeasible = res.lambda_prefix == 0;
    for (int k = 0; k < res.lambda_prefix; ++k)
        for (auto [e, prob] : res.per_lambda[k].inclusion_prob) {
            double &slot = res.inclusion_prob[e];
            slot = std::max(slot, prob);
        }
    res.stable_edges = threshold_edges(res.inclusion_prob, p, th);
    return res;
}

Matrix gamma_jaccard_matrix(const std::vector<EdgeSet> &graphs) {
    const auto k = static_cast<Eigen::Index>(graphs.size());
    Matrix out = Matrix::Identity(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = i + 1; j < k; ++j)
            out(i, j) = out(j, i) = jaccard(graphs[i], graphs[j]);
    return out;
}

} // namespace lscggm
