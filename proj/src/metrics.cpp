#include "lscggm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace lscggm {

void EdgeSet::insert(int i, int j) {
    require(i != j, "edge sets have no self-loops");
    require(i >= 1 && j >= 1 && i <= p_ && j <= p_, "edge endpoint out of range");
    edges_.emplace(std::min(i, j), std::max(i, j));
}

bool EdgeSet::contains(int i, int j) const {
    return edges_.count({std::min(i, j), std::max(i, j)}) > 0;
}

std::size_t EdgeSet::intersection_size(const EdgeSet &other) const {
    std::size_t count = 0;
    for (const auto &e : edges_)
        count += other.edges_.count(e);
    return count;
}

EdgeSet edge_set(const Matrix &s_x, double tol) {
    require(s_x.rows() == s_x.cols(), "edge_set needs a square matrix");
    require(tol >= 0, "edge tolerance must be nonnegative");
    const int p = static_cast<int>(s_x.rows());
    EdgeSet out(p);
    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j)
            if (std::abs(s_x(i, j)) > tol || std::abs(s_x(j, i)) > tol)
                out.insert(i + 1, j + 1);
    return out;
}

PrecisionRecall precision_recall(const EdgeSet &est, const EdgeSet &truth) {
    require(est.p() == truth.p(), "edge sets over different vertex counts");
    const double hits = static_cast<double>(est.intersection_size(truth));
    PrecisionRecall pr;
    if (!est.empty())
        pr.precision = hits / static_cast<double>(est.size());
    if (!truth.empty())
        pr.recall = hits / static_cast<double>(truth.size());
    return pr;
}

std::vector<PrPoint> pr_curve(const std::vector<EdgeSet> &path, const EdgeSet &truth) {
    require(!truth.empty(), "PR curves need a nonempty true edge set");
    std::map<double, double> best; // recall -> max precision
    for (const auto &est : path) {
        const auto pr = precision_recall(est, truth);
        if (!pr.precision)
            continue;
        auto [it, inserted] = best.emplace(*pr.recall, *pr.precision);
        if (!inserted)
            it->second = std::max(it->second, *pr.precision);
    }
    std::vector<PrPoint> curve;
    curve.reserve(best.size());
    for (auto [r, prec] : best)
        curve.push_back({r, prec});
    return curve;
}

AucResult auc_from_path(const std::vector<EdgeSet> &path, const EdgeSet &truth) {
    require(!path.empty(), "auc_from_path needs a nonempty path");
    const auto curve = pr_curve(path, truth);
    AucResult out;
    if (curve.empty()) {
        out.all_absent = true;
        return out;
    }
    double area = curve.front().recall * curve.front().precision;
    for (std::size_t k = 1; k < curve.size(); ++k)
        area += 0.5 * (curve[k].recall - curve[k - 1].recall) *
                (curve[k].precision + curve[k - 1].precision);
    out.value = std::clamp(area, 0.0, 1.0);
    return out;
}

double vus(const std::vector<std::vector<EdgeSet>> &surface, const EdgeSet &truth) {
    require(!surface.empty(), "vus needs at least one gamma row");
    double sum = 0.0;
    for (const auto &row : surface)
        sum += auc_from_path(row, truth).value;
    return sum / static_cast<double>(surface.size());
}

std::vector<double> precision_at_recalls(const std::vector<EdgeSet> &path, const EdgeSet &truth,
                                         const std::vector<double> &levels) {
    const auto curve = pr_curve(path, truth);
    std::vector<double> out;
    out.reserve(levels.size());
    for (double r : levels) {
        if (curve.empty() || r > curve.back().recall + 1e-12) {
            out.push_back(0.0);
            continue;
        }
        if (r <= curve.front().recall) {
            out.push_back(curve.front().precision);
            continue;
        }
        std::size_t k = 1;
        while (curve[k].recall < r)
            ++k;
        const auto &a = curve[k - 1];
        const auto &b = curve[k];
        const double t = (r - a.recall) / (b.recall - a.recall);
        out.push_back(a.precision + t * (b.precision - a.precision));
    }
    return out;
}

std::vector<double> standard_recall_levels() {
    std::vector<double> levels;
    for (int k = 1; k <= 10; ++k)
        levels.push_back(k / 10.0);
    return levels;
}

double jaccard(const EdgeSet &g1, const EdgeSet &g2) {
    const std::size_t inter = g1.intersection_size(g2);
    const std::size_t uni = g1.size() + g2.size() - inter;
    if (uni == 0)
        return 1.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

namespace {

int sign_at(double x, double tol) { return x > tol ? 1 : (x < -tol ? -1 : 0); }

} // namespace

RecoveryReport param_errors(const DecomposedParams &est, const MarginalizedTruth &truth,
                            double gamma) {
    require(gamma > 0, "gamma must be positive");
    const Matrix s_hat = est.s();
    const Matrix l_hat = est.l();
    require(s_hat.rows() == truth.s_star.rows() && s_hat.cols() == truth.s_star.cols() &&
                l_hat.rows() == truth.l_star.rows() && l_hat.cols() == truth.l_star.cols(),
            "estimate and truth dimensions differ");

    RecoveryReport rep;
    rep.err_s_inf_over_gamma = (s_hat - truth.s_star).cwiseAbs().maxCoeff() / gamma;
    rep.err_l_spectral = spectral_norm(l_hat - truth.l_star);

    constexpr double kSignTol = 1e-8;
    rep.sign_consistent = true;
    for (Eigen::Index i = 0; i < s_hat.rows() && rep.sign_consistent; ++i)
        for (Eigen::Index j = 0; j < s_hat.cols(); ++j)
            if (sign_at(s_hat(i, j), kSignTol) != sign_at(truth.s_star(i, j), kSignTol)) {
                rep.sign_consistent = false;
                break;
            }
    rep.rank_consistent =
        numerical_rank(l_hat, kSignTol) == numerical_rank(truth.l_star, kSignTol);

    const int p = est.p();
    const auto pr = precision_recall(edge_set(est.s_x()), edge_set(truth.s_star.topRows(p)));
    rep.precision = pr.precision;
    rep.recall = pr.recall;
    return rep;
}

std::string method_name(Method method) {
    switch (method) {
    case Method::lscggm:
        return "lscggm";
    case Method::scggm:
        return "scggm";
    case Method::lrps:
        return "lrps";
    case Method::glasso:
        return "glasso";
    }
    return "?";
}

Method parse_method(const std::string &name) {
    for (Method m : {Method::lscggm, Method::scggm, Method::lrps, Method::glasso})
        if (method_name(m) == name)
            return m;
    throw std::invalid_argument("unknown mode '" + name + "' (lscggm, scggm, lrps, glasso)");
}

FitMode method_fit_mode(Method method) {
    switch (method) {
    case Method::lscggm:
        return FitMode::full;
    case Method::scggm:
        return FitMode::no_latent;
    case Method::lrps:
        return FitMode::no_conditioning_joint;
    case Method::glasso:
        return FitMode::no_conditioning_joint_sparse;
    }
    return FitMode::full;
}

bool method_is_joint(Method method) { return method == Method::lrps || method == Method::glasso; }

CovarianceTriple method_covariance(const CovarianceTriple &cov, Method method) {
    if (!method_is_joint(method))
        return cov;
    const int d = cov.m() + cov.p();
    return CovarianceTriple(Matrix::Zero(0, 0), cov.joint(), Matrix::Zero(0, d), cov.n());
}

DecomposedParams extract_joint(const DecomposedParams &joint, int m, int p) {
    require(joint.p() == m + p && joint.m() == 0, "joint estimate has the wrong shape");
    const Matrix &s = joint.s_x();
    const Matrix &l = joint.l_x();
    return DecomposedParams(s.bottomRightCorner(p, p), l.bottomRightCorner(p, p),
                            s.topRightCorner(m, p), l.topRightCorner(m, p));
}

MethodFit fit_method(const CovarianceTriple &cov, const PenaltyConfig &pen,
                     const SolverOptions &opts, Method method, const AdmmState *warm_start) {
    MethodFit out;
    if (method_is_joint(method)) {
        out.fit = fit(method_covariance(cov, method), pen, opts, method_fit_mode(method),
                      warm_start);
        out.params = extract_joint(out.fit.params, cov.m(), cov.p());
    } else {
        out.fit = fit(cov, pen, opts, method_fit_mode(method), warm_start);
        out.params = out.fit.params;
    }
    return out;
}

DecomposedParams fit_joint_extract(const Matrix &data_z, const Matrix &data_x,
                                   const PenaltyConfig &pen, const SolverOptions &opts,
                                   bool latent) {
    const auto cov = sample_covariances(data_z, data_x);
    return fit_method(cov, pen, opts, latent ? Method::lrps : Method::glasso).params;
}

} // namespace lscggm
