#include "lscggm/identifiability.hpp"

#include "lscggm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace lscggm {

namespace {

struct Projectors {
    Matrix pu; ///< rows×rows
    Matrix pv; ///< cols×cols
};

Projectors tangent_projectors(const Matrix &l) {
    Eigen::BDCSVD<Matrix> svd(l, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector &sv = svd.singularValues();
    int r = 0;
    if (sv.size() > 0 && sv(0) > 0)
        while (r < sv.size() && sv(r) > 1e-10 * sv(0))
            ++r;
    const Matrix u = svd.matrixU().leftCols(r);
    const Matrix v = svd.matrixV().leftCols(r);
    return {u * u.transpose(), v * v.transpose()};
}

Matrix apply_tangent(const Projectors &pr, const Matrix &n) {
    const Matrix un = pr.pu * n;
    return un + n * pr.pv - un * pr.pv;
}

Matrix sym_sqrt2(const Eigen::Matrix2d &g) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(g);
    const Eigen::Vector2d d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

std::vector<std::pair<int, int>> support_of(const Matrix &s, double tol) {
    std::vector<std::pair<int, int>> out;
    for (Eigen::Index j = 0; j < s.cols(); ++j)
        for (Eigen::Index i = 0; i < s.rows(); ++i)
            if (std::abs(s(i, j)) > tol)
                out.emplace_back(static_cast<int>(i), static_cast<int>(j));
    return out;
}

double degree_bound(const Matrix &indicator) {
    return std::max(indicator.rowwise().sum().maxCoeff(), indicator.colwise().sum().maxCoeff());
}

} // namespace

Matrix tangent_project(const Matrix &l, const Matrix &target) {
    require(l.rows() == target.rows() && l.cols() == target.cols(),
            "tangent_project: dimension mismatch");
    return apply_tangent(tangent_projectors(l), target);
}

double xi_tangent(const Matrix &l) {
    require(l.size() > 0 && l.cwiseAbs().maxCoeff() > 0, "xi_tangent needs a nonzero matrix");
    const auto pr = tangent_projectors(l);
    const Eigen::Index rows = l.rows(), cols = l.cols();

    // P_T(e_i e_jᵀ) = a e_jᵀ + (e_i − a) bᵀ = A Bᵀ with A = [a, e_i − a],
    // B = [e_j, b], a = P_U e_i, b = P_V e_j. Its singular values are those
    // of (AᵀA)^½ (BᵀB)^½, a 2×2 problem.
    std::vector<Eigen::Matrix2d> gram_b(static_cast<std::size_t>(cols));
    for (Eigen::Index j = 0; j < cols; ++j) {
        const double bb = pr.pv(j, j); // ‖b‖² = bᵀe_j since P_V is a projector
        Eigen::Matrix2d g;
        g << 1.0, bb, bb, bb;
        gram_b[static_cast<std::size_t>(j)] = sym_sqrt2(g);
    }
    double best = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) {
        const double aa = pr.pu(i, i);
        Eigen::Matrix2d g; // [aᵀa, aᵀ(e_i−a); ·, ‖e_i−a‖²]
        g << aa, 0.0, 0.0, 1.0 - aa;
        const Eigen::Matrix2d ra = sym_sqrt2(g);
        for (Eigen::Index j = 0; j < cols; ++j) {
            const Eigen::Matrix2d core = ra * gram_b[static_cast<std::size_t>(j)];
            Eigen::JacobiSVD<Eigen::Matrix2d> svd(core);
            best = std::max(best, svd.singularValues().sum());
        }
    }
    return std::min(best, 1.0);
}

double xi_sampled_lower_bound(const Matrix &l, int samples, std::uint64_t seed) {
    require(l.size() > 0 && l.cwiseAbs().maxCoeff() > 0, "xi needs a nonzero matrix");
    const auto pr = tangent_projectors(l);
    double best = 0.0;
    auto consider = [&](const Matrix &n) {
        const double norm = spectral_norm(n);
        if (norm > 1e-14)
            best = std::max(best, n.cwiseAbs().maxCoeff() / norm);
    };
    for (Eigen::Index i = 0; i < l.rows(); ++i)
        for (Eigen::Index j = 0; j < l.cols(); ++j) {
            Matrix e = Matrix::Zero(l.rows(), l.cols());
            e(i, j) = 1.0;
            consider(apply_tangent(pr, e));
        }
    CounterRng rng = CounterRng::stream(seed, "xi-samples");
    for (int k = 0; k < samples; ++k) {
        Matrix g(l.rows(), l.cols());
        for (Eigen::Index j = 0; j < g.cols(); ++j)
            for (Eigen::Index i = 0; i < g.rows(); ++i)
                g(i, j) = rng.normal();
        consider(apply_tangent(pr, g));
    }
    return best;
}

double mu_enumerate(const Matrix &s, double support_tol) {
    const auto supp = support_of(s, support_tol);
    require(!supp.empty(), "mu needs a nonzero matrix");
    require(supp.size() <= 24, "support too large to enumerate");
    // Flipping every sign leaves the norm unchanged, so fix the first sign.
    const int free_bits = static_cast<int>(supp.size()) - 1;
    Matrix n = Matrix::Zero(s.rows(), s.cols());
    double best = 0.0;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << free_bits); ++mask) {
        n(supp[0].first, supp[0].second) = 1.0;
        for (int b = 0; b < free_bits; ++b) {
            const auto [i, j] = supp[static_cast<std::size_t>(b) + 1];
            n(i, j) = ((mask >> b) & 1U) ? -1.0 : 1.0;
        }
        best = std::max(best, spectral_norm(n));
    }
    return best;
}

double mu_power_iteration(const Matrix &s, double support_tol, int max_iter) {
    const auto supp = support_of(s, support_tol);
    require(!supp.empty(), "mu needs a nonzero matrix");
    Matrix a = Matrix::Zero(s.rows(), s.cols());
    for (auto [i, j] : supp)
        a(i, j) = 1.0;
    // A positive start is never orthogonal to the Perron vectors of A.
    Vector y = Vector::Ones(a.cols()).normalized();
    Vector x = (a * y).normalized();
    double value = x.dot(a * y);
    for (int it = 0; it < max_iter; ++it) {
        y = (a.transpose() * x).normalized();
        x = (a * y).normalized();
        const double next = x.dot(a * y);
        const bool done = next - value <= 1e-15 * std::max(1.0, next);
        value = std::max(value, next);
        if (done)
            break;
    }
    return std::min(value, degree_bound(a));
}

MuResult mu_omega(const Matrix &s, double support_tol) {
    const auto supp = support_of(s, support_tol);
    require(!supp.empty(), "mu needs a nonzero matrix");
    if (static_cast<int>(supp.size()) <= kMuEnumerationLimit)
        return {mu_enumerate(s, support_tol), true};
    return {mu_power_iteration(s, support_tol), false};
}

GammaRange gamma_range(double xi, double mu, double c_const) {
    require(xi > 0 && mu > 0 && c_const > 0, "gamma_range inputs must be positive");
    GammaRange g;
    g.low = 3.0 * xi / c_const;
    g.high = c_const / (2.0 * mu);
    g.feasible = g.low <= g.high * (1.0 + 1e-12);
    return g;
}

IdentifiabilityReport identifiability_report(const Matrix &s, const Matrix &l, double c_const) {
    IdentifiabilityReport rep;
    rep.c_const = c_const;
    rep.xi = xi_tangent(l);
    const auto mu = mu_omega(s);
    rep.mu = mu.mu;
    rep.mu_is_exact = mu.exact;
    const auto g = gamma_range(rep.xi, rep.mu, c_const);
    rep.gamma_low = g.low;
    rep.gamma_high = g.high;
    rep.product_bound_ok = g.feasible;
    return rep;
}

TheoremQuantities theorem_quantities(const MarginalizedTruth &truth, const CovarianceTriple &cov,
                                     double xi, double mu, const std::array<double, 6> &q) {
    require(xi > 0, "xi must be positive");
    const int p = cov.p(), m = cov.m();
    require(truth.s_star.rows() == m + p && truth.s_star.cols() == p,
            "truth and covariance dimensions differ");
    const Matrix r_x = truth.s_star.topRows(p) - truth.l_star.topRows(p);
    const Matrix r_zx = truth.s_star.bottomRows(m) - truth.l_star.bottomRows(m);
    Eigen::LLT<Matrix> llt(r_x);
    if (llt.info() != Eigen::Success)
        throw DomainError("S*_X − L*_X is not positive definite");

    TheoremQuantities t;
    t.q_constants = q;
    t.psi_z = spectral_norm(cov.sigma_z());
    t.psi_x_star = 1.0 / min_eigenvalue(r_x);
    t.phi_zx_star = spectral_norm(r_zx);
    const double inner = 1.0 + 2.25 * t.psi_x_star * t.phi_zx_star;
    t.psi = 1.5 * t.psi_x_star * std::sqrt(1.0 + 2.0 * (t.psi_z / t.psi_x_star) * inner * inner);
    t.w = q[0] * std::min({1.0 / (6.0 * t.psi_x_star), t.phi_zx_star / 4.0,
                           q[1] / (t.psi_x_star * t.psi * t.psi)});
    const double ratio = 1.0 + std::sqrt(static_cast<double>(m) / p);
    t.big_m = std::max(1.0, t.psi_z / (4.0 * t.psi_x_star) * ratio * ratio);
    const double n = static_cast<double>(cov.n());
    const double pm = p * t.big_m;
    t.lambda_n = q[2] / xi * std::sqrt(256.0 * t.psi_x_star * t.psi_x_star * pm / n);

    const double w_term = t.w > 0 ? 256.0 * t.psi_x_star * t.psi_x_star / (t.w * t.w)
                                  : std::numeric_limits<double>::infinity();
    t.n_required = pm / std::pow(xi, 4) * std::max(2.0, w_term);

    Eigen::BDCSVD<Matrix> svd(truth.l_star);
    const Vector &sv = svd.singularValues();
    t.sigma_min = 0.0;
    for (Eigen::Index k = 0; k < sv.size(); ++k)
        if (sv(0) > 0 && sv(k) > 1e-10 * sv(0))
            t.sigma_min = sv(k);
    t.sigma_threshold = q[3] * t.lambda_n / (xi * xi);

    t.theta_min = 0.0;
    for (Eigen::Index k = 0; k < truth.s_star.size(); ++k) {
        const double v = std::abs(truth.s_star.data()[k]);
        if (v > 0 && (t.theta_min == 0.0 || v < t.theta_min))
            t.theta_min = v;
    }
    t.theta_threshold = q[4] * t.lambda_n / mu;
    t.error_bound = q[5] * t.psi_x_star / xi * std::sqrt(pm / n);
    return t;
}

} // namespace lscggm
