#include "lscggm/model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace lscggm {

namespace {

void require_psd(const Matrix &sym, const char *name) {
    if (sym.size() == 0)
        return;
    const double scale = std::max(1.0, sym.cwiseAbs().maxCoeff());
    if (min_eigenvalue(sym) < -1e-10 * scale)
        throw std::invalid_argument(std::string(name) + " has a negative eigenvalue");
}

} // namespace

CovarianceTriple::CovarianceTriple(Matrix sigma_z, Matrix sigma_x, Matrix sigma_zx, long n)
    : sigma_z_(std::move(sigma_z)), sigma_x_(std::move(sigma_x)), sigma_zx_(std::move(sigma_zx)),
      n_(n) {
    require(n_ >= 1, "covariance: n must be positive");
    require(sigma_x_.rows() >= 1 && sigma_x_.rows() == sigma_x_.cols(),
            "covariance: sigma_x must be square and non-empty");
    require(sigma_z_.rows() == sigma_z_.cols(), "covariance: sigma_z must be square");
    // An m = 0 problem may arrive with a 0×0 or 0×p sigma_zx.
    if (sigma_z_.rows() == 0)
        sigma_zx_.resize(0, sigma_x_.rows());
    require(sigma_zx_.rows() == sigma_z_.rows() && sigma_zx_.cols() == sigma_x_.rows(),
            "covariance: sigma_zx must be m×p");
    require(sigma_z_.allFinite() && sigma_x_.allFinite() && sigma_zx_.allFinite(),
            "covariance: non-finite entries");
    sigma_z_ = symmetrize(sigma_z_);
    sigma_x_ = symmetrize(sigma_x_);
    require_psd(sigma_z_, "sigma_z");
    require_psd(sigma_x_, "sigma_x");
}

Matrix CovarianceTriple::joint() const {
    const int m = this->m(), p = this->p();
    Matrix out(m + p, m + p);
    out.topLeftCorner(m, m) = sigma_z_;
    out.topRightCorner(m, p) = sigma_zx_;
    out.bottomLeftCorner(p, m) = sigma_zx_.transpose();
    out.bottomRightCorner(p, p) = sigma_x_;
    return out;
}

MarginalParams::MarginalParams(Matrix r_x, Matrix r_zx) : r_x_(std::move(r_x)), r_zx_(std::move(r_zx)) {
    require(r_x_.rows() == r_x_.cols(), "marginal params: r_x must be square");
    if (r_zx_.rows() == 0)
        r_zx_.resize(0, r_x_.rows());
    require(r_zx_.cols() == r_x_.rows(), "marginal params: r_zx must be m×p");
    r_x_ = symmetrize(r_x_);
}

MarginalParams MarginalParams::from_stacked(const Matrix &stacked, int p) {
    require(stacked.cols() == p && stacked.rows() >= p, "marginal params: bad stacked shape");
    return {stacked.topRows(p), stacked.bottomRows(stacked.rows() - p)};
}

DecomposedParams::DecomposedParams(Matrix s_x, Matrix l_x, Matrix s_zx, Matrix l_zx)
    : s_x_(std::move(s_x)), l_x_(std::move(l_x)), s_zx_(std::move(s_zx)), l_zx_(std::move(l_zx)) {
    const auto p = s_x_.rows();
    require(s_x_.cols() == p && l_x_.rows() == p && l_x_.cols() == p,
            "decomposed params: s_x and l_x must be p×p");
    if (s_zx_.rows() == 0)
        s_zx_.resize(0, p);
    if (l_zx_.rows() == 0)
        l_zx_.resize(0, p);
    require(s_zx_.cols() == p && l_zx_.cols() == p && s_zx_.rows() == l_zx_.rows(),
            "decomposed params: s_zx and l_zx must be m×p");
    s_x_ = symmetrize(s_x_);
    l_x_ = symmetrize(l_x_);
}

DecomposedParams DecomposedParams::from_stacked(const Matrix &s, const Matrix &l, int p) {
    require(s.rows() == l.rows() && s.cols() == p && l.cols() == p && s.rows() >= p,
            "decomposed params: bad stacked shape");
    const auto m = s.rows() - p;
    return {s.topRows(p), l.topRows(p), s.bottomRows(m), l.bottomRows(m)};
}

bool DecomposedParams::is_feasible() const {
    if (!is_positive_definite(s_x_ - l_x_))
        return false;
    return l_x_.size() == 0 || min_eigenvalue(l_x_) >= -1e-10;
}

void PenaltyConfig::validate() const {
    require(std::isfinite(lambda) && lambda >= 0.0, "penalty: lambda must be nonnegative");
    if (parametrisation == Parametrisation::ratio01)
        require(gamma > 0.0 && gamma < 1.0, "penalty: gamma must lie in (0,1) under ratio01");
    else
        require(std::isfinite(gamma) && gamma > 0.0, "penalty: gamma must be positive under raw");
}

Matrix GroundTruthModel::joint_precision() const {
    const int p = this->p(), h = this->h();
    Matrix j(p + h, p + h);
    j.topLeftCorner(p, p) = m_x;
    if (h > 0) {
        j.topRightCorner(p, h) = m_xh;
        j.bottomLeftCorner(h, p) = m_xh.transpose();
        j.bottomRightCorner(h, h) = m_h;
    }
    return j;
}

void GroundTruthModel::validate() const {
    const auto p = m_x.rows(), h = m_h.rows(), m = m_zx.rows();
    require(m_x.cols() == p && m_h.cols() == h, "ground truth: m_x and m_h must be square");
    require(m_xh.rows() == p && m_xh.cols() == h, "ground truth: m_xh must be p×h");
    require(m_zx.cols() == p, "ground truth: m_zx must be m×p");
    require(m_zh.rows() == m && m_zh.cols() == h, "ground truth: m_zh must be m×h");
}

CovarianceTriple sample_covariances(const Matrix &data_z, const Matrix &data_x) {
    const auto n = data_x.rows();
    require(n >= 1, "sample_covariances: no samples");
    require(data_z.rows() == n || data_z.size() == 0, "sample_covariances: row-count mismatch");
    const double inv_n = 1.0 / static_cast<double>(n);
    const Matrix sx = inv_n * (data_x.transpose() * data_x);
    if (data_z.cols() == 0)
        return {Matrix(0, 0), sx, Matrix(0, data_x.cols()), n};
    const Matrix sz = inv_n * (data_z.transpose() * data_z);
    const Matrix szx = inv_n * (data_z.transpose() * data_x);
    return {sz, sx, szx, n};
}

namespace {

struct Factored {
    Eigen::LLT<Matrix> llt;
    double logdet = 0.0;
};

Factored factor(const Matrix &r_x) {
    Factored f;
    f.llt.compute(r_x);
    if (f.llt.info() != Eigen::Success)
        throw DomainError("R_X is not positive definite");
    f.logdet = 2.0 * f.llt.matrixLLT().diagonal().array().log().sum();
    return f;
}

void check_dims(const MarginalParams &params, const CovarianceTriple &cov) {
    require(params.p() == cov.p() && params.m() == cov.m(),
            "parameter and covariance dimensions disagree");
}

} // namespace

double neg_log_likelihood(const MarginalParams &params, const CovarianceTriple &cov) {
    check_dims(params, cov);
    const Factored f = factor(params.r_x());
    double value = -f.logdet + (cov.sigma_x().cwiseProduct(params.r_x())).sum();
    if (cov.m() > 0) {
        const Matrix &rzx = params.r_zx();
        value += 2.0 * cov.sigma_zx().cwiseProduct(rzx).sum();
        // Tr(R_X⁻¹ R_ZXᵀ Σ_Z R_ZX) = Tr(R_ZX R_X⁻¹ R_ZXᵀ Σ_Z)
        const Matrix rinv_rzx_t = f.llt.solve(rzx.transpose()); // p×m
        value += (rzx * rinv_rzx_t).cwiseProduct(cov.sigma_z()).sum();
    }
    return value;
}

NllGradient nll_gradient(const MarginalParams &params, const CovarianceTriple &cov) {
    check_dims(params, cov);
    const Factored f = factor(params.r_x());
    const int p = cov.p();
    const Matrix rinv = f.llt.solve(Matrix::Identity(p, p));
    NllGradient g;
    g.r_x = -rinv + cov.sigma_x();
    if (cov.m() > 0) {
        const Matrix a = params.r_zx() * rinv; // m×p: R_ZX R_X⁻¹
        g.r_x -= a.transpose() * cov.sigma_z() * a;
        g.r_zx = 2.0 * cov.sigma_zx() + 2.0 * cov.sigma_z() * a;
    } else {
        g.r_zx.resize(0, p);
    }
    g.r_x = symmetrize(g.r_x);
    return g;
}

double penalty_value(const DecomposedParams &params, const PenaltyConfig &pen) {
    double l1 = l1_norm(params.s());
    if (!pen.penalize_diagonal)
        l1 -= params.s_x().diagonal().cwiseAbs().sum();
    double value = pen.sparse_weight() * l1;
    const double w = pen.nuclear_weight();
    if (w != 0.0)
        value += w * nuclear_norm(params.l());
    return value;
}

double objective(const DecomposedParams &params, const CovarianceTriple &cov,
                 const PenaltyConfig &pen) {
    if (params.l_x().size() > 0 && min_eigenvalue(params.l_x()) < -1e-10)
        throw DomainError("L_X is not positive semidefinite");
    return neg_log_likelihood(params.marginal(), cov) + penalty_value(params, pen);
}

MarginalizedTruth marginalize_ground_truth(const GroundTruthModel &model) {
    model.validate();
    const int p = model.p(), m = model.m(), h = model.h();
    MarginalizedTruth out;
    out.s_star = stack_rows(model.m_x, model.m_zx);
    out.l_star = Matrix::Zero(m + p, p);
    if (h == 0)
        return out;
    Eigen::LLT<Matrix> llt(model.m_h);
    if (llt.info() != Eigen::Success)
        throw DomainError("M_H is singular or not positive definite");
    const Matrix hinv_xh_t = llt.solve(model.m_xh.transpose()); // h×p
    out.l_star.topRows(p) = symmetrize(model.m_xh * hinv_xh_t);
    if (m > 0)
        out.l_star.bottomRows(m) = model.m_zh * hinv_xh_t;
    return out;
}

} // namespace lscggm
