#include "lscggm/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace lscggm {

double nuclear_norm(const Matrix &a) {
    if (a.size() == 0)
        return 0.0;
    Eigen::JacobiSVD<Matrix> svd(a);
    return svd.singularValues().sum();
}

double spectral_norm(const Matrix &a) {
    if (a.size() == 0)
        return 0.0;
    Eigen::JacobiSVD<Matrix> svd(a);
    return svd.singularValues()(0);
}

int numerical_rank(const Matrix &a, double rel_tol) {
    if (a.size() == 0)
        return 0;
    Eigen::JacobiSVD<Matrix> svd(a);
    const Vector &sv = svd.singularValues();
    if (sv(0) <= 0.0)
        return 0;
    const double cut = rel_tol * sv(0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cut)
            ++rank;
    return rank;
}

double min_eigenvalue(const Matrix &sym) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

bool is_positive_definite(const Matrix &sym) {
    Eigen::LLT<Matrix> llt(sym);
    return llt.info() == Eigen::Success;
}

Matrix stack_rows(const Matrix &top, const Matrix &bottom) {
    Matrix out(top.rows() + bottom.rows(), top.cols());
    out.topRows(top.rows()) = top;
    if (bottom.rows() > 0)
        out.bottomRows(bottom.rows()) = bottom;
    return out;
}

} // namespace lscggm
