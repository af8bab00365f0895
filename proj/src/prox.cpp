#include "lscggm/prox.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace lscggm {

Matrix soft_threshold(const Matrix &x, double kappa) {
    require(kappa >= 0.0, "soft_threshold: kappa must be nonnegative");
    return x.unaryExpr([kappa](double v) {
        if (v > kappa)
            return v - kappa;
        if (v < -kappa)
            return v + kappa;
        return 0.0;
    });
}

Matrix svt_prox(const Matrix &x, double kappa) {
    require(kappa >= 0.0, "svt_prox: kappa must be nonnegative");
    if (x.size() == 0 || kappa == 0.0)
        return x;
    Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector shrunk = (svd.singularValues().array() - kappa).max(0.0).matrix();
    Eigen::Index rank = 0;
    while (rank < shrunk.size() && shrunk(rank) > 0.0)
        ++rank;
    if (rank == 0)
        return Matrix::Zero(x.rows(), x.cols());
    return svd.matrixU().leftCols(rank) * shrunk.head(rank).asDiagonal() *
           svd.matrixV().leftCols(rank).transpose();
}

Matrix psd_project(const Matrix &x) {
    require(x.rows() == x.cols(), "psd_project: matrix must be square");
    if (x.size() == 0)
        return x;
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(x));
    const Vector &ev = es.eigenvalues();
    if (ev(0) >= 0.0)
        return symmetrize(x);
    const Vector clipped = ev.cwiseMax(0.0);
    return symmetrize(es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose());
}

} // namespace lscggm
