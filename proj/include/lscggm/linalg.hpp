#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace lscggm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Raised when a parameter leaves the domain of the likelihood (e.g. a
/// precision block that is not positive definite).
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

/// Raised when an iterative numerical routine cannot make progress.
class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline Matrix symmetrize(const Matrix &a) { return 0.5 * (a + a.transpose()); }

/// Sum of singular values.
double nuclear_norm(const Matrix &a);

/// Largest singular value; 0 for empty matrices.
double spectral_norm(const Matrix &a);

/// Number of singular values above rel_tol * sigma_max.
int numerical_rank(const Matrix &a, double rel_tol);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix &sym);

bool is_positive_definite(const Matrix &sym);

/// Entrywise sum of absolute values.
inline double l1_norm(const Matrix &a) { return a.cwiseAbs().sum(); }

/// Throws std::invalid_argument with `what` unless cond holds.
inline void require(bool cond, const std::string &what) {
    if (!cond)
        throw std::invalid_argument(what);
}

/// Stacks a p×p block on top of an m×p block.
Matrix stack_rows(const Matrix &top, const Matrix &bottom);

} // namespace lscggm
