#pragma once

#include "lscggm/linalg.hpp"

namespace lscggm {

/// Entrywise prox of κ‖·‖₁: sign(x)·max(|x|−κ, 0).
Matrix soft_threshold(const Matrix &x, double kappa);

/// Prox of κ‖·‖_*: shifts every singular value down by κ, clipping at 0.
Matrix svt_prox(const Matrix &x, double kappa);

/// Frobenius-nearest PSD matrix: clips the eigenvalues of sym(x) at 0.
Matrix psd_project(const Matrix &x);

} // namespace lscggm
