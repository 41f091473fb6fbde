#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace symvi {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Eigenvalues below this are clamped before taking roots.
inline constexpr double kEigenFloor = 1e-12;

bool is_symmetric(const Matrix& a, double tol = 1e-12);

/// Throws InvalidInput unless `a` is square, symmetric to 1e-12 and has a
/// strictly positive smallest eigenvalue.
void require_spd(const Matrix& a, const char* what);

/// Symmetric PSD square root via eigendecomposition (eigenvalues floored).
Matrix sym_sqrt(const Matrix& a);
Matrix sym_inv_sqrt(const Matrix& a);

double log_det_spd(const Matrix& a);

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// diagonal of R made positive.
Matrix random_orthogonal(int d, std::mt19937_64& rng);

/// Random symmetric positive-definite matrix with eigenvalues in [lo, hi].
Matrix random_spd(int d, std::mt19937_64& rng, double lo = 0.3, double hi = 3.0);

Vector random_normal_vector(int d, std::mt19937_64& rng);

}  // namespace symvi
