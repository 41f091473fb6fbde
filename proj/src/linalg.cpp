#include "symvi/linalg.hpp"

#include "symvi/errors.hpp"

#include <cmath>
#include <string>

namespace symvi {

bool is_symmetric(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, a.cwiseAbs().maxCoeff());
}

void require_spd(const Matrix& a, const char* what) {
  if (a.rows() == 0 || a.rows() != a.cols()) {
    throw InvalidInput(std::string(what) + ": matrix must be square and non-empty");
  }
  if (!a.allFinite() || !is_symmetric(a)) {
    throw InvalidInput(std::string(what) + ": matrix must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 0.0)) {
    throw InvalidInput(std::string(what) + ": matrix must be positive definite");
  }
}

namespace {

template <typename F>
Matrix spectral_apply(const Matrix& a, F fn) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()));
  Vector ev = es.eigenvalues().unaryExpr([&](double x) { return fn(std::max(x, kEigenFloor)); });
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

Matrix sym_sqrt(const Matrix& a) {
  return spectral_apply(a, [](double x) { return std::sqrt(x); });
}

Matrix sym_inv_sqrt(const Matrix& a) {
  return spectral_apply(a, [](double x) { return 1.0 / std::sqrt(x); });
}

double log_det_spd(const Matrix& a) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw InvalidInput("log_det_spd: matrix not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

Vector random_normal_vector(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = n01(rng);
  return v;
}

Matrix random_orthogonal(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Matrix g(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) g(i, j) = n01(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < d; ++i) {
    if (r(i, i) < 0.0) q.col(i) *= -1.0;
  }
  return q;
}

Matrix random_spd(int d, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  Matrix q = random_orthogonal(d, rng);
  Vector ev(d);
  for (int i = 0; i < d; ++i) ev[i] = std::exp(u(rng));
  Matrix s = q * ev.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

}  // namespace symvi
