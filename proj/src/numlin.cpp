#include "quantobs/numlin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "quantobs/errors.hpp"

namespace quantobs::numlin {

namespace {

using Complex = std::complex<double>;

bool selected(double magnitude, double threshold, MagnitudeSelector sel,
              double tol) {
  switch (sel) {
    case MagnitudeSelector::kAtLeast:
      return magnitude >= threshold - tol;
    case MagnitudeSelector::kAbove:
      return magnitude > threshold + tol;
    case MagnitudeSelector::kBelow:
      return magnitude < threshold - tol;
  }
  return false;
}

// Swap diagonal entries k and k+1 of the upper-triangular t, updating the
// unitary factor so that a = u t u^H still holds.
void swap_schur(Eigen::MatrixXcd& t, Eigen::MatrixXcd& u, Eigen::Index k) {
  const Complex x = t(k, k + 1);
  const Complex y = t(k + 1, k + 1) - t(k, k);
  const double r = std::hypot(std::abs(x), std::abs(y));
  if (r == 0.0) return;
  Eigen::Matrix2cd g;
  g << std::conj(x) / r, std::conj(y) / r, -y / r, x / r;
  const Eigen::Matrix2cd gh = g.adjoint();
  t.middleRows(k, 2) = (g * t.middleRows(k, 2)).eval();
  t.middleCols(k, 2) = (t.middleCols(k, 2) * gh).eval();
  u.middleCols(k, 2) = (u.middleCols(k, 2) * gh).eval();
  t(k + 1, k) = 0.0;
}

Matrix null_space_real(const Matrix& m, double abs_tol) {
  if (m.cols() == 0) return Matrix(0, 0);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > abs_tol) ++r;
  return svd.matrixV().rightCols(m.cols() - r);
}

}  // namespace

void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols())
    throw DimensionError(std::string(what) + " must be square, got " +
                         std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()));
}

void require_finite(const Matrix& a, const char* what) {
  if (!a.allFinite())
    throw DomainError(std::string(what) + " has non-finite entries");
}

double norm2(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  if (a.rows() == 1 || a.cols() == 1) return a.norm();
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

double spectral_radius(const Matrix& a) {
  require_square(a, "spectral_radius argument");
  require_finite(a, "spectral_radius argument");
  if (a.rows() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double neumann_sum_bound(const Matrix& a, double tol) {
  require_square(a, "neumann_sum_bound argument");
  const double rho = spectral_radius(a);
  if (rho >= 1.0)
    throw InstabilityError("neumann_sum_bound needs spectral radius < 1, got " +
                           std::to_string(rho));
  if (a.rows() == 0) return 1.0;

  constexpr int kMaxSteps = 1000000;
  Matrix power = Matrix::Identity(a.rows(), a.cols());
  double partial = 0.0;  // sum_{t < N} ||A^t||
  double best = std::numeric_limits<double>::infinity();
  for (int n = 1; n <= kMaxSteps; ++n) {
    partial += norm2(power);
    power = (power * a).eval();
    const double head = norm2(power);
    if (head < 1.0) {
      best = std::min(best, partial / (1.0 - head));
      if (head / (1.0 - head) <= tol) return best;
    }
  }
  throw BudgetError("neumann_sum_bound did not converge");
}

Matrix invariant_subspace_basis(const Matrix& a, double threshold,
                                MagnitudeSelector selector, double tol) {
  require_square(a, "invariant_subspace_basis argument");
  require_finite(a, "invariant_subspace_basis argument");
  const Eigen::Index n = a.rows();
  if (n == 0) return Matrix(0, 0);

  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(a.cast<Complex>());
  Eigen::MatrixXcd t = schur.matrixT();
  Eigen::MatrixXcd u = schur.matrixU();

  Eigen::Index front = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!selected(std::abs(t(i, i)), threshold, selector, tol)) continue;
    for (Eigen::Index k = i; k > front; --k) swap_schur(t, u, k - 1);
    ++front;
  }
  if (front == 0) return Matrix(n, 0);
  if (front == n) return Matrix::Identity(n, n);

  // The selection is closed under conjugation, so the complex span is the
  // complexification of a real subspace of the same dimension.
  Matrix stacked(n, 2 * front);
  stacked << u.leftCols(front).real(), u.leftCols(front).imag();
  Eigen::JacobiSVD<Matrix> svd(stacked, Eigen::ComputeThinU);
  Matrix basis = svd.matrixU().leftCols(front);
  // Re-orthonormalize against rounding.
  Eigen::HouseholderQR<Matrix> qr(basis);
  return qr.householderQ() * Matrix::Identity(n, front);
}

bool kernel_containment(const Matrix& c, const Matrix& basis, double tol) {
  if (basis.cols() == 0) return true;
  if (c.cols() != basis.rows())
    throw DimensionError("kernel_containment: C has " +
                         std::to_string(c.cols()) + " columns, basis has " +
                         std::to_string(basis.rows()) + " rows");
  return norm2(c * basis) <= tol * std::max(1.0, norm2(c));
}

int rank(const Matrix& m, double abs_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& sv = svd.singularValues();
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > abs_tol) ++r;
  return r;
}

std::vector<int> rank_sequence(const Matrix& c, const Matrix& a, int n,
                               double rank_tol) {
  require_square(a, "rank_sequence A");
  if (c.cols() != a.rows())
    throw DimensionError("rank_sequence: C and A are incompatible");
  std::vector<int> ranks;
  ranks.reserve(static_cast<std::size_t>(std::max(n, 0)));
  const double c_norm = norm2(c);
  const double a_norm = norm2(a);
  Matrix product = c;
  double scale = c_norm;
  for (int l = 1; l <= n; ++l) {
    product = (product * a).eval();
    scale *= a_norm;
    ranks.push_back(rank(product, rank_tol * scale));
  }
  return ranks;
}

std::vector<Complex> distinct_eigenvalues(const Matrix& a, double tol) {
  require_square(a, "distinct_eigenvalues argument");
  require_finite(a, "distinct_eigenvalues argument");
  if (a.rows() == 0) return {};
  Eigen::EigenSolver<Matrix> es(a, false);
  std::vector<Complex> values(es.eigenvalues().data(),
                              es.eigenvalues().data() + a.rows());
  std::sort(values.begin(), values.end(), [](Complex l, Complex r) {
    return l.real() != r.real() ? l.real() < r.real() : l.imag() < r.imag();
  });

  // Clusters of nearby eigenvalues (defective blocks scatter their
  // eigenvalues around the true one) are replaced by their mean.
  std::vector<std::vector<Complex>> clusters;
  for (Complex v : values) {
    bool placed = false;
    for (auto& cl : clusters) {
      const Complex centre = cl.front();
      if (std::abs(v - centre) <= tol * std::max(1.0, std::abs(centre))) {
        cl.push_back(v);
        placed = true;
        break;
      }
    }
    if (!placed) clusters.push_back({v});
  }
  std::vector<Complex> out;
  for (const auto& cl : clusters) {
    Complex sum = 0.0;
    for (Complex v : cl) sum += v;
    out.push_back(sum / static_cast<double>(cl.size()));
  }
  return out;
}

Eigen::MatrixXcd eigenspace(const Matrix& a, Complex lambda, double tol) {
  require_square(a, "eigenspace argument");
  const Eigen::Index n = a.rows();
  if (n == 0) return Eigen::MatrixXcd(0, 0);
  Eigen::MatrixXcd shifted = a.cast<Complex>();
  shifted.diagonal().array() -= lambda;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(shifted, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double abs_tol = tol * std::max(1.0, norm2(a));
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > abs_tol) ++r;
  return svd.matrixV().rightCols(n - r);
}

std::vector<EigenPair> real_unstable_eigenpairs(const Matrix& a, double tol) {
  std::vector<EigenPair> out;
  if (a.rows() == 0) return out;
  std::vector<double> reals;
  for (Complex v : distinct_eigenvalues(a)) {
    if (std::abs(v.imag()) > tol * std::max(1.0, std::abs(v))) continue;
    if (v.real() > 1.0) reals.push_back(v.real());
  }
  std::sort(reals.begin(), reals.end(), std::greater<>());

  const double abs_tol = tol * std::max(1.0, norm2(a));
  for (double lambda : reals) {
    Matrix shifted = a;
    shifted.diagonal().array() -= lambda;
    const Matrix null = null_space_real(shifted, abs_tol);
    for (Eigen::Index c = 0; c < null.cols(); ++c) {
      Vector v = null.col(c).normalized();
      Eigen::Index big = 0;
      v.cwiseAbs().maxCoeff(&big);
      if (v(big) < 0) v = -v;
      out.push_back({Complex(lambda, 0.0), v.cast<Complex>()});
    }
  }
  return out;
}

}  // namespace quantobs::numlin
