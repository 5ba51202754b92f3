#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace quantobs::numlin {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Default tolerances shared by the checkers.
inline constexpr double kEigTol = 1e-10;
inline constexpr double kRankTol = 1e-9;
inline constexpr double kKernelTol = 1e-9;

struct EigenPair {
  std::complex<double> value;
  Eigen::VectorXcd vector;  // unit Euclidean norm
};

// Which eigenvalues an invariant subspace collects, by magnitude against a
// threshold.
enum class MagnitudeSelector {
  kAtLeast,  // |lambda| >= threshold
  kAbove,    // |lambda| >  threshold
  kBelow,    // |lambda| <  threshold
};

// Throws DimensionError unless `a` is square.
void require_square(const Matrix& a, const char* what);

// Throws DomainError if any entry is NaN or infinite.
void require_finite(const Matrix& a, const char* what);

// Induced 2-norm (largest singular value). Zero for empty matrices.
double norm2(const Matrix& a);

double spectral_radius(const Matrix& a);

// Upper bound on sum_{t>=0} ||A^t||. Partial sums are accumulated until
// ||A^N|| < 1, after which S_N / (1 - ||A^N||) bounds the full series; N is
// increased until that bound is within `tol` (relative) of S_N.
// Throws InstabilityError when spectral_radius(a) >= 1.
double neumann_sum_bound(const Matrix& a, double tol = 1e-12);

// Orthonormal real basis (columns) of the A-invariant subspace spanned by
// the generalized eigenvectors whose eigenvalues satisfy the selector.
// Computed from a reordered complex Schur form, so defective matrices are
// handled. Returns an n x 0 matrix when nothing qualifies.
Matrix invariant_subspace_basis(const Matrix& a, double threshold,
                                MagnitudeSelector selector,
                                double tol = 1e-9);

// True iff ||C W|| <= tol * max(1, ||C||). An empty basis is contained.
bool kernel_containment(const Matrix& c, const Matrix& basis,
                        double tol = kKernelTol);

// Numerical rank with singular values below `abs_tol` treated as zero.
int rank(const Matrix& m, double abs_tol);

// rank(C A^l) for l = 1..n, using the threshold rank_tol * ||C|| * ||A||^l.
std::vector<int> rank_sequence(const Matrix& c, const Matrix& a, int n,
                               double rank_tol = kRankTol);

// Real eigenvalues greater than one with real unit eigenvectors, ordered by
// eigenvalue descending. An eigenvalue is treated as real when its imaginary
// part is below tol * max(1, |lambda|). Repeated eigenvalues with a
// multi-dimensional eigenspace contribute one pair per basis vector.
std::vector<EigenPair> real_unstable_eigenpairs(const Matrix& a,
                                                double tol = 1e-9);

// Orthonormal basis of the complex eigenspace ker(A - lambda I).
Eigen::MatrixXcd eigenspace(const Matrix& a, std::complex<double> lambda,
                            double tol = 1e-9);

// Distinct eigenvalues of A, clustered with relative tolerance `tol`.
std::vector<std::complex<double>> distinct_eigenvalues(const Matrix& a,
                                                       double tol = 1e-8);

}  // namespace quantobs::numlin
