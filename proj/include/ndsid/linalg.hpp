#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace ndsid {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Matrix exponential by scaling and squaring with diagonal Pade approximants
/// (degrees 3, 5, 7, 9, 13 chosen from the 1-norm).
Matrix expm(const Matrix& A);

/// Kronecker product A (x) B.
Matrix kron(const Matrix& A, const Matrix& B);

/// Column-major vectorization, vec(ABC) = (C^T (x) A) vec(B).
Vector vec(const Matrix& A);
Matrix unvec(const Vector& v, Index rows, Index cols);

/// Block-diagonal stack; zero-sized blocks are allowed.
Matrix block_diag(const std::vector<Matrix>& blocks);

struct LeastSquaresResult {
    Vector x;
    Index rank = 0;
    bool full_rank = false;
    double condition = 0.0;  ///< sigma_max / sigma_min, +inf when rank deficient
    double residual_norm = 0.0;
};

/// Least-squares solution of A x ~= b through column-pivoted Householder QR.
/// The numerical rank uses |R_ii| > rel_tol * |R_00|; the reported condition
/// number comes from the singular values.
LeastSquaresResult solve_least_squares(const Matrix& A, const Vector& b, double rel_tol = 1e-10);

/// Ratio of extreme singular values (inf for a singular or empty-column matrix).
double condition_number(const Matrix& A);

struct NullSpace {
    Matrix basis;  ///< orthonormal columns spanning the left null space
    Index rank = 0;
    double tolerance = 0.0;
};

/// Orthonormal basis of {u : u^T M = 0} from the full SVD of M. A negative
/// tolerance selects max(rows, cols) * eps * sigma_max.
NullSpace left_null_space(const Matrix& M, double tolerance = -1.0);

/// Default SVD rank threshold max(m, n) * eps * sigma_max.
double default_rank_tolerance(const Matrix& M);

}  // namespace ndsid
