#include "ndsid/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "ndsid/errors.hpp"

namespace ndsid {

namespace {

// Largest 1-norm for which the degree-m approximant meets unit roundoff.
constexpr double kTheta3 = 1.495585217958292e-2;
constexpr double kTheta5 = 2.539398330063230e-1;
constexpr double kTheta7 = 9.504178996162932e-1;
constexpr double kTheta9 = 2.097847961257068e0;
constexpr double kTheta13 = 5.371920351148152e0;

Matrix pade_low(const Matrix& A, int degree) {
    static const double b3[] = {120., 60., 12., 1.};
    static const double b5[] = {30240., 15120., 3360., 420., 30., 1.};
    static const double b7[] = {17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.};
    static const double b9[] = {17643225600., 8821612800., 2075673600., 302702400., 30270240.,
                                2162160.,     110880.,     3960.,       90.,        1.};
    const double* b = degree == 3 ? b3 : degree == 5 ? b5 : degree == 7 ? b7 : b9;

    const Index n = A.rows();
    const Matrix I = Matrix::Identity(n, n);
    const Matrix A2 = A * A;
    Matrix power = I;  // A^(2k)
    Matrix u_sum = b[1] * I;
    Matrix v_sum = b[0] * I;
    for (int k = 1; 2 * k <= degree; ++k) {
        power = power * A2;
        v_sum += b[2 * k] * power;
        u_sum += b[2 * k + 1] * power;
    }
    const Matrix U = A * u_sum;
    return (v_sum - U).partialPivLu().solve(v_sum + U);
}

Matrix pade13(const Matrix& A) {
    static const double b[] = {64764752532480000., 32382376266240000., 7771770303897600.,
                               1187353796428800.,  129060195264000.,   10559470521600.,
                               670442572800.,      33522128640.,       1323241920.,
                               40840800.,          960960.,            16380.,
                               182.,               1.};
    const Index n = A.rows();
    const Matrix I = Matrix::Identity(n, n);
    const Matrix A2 = A * A;
    const Matrix A4 = A2 * A2;
    const Matrix A6 = A4 * A2;
    const Matrix U = A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 +
                          b[3] * A2 + b[1] * I);
    const Matrix V =
        A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
    return (V - U).partialPivLu().solve(V + U);
}

double one_norm(const Matrix& A) {
    if (A.size() == 0) return 0.0;
    return A.cwiseAbs().colwise().sum().maxCoeff();
}

}  // namespace

Matrix expm(const Matrix& A) {
    if (A.rows() != A.cols()) throw DimensionError("expm: matrix must be square");
    const Index n = A.rows();
    if (n == 0) return Matrix(0, 0);

    const double norm = one_norm(A);
    if (!std::isfinite(norm)) throw Error("expm: non-finite matrix entries");
    if (norm <= kTheta3) return pade_low(A, 3);
    if (norm <= kTheta5) return pade_low(A, 5);
    if (norm <= kTheta7) return pade_low(A, 7);
    if (norm <= kTheta9) return pade_low(A, 9);

    int squarings = 0;
    if (norm > kTheta13) squarings = static_cast<int>(std::ceil(std::log2(norm / kTheta13)));
    Matrix R = pade13(A * std::ldexp(1.0, -squarings));
    for (int i = 0; i < squarings; ++i) R = R * R;
    return R;
}

Matrix kron(const Matrix& A, const Matrix& B) {
    Matrix K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Index j = 0; j < A.cols(); ++j)
        for (Index i = 0; i < A.rows(); ++i)
            K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
}

Vector vec(const Matrix& A) { return Eigen::Map<const Vector>(A.data(), A.size()); }

Matrix unvec(const Vector& v, Index rows, Index cols) {
    if (v.size() != rows * cols) throw DimensionError("unvec: size mismatch");
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

Matrix block_diag(const std::vector<Matrix>& blocks) {
    Index rows = 0, cols = 0;
    for (const auto& b : blocks) {
        rows += b.rows();
        cols += b.cols();
    }
    Matrix out = Matrix::Zero(rows, cols);
    Index r = 0, c = 0;
    for (const auto& b : blocks) {
        out.block(r, c, b.rows(), b.cols()) = b;
        r += b.rows();
        c += b.cols();
    }
    return out;
}

namespace {

Vector singular_values(const Matrix& A) {
    if (A.size() == 0) return Vector(0);
    if (std::min(A.rows(), A.cols()) <= 16) return Eigen::JacobiSVD<Matrix>(A).singularValues();
    return Eigen::BDCSVD<Matrix>(A).singularValues();
}

double condition_from(const Vector& sv, Index cols) {
    if (cols == 0) return std::numeric_limits<double>::infinity();
    if (sv.size() < cols) return std::numeric_limits<double>::infinity();
    const double smin = sv(sv.size() - 1);
    if (smin <= 0.0) return std::numeric_limits<double>::infinity();
    return sv(0) / smin;
}

}  // namespace

double condition_number(const Matrix& A) { return condition_from(singular_values(A), A.cols()); }

LeastSquaresResult solve_least_squares(const Matrix& A, const Vector& b, double rel_tol) {
    if (A.rows() != b.size()) throw DimensionError("solve_least_squares: rows(A) != size(b)");
    LeastSquaresResult out;
    out.x = Vector::Zero(A.cols());
    if (A.cols() == 0) {
        out.full_rank = true;
        out.condition = 1.0;
        out.residual_norm = b.norm();
        return out;
    }
    const Vector sv = singular_values(A);
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    out.rank = 0;
    for (Index i = 0; i < sv.size(); ++i)
        if (sv(i) > rel_tol * smax && sv(i) > 0.0) ++out.rank;
    out.full_rank = out.rank == A.cols();
    out.condition = out.full_rank ? condition_from(sv, A.cols())
                                  : std::numeric_limits<double>::infinity();

    Eigen::ColPivHouseholderQR<Matrix> qr(A);
    qr.setThreshold(rel_tol);
    out.x = qr.solve(b);
    out.residual_norm = (A * out.x - b).norm();
    return out;
}

double default_rank_tolerance(const Matrix& M) {
    if (M.size() == 0) return 0.0;
    const Vector sv = singular_values(M);
    return static_cast<double>(std::max(M.rows(), M.cols())) *
           std::numeric_limits<double>::epsilon() * sv(0);
}

NullSpace left_null_space(const Matrix& M, double tolerance) {
    NullSpace out;
    const Index m = M.rows();
    if (M.size() == 0 || M.cwiseAbs().maxCoeff() == 0.0) {
        out.basis = Matrix::Identity(m, m);
        out.rank = 0;
        out.tolerance = tolerance < 0.0 ? 0.0 : tolerance;
        return out;
    }
    Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeFullU);
    const Vector& sv = svd.singularValues();
    out.tolerance = tolerance < 0.0 ? static_cast<double>(std::max(M.rows(), M.cols())) *
                                          std::numeric_limits<double>::epsilon() * sv(0)
                                    : tolerance;
    for (Index i = 0; i < sv.size(); ++i)
        if (sv(i) > out.tolerance) ++out.rank;
    out.basis = svd.matrixU().rightCols(m - out.rank);
    return out;
}

}  // namespace ndsid
