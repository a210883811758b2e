#include "vnsplit/linops.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace vnsplit {

Cplx hs_inner(const Mat& x, const Mat& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols())
        throw DimensionMismatch("hs_inner: shapes differ");
    return (x.adjoint() * y).trace();
}

double hs_norm(const Mat& x) { return x.norm(); }

Vec vec_rm(const Mat& x) {
    Vec v(x.size());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) v(k++) = x(i, j);
    return v;
}

Mat unvec_rm(const Vec& v, int rows, int cols) {
    if (v.size() != static_cast<Eigen::Index>(rows) * cols)
        throw DimensionMismatch("unvec_rm: size mismatch");
    Mat m(rows, cols);
    Eigen::Index k = 0;
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = v(k++);
    return m;
}

Mat identity(int n) { return Mat::Identity(n, n); }

Mat basis_op(int n, int i, int j) {
    Mat m = Mat::Zero(n, n);
    m(i, j) = 1.0;
    return m;
}

Mat tensor(const Mat& a, const Mat& b) {
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

Mat direct_sum(const Mat& a, const Mat& b) {
    Mat out = Mat::Zero(a.rows() + b.rows(), a.cols() + b.cols());
    out.topLeftCorner(a.rows(), a.cols()) = a;
    out.bottomRightCorner(b.rows(), b.cols()) = b;
    return out;
}

Mat partial_trace(const Mat& m, int d_left, int d_right, Side side) {
    const Eigen::Index n = static_cast<Eigen::Index>(d_left) * d_right;
    if (m.rows() != n || m.cols() != n)
        throw DimensionMismatch("partial_trace: matrix is not d_left*d_right square");
    if (side == Side::Right) {
        Mat out = Mat::Zero(d_left, d_left);
        for (int i = 0; i < d_left; ++i)
            for (int k = 0; k < d_left; ++k) {
                Cplx s = 0.0;
                for (int b = 0; b < d_right; ++b)
                    s += m(static_cast<Eigen::Index>(i) * d_right + b,
                           static_cast<Eigen::Index>(k) * d_right + b);
                out(i, k) = s;
            }
        return out;
    }
    Mat out = Mat::Zero(d_right, d_right);
    for (int j = 0; j < d_right; ++j)
        for (int l = 0; l < d_right; ++l) {
            Cplx s = 0.0;
            for (int a = 0; a < d_left; ++a)
                s += m(static_cast<Eigen::Index>(a) * d_right + j,
                       static_cast<Eigen::Index>(a) * d_right + l);
            out(j, l) = s;
        }
    return out;
}

namespace {

// Columns of an orthonormal basis of the column space, rank cut at
// relative_rank * sigma_max.
Mat column_space(const Mat& m, const Tolerance& tol) {
    if (m.size() == 0) return Mat(m.rows(), 0);
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) <= tol.absolute) return Mat(m.rows(), 0);
    const double cut = tol.relative_rank * sv(0);
    int rank = 0;
    while (rank < sv.size() && sv(rank) > cut) ++rank;
    return svd.matrixU().leftCols(rank);
}

} // namespace

OperatorSubspace orthonormalize(const std::vector<Mat>& vectors, const Tolerance& tol) {
    if (vectors.empty()) throw EmptySpan("orthonormalize: no input vectors");
    const Eigen::Index rows = vectors.front().rows();
    const Eigen::Index cols = vectors.front().cols();
    Mat stacked(rows * cols, static_cast<Eigen::Index>(vectors.size()));
    for (std::size_t k = 0; k < vectors.size(); ++k) {
        if (vectors[k].rows() != rows || vectors[k].cols() != cols)
            throw DimensionMismatch("orthonormalize: inputs have mixed shapes");
        stacked.col(static_cast<Eigen::Index>(k)) = vec_rm(vectors[k]);
    }
    Mat u = column_space(stacked, tol);
    if (u.cols() == 0) throw EmptySpan("orthonormalize: all inputs are numerically zero");
    OperatorSubspace s;
    s.dim_space = static_cast<int>(rows);
    for (Eigen::Index k = 0; k < u.cols(); ++k)
        s.basis.push_back(unvec_rm(u.col(k), static_cast<int>(rows), static_cast<int>(cols)));
    return s;
}

Mat subspace_project(const OperatorSubspace& s, const Mat& v) {
    Mat proj = Mat::Zero(v.rows(), v.cols());
    for (const Mat& b : s.basis) proj += hs_inner(b, v) * b;
    return proj;
}

bool subspace_contains(const OperatorSubspace& s, const Mat& v, const Tolerance& tol) {
    if (v.rows() != s.dim_space || v.cols() != s.dim_space)
        throw DimensionMismatch("subspace_contains: dimension mismatch");
    const double resid = hs_norm(v - subspace_project(s, v));
    return resid <= tol.absolute * std::max(1.0, hs_norm(v));
}

bool subspace_subset(const OperatorSubspace& s1, const OperatorSubspace& s2, const Tolerance& tol) {
    if (s1.dim_space != s2.dim_space)
        throw DimensionMismatch("subspace_subset: dimension mismatch");
    for (const Mat& b : s1.basis)
        if (!subspace_contains(s2, b, tol)) return false;
    return true;
}

bool subspace_equal(const OperatorSubspace& s1, const OperatorSubspace& s2, const Tolerance& tol) {
    return subspace_subset(s1, s2, tol) && subspace_subset(s2, s1, tol);
}

OperatorSubspace subspace_intersect(const OperatorSubspace& s1, const OperatorSubspace& s2,
                                    const Tolerance& tol) {
    if (s1.dim_space != s2.dim_space)
        throw DimensionMismatch("subspace_intersect: dimension mismatch");
    const int n = s1.dim_space;
    const Eigen::Index nn = static_cast<Eigen::Index>(n) * n;
    auto projector = [&](const OperatorSubspace& s) {
        Mat v(nn, s.dim());
        for (int k = 0; k < s.dim(); ++k) v.col(k) = vec_rm(s.basis[k]);
        return Mat(v * v.adjoint());
    };
    // ker[(1 - P1); (1 - P2)] = span(s1) \cap span(s2)
    Mat stacked(2 * nn, nn);
    stacked.topRows(nn) = Mat::Identity(nn, nn) - projector(s1);
    stacked.bottomRows(nn) = Mat::Identity(nn, nn) - projector(s2);
    OperatorSubspace out;
    out.dim_space = n;
    for (const Vec& v : nullspace(stacked, tol)) out.basis.push_back(unvec_rm(v, n, n));
    return out;
}

std::vector<Vec> nullspace(const Mat& linear_map, const Tolerance& tol) {
    Eigen::JacobiSVD<Mat> svd(linear_map, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    const double cut = std::max(tol.relative_rank * smax, 0.0);
    int rank = 0;
    while (rank < sv.size() && sv(rank) > cut && smax > tol.absolute) ++rank;
    std::vector<Vec> kernel;
    for (Eigen::Index k = rank; k < linear_map.cols(); ++k)
        kernel.push_back(svd.matrixV().col(k));
    return kernel;
}

Mat polar_isometry(const Mat& m, const Tolerance& tol) {
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) <= tol.absolute) return Mat::Zero(m.rows(), m.cols());
    const double cut = tol.relative_rank * sv(0);
    int rank = 0;
    while (rank < sv.size() && sv(rank) > cut) ++rank;
    return svd.matrixU().leftCols(rank) * svd.matrixV().leftCols(rank).adjoint();
}

int projector_rank(const Mat& p) { return static_cast<int>(std::lround(p.trace().real())); }

Mat projector_range_basis(const Mat& p) {
    const int q = projector_rank(p);
    Eigen::ColPivHouseholderQR<Mat> qr(p);
    Mat full = qr.householderQ();
    return full.leftCols(q);
}

bool subspace_valid(const OperatorSubspace& s, const Tolerance& tol) {
    for (const Mat& b : s.basis)
        if (b.rows() != s.dim_space || b.cols() != s.dim_space) return false;
    const int d = s.dim();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const Cplx g = hs_inner(s.basis[i], s.basis[j]);
            const Cplx want = (i == j) ? Cplx(1.0) : Cplx(0.0);
            if (std::abs(g - want) > 10 * tol.absolute) return false;
        }
    return true;
}

double Rng::uniform() {
    // 53-bit mantissa mapping; avoids implementation-defined distributions.
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::symmetric() { return 2.0 * uniform() - 1.0; }

Cplx Rng::complex_symmetric() {
    const double re = symmetric();
    const double im = symmetric();
    return {re, im};
}

Mat random_matrix(int rows, int cols, Rng& rng) {
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.complex_symmetric();
    return m;
}

Mat random_hermitian_in(const OperatorSubspace& s, std::uint64_t seed, const Tolerance& tol) {
    for (const Mat& b : s.basis)
        if (!subspace_contains(s, Mat(b.adjoint()), tol))
            throw NotSelfAdjointSpace("random_hermitian_in: span not closed under adjoint");
    Rng rng(seed);
    Mat x = Mat::Zero(s.dim_space, s.dim_space);
    for (const Mat& b : s.basis) {
        const double c = rng.symmetric();
        const double d = rng.symmetric();
        x += c * 0.5 * (b + b.adjoint());
        x += d * 0.5 * (Cplx(0, 1) * b - Cplx(0, 1) * b.adjoint());
    }
    return x;
}

} // namespace vnsplit
