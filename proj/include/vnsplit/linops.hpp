// Dense complex linear algebra and operator-subspace arithmetic.
// Every rank/equality decision routes through a single Tolerance record.

#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "vnsplit/errors.hpp"

namespace vnsplit {

using Cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

enum class Side { Left, Right };

struct Tolerance {
    double absolute = 1e-10;       // residual / membership threshold
    double relative_rank = 1e-9;   // singular-value cutoff, relative to sigma_max
};

// Orthonormal basis (under the Hilbert-Schmidt inner product) of a linear
// subspace of operators on C^dim_space.
struct OperatorSubspace {
    int dim_space = 0;
    std::vector<Mat> basis;

    int dim() const { return static_cast<int>(basis.size()); }
};

// ---------------------------------------------------------------------------
// Scalars and vectorization
// ---------------------------------------------------------------------------

// <X,Y> = Tr(X^dag Y), conjugate-linear in the first argument.
Cplx hs_inner(const Mat& x, const Mat& y);
double hs_norm(const Mat& x);

// Row-major vectorization: vec(X)[i*cols + j] = X(i,j). Used consistently by
// every superoperator-based solver in the library.
Vec vec_rm(const Mat& x);
Mat unvec_rm(const Vec& v, int rows, int cols);

Mat identity(int n);
Mat basis_op(int n, int i, int j); // |i><j|

// ---------------------------------------------------------------------------
// Elementary constructions
// ---------------------------------------------------------------------------

// Kronecker product; |i> (x) |j> maps to index i*b.rows + j.
Mat tensor(const Mat& a, const Mat& b);

// Block-diagonal sum, first summand on the leading indices.
Mat direct_sum(const Mat& a, const Mat& b);

// Trace over one tensor factor of an operator on C^d_left (x) C^d_right.
Mat partial_trace(const Mat& m, int d_left, int d_right, Side side);

// ---------------------------------------------------------------------------
// Subspaces of operators
// ---------------------------------------------------------------------------

// Orthonormal basis of span(vectors) via SVD of the stacked vectorizations;
// singular values below relative_rank * sigma_max are treated as zero.
OperatorSubspace orthonormalize(const std::vector<Mat>& vectors, const Tolerance& tol);

bool subspace_contains(const OperatorSubspace& s, const Mat& v, const Tolerance& tol);
bool subspace_subset(const OperatorSubspace& s1, const OperatorSubspace& s2, const Tolerance& tol);
bool subspace_equal(const OperatorSubspace& s1, const OperatorSubspace& s2, const Tolerance& tol);
OperatorSubspace subspace_intersect(const OperatorSubspace& s1, const OperatorSubspace& s2,
                                    const Tolerance& tol);
// Projection of v onto the span of s.
Mat subspace_project(const OperatorSubspace& s, const Mat& v);

// Orthonormal basis of ker(linear_map), same rank cutoff as orthonormalize.
std::vector<Vec> nullspace(const Mat& linear_map, const Tolerance& tol);

// Isometric factor of the polar decomposition, singular values below the
// rank cutoff zeroed out.
Mat polar_isometry(const Mat& m, const Tolerance& tol);

// Rank of an orthogonal projector (rounded trace).
int projector_rank(const Mat& p);

// Column-pivoted orthonormal basis of the range of a projector.
Mat projector_range_basis(const Mat& p);

// Gram matrix of the basis equals the identity within tol.absolute.
bool subspace_valid(const OperatorSubspace& s, const Tolerance& tol);

// ---------------------------------------------------------------------------
// Seeded randomness
// ---------------------------------------------------------------------------

// Deterministic PRNG: mt19937_64 with an explicit 53-bit mapping to doubles,
// so the same seed gives bit-identical streams on every platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform();           // [0, 1)
    double symmetric();         // [-1, 1)
    Cplx complex_symmetric();   // both parts in [-1, 1)

  private:
    std::mt19937_64 engine_;
};

Mat random_matrix(int rows, int cols, Rng& rng);

// Hermitian element of s with seeded pseudo-random real coefficients,
// X = sum c_k (B_k + B_k^dag)/2 + d_k (i B_k - i B_k^dag)/2.
// Requires s to be closed under the adjoint.
Mat random_hermitian_in(const OperatorSubspace& s, std::uint64_t seed,
                        const Tolerance& tol = Tolerance{});

} // namespace vnsplit
