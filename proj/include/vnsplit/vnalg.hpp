// Finite-dimensional Von Neumann algebra engine: closure, commutant, centre,
// atomic projectors, constructive block decomposition, and the algebra trace.

#pragma once

#include <cstdint>
#include <vector>

#include "vnsplit/linops.hpp"

namespace vnsplit {

// A unital, adjoint- and product-closed operator subspace, stored as a
// Hilbert-Schmidt-orthonormal basis.
struct VnAlgebra {
    OperatorSubspace space;
    int dim_space = 0;

    int dim() const { return space.dim(); }
};

// Orthogonal, pairwise orthogonal projectors spanning a commutative algebra.
struct AtomicProjectorFamily {
    std::vector<Mat> projectors;
};

// Maximal family of projectors P_i of an algebra with abelian compressions
// P_i A P_i = C P_i, partitioned into equivalence classes by P_i A P_j != 0.
struct MinimalProjectorFamily {
    std::vector<Mat> projectors;
    std::vector<int> class_of; // projector index -> block label
};

struct AWBlock {
    int d_left = 0;  // dim of the factor the algebra acts on
    int d_right = 0; // dim of the multiplicity factor
};

// U : H -> direct sum of H_L^i (x) H_R^i, block i on contiguous coordinates,
// conjugating the algebra onto the block-diagonal left-factor form.
struct AWDecomposition {
    std::vector<AWBlock> blocks;
    Mat unitary;
    AtomicProjectorFamily atomic;

    int block_offset(int i) const; // first coordinate of block i
    int block_size(int i) const { return blocks[i].d_left * blocks[i].d_right; }
};

// ---------------------------------------------------------------------------

// Smallest unital adjoint-closed subalgebra containing the generators.
VnAlgebra generate_algebra(const std::vector<Mat>& generators, int dim_space,
                           const Tolerance& tol);

// Checks the VnAlgebra invariants (unit, adjoints, products) on the basis.
bool is_vnalgebra(const VnAlgebra& a, const Tolerance& tol);
bool is_commutative(const VnAlgebra& a, const Tolerance& tol);

// Wraps a subspace as a VnAlgebra after checking the closure invariants.
VnAlgebra as_algebra(const OperatorSubspace& s, const Tolerance& tol);

VnAlgebra commutant(const VnAlgebra& a, const Tolerance& tol);
VnAlgebra center(const VnAlgebra& a, const Tolerance& tol);

// Unique atomic projector family of a commutative algebra, found by
// eigenvalue clustering of a random Hermitian element.
AtomicProjectorFamily atomic_projectors(const VnAlgebra& z, const Tolerance& tol,
                                        std::uint64_t seed = 17);

MinimalProjectorFamily minimal_projector_family(const VnAlgebra& a, const Tolerance& tol,
                                                std::uint64_t seed = 17);

// Splits a projector p0 of the algebra into projectors of a with abelian
// compressions (p0 = identity recovers the minimal projector family).
std::vector<Mat> refine_to_minimal(const VnAlgebra& a, const Mat& p0, const Tolerance& tol,
                                   std::uint64_t seed = 17);

// Partial isometry c in the algebra with c^dag c = p_from, c c^dag = p_to,
// for equivalent minimal projectors.
Mat algebra_connector(const VnAlgebra& a, const Mat& p_to, const Mat& p_from,
                      const Tolerance& tol);

// True iff the compression p_i A p_j is nonzero (equivalence of minimal
// projectors).
bool projectors_linked(const VnAlgebra& a, const Mat& p_i, const Mat& p_j);

AWDecomposition aw_decomposition(const VnAlgebra& a, const Tolerance& tol,
                                 std::uint64_t seed = 17);

// Partial trace over the algebra b, given the decomposition of its commutant
// (whose left legs carry b'). Output acts on the direct sum of the left legs.
Mat trace_over_algebra(const Mat& m, const VnAlgebra& b, const AWDecomposition& aw_of_commutant);

// Support projector of a *-homomorphism given by images of the basis:
// mu sums the atomic projectors not killed by the map, mu_bar = 1 - mu.
struct HomomorphismSupport {
    Mat mu;
    Mat mu_bar;
};
HomomorphismSupport homomorphism_support(const VnAlgebra& a, const std::vector<Mat>& images,
                                         const Tolerance& tol, std::uint64_t seed = 17);

// Coordinates of x in the algebra basis and linear extension of basis images.
Vec algebra_coordinates(const VnAlgebra& a, const Mat& x);
Mat apply_basis_map(const VnAlgebra& a, const std::vector<Mat>& images, const Mat& x);

} // namespace vnsplit
