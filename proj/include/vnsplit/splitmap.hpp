// Splitting maps: isometries H -> H_L (x) H_R carving (possibly non-factor)
// subsystems out of H, with locality, consistency, comprehension, and the
// constructive balanced/lean decompositions.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "vnsplit/vnalg.hpp"

namespace vnsplit {

struct SplittingMap {
    Mat isometry; // (d_L * d_R) x d_H
    int d_H = 0;
    int d_L = 0;
    int d_R = 0;
};

// Mediating isometries of a comprehension zeta <= chi:
//   black_dot : H_R^zeta -> H_M (x) H_R^chi
//   white_dot : H_L^chi  -> H_L^zeta (x) H_M
struct ComprehensionWitness {
    int d_M = 0;
    Mat black_dot;
    Mat white_dot;
};

// Shape data of a balanced splitting map with factor strictly-local algebra:
// chi(|lr>) = sum_m lambda_m |l+m>|r+m>.
struct FactorShape {
    int d_left = 0;            // dim of the algebra leg
    int d_right = 0;           // dim of the commutant leg
    Mat basis;                 // column l*d_right + r is |lr> in H
    std::vector<double> lambdas;
    Mat left_frame;            // column l*m + k is |l+k> in H_L^chi
    Mat right_frame;           // column r*m + k is |r+k> in H_R^chi
};

struct BalancedBlock {
    Mat projector;       // atomic projector pi_i of stloc(chi)
    Mat embed;           // orthonormal basis of Im(pi_i), identifies pi_i H
    SplittingMap zeta;   // canonical splitting map on pi_i H
    Vec phi;             // shared state in C^m (x) C^m, Schmidt coeffs lambdas
    std::vector<double> lambdas;
    Mat u_left;          // isometry H_L^i (x) H_{M_L} -> H_L^chi
    Mat u_right;         // isometry H_{M_R} (x) H_R^i -> H_R^chi
};

struct BalancedDecomposition {
    std::vector<BalancedBlock> blocks;
};

struct LeanDecomposition {
    SplittingMap zeta; // canonical for stloc(chi)
    Mat u_left;        // chi = (u_left (x) u_right) zeta
    Mat u_right;
};

struct NestedComprehension {
    SplittingMap zeta; // canonical for the smaller algebra
    SplittingMap chi;  // canonical for the bigger algebra
    ComprehensionWitness witness; // zeta <= chi
};

struct BalancedComprehension {
    SplittingMap zeta;              // canonical for stloc(chi)
    ComprehensionWitness forward;   // zeta <= chi
    ComprehensionWitness backward;  // chi <= zeta
};

// ---------------------------------------------------------------------------

SplittingMap make_splitting_map(const Mat& v, int d_L, int d_R, const Tolerance& tol);

// pi^chi = chi chi^dag, the orthogonal projector on Im(chi).
Mat image_projector(const SplittingMap& chi);

// On-site operator extension: B (x) 1 (Left) or 1 (x) B (Right).
Mat side_extension(const SplittingMap& chi, const Mat& b, Side side);

bool is_consistent(const SplittingMap& chi, const Mat& b, Side side, const Tolerance& tol);

// All on-site operators whose extension commutes with the image projector.
VnAlgebra consistent_algebra(const SplittingMap& chi, Side side, const Tolerance& tol);

// sigma(B) = chi^dag (B (x) 1) chi  (or the right-leg variant).
Mat sigma(const SplittingMap& chi, const Mat& b, Side side);

// chi-local operators of L(H); an operator system, not an algebra in general.
OperatorSubspace local_operators(const SplittingMap& chi, Side side, const Tolerance& tol);

// Minimum-norm on-site representative of a, if one exists within tolerance.
std::optional<Mat> local_representative(const SplittingMap& chi, const Mat& a, Side side,
                                        const Tolerance& tol);

// Joint solve of A chi^dag = chi^dag (A~ (x) 1) and chi A = (A~ (x) 1) chi;
// the returned representative is chi-consistent.
std::optional<Mat> strictly_local_representative(const SplittingMap& chi, const Mat& a, Side side,
                                                 const Tolerance& tol);

VnAlgebra strictly_local_algebra(const SplittingMap& chi, Side side, const Tolerance& tol);

// Canonical splitting map of an algebra: representation unitary followed by
// the block-to-tensor embedding.
SplittingMap canonical_from_aw(const AWDecomposition& aw);
SplittingMap canonical_splitting_map(const VnAlgebra& a, const Tolerance& tol,
                                     std::uint64_t seed = 17);

bool is_balanced(const SplittingMap& chi, const Tolerance& tol);
bool is_lean(const SplittingMap& chi, const Tolerance& tol);

bool verify_comprehension(const SplittingMap& zeta, const SplittingMap& chi,
                          const ComprehensionWitness& w, const Tolerance& tol);

// Canonical maps and witness for nested algebras a_small <= a_big.
NestedComprehension comprehension_nested_canonical(const VnAlgebra& a_small,
                                                   const VnAlgebra& a_big, const Tolerance& tol,
                                                   std::uint64_t seed = 17);

// Mutual comprehension of a balanced map and its canonical representative.
BalancedComprehension comprehension_balanced_canonical(const SplittingMap& chi,
                                                       const Tolerance& tol,
                                                       std::uint64_t seed = 17);

// Restriction of chi to the atomic blocks of its strictly-local algebra.
std::vector<std::pair<Mat, SplittingMap>> split_by_atomic_projectors(const SplittingMap& chi,
                                                                     const Tolerance& tol,
                                                                     std::uint64_t seed = 17);

FactorShape factor_shape(const SplittingMap& chi_component, const Tolerance& tol,
                         std::uint64_t seed = 17);

BalancedDecomposition balanced_decomposition(const SplittingMap& chi, const Tolerance& tol,
                                             std::uint64_t seed = 17);

LeanDecomposition lean_decomposition(const SplittingMap& chi, const Tolerance& tol,
                                     std::uint64_t seed = 17);

// Rebuilds chi from a balanced decomposition (reconstruction identity).
Mat reconstruct_from_balanced(const BalancedDecomposition& bd, int d_H, int d_L, int d_R);

} // namespace vnsplit
