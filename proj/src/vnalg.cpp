#include "vnsplit/vnalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace vnsplit {

namespace {

// Two eigenvalues belong to one cluster iff their gap is below this times
// max(1, spectral radius).
constexpr double kClusterGap = 1e-7;

// Detection threshold for "P_i A P_j != 0": if the projectors are equivalent,
// sum_k |P_i B_k P_j|^2 >= 1 for any orthonormal algebra basis {B_k}.
constexpr double kLinkThreshold = 0.5;

// Eigen-decomposition split into eigenvalue clusters; returns the cluster
// projectors in ascending eigenvalue order.
std::vector<Mat> cluster_projectors(const Mat& hermitian) {
    Eigen::SelfAdjointEigenSolver<Mat> es(hermitian);
    const auto& ev = es.eigenvalues();
    const Mat& vecs = es.eigenvectors();
    const double scale = std::max(1.0, std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1))));
    std::vector<Mat> out;
    int start = 0;
    for (int k = 1; k <= ev.size(); ++k) {
        if (k == ev.size() || ev(k) - ev(k - 1) >= kClusterGap * scale) {
            Mat block = vecs.middleCols(start, k - start);
            out.push_back(block * block.adjoint());
            start = k;
        }
    }
    return out;
}

int leading_index(const Mat& p) {
    for (Eigen::Index k = 0; k < p.cols(); ++k)
        if (p.col(k).norm() > 1e-6) return static_cast<int>(k);
    return static_cast<int>(p.cols());
}

} // namespace

int AWDecomposition::block_offset(int i) const {
    int off = 0;
    for (int k = 0; k < i; ++k) off += block_size(k);
    return off;
}

VnAlgebra generate_algebra(const std::vector<Mat>& generators, int dim_space,
                           const Tolerance& tol) {
    std::vector<Mat> seed;
    seed.push_back(identity(dim_space));
    for (const Mat& g : generators) {
        if (g.rows() != dim_space || g.cols() != dim_space)
            throw DimensionMismatch("generate_algebra: generator size mismatch");
        seed.push_back(g);
        seed.push_back(g.adjoint());
    }
    OperatorSubspace basis = orthonormalize(seed, tol);
    const int cap = dim_space * dim_space;
    for (int pass = 0; pass <= cap; ++pass) {
        std::vector<Mat> cands = basis.basis;
        for (const Mat& b : basis.basis) cands.push_back(b.adjoint());
        for (const Mat& x : basis.basis)
            for (const Mat& y : basis.basis) cands.push_back(x * y);
        OperatorSubspace grown = orthonormalize(cands, tol);
        if (grown.dim() == basis.dim()) {
            VnAlgebra a;
            a.space = std::move(grown);
            a.dim_space = dim_space;
            return a;
        }
        basis = std::move(grown);
    }
    throw Error("generate_algebra: closure failed to stabilize within dim^2 passes");
}

bool is_vnalgebra(const VnAlgebra& a, const Tolerance& tol) {
    if (!subspace_valid(a.space, tol)) return false;
    if (!subspace_contains(a.space, identity(a.dim_space), tol)) return false;
    for (const Mat& b : a.space.basis)
        if (!subspace_contains(a.space, Mat(b.adjoint()), tol)) return false;
    for (const Mat& x : a.space.basis)
        for (const Mat& y : a.space.basis)
            if (!subspace_contains(a.space, Mat(x * y), tol)) return false;
    return true;
}

bool is_commutative(const VnAlgebra& a, const Tolerance& tol) {
    for (const Mat& x : a.space.basis)
        for (const Mat& y : a.space.basis)
            if (hs_norm(x * y - y * x) > 10 * tol.absolute) return false;
    return true;
}

VnAlgebra as_algebra(const OperatorSubspace& s, const Tolerance& tol) {
    VnAlgebra a;
    a.space = s;
    a.dim_space = s.dim_space;
    if (!is_vnalgebra(a, tol))
        throw AlgebraMismatch("as_algebra: subspace is not a unital *-closed algebra");
    return a;
}

VnAlgebra commutant(const VnAlgebra& a, const Tolerance& tol) {
    const int n = a.dim_space;
    const Eigen::Index nn = static_cast<Eigen::Index>(n) * n;
    const int k = a.dim();
    // vec(BX - XB) = (B (x) 1 - 1 (x) B^T) vec(X) in row-major vectorization.
    Mat stacked(static_cast<Eigen::Index>(k) * nn, nn);
    const Mat eye = identity(n);
    for (int m = 0; m < k; ++m) {
        const Mat& b = a.space.basis[m];
        stacked.middleRows(static_cast<Eigen::Index>(m) * nn, nn) =
            tensor(b, eye) - tensor(eye, b.transpose());
    }
    OperatorSubspace out;
    out.dim_space = n;
    for (const Vec& v : nullspace(stacked, tol)) out.basis.push_back(unvec_rm(v, n, n));
    VnAlgebra c;
    c.space = std::move(out);
    c.dim_space = n;
    return c;
}

VnAlgebra center(const VnAlgebra& a, const Tolerance& tol) {
    VnAlgebra z;
    z.space = subspace_intersect(a.space, commutant(a, tol).space, tol);
    z.dim_space = a.dim_space;
    return z;
}

AtomicProjectorFamily atomic_projectors(const VnAlgebra& z, const Tolerance& tol,
                                        std::uint64_t seed) {
    if (!is_commutative(z, tol))
        throw NotCommutative("atomic_projectors: algebra is not commutative");
    for (int attempt = 0; attempt < 3; ++attempt) {
        const Mat x = random_hermitian_in(z.space, seed + 1000 * attempt, tol);
        std::vector<Mat> projectors = cluster_projectors(x);
        if (static_cast<int>(projectors.size()) != z.dim()) continue;
        bool inside = true;
        for (const Mat& p : projectors)
            if (!subspace_contains(z.space, p, tol)) { inside = false; break; }
        if (!inside) continue;
        OperatorSubspace span = orthonormalize(projectors, tol);
        if (!subspace_equal(span, z.space, tol)) continue;
        std::sort(projectors.begin(), projectors.end(),
                  [](const Mat& a, const Mat& b) { return leading_index(a) < leading_index(b); });
        return AtomicProjectorFamily{std::move(projectors)};
    }
    throw DegenerateSampling("atomic_projectors: sampled elements failed to separate the algebra");
}

std::vector<Mat> refine_to_minimal(const VnAlgebra& a, const Mat& p0, const Tolerance& tol,
                                   std::uint64_t seed) {
    const int n = a.dim_space;
    std::vector<Mat> fam{p0};
    const int cap = n * n + 2;
    for (int rounds = 0; rounds <= cap; ++rounds) {
        bool refined = false;
        for (std::size_t idx = 0; idx < fam.size(); ++idx) {
            const Mat p = fam[idx];
            std::vector<Mat> compressions;
            for (const Mat& b : a.space.basis) compressions.push_back(p * b * p);
            OperatorSubspace compressed = orthonormalize(compressions, tol);
            if (compressed.dim() == 1) continue; // P a P = C P, already minimal

            // Hermitian element of the compressed algebra independent of P.
            Mat h;
            bool found = false;
            const double pn2 = std::max(1.0, hs_norm(p) * hs_norm(p));
            for (const Mat& c : compressed.basis) {
                for (const Mat& cand : {Mat(c + c.adjoint()), Mat(Cplx(0, 1) * (c - c.adjoint()))}) {
                    Mat ortho = cand - (hs_inner(p, cand) / pn2) * p;
                    if (hs_norm(ortho) > 1e-8) { h = 0.5 * (ortho + ortho.adjoint()); found = true; break; }
                }
                if (found) break;
            }
            if (!found) {
                Mat x = random_hermitian_in(compressed, seed, tol);
                h = x - (hs_inner(p, x) / pn2) * p;
                if (hs_norm(h) <= 1e-10)
                    throw RefinementStall("refine_to_minimal: no independent element");
            }

            const Mat w = projector_range_basis(p);
            std::vector<Mat> pieces;
            for (const Mat& pi_small : cluster_projectors(Mat(w.adjoint() * h * w)))
                pieces.push_back(w * pi_small * w.adjoint());
            if (pieces.size() < 2)
                throw RefinementStall("refine_to_minimal: spectral split produced one piece");
            for (const Mat& piece : pieces)
                if (!subspace_contains(a.space, piece, tol))
                    throw RefinementStall(
                        "refine_to_minimal: spectral projector escaped the algebra");
            fam.erase(fam.begin() + static_cast<std::ptrdiff_t>(idx));
            fam.insert(fam.end(), pieces.begin(), pieces.end());
            refined = true;
            break;
        }
        if (!refined) break;
        if (rounds == cap)
            throw RefinementStall("refine_to_minimal: refinement failed to terminate");
    }
    std::sort(fam.begin(), fam.end(),
              [](const Mat& x, const Mat& y) { return leading_index(x) < leading_index(y); });
    return fam;
}

bool projectors_linked(const VnAlgebra& a, const Mat& p_i, const Mat& p_j) {
    double strength = 0.0;
    for (const Mat& b : a.space.basis) {
        const double nrm = hs_norm(p_i * b * p_j);
        strength += nrm * nrm;
    }
    return strength > kLinkThreshold;
}

MinimalProjectorFamily minimal_projector_family(const VnAlgebra& a, const Tolerance& tol,
                                                std::uint64_t seed) {
    const int n = a.dim_space;
    std::vector<Mat> fam = refine_to_minimal(a, identity(n), tol, seed);

    // Classes: P_i ~ P_j iff the compression of the algebra between them is nonzero.
    const int m = static_cast<int>(fam.size());
    std::vector<int> parent(m);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
            if (projectors_linked(a, fam[i], fam[j])) parent[find(i)] = find(j);
    std::vector<int> label(m, -1);
    int next = 0;
    MinimalProjectorFamily out;
    out.projectors = fam;
    out.class_of.resize(m);
    for (int i = 0; i < m; ++i) {
        const int root = find(i);
        if (label[root] < 0) label[root] = next++;
        out.class_of[i] = label[root];
    }
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (out.class_of[i] == out.class_of[j] &&
                projector_rank(fam[i]) != projector_rank(fam[j]))
                throw RefinementStall("minimal_projector_family: unequal ranks within a class");
    return out;
}

namespace {

struct ClassData {
    std::vector<int> members; // indices into the family, sorted by leading index
    int rank = 0;             // common rank of the projectors
};

std::vector<ClassData> collect_classes(const MinimalProjectorFamily& fam) {
    int nclasses = 0;
    for (int c : fam.class_of) nclasses = std::max(nclasses, c + 1);
    std::vector<ClassData> classes(nclasses);
    for (int i = 0; i < static_cast<int>(fam.projectors.size()); ++i)
        classes[fam.class_of[i]].members.push_back(i);
    for (auto& cls : classes) {
        std::sort(cls.members.begin(), cls.members.end(), [&](int x, int y) {
            return leading_index(fam.projectors[x]) < leading_index(fam.projectors[y]);
        });
        cls.rank = projector_rank(fam.projectors[cls.members.front()]);
    }
    // Deterministic block order: descending (d_left, d_right), then the
    // leading index of the first projector.
    std::sort(classes.begin(), classes.end(), [&](const ClassData& x, const ClassData& y) {
        const int dlx = static_cast<int>(x.members.size());
        const int dly = static_cast<int>(y.members.size());
        if (dlx != dly) return dlx > dly;
        if (x.rank != y.rank) return x.rank > y.rank;
        return leading_index(fam.projectors[x.members.front()]) <
               leading_index(fam.projectors[y.members.front()]);
    });
    return classes;
}

} // namespace

Mat algebra_connector(const VnAlgebra& a, const Mat& p_to, const Mat& p_from,
                      const Tolerance& tol) {
    double best = 0.0;
    Mat best_compression;
    for (const Mat& b : a.space.basis) {
        Mat m = p_to * b * p_from;
        const double nrm = hs_norm(m);
        if (nrm > best) { best = nrm; best_compression = std::move(m); }
    }
    if (best < 1e-6)
        throw NoConnector("algebra_connector: no nonzero compression for an equivalent pair");
    return polar_isometry(best_compression, tol);
}

AWDecomposition aw_decomposition(const VnAlgebra& a, const Tolerance& tol, std::uint64_t seed) {
    const int n = a.dim_space;
    MinimalProjectorFamily fam = minimal_projector_family(a, tol, seed);
    std::vector<ClassData> classes = collect_classes(fam);

    AWDecomposition aw;
    aw.unitary = Mat::Zero(n, n);
    int offset = 0;
    for (const ClassData& cls : classes) {
        const int q = cls.rank;
        const Mat& rep = fam.projectors[cls.members.front()];
        const Mat v = projector_range_basis(rep);
        for (std::size_t l = 0; l < cls.members.size(); ++l) {
            const Mat& p = fam.projectors[cls.members[l]];
            const Mat c =
                (cls.members[l] == cls.members.front()) ? rep : algebra_connector(a, rep, p, tol);
            aw.unitary.middleRows(offset + static_cast<int>(l) * q, q) = v.adjoint() * c;
        }
        aw.blocks.push_back({static_cast<int>(cls.members.size()), q});
        Mat pi = Mat::Zero(n, n);
        for (int m : cls.members) pi += fam.projectors[m];
        aw.atomic.projectors.push_back(std::move(pi));
        offset += static_cast<int>(cls.members.size()) * q;
    }
    if (offset != n)
        throw RefinementStall("aw_decomposition: block dimensions do not fill the space");
    if ((aw.unitary.adjoint() * aw.unitary - identity(n)).norm() > 1e-7)
        throw RefinementStall("aw_decomposition: assembled map is not unitary");
    return aw;
}

Mat trace_over_algebra(const Mat& m, const VnAlgebra& b, const AWDecomposition& aw_of_commutant) {
    const int n = static_cast<int>(aw_of_commutant.unitary.cols());
    if (m.rows() != n || m.cols() != n || b.dim_space != n)
        throw DimensionMismatch("trace_over_algebra: dimension mismatch");
    const Mat rotated = aw_of_commutant.unitary * m * aw_of_commutant.unitary.adjoint();
    int out_dim = 0;
    for (const AWBlock& blk : aw_of_commutant.blocks) out_dim += blk.d_left;
    Mat out = Mat::Zero(out_dim, out_dim);
    int off = 0, out_off = 0;
    for (const AWBlock& blk : aw_of_commutant.blocks) {
        const int size = blk.d_left * blk.d_right;
        out.block(out_off, out_off, blk.d_left, blk.d_left) =
            partial_trace(rotated.block(off, off, size, size), blk.d_left, blk.d_right,
                          Side::Right);
        off += size;
        out_off += blk.d_left;
    }
    return out;
}

Vec algebra_coordinates(const VnAlgebra& a, const Mat& x) {
    Vec c(a.dim());
    for (int k = 0; k < a.dim(); ++k) c(k) = hs_inner(a.space.basis[k], x);
    return c;
}

Mat apply_basis_map(const VnAlgebra& a, const std::vector<Mat>& images, const Mat& x) {
    const Vec c = algebra_coordinates(a, x);
    Mat out = Mat::Zero(images.front().rows(), images.front().cols());
    for (int k = 0; k < a.dim(); ++k) out += c(k) * images[k];
    return out;
}

HomomorphismSupport homomorphism_support(const VnAlgebra& a, const std::vector<Mat>& images,
                                         const Tolerance& tol, std::uint64_t seed) {
    if (static_cast<int>(images.size()) != a.dim())
        throw DimensionMismatch("homomorphism_support: one image per basis element required");
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j) {
            const Mat lhs = apply_basis_map(a, images, a.space.basis[i] * a.space.basis[j]);
            const Mat rhs = images[i] * images[j];
            if (hs_norm(lhs - rhs) > 1e-7 * std::max(1.0, hs_norm(rhs)))
                throw NotHomomorphism("homomorphism_support: images are not multiplicative");
        }
    const AtomicProjectorFamily atoms = atomic_projectors(center(a, tol), tol, seed);
    HomomorphismSupport hs;
    hs.mu = Mat::Zero(a.dim_space, a.dim_space);
    for (const Mat& pi : atoms.projectors)
        if (hs_norm(apply_basis_map(a, images, pi)) > 1e-7) hs.mu += pi;
    hs.mu_bar = identity(a.dim_space) - hs.mu;
    return hs;
}

} // namespace vnsplit
