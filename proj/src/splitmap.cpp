#include "vnsplit/splitmap.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <utility>

namespace vnsplit {

namespace {

int leading_index(const Mat& p) {
    for (Eigen::Index k = 0; k < p.cols(); ++k)
        if (p.col(k).norm() > 1e-6) return static_cast<int>(k);
    return static_cast<int>(p.cols());
}

// Minimum-norm least-squares solve; returns solution and residual norm.
std::pair<Vec, double> solve_min_norm(const Mat& s, const Vec& b, const Tolerance& tol) {
    Eigen::JacobiSVD<Mat> svd(s, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    const double cut = tol.relative_rank * smax;
    Vec y = svd.matrixU().adjoint() * b;
    Vec x_red = Vec::Zero(sv.size());
    for (Eigen::Index k = 0; k < sv.size(); ++k)
        if (sv(k) > cut) x_red(k) = y(k) / sv(k);
    Vec x = svd.matrixV() * x_red;
    const double resid = (s * x - b).norm();
    return {x, resid};
}

} // namespace

SplittingMap make_splitting_map(const Mat& v, int d_L, int d_R, const Tolerance& tol) {
    if (v.rows() != static_cast<Eigen::Index>(d_L) * d_R)
        throw DimensionMismatch("make_splitting_map: rows != d_L * d_R");
    const int d_H = static_cast<int>(v.cols());
    const double dev = (v.adjoint() * v - identity(d_H)).norm();
    if (dev > tol.absolute * std::max(1.0, static_cast<double>(d_H)) * 100)
        throw NotIsometry("make_splitting_map: v^dag v != 1");
    return SplittingMap{v, d_H, d_L, d_R};
}

Mat image_projector(const SplittingMap& chi) { return chi.isometry * chi.isometry.adjoint(); }

Mat side_extension(const SplittingMap& chi, const Mat& b, Side side) {
    if (side == Side::Left) {
        if (b.rows() != chi.d_L || b.cols() != chi.d_L)
            throw DimensionMismatch("side_extension: operator must act on H_L");
        return tensor(b, identity(chi.d_R));
    }
    if (b.rows() != chi.d_R || b.cols() != chi.d_R)
        throw DimensionMismatch("side_extension: operator must act on H_R");
    return tensor(identity(chi.d_L), b);
}

bool is_consistent(const SplittingMap& chi, const Mat& b, Side side, const Tolerance& tol) {
    const Mat ext = side_extension(chi, b, side);
    const Mat pi = image_projector(chi);
    return hs_norm(pi * ext - ext * pi) <= tol.absolute * std::max(1.0, hs_norm(ext)) * 100;
}

VnAlgebra consistent_algebra(const SplittingMap& chi, Side side, const Tolerance& tol) {
    const int d = (side == Side::Left) ? chi.d_L : chi.d_R;
    const Mat pi = image_projector(chi);
    const Eigen::Index rows = pi.rows() * pi.cols();
    Mat super(rows, static_cast<Eigen::Index>(d) * d);
    for (int p = 0; p < d; ++p)
        for (int q = 0; q < d; ++q) {
            const Mat ext = side_extension(chi, basis_op(d, p, q), side);
            super.col(static_cast<Eigen::Index>(p) * d + q) = vec_rm(pi * ext - ext * pi);
        }
    OperatorSubspace out;
    out.dim_space = d;
    for (const Vec& v : nullspace(super, tol)) out.basis.push_back(unvec_rm(v, d, d));
    VnAlgebra c;
    c.space = std::move(out);
    c.dim_space = d;
    return c;
}

Mat sigma(const SplittingMap& chi, const Mat& b, Side side) {
    return chi.isometry.adjoint() * side_extension(chi, b, side) * chi.isometry;
}

OperatorSubspace local_operators(const SplittingMap& chi, Side side, const Tolerance& tol) {
    const int d = (side == Side::Left) ? chi.d_L : chi.d_R;
    std::vector<Mat> images;
    for (int p = 0; p < d; ++p)
        for (int q = 0; q < d; ++q) images.push_back(sigma(chi, basis_op(d, p, q), side));
    return orthonormalize(images, tol);
}

std::optional<Mat> local_representative(const SplittingMap& chi, const Mat& a, Side side,
                                        const Tolerance& tol) {
    if (a.rows() != chi.d_H || a.cols() != chi.d_H)
        throw DimensionMismatch("local_representative: operator must act on H");
    const int d = (side == Side::Left) ? chi.d_L : chi.d_R;
    const Eigen::Index hh = static_cast<Eigen::Index>(chi.d_H) * chi.d_H;
    Mat super(hh, static_cast<Eigen::Index>(d) * d);
    for (int p = 0; p < d; ++p)
        for (int q = 0; q < d; ++q)
            super.col(static_cast<Eigen::Index>(p) * d + q) =
                vec_rm(sigma(chi, basis_op(d, p, q), side));
    auto [x, resid] = solve_min_norm(super, vec_rm(a), tol);
    if (resid > tol.absolute * std::max(1.0, hs_norm(a))) return std::nullopt;
    return unvec_rm(x, d, d);
}

std::optional<Mat> strictly_local_representative(const SplittingMap& chi, const Mat& a, Side side,
                                                 const Tolerance& tol) {
    if (a.rows() != chi.d_H || a.cols() != chi.d_H)
        throw DimensionMismatch("strictly_local_representative: operator must act on H");
    const int d = (side == Side::Left) ? chi.d_L : chi.d_R;
    const Mat& v = chi.isometry;
    const Eigen::Index top = chi.d_H * v.rows();
    const Eigen::Index bot = v.rows() * chi.d_H;
    Mat super(top + bot, static_cast<Eigen::Index>(d) * d);
    for (int p = 0; p < d; ++p)
        for (int q = 0; q < d; ++q) {
            const Mat ext = side_extension(chi, basis_op(d, p, q), side);
            const Eigen::Index col = static_cast<Eigen::Index>(p) * d + q;
            super.col(col).head(top) = vec_rm(v.adjoint() * ext); // A chi^dag = chi^dag (A~ (x) 1)
            super.col(col).tail(bot) = vec_rm(ext * v);           // chi A = (A~ (x) 1) chi
        }
    Vec rhs(top + bot);
    rhs.head(top) = vec_rm(a * v.adjoint());
    rhs.tail(bot) = vec_rm(v * a);
    auto [x, resid] = solve_min_norm(super, rhs, tol);
    if (resid > tol.absolute * std::max(1.0, hs_norm(a))) return std::nullopt;
    return unvec_rm(x, d, d);
}

VnAlgebra strictly_local_algebra(const SplittingMap& chi, Side side, const Tolerance& tol) {
    const VnAlgebra cons = consistent_algebra(chi, side, tol);
    std::vector<Mat> images;
    for (const Mat& b : cons.space.basis) images.push_back(sigma(chi, b, side));
    VnAlgebra out;
    out.space = orthonormalize(images, tol);
    out.dim_space = chi.d_H;
    return out;
}

SplittingMap canonical_from_aw(const AWDecomposition& aw) {
    const int n = static_cast<int>(aw.unitary.cols());
    int d_L = 0, d_R = 0;
    for (const AWBlock& b : aw.blocks) { d_L += b.d_left; d_R += b.d_right; }
    Mat chi = Mat::Zero(static_cast<Eigen::Index>(d_L) * d_R, n);
    int off = 0, loff = 0, roff = 0;
    for (const AWBlock& b : aw.blocks) {
        for (int l = 0; l < b.d_left; ++l)
            for (int r = 0; r < b.d_right; ++r)
                chi.row(static_cast<Eigen::Index>(loff + l) * d_R + (roff + r)) =
                    aw.unitary.row(off + l * b.d_right + r);
        off += b.d_left * b.d_right;
        loff += b.d_left;
        roff += b.d_right;
    }
    return SplittingMap{std::move(chi), n, d_L, d_R};
}

SplittingMap canonical_splitting_map(const VnAlgebra& a, const Tolerance& tol,
                                     std::uint64_t seed) {
    return canonical_from_aw(aw_decomposition(a, tol, seed));
}

namespace {

VnAlgebra wrap_algebra(OperatorSubspace s) {
    VnAlgebra a;
    a.dim_space = s.dim_space;
    a.space = std::move(s);
    return a;
}

} // namespace

bool is_balanced(const SplittingMap& chi, const Tolerance& tol) {
    const VnAlgebra left = strictly_local_algebra(chi, Side::Left, tol);
    const VnAlgebra right = strictly_local_algebra(chi, Side::Right, tol);
    return subspace_equal(right.space, commutant(left, tol).space, tol);
}

bool is_lean(const SplittingMap& chi, const Tolerance& tol) {
    if (!is_balanced(chi, tol)) return false;
    for (Side side : {Side::Left, Side::Right}) {
        const VnAlgebra cons = consistent_algebra(chi, side, tol);
        if (!subspace_equal(commutant(cons, tol).space, center(cons, tol).space, tol))
            return false;
    }
    return true;
}

bool verify_comprehension(const SplittingMap& zeta, const SplittingMap& chi,
                          const ComprehensionWitness& w, const Tolerance& tol) {
    if (zeta.d_H != chi.d_H)
        throw DimensionMismatch("verify_comprehension: maps split different spaces");
    if (w.black_dot.rows() != static_cast<Eigen::Index>(w.d_M) * chi.d_R ||
        w.black_dot.cols() != zeta.d_R)
        throw DimensionMismatch("verify_comprehension: black dot shape");
    if (w.white_dot.rows() != static_cast<Eigen::Index>(zeta.d_L) * w.d_M ||
        w.white_dot.cols() != chi.d_L)
        throw DimensionMismatch("verify_comprehension: white dot shape");
    const double scale = tol.absolute * std::max(1.0, std::sqrt(static_cast<double>(zeta.d_H)));
    auto isometric = [&](const Mat& m) {
        return (m.adjoint() * m - identity(static_cast<int>(m.cols()))).norm() <= 100 * scale;
    };
    if (!isometric(w.black_dot) || !isometric(w.white_dot)) return false;
    const Mat lhs = tensor(identity(zeta.d_L), w.black_dot) * zeta.isometry;
    const Mat rhs = tensor(w.white_dot, identity(chi.d_R)) * chi.isometry;
    return (lhs - rhs).norm() <= 100 * scale;
}

// ---------------------------------------------------------------------------
// Canonical maps built from an explicit projector family
// ---------------------------------------------------------------------------

namespace {

// A canonical splitting map assembled from a family of minimal projectors,
// their equivalence classes, chosen representatives, and connectors to them.
// Records where each projector lands in the left leg.
struct FamilyCanonical {
    SplittingMap chi;
    Mat aw_unitary;
    std::vector<int> class_order;      // class ids in block order
    std::vector<int> left_index;       // per projector: coordinate in H_L
    std::vector<int> right_offset;     // per class id: offset in H_R
    std::vector<int> rank;             // per class id
    std::vector<Mat> range;            // per class id: basis of Im(representative)
};

FamilyCanonical build_canonical(const std::vector<Mat>& projectors,
                                const std::vector<int>& class_of,
                                const std::vector<int>& rep_of_class,
                                const std::vector<Mat>& connectors, int n) {
    const int nclasses = static_cast<int>(rep_of_class.size());
    std::vector<std::vector<int>> members(nclasses);
    for (int i = 0; i < static_cast<int>(projectors.size()); ++i)
        members[class_of[i]].push_back(i);
    for (auto& m : members)
        std::sort(m.begin(), m.end(), [&](int x, int y) {
            return leading_index(projectors[x]) < leading_index(projectors[y]);
        });

    FamilyCanonical out;
    out.class_order.resize(nclasses);
    std::iota(out.class_order.begin(), out.class_order.end(), 0);
    std::vector<int> ranks(nclasses);
    for (int c = 0; c < nclasses; ++c) ranks[c] = projector_rank(projectors[rep_of_class[c]]);
    std::sort(out.class_order.begin(), out.class_order.end(), [&](int x, int y) {
        const int dlx = static_cast<int>(members[x].size());
        const int dly = static_cast<int>(members[y].size());
        if (dlx != dly) return dlx > dly;
        if (ranks[x] != ranks[y]) return ranks[x] > ranks[y];
        return leading_index(projectors[members[x].front()]) <
               leading_index(projectors[members[y].front()]);
    });

    int d_L = 0, d_R = 0;
    for (int c = 0; c < nclasses; ++c) {
        d_L += static_cast<int>(members[c].size());
        d_R += ranks[c];
    }
    out.left_index.resize(projectors.size());
    out.right_offset.resize(nclasses);
    out.rank = ranks;
    out.range.resize(nclasses);
    out.aw_unitary = Mat::Zero(n, n);
    Mat chi = Mat::Zero(static_cast<Eigen::Index>(d_L) * d_R, n);

    int off = 0, loff = 0, roff = 0;
    for (int c : out.class_order) {
        const int q = ranks[c];
        out.right_offset[c] = roff;
        out.range[c] = projector_range_basis(projectors[rep_of_class[c]]);
        for (std::size_t l = 0; l < members[c].size(); ++l) {
            const int m = members[c][l];
            out.left_index[m] = loff + static_cast<int>(l);
            const Mat rows = out.range[c].adjoint() * connectors[m];
            out.aw_unitary.middleRows(off + static_cast<int>(l) * q, q) = rows;
            for (int r = 0; r < q; ++r)
                chi.row(static_cast<Eigen::Index>(loff + static_cast<int>(l)) * d_R + (roff + r)) =
                    rows.row(r);
        }
        off += static_cast<int>(members[c].size()) * q;
        loff += static_cast<int>(members[c].size());
        roff += q;
    }
    out.chi = SplittingMap{std::move(chi), n, d_L, d_R};
    return out;
}

} // namespace

NestedComprehension comprehension_nested_canonical(const VnAlgebra& a_small,
                                                   const VnAlgebra& a_big, const Tolerance& tol,
                                                   std::uint64_t seed) {
    if (a_small.dim_space != a_big.dim_space)
        throw DimensionMismatch("comprehension_nested_canonical: spaces differ");
    if (!subspace_subset(a_small.space, a_big.space, tol))
        throw NotNested("comprehension_nested_canonical: a_small is not included in a_big");
    const int n = a_small.dim_space;

    // Minimal projectors of the small algebra, with connectors to class reps.
    MinimalProjectorFamily fam_s = minimal_projector_family(a_small, tol, seed);
    const int nq = static_cast<int>(fam_s.projectors.size());
    int n_sclasses = 0;
    for (int c : fam_s.class_of) n_sclasses = std::max(n_sclasses, c + 1);
    std::vector<int> s_rep(n_sclasses, -1);
    for (int j = 0; j < nq; ++j) {
        const int c = fam_s.class_of[j];
        if (s_rep[c] < 0 || leading_index(fam_s.projectors[j]) <
                                leading_index(fam_s.projectors[s_rep[c]]))
            s_rep[c] = j;
    }
    std::vector<Mat> s_conn(nq);
    for (int j = 0; j < nq; ++j) {
        const int c = fam_s.class_of[j];
        s_conn[j] = (j == s_rep[c])
                        ? fam_s.projectors[j]
                        : algebra_connector(a_small, fam_s.projectors[s_rep[c]],
                                            fam_s.projectors[j], tol);
    }
    FamilyCanonical zf = build_canonical(fam_s.projectors, fam_s.class_of, s_rep, s_conn, n);

    // Refine each class representative inside the big algebra, then transport
    // the refinement across the class with the small-algebra connectors.
    std::vector<std::vector<Mat>> rep_pieces(n_sclasses);
    for (int c = 0; c < n_sclasses; ++c)
        rep_pieces[c] = refine_to_minimal(a_big, fam_s.projectors[s_rep[c]], tol, seed);

    struct Refined {
        Mat p;
        int i;  // index within the refinement of the class representative
        int j;  // small-family projector it decomposes
    };
    std::vector<Refined> refined;
    std::vector<std::vector<int>> rep_piece_index(n_sclasses); // (class, i) -> index of rep piece
    for (int c = 0; c < n_sclasses; ++c) rep_piece_index[c].resize(rep_pieces[c].size(), -1);
    for (int j = 0; j < nq; ++j) {
        const int c = fam_s.class_of[j];
        for (int i = 0; i < static_cast<int>(rep_pieces[c].size()); ++i) {
            Mat piece;
            if (j == s_rep[c]) {
                piece = rep_pieces[c][i];
                rep_piece_index[c][i] = static_cast<int>(refined.size());
            } else {
                piece = s_conn[j].adjoint() * rep_pieces[c][i] * s_conn[j];
            }
            refined.push_back({std::move(piece), i, j});
        }
    }
    const int nr = static_cast<int>(refined.size());

    // Equivalence classes of the refined family inside the big algebra.
    std::vector<int> parent(nr);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        return parent[x] == x ? x : parent[x] = find(parent[x]);
    };
    for (int x = 0; x < nr; ++x)
        for (int y = x + 1; y < nr; ++y)
            if (projectors_linked(a_big, refined[x].p, refined[y].p)) parent[find(x)] = find(y);
    std::vector<int> b_class(nr, -1);
    int n_bclasses = 0;
    std::vector<int> root_label(nr, -1);
    for (int x = 0; x < nr; ++x) {
        const int r = find(x);
        if (root_label[r] < 0) root_label[r] = n_bclasses++;
        b_class[x] = root_label[r];
    }

    // Each big class contains at least one refinement of a small-class
    // representative; use the first such piece as the class representative.
    std::vector<int> b_rep(n_bclasses, -1);
    for (int x = 0; x < nr; ++x) {
        const int c = fam_s.class_of[refined[x].j];
        if (refined[x].j != s_rep[c]) continue;
        int& rep = b_rep[b_class[x]];
        if (rep < 0 || leading_index(refined[x].p) < leading_index(refined[rep].p)) rep = x;
    }
    for (int c = 0; c < n_bclasses; ++c)
        if (b_rep[c] < 0)
            throw NoConnector("comprehension_nested_canonical: class without representative piece");

    // Coherent connectors: first the fresh connector between representative
    // pieces, then transport with the small-algebra connector.
    std::vector<Mat> d_conn(nr); // connector for pieces of small-class representatives
    for (int x = 0; x < nr; ++x) {
        const int c = fam_s.class_of[refined[x].j];
        if (refined[x].j != s_rep[c]) continue;
        d_conn[x] = (x == b_rep[b_class[x]])
                        ? refined[x].p
                        : algebra_connector(a_big, refined[b_rep[b_class[x]]].p, refined[x].p, tol);
    }
    std::vector<Mat> b_conn(nr);
    for (int x = 0; x < nr; ++x) {
        const int c = fam_s.class_of[refined[x].j];
        const int rep_piece = rep_piece_index[c][refined[x].i];
        b_conn[x] = (refined[x].j == s_rep[c]) ? d_conn[x]
                                               : Mat(d_conn[rep_piece] * s_conn[refined[x].j]);
    }
    std::vector<Mat> b_projectors(nr);
    std::vector<int> b_class_of(nr);
    for (int x = 0; x < nr; ++x) { b_projectors[x] = refined[x].p; b_class_of[x] = b_class[x]; }
    FamilyCanonical cf = build_canonical(b_projectors, b_class_of, b_rep, b_conn, n);

    // H_M hosts one slot per (small class, refinement index) pair, laid out in
    // the block order of zeta.
    std::vector<int> m_offset(n_sclasses, 0);
    int d_M = 0;
    for (int c : zf.class_order) {
        m_offset[c] = d_M;
        d_M += static_cast<int>(rep_pieces[c].size());
    }

    ComprehensionWitness w;
    w.d_M = d_M;
    w.white_dot = Mat::Zero(static_cast<Eigen::Index>(zf.chi.d_L) * d_M, cf.chi.d_L);
    for (int x = 0; x < nr; ++x) {
        const int c = fam_s.class_of[refined[x].j];
        const int row = zf.left_index[refined[x].j] * d_M + m_offset[c] + refined[x].i;
        w.white_dot(row, cf.left_index[x]) = 1.0;
    }
    w.black_dot = Mat::Zero(static_cast<Eigen::Index>(d_M) * cf.chi.d_R, zf.chi.d_R);
    for (int c = 0; c < n_sclasses; ++c) {
        const int q = zf.rank[c];
        for (int r = 0; r < q; ++r) {
            const Vec image = cf.chi.isometry * zf.range[c].col(r);
            const int col = zf.right_offset[c] + r;
            for (int i = 0; i < static_cast<int>(rep_pieces[c].size()); ++i) {
                const int li = cf.left_index[rep_piece_index[c][i]];
                w.black_dot.col(col).segment(
                    static_cast<Eigen::Index>(m_offset[c] + i) * cf.chi.d_R, cf.chi.d_R) +=
                    image.segment(static_cast<Eigen::Index>(li) * cf.chi.d_R, cf.chi.d_R);
            }
        }
    }
    return NestedComprehension{zf.chi, cf.chi, std::move(w)};
}

// ---------------------------------------------------------------------------
// Balanced shape extraction
// ---------------------------------------------------------------------------

namespace {

// Shape of one factor component relative to a given representation unitary
// u_block : H_comp -> C^{d_l} (x) C^{d_r}.
FactorShape shape_from_basis(const SplittingMap& comp, const Mat& u_block, int d_l, int d_r,
                             const Tolerance& tol) {
    FactorShape fs;
    fs.d_left = d_l;
    fs.d_right = d_r;
    fs.basis = u_block.adjoint(); // column l*d_r + r is |lr>

    // Schmidt data of chi|00>.
    const Vec phi00 = comp.isometry * fs.basis.col(0);
    Mat m00(comp.d_L, comp.d_R);
    for (int p = 0; p < comp.d_L; ++p)
        for (int q = 0; q < comp.d_R; ++q)
            m00(p, q) = phi00(static_cast<Eigen::Index>(p) * comp.d_R + q);
    Eigen::JacobiSVD<Mat> svd(m00, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    int nm = 0;
    while (nm < sv.size() && sv(nm) > tol.relative_rank * sv(0)) ++nm;
    Mat left0 = svd.matrixU().leftCols(nm);
    Mat right0 = svd.matrixV().leftCols(nm).conjugate();
    for (int k = 0; k < nm; ++k) {
        fs.lambdas.push_back(sv(k));
        // Joint Schmidt-pair phase: first significant left amplitude real positive.
        int lead = 0;
        while (lead < left0.rows() && std::abs(left0(lead, k)) < 1e-8) ++lead;
        if (lead < left0.rows()) {
            const Cplx ph = left0(lead, k) / std::abs(left0(lead, k));
            left0.col(k) /= ph;
            right0.col(k) *= ph;
        }
    }

    // Transport the Schmidt frames with strictly local representatives of the
    // matrix units |l><0| (x) 1 and 1 (x) |r><0|.
    fs.left_frame = Mat::Zero(comp.d_L, static_cast<Eigen::Index>(d_l) * nm);
    fs.right_frame = Mat::Zero(comp.d_R, static_cast<Eigen::Index>(d_r) * nm);
    fs.left_frame.leftCols(nm) = left0;
    fs.right_frame.leftCols(nm) = right0;
    for (int l = 1; l < d_l; ++l) {
        const Mat unit = u_block.adjoint() * tensor(basis_op(d_l, l, 0), identity(d_r)) * u_block;
        auto rep = strictly_local_representative(comp, unit, Side::Left, tol);
        if (!rep) throw NotBalanced("factor_shape: matrix unit has no strict representative");
        fs.left_frame.middleCols(static_cast<Eigen::Index>(l) * nm, nm) = *rep * left0;
    }
    for (int r = 1; r < d_r; ++r) {
        const Mat unit = u_block.adjoint() * tensor(identity(d_l), basis_op(d_r, r, 0)) * u_block;
        auto rep = strictly_local_representative(comp, unit, Side::Right, tol);
        if (!rep) throw NotBalanced("factor_shape: matrix unit has no strict representative");
        fs.right_frame.middleCols(static_cast<Eigen::Index>(r) * nm, nm) = *rep * right0;
    }
    return fs;
}

struct BalancedCore {
    AWDecomposition aw;
    SplittingMap zeta;
    BalancedDecomposition bd;
    std::vector<FactorShape> shapes;
};

BalancedCore balanced_core(const SplittingMap& chi, const Tolerance& tol, std::uint64_t seed) {
    if (!is_balanced(chi, tol)) throw NotBalanced("splitting map is not balanced");
    VnAlgebra a = strictly_local_algebra(chi, Side::Left, tol);
    BalancedCore core{aw_decomposition(a, tol, seed), {}, {}, {}};
    core.zeta = canonical_from_aw(core.aw);
    int off = 0;
    for (std::size_t i = 0; i < core.aw.blocks.size(); ++i) {
        const AWBlock& blk = core.aw.blocks[i];
        const Mat& pi = core.aw.atomic.projectors[i];
        const Mat embed = projector_range_basis(pi);
        SplittingMap comp{Mat(chi.isometry * embed), projector_rank(pi), chi.d_L, chi.d_R};
        const Mat u_block = core.aw.unitary.middleRows(off, blk.d_left * blk.d_right) * embed;
        FactorShape fs = shape_from_basis(comp, u_block, blk.d_left, blk.d_right, tol);
        const int nm = static_cast<int>(fs.lambdas.size());

        BalancedBlock bb;
        bb.projector = pi;
        bb.embed = embed;
        bb.zeta = SplittingMap{u_block, comp.d_H, blk.d_left, blk.d_right};
        bb.lambdas = fs.lambdas;
        bb.phi = Vec::Zero(static_cast<Eigen::Index>(nm) * nm);
        for (int m = 0; m < nm; ++m) bb.phi(static_cast<Eigen::Index>(m) * nm + m) = fs.lambdas[m];
        // u_left : |l,m> -> |l+m>, u_right : |m,r> -> |r+m>
        bb.u_left = Mat::Zero(chi.d_L, static_cast<Eigen::Index>(blk.d_left) * nm);
        for (int l = 0; l < blk.d_left; ++l)
            for (int m = 0; m < nm; ++m)
                bb.u_left.col(static_cast<Eigen::Index>(l) * nm + m) =
                    fs.left_frame.col(static_cast<Eigen::Index>(l) * nm + m);
        bb.u_right = Mat::Zero(chi.d_R, static_cast<Eigen::Index>(nm) * blk.d_right);
        for (int m = 0; m < nm; ++m)
            for (int r = 0; r < blk.d_right; ++r)
                bb.u_right.col(static_cast<Eigen::Index>(m) * blk.d_right + r) =
                    fs.right_frame.col(static_cast<Eigen::Index>(r) * nm + m);
        core.bd.blocks.push_back(std::move(bb));
        core.shapes.push_back(std::move(fs));
        off += blk.d_left * blk.d_right;
    }
    return core;
}

} // namespace

std::vector<std::pair<Mat, SplittingMap>> split_by_atomic_projectors(const SplittingMap& chi,
                                                                     const Tolerance& tol,
                                                                     std::uint64_t seed) {
    VnAlgebra a = strictly_local_algebra(chi, Side::Left, tol);
    const AtomicProjectorFamily atoms = atomic_projectors(center(a, tol), tol, seed);
    std::vector<std::pair<Mat, SplittingMap>> out;
    for (const Mat& pi : atoms.projectors) {
        const Mat embed = projector_range_basis(pi);
        out.emplace_back(pi, SplittingMap{Mat(chi.isometry * embed), projector_rank(pi), chi.d_L,
                                          chi.d_R});
    }
    return out;
}

FactorShape factor_shape(const SplittingMap& chi_component, const Tolerance& tol,
                         std::uint64_t seed) {
    if (!is_balanced(chi_component, tol)) throw NotBalanced("factor_shape: component not balanced");
    VnAlgebra a = strictly_local_algebra(chi_component, Side::Left, tol);
    AWDecomposition aw = aw_decomposition(a, tol, seed);
    if (aw.blocks.size() != 1)
        throw NotFactor("factor_shape: strictly local algebra is not a factor");
    return shape_from_basis(chi_component, aw.unitary, aw.blocks[0].d_left, aw.blocks[0].d_right,
                            tol);
}

BalancedDecomposition balanced_decomposition(const SplittingMap& chi, const Tolerance& tol,
                                             std::uint64_t seed) {
    return balanced_core(chi, tol, seed).bd;
}

Mat reconstruct_from_balanced(const BalancedDecomposition& bd, int d_H, int d_L, int d_R) {
    Mat out = Mat::Zero(static_cast<Eigen::Index>(d_L) * d_R, d_H);
    for (const BalancedBlock& bb : bd.blocks) {
        const int dl = bb.zeta.d_L, dr = bb.zeta.d_R;
        const int nm = static_cast<int>(bb.lambdas.size());
        // insert : |l>|r> -> sum_m lambda_m |l,m> (x) |m,r>
        Mat insert = Mat::Zero(static_cast<Eigen::Index>(dl) * nm * nm * dr,
                               static_cast<Eigen::Index>(dl) * dr);
        for (int l = 0; l < dl; ++l)
            for (int r = 0; r < dr; ++r)
                for (int m = 0; m < nm; ++m)
                    insert((static_cast<Eigen::Index>(l) * nm + m) * nm * dr +
                               static_cast<Eigen::Index>(m) * dr + r,
                           static_cast<Eigen::Index>(l) * dr + r) = bb.lambdas[m];
        out += tensor(bb.u_left, bb.u_right) * insert * bb.zeta.isometry * bb.embed.adjoint();
    }
    return out;
}

LeanDecomposition lean_decomposition(const SplittingMap& chi, const Tolerance& tol,
                                     std::uint64_t seed) {
    if (!is_lean(chi, tol)) throw NotLean("lean_decomposition: splitting map is not lean");
    BalancedCore core = balanced_core(chi, tol, seed);
    LeanDecomposition out;
    out.zeta = core.zeta;
    out.u_left = Mat::Zero(chi.d_L, core.zeta.d_L);
    out.u_right = Mat::Zero(chi.d_R, core.zeta.d_R);
    int loff = 0, roff = 0;
    for (std::size_t i = 0; i < core.bd.blocks.size(); ++i) {
        const BalancedBlock& bb = core.bd.blocks[i];
        if (bb.lambdas.size() != 1)
            throw NotLean("lean_decomposition: entangled block in a lean map");
        const int dl = bb.zeta.d_L, dr = bb.zeta.d_R;
        for (int l = 0; l < dl; ++l) out.u_left.col(loff + l) = bb.u_left.col(l);
        for (int r = 0; r < dr; ++r) out.u_right.col(roff + r) = bb.u_right.col(r);
        loff += dl;
        roff += dr;
    }
    return out;
}

BalancedComprehension comprehension_balanced_canonical(const SplittingMap& chi,
                                                       const Tolerance& tol, std::uint64_t seed) {
    BalancedCore core = balanced_core(chi, tol, seed);
    const int nblocks = static_cast<int>(core.bd.blocks.size());
    std::vector<int> loffs(nblocks), roffs(nblocks), ms(nblocks);
    int loff = 0, roff = 0, m_max = 1;
    for (int i = 0; i < nblocks; ++i) {
        loffs[i] = loff;
        roffs[i] = roff;
        ms[i] = static_cast<int>(core.bd.blocks[i].lambdas.size());
        loff += core.bd.blocks[i].zeta.d_L;
        roff += core.bd.blocks[i].zeta.d_R;
        m_max = std::max(m_max, ms[i]);
    }
    const SplittingMap& zeta = core.zeta;

    // Forward witness (zeta <= chi):
    //   white : |l+m>_i -> |l>_zeta (x) |m>,  black : |psi_r>_i -> sum lambda_m |m>|r+m>_i
    int used_left = 0;
    for (int i = 0; i < nblocks; ++i) used_left += core.bd.blocks[i].zeta.d_L * ms[i];
    int d_M = m_max;
    while (zeta.d_L * d_M - used_left < chi.d_L - used_left) ++d_M; // slots for the completion
    ComprehensionWitness fwd;
    fwd.d_M = d_M;
    fwd.white_dot = Mat::Zero(static_cast<Eigen::Index>(zeta.d_L) * d_M, chi.d_L);
    std::vector<Mat> frame_cols;
    for (int i = 0; i < nblocks; ++i) {
        const BalancedBlock& bb = core.bd.blocks[i];
        for (int l = 0; l < bb.zeta.d_L; ++l)
            for (int m = 0; m < ms[i]; ++m) {
                const Vec f = bb.u_left.col(static_cast<Eigen::Index>(l) * ms[i] + m);
                fwd.white_dot.row(static_cast<Eigen::Index>(loffs[i] + l) * d_M + m) += f.adjoint();
                frame_cols.push_back(f);
            }
    }
    {
        // Isometric completion on the orthocomplement of the left frames.
        Mat f(chi.d_L, static_cast<Eigen::Index>(frame_cols.size()));
        for (std::size_t k = 0; k < frame_cols.size(); ++k) f.col(static_cast<Eigen::Index>(k)) = frame_cols[k];
        std::vector<Vec> comp = nullspace(Mat(f.adjoint()), tol);
        std::size_t next = 0;
        for (int i = 0; i < nblocks && next < comp.size(); ++i)
            for (int l = 0; l < core.bd.blocks[i].zeta.d_L && next < comp.size(); ++l)
                for (int m = ms[i]; m < d_M && next < comp.size(); ++m)
                    fwd.white_dot.row(static_cast<Eigen::Index>(loffs[i] + l) * d_M + m) +=
                        comp[next++].adjoint();
        if (next < comp.size())
            throw Error("comprehension_balanced_canonical: completion slots exhausted");
    }
    fwd.black_dot = Mat::Zero(static_cast<Eigen::Index>(d_M) * chi.d_R, zeta.d_R);
    for (int i = 0; i < nblocks; ++i) {
        const BalancedBlock& bb = core.bd.blocks[i];
        for (int r = 0; r < bb.zeta.d_R; ++r)
            for (int m = 0; m < ms[i]; ++m)
                fwd.black_dot.col(roffs[i] + r).segment(static_cast<Eigen::Index>(m) * chi.d_R,
                                                        chi.d_R) +=
                    bb.lambdas[m] * bb.u_right.col(static_cast<Eigen::Index>(m) * bb.zeta.d_R + r);
    }

    // Backward witness (chi <= zeta):
    //   white : |l>_zeta -> sum lambda_m |l+m>_i (x) |m>,  black : |r+m>_i -> |m>|r>_zeta
    int used_right = 0;
    for (int i = 0; i < nblocks; ++i) used_right += core.bd.blocks[i].zeta.d_R * ms[i];
    int d_Mb = m_max;
    while (d_Mb * zeta.d_R - used_right < chi.d_R - used_right) ++d_Mb;
    ComprehensionWitness bwd;
    bwd.d_M = d_Mb;
    bwd.white_dot = Mat::Zero(static_cast<Eigen::Index>(chi.d_L) * d_Mb, zeta.d_L);
    for (int i = 0; i < nblocks; ++i) {
        const BalancedBlock& bb = core.bd.blocks[i];
        for (int l = 0; l < bb.zeta.d_L; ++l)
            for (int m = 0; m < ms[i]; ++m) {
                const Vec f = bb.u_left.col(static_cast<Eigen::Index>(l) * ms[i] + m);
                for (int p = 0; p < chi.d_L; ++p)
                    bwd.white_dot(static_cast<Eigen::Index>(p) * d_Mb + m, loffs[i] + l) +=
                        bb.lambdas[m] * f(p);
            }
    }
    bwd.black_dot = Mat::Zero(static_cast<Eigen::Index>(d_Mb) * zeta.d_R, chi.d_R);
    std::vector<Vec> right_cols;
    std::vector<std::pair<int, int>> right_slots; // (m, zeta right coordinate)
    for (int i = 0; i < nblocks; ++i) {
        const BalancedBlock& bb = core.bd.blocks[i];
        for (int r = 0; r < bb.zeta.d_R; ++r)
            for (int m = 0; m < ms[i]; ++m) {
                const Vec f = bb.u_right.col(static_cast<Eigen::Index>(m) * bb.zeta.d_R + r);
                bwd.black_dot.row(static_cast<Eigen::Index>(m) * zeta.d_R + roffs[i] + r) +=
                    f.adjoint();
                right_cols.push_back(f);
                right_slots.emplace_back(m, roffs[i] + r);
            }
    }
    {
        Mat f(chi.d_R, static_cast<Eigen::Index>(right_cols.size()));
        for (std::size_t k = 0; k < right_cols.size(); ++k) f.col(static_cast<Eigen::Index>(k)) = right_cols[k];
        std::vector<Vec> comp = nullspace(Mat(f.adjoint()), tol);
        std::size_t next = 0;
        for (int i = 0; i < nblocks && next < comp.size(); ++i)
            for (int r = 0; r < core.bd.blocks[i].zeta.d_R && next < comp.size(); ++r)
                for (int m = ms[i]; m < d_Mb && next < comp.size(); ++m)
                    bwd.black_dot.row(static_cast<Eigen::Index>(m) * zeta.d_R + roffs[i] + r) +=
                        comp[next++].adjoint();
        if (next < comp.size())
            throw Error("comprehension_balanced_canonical: completion slots exhausted");
    }
    return BalancedComprehension{zeta, std::move(fwd), std::move(bwd)};
}

} // namespace vnsplit
