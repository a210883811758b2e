#include "vnsplit/io.hpp"

#include <nlohmann/json.hpp>

#include <cmath>

namespace vnsplit::fixtures {

namespace {

Mat pauli_x() {
    Mat m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

Mat pauli_z() {
    Mat m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

} // namespace

SplittingMap chi_tensor() {
    return SplittingMap{identity(6), 6, 2, 3};
}

SplittingMap chi_oplus() {
    // H = H_1 (+) H_2 (dims 2+2) embedded into (H_1 (+) C_2) (x) (C_1 (+) H_2):
    // x_1 (+) x_2 -> x_1 (x) |empty_1> + |empty_2> (x) x_2.
    Mat v = Mat::Zero(9, 4);
    v(0 * 3 + 0, 0) = 1.0;
    v(1 * 3 + 0, 1) = 1.0;
    v(2 * 3 + 1, 2) = 1.0;
    v(2 * 3 + 2, 3) = 1.0;
    return SplittingMap{std::move(v), 4, 3, 3};
}

SplittingMap fg_counterexample() {
    Mat v = Mat::Zero(16, 2);
    const double s = 1.0 / std::sqrt(2.0);
    v(0 * 4 + 0, 0) = s;
    v(1 * 4 + 1, 0) = s;
    v(2 * 4 + 0, 1) = s;
    v(3 * 4 + 3, 1) = s;
    return SplittingMap{std::move(v), 2, 4, 4};
}

SplittingMap unbalanced_00_10() {
    // chi|0> = |0>|0>, chi|1> = |1>|+>; strictly local algebras are the
    // diagonal algebra on the left and the scalars on the right.
    Mat v = Mat::Zero(4, 2);
    const double s = 1.0 / std::sqrt(2.0);
    v(0, 0) = 1.0;
    v(2, 1) = s;
    v(3, 1) = s;
    return SplittingMap{std::move(v), 2, 2, 2};
}

SplittingMap entangled_balanced() {
    // chi|lr> = sum_m lambda_m |l,m>|m,r> with lambda = (1/sqrt2, 1/sqrt2);
    // balanced with factor stloc but not lean.
    const double s = 1.0 / std::sqrt(2.0);
    Mat v = Mat::Zero(16, 4);
    for (int l = 0; l < 2; ++l)
        for (int r = 0; r < 2; ++r)
            for (int m = 0; m < 2; ++m)
                v((2 * l + m) * 4 + (m * 2 + r), 2 * l + r) = s;
    return SplittingMap{std::move(v), 4, 4, 4};
}

VnAlgebra algebra_otimes(const Tolerance& tol) {
    return generate_algebra({tensor(pauli_x(), identity(2)), tensor(pauli_z(), identity(2))}, 4,
                            tol);
}

VnAlgebra algebra_oplus(const Tolerance& tol) {
    Mat g1 = Mat::Zero(4, 4);
    g1.topLeftCorner(2, 2) = pauli_x();
    Mat g2 = Mat::Zero(4, 4);
    g2.topLeftCorner(2, 2) = pauli_z();
    Mat g3 = Mat::Zero(4, 4);
    g3.bottomRightCorner(2, 2) = identity(2);
    return generate_algebra({g1, g2, g3}, 4, tol);
}

Mat swap_unitary() {
    Mat s = Mat::Zero(4, 4);
    s(0, 0) = 1;
    s(1, 2) = 1;
    s(2, 1) = 1;
    s(3, 3) = 1;
    return s;
}

Channel product_channel(const Tolerance& tol) {
    // Depolarizing (p = 0.75) on the left, amplitude damping (gamma = 0.3) on
    // the right.
    const double p = 0.75;
    Mat y(2, 2);
    y << Cplx(0, 0), Cplx(0, -1), Cplx(0, 1), Cplx(0, 0);
    std::vector<Mat> left{std::sqrt(1 - p) * identity(2), std::sqrt(p / 3) * pauli_x(),
                          std::sqrt(p / 3) * y, std::sqrt(p / 3) * pauli_z()};
    Mat a0(2, 2), a1(2, 2);
    a0 << 1, 0, 0, std::sqrt(0.7);
    a1 << 0, std::sqrt(0.3), 0, 0;
    std::vector<Mat> kraus;
    for (const Mat& kl : left)
        for (const Mat& kr : {a0, a1}) kraus.push_back(tensor(kl, kr));
    return channel_from_kraus(kraus, 4, 4, tol);
}

} // namespace vnsplit::fixtures

namespace vnsplit::io {

json fixture_json(const std::string& name) {
    const Tolerance tol;
    if (name == "chi-tensor") return split_to_json(fixtures::chi_tensor());
    if (name == "chi-oplus") return split_to_json(fixtures::chi_oplus());
    if (name == "fg-counterexample") return split_to_json(fixtures::fg_counterexample());
    if (name == "unbalanced-00-10") return split_to_json(fixtures::unbalanced_00_10());
    if (name == "entangled-balanced") return split_to_json(fixtures::entangled_balanced());
    if (name == "algebra-otimes") {
        Mat x(2, 2), z(2, 2);
        x << 0, 1, 1, 0;
        z << 1, 0, 0, -1;
        json doc;
        doc["dim"] = 4;
        doc["generators"] = json::array({matrix_to_json(tensor(x, identity(2))),
                                         matrix_to_json(tensor(z, identity(2)))});
        return doc;
    }
    if (name == "algebra-oplus") {
        Mat x(2, 2), z(2, 2);
        x << 0, 1, 1, 0;
        z << 1, 0, 0, -1;
        Mat g1 = Mat::Zero(4, 4);
        g1.topLeftCorner(2, 2) = x;
        Mat g2 = Mat::Zero(4, 4);
        g2.topLeftCorner(2, 2) = z;
        Mat g3 = Mat::Zero(4, 4);
        g3.bottomRightCorner(2, 2) = identity(2);
        json doc;
        doc["dim"] = 4;
        doc["generators"] =
            json::array({matrix_to_json(g1), matrix_to_json(g2), matrix_to_json(g3)});
        return doc;
    }
    if (name == "swap-unitary") return matrix_to_json(fixtures::swap_unitary());
    if (name == "product-channel") return channel_to_json(fixtures::product_channel(tol));
    throw UnknownFixture("unknown fixture: " + name);
}

} // namespace vnsplit::io
