// CPTP maps in Kraus form with cached Choi matrices, Stinespring dilations,
// the chi-trace, semi-causality checks, and the constructive semi-localisation.

#pragma once

#include <optional>
#include <vector>

#include "vnsplit/splitmap.hpp"

namespace vnsplit {

struct Channel {
    int d_in = 0;
    int d_out = 0;
    std::vector<Mat> kraus; // d_out x d_in each
    Mat choi;               // (d_in * d_out) square, index (i, o) -> i * d_out + o
};

struct StinespringDilation {
    Mat isometry; // (d_out * d_env) x d_in, rows ordered (o, k) -> o * d_env + k
    int d_env = 0;
    bool minimal = false;
};

// Data of a one-way mediated decomposition E = Ad_{zeta_B^dag} o (1 (x) E2) o
// (E1 (x) 1) o Ad_{chi_A'}, with E1 = V . V^dag and E2 = Tr_{d_U}(T . T^dag).
struct SemiLocalisation {
    SplittingMap zeta_B; // padded lean map (1 (x) W) chi_B
    Mat e1_isometry;     // V : H_L^{chi_A'} -> H_L^{chi_B} (x) K_V
    Mat t_connect;       // T : K_V (x) H_R^{chi_A'} -> H_R^{zeta_B} (x) K_U
    int d_U = 0;         // discarded environment dimension
};

// ---------------------------------------------------------------------------

Channel channel_from_kraus(const std::vector<Mat>& kraus, int d_in, int d_out,
                           const Tolerance& tol);
Channel channel_from_choi(const Mat& choi, int d_in, int d_out, const Tolerance& tol);

Mat apply_channel(const Channel& e, const Mat& rho);
Mat choi_of_kraus(const std::vector<Mat>& kraus, int d_in, int d_out);

// Identity channel on C^d.
Channel identity_channel(int d);

StinespringDilation stinespring(const Channel& e, bool minimal, const Tolerance& tol);

// Kraus operators K_k = (1 (x) <k|) U of a dilation.
std::vector<Mat> kraus_of_dilation(const Mat& isometry, int d_out, int d_env);

// Isometry W with v.isometry = (1 (x) W) u.isometry (Stinespring uniqueness).
Mat relate_dilations(const StinespringDilation& u, const StinespringDilation& v, int d_out,
                     const Tolerance& tol);

// Tr_chi(rho) = Tr_{H_R}(chi rho chi^dag).
Mat chi_trace(const SplittingMap& chi, const Mat& rho);

// Isometry U with Tr_chi(.) = U Tr_b(.) U^dag for a lean chi representing b
// on its right leg (the trace over b uses the decomposition of b').
Mat trace_equivalence_isometry(const SplittingMap& chi, const VnAlgebra& b, const Tolerance& tol,
                               std::uint64_t seed = 17);

// Channel F : L(H_L^chi) -> L(H) with Tr_chi(F(Tr_chi(rho))) = Tr_chi(rho).
Channel recovery_channel(const SplittingMap& chi_a_prime, const Tolerance& tol,
                         std::uint64_t seed = 17);

bool heisenberg_semicausal(const Mat& u, const VnAlgebra& a, const VnAlgebra& b,
                           const Tolerance& tol);

// Witness channel E~ with E~(Tr_{chi_A'}(.)) = Tr_{chi_B}(E(.)), if E cannot
// signal from the algebra represented by chi_A' right leg to chi_B's.
std::optional<Channel> schroedinger_semicausal(const Channel& e, const SplittingMap& chi_a_prime,
                                               const SplittingMap& chi_b, const Tolerance& tol,
                                               std::uint64_t seed = 17);

SemiLocalisation semi_localise(const Channel& e, const SplittingMap& chi_a_prime,
                               const SplittingMap& chi_b, const Tolerance& tol,
                               std::uint64_t seed = 17);

bool verify_semi_localisation(const Channel& e, const SemiLocalisation& s,
                              const SplittingMap& chi_a_prime, const Tolerance& tol);

} // namespace vnsplit
