// JSON serialization, named fixtures, and the command-line front end.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "vnsplit/channels.hpp"

namespace vnsplit::io {

using json = nlohmann::json;

// MatrixDocument: {"rows": r, "cols": c, "data": [[re, im], ...]} row-major.
json matrix_to_json(const Mat& m);
Mat matrix_from_json(const json& doc);

Mat load_matrix(const std::string& path);
void save_matrix(const Mat& m, const std::string& path);

// Algebra documents: {"dim": n, "generators": [MatrixDocument, ...]}.
json algebra_to_json(const VnAlgebra& a);
VnAlgebra algebra_from_json(const json& doc, const Tolerance& tol);

// Splitting maps: {"d_H":, "d_L":, "d_R":, "isometry": MatrixDocument}.
json split_to_json(const SplittingMap& chi);
SplittingMap split_from_json(const json& doc, const Tolerance& tol);

// Channels: {"d_in":, "d_out":, "kraus": [MatrixDocument, ...]}.
json channel_to_json(const Channel& e);
Channel channel_from_json(const json& doc, const Tolerance& tol);

json witness_to_json(const ComprehensionWitness& w);
ComprehensionWitness witness_from_json(const json& doc);

json semilocalisation_to_json(const SemiLocalisation& s);
SemiLocalisation semilocalisation_from_json(const json& doc, const Tolerance& tol);

// Named constructions from the worked examples.
json fixture_json(const std::string& name);

// Dispatches one CLI invocation; returns the process exit code
// (0 success, 1 false verdict, 2 usage or runtime error).
int run_command(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
                std::ostream& err);

} // namespace vnsplit::io

namespace vnsplit::fixtures {

SplittingMap chi_tensor();
SplittingMap chi_oplus();
SplittingMap fg_counterexample();
SplittingMap unbalanced_00_10();
SplittingMap entangled_balanced();
VnAlgebra algebra_otimes(const Tolerance& tol);
VnAlgebra algebra_oplus(const Tolerance& tol);
Mat swap_unitary();
Channel product_channel(const Tolerance& tol);

} // namespace vnsplit::fixtures
