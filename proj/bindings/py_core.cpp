// Python bindings for the main operations: algebra engine, splitting maps,
// and channel analysis. Matrices cross the boundary as numpy complex arrays.

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include <sstream>

#include "vnsplit/io.hpp"

namespace py = pybind11;
using namespace vnsplit;

namespace {

Tolerance make_tol(double absolute, double relative_rank) {
    Tolerance t;
    t.absolute = absolute;
    t.relative_rank = relative_rank;
    return t;
}

std::vector<Mat> basis_of(const VnAlgebra& a) { return a.space.basis; }

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Von Neumann algebra decompositions, splitting maps, and semi-causality analysis";

    py::register_exception<Error>(m, "VnsplitError");

    py::class_<Tolerance>(m, "Tolerance")
        .def(py::init(&make_tol), py::arg("absolute") = 1e-10,
             py::arg("relative_rank") = 1e-9)
        .def_readwrite("absolute", &Tolerance::absolute)
        .def_readwrite("relative_rank", &Tolerance::relative_rank);

    py::enum_<Side>(m, "Side").value("Left", Side::Left).value("Right", Side::Right);

    py::class_<VnAlgebra>(m, "VnAlgebra")
        .def_property_readonly("dim_space", [](const VnAlgebra& a) { return a.dim_space; })
        .def_property_readonly("dim", &VnAlgebra::dim)
        .def_property_readonly("basis", &basis_of);

    py::class_<AtomicProjectorFamily>(m, "AtomicProjectorFamily")
        .def_readonly("projectors", &AtomicProjectorFamily::projectors);

    py::class_<AWBlock>(m, "AWBlock")
        .def_readonly("d_left", &AWBlock::d_left)
        .def_readonly("d_right", &AWBlock::d_right);

    py::class_<AWDecomposition>(m, "AWDecomposition")
        .def_readonly("blocks", &AWDecomposition::blocks)
        .def_readonly("unitary", &AWDecomposition::unitary)
        .def_property_readonly("atomic_projectors", [](const AWDecomposition& aw) {
            return aw.atomic.projectors;
        });

    py::class_<SplittingMap>(m, "SplittingMap")
        .def_readonly("isometry", &SplittingMap::isometry)
        .def_readonly("d_H", &SplittingMap::d_H)
        .def_readonly("d_L", &SplittingMap::d_L)
        .def_readonly("d_R", &SplittingMap::d_R);

    py::class_<ComprehensionWitness>(m, "ComprehensionWitness")
        .def_readonly("d_M", &ComprehensionWitness::d_M)
        .def_readonly("black_dot", &ComprehensionWitness::black_dot)
        .def_readonly("white_dot", &ComprehensionWitness::white_dot);

    py::class_<NestedComprehension>(m, "NestedComprehension")
        .def_readonly("zeta", &NestedComprehension::zeta)
        .def_readonly("chi", &NestedComprehension::chi)
        .def_readonly("witness", &NestedComprehension::witness);

    py::class_<BalancedComprehension>(m, "BalancedComprehension")
        .def_readonly("zeta", &BalancedComprehension::zeta)
        .def_readonly("forward", &BalancedComprehension::forward)
        .def_readonly("backward", &BalancedComprehension::backward);

    py::class_<FactorShape>(m, "FactorShape")
        .def_readonly("d_left", &FactorShape::d_left)
        .def_readonly("d_right", &FactorShape::d_right)
        .def_readonly("basis", &FactorShape::basis)
        .def_readonly("lambdas", &FactorShape::lambdas)
        .def_readonly("left_frame", &FactorShape::left_frame)
        .def_readonly("right_frame", &FactorShape::right_frame);

    py::class_<LeanDecomposition>(m, "LeanDecomposition")
        .def_readonly("zeta", &LeanDecomposition::zeta)
        .def_readonly("u_left", &LeanDecomposition::u_left)
        .def_readonly("u_right", &LeanDecomposition::u_right);

    py::class_<Channel>(m, "Channel")
        .def_readonly("d_in", &Channel::d_in)
        .def_readonly("d_out", &Channel::d_out)
        .def_readonly("kraus", &Channel::kraus)
        .def_readonly("choi", &Channel::choi);

    py::class_<StinespringDilation>(m, "StinespringDilation")
        .def_readonly("isometry", &StinespringDilation::isometry)
        .def_readonly("d_env", &StinespringDilation::d_env)
        .def_readonly("minimal", &StinespringDilation::minimal);

    py::class_<SemiLocalisation>(m, "SemiLocalisation")
        .def_readonly("zeta_B", &SemiLocalisation::zeta_B)
        .def_readonly("e1_isometry", &SemiLocalisation::e1_isometry)
        .def_readonly("t_connect", &SemiLocalisation::t_connect)
        .def_readonly("d_U", &SemiLocalisation::d_U);

    const Tolerance default_tol;

    m.def("tensor", &tensor, py::arg("a"), py::arg("b"));
    m.def("direct_sum", &direct_sum, py::arg("a"), py::arg("b"));
    m.def("partial_trace", &partial_trace, py::arg("m"), py::arg("d_left"), py::arg("d_right"),
          py::arg("side"));
    m.def("random_hermitian_in",
          [](const VnAlgebra& a, std::uint64_t seed, const Tolerance& tol) {
              return random_hermitian_in(a.space, seed, tol);
          },
          py::arg("algebra"), py::arg("seed"), py::arg("tol") = default_tol);

    m.def("generate_algebra", &generate_algebra, py::arg("generators"), py::arg("dim_space"),
          py::arg("tol") = default_tol);
    m.def("commutant", &commutant, py::arg("algebra"), py::arg("tol") = default_tol);
    m.def("center", &center, py::arg("algebra"), py::arg("tol") = default_tol);
    m.def("atomic_projectors",
          [](const VnAlgebra& z, const Tolerance& tol, std::uint64_t seed) {
              return atomic_projectors(z, tol, seed).projectors;
          },
          py::arg("algebra"), py::arg("tol") = default_tol, py::arg("seed") = 17);
    m.def("aw_decomposition", &aw_decomposition, py::arg("algebra"),
          py::arg("tol") = default_tol, py::arg("seed") = 17);
    m.def("trace_over_algebra", &trace_over_algebra, py::arg("m"), py::arg("b"),
          py::arg("aw_of_commutant"));

    m.def("make_splitting_map", &make_splitting_map, py::arg("isometry"), py::arg("d_L"),
          py::arg("d_R"), py::arg("tol") = default_tol);
    m.def("image_projector", &image_projector, py::arg("chi"));
    m.def("sigma", &sigma, py::arg("chi"), py::arg("b"), py::arg("side"));
    m.def("is_consistent", &is_consistent, py::arg("chi"), py::arg("b"), py::arg("side"),
          py::arg("tol") = default_tol);
    m.def("consistent_algebra", &consistent_algebra, py::arg("chi"), py::arg("side"),
          py::arg("tol") = default_tol);
    m.def("local_representative", &local_representative, py::arg("chi"), py::arg("a"),
          py::arg("side"), py::arg("tol") = default_tol);
    m.def("strictly_local_representative", &strictly_local_representative, py::arg("chi"),
          py::arg("a"), py::arg("side"), py::arg("tol") = default_tol);
    m.def("strictly_local_algebra", &strictly_local_algebra, py::arg("chi"), py::arg("side"),
          py::arg("tol") = default_tol);
    m.def("canonical_splitting_map", &canonical_splitting_map, py::arg("algebra"),
          py::arg("tol") = default_tol, py::arg("seed") = 17);
    m.def("is_balanced", &is_balanced, py::arg("chi"), py::arg("tol") = default_tol);
    m.def("is_lean", &is_lean, py::arg("chi"), py::arg("tol") = default_tol);
    m.def("verify_comprehension", &verify_comprehension, py::arg("zeta"), py::arg("chi"),
          py::arg("witness"), py::arg("tol") = default_tol);
    m.def("comprehension_nested_canonical", &comprehension_nested_canonical, py::arg("a_small"),
          py::arg("a_big"), py::arg("tol") = default_tol, py::arg("seed") = 17);
    m.def("comprehension_balanced_canonical", &comprehension_balanced_canonical, py::arg("chi"),
          py::arg("tol") = default_tol, py::arg("seed") = 17);
    m.def("factor_shape", &factor_shape, py::arg("chi_component"), py::arg("tol") = default_tol,
          py::arg("seed") = 17);
    m.def("lean_decomposition", &lean_decomposition, py::arg("chi"), py::arg("tol") = default_tol,
          py::arg("seed") = 17);

    m.def("channel_from_kraus", &channel_from_kraus, py::arg("kraus"), py::arg("d_in"),
          py::arg("d_out"), py::arg("tol") = default_tol);
    m.def("apply_channel", &apply_channel, py::arg("channel"), py::arg("rho"));
    m.def("stinespring", &stinespring, py::arg("channel"), py::arg("minimal") = true,
          py::arg("tol") = default_tol);
    m.def("relate_dilations", &relate_dilations, py::arg("u"), py::arg("v"), py::arg("d_out"),
          py::arg("tol") = default_tol);
    m.def("chi_trace", &chi_trace, py::arg("chi"), py::arg("rho"));
    m.def("trace_equivalence_isometry", &trace_equivalence_isometry, py::arg("chi"), py::arg("b"),
          py::arg("tol") = default_tol, py::arg("seed") = 17);
    m.def("recovery_channel", &recovery_channel, py::arg("chi_a_prime"),
          py::arg("tol") = default_tol, py::arg("seed") = 17);
    m.def("heisenberg_semicausal", &heisenberg_semicausal, py::arg("u"), py::arg("a"),
          py::arg("b"), py::arg("tol") = default_tol);
    m.def("schroedinger_semicausal", &schroedinger_semicausal, py::arg("channel"),
          py::arg("chi_a_prime"), py::arg("chi_b"), py::arg("tol") = default_tol,
          py::arg("seed") = 17);
    m.def("semi_localise", &semi_localise, py::arg("channel"), py::arg("chi_a_prime"),
          py::arg("chi_b"), py::arg("tol") = default_tol, py::arg("seed") = 17);
    m.def("verify_semi_localisation", &verify_semi_localisation, py::arg("channel"),
          py::arg("s"), py::arg("chi_a_prime"), py::arg("tol") = default_tol);

    m.def("fixture", [](const std::string& name) { return io::fixture_json(name).dump(); },
          py::arg("name"), "named construction from the catalogue, as a JSON string");
    m.def("fixture_split", [](const std::string& name) {
        return io::split_from_json(io::fixture_json(name), Tolerance{});
    });
    m.def("fixture_algebra", [](const std::string& name) {
        return io::algebra_from_json(io::fixture_json(name), Tolerance{});
    });
    m.def("fixture_channel", [](const std::string& name) {
        return io::channel_from_json(io::fixture_json(name), Tolerance{});
    });
    m.def("fixture_matrix", [](const std::string& name) {
        return io::matrix_from_json(io::fixture_json(name));
    });
    m.def("run_cli", [](const std::vector<std::string>& args, const std::string& stdin_text) {
        std::istringstream in(stdin_text);
        std::ostringstream out, err;
        const int code = io::run_command(args, in, out, err);
        return py::make_tuple(code, out.str(), err.str());
    });
}
