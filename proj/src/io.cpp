#include "vnsplit/io.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace vnsplit::io {

// ---------------------------------------------------------------------------
// Documents
// ---------------------------------------------------------------------------

json matrix_to_json(const Mat& m) {
    json doc;
    doc["rows"] = static_cast<int>(m.rows());
    doc["cols"] = static_cast<int>(m.cols());
    json data = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            data.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
    doc["data"] = std::move(data);
    return doc;
}

Mat matrix_from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("rows") || !doc.contains("cols") ||
        !doc.contains("data"))
        throw ParseError("matrix document must have rows, cols, data");
    const int rows = doc.at("rows").get<int>();
    const int cols = doc.at("cols").get<int>();
    if (rows <= 0 || cols <= 0) throw DimensionMismatch("matrix document: non-positive shape");
    const json& data = doc.at("data");
    if (static_cast<int>(data.size()) != rows * cols)
        throw DimensionMismatch("matrix document: data length != rows*cols");
    Mat m(rows, cols);
    Eigen::Index k = 0;
    for (const json& entry : data) {
        if (!entry.is_array() || entry.size() != 2)
            throw ParseError("matrix entries must be [real, imaginary] pairs");
        const double re = entry[0].get<double>();
        const double im = entry[1].get<double>();
        if (!std::isfinite(re) || !std::isfinite(im))
            throw ParseError("matrix entries must be finite");
        m(k / cols, k % cols) = Cplx(re, im);
        ++k;
    }
    return m;
}

Mat load_matrix(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open " + path);
    json doc;
    try {
        doc = json::parse(f);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("JSON parse error in ") + path + ": " + e.what());
    }
    return matrix_from_json(doc);
}

void save_matrix(const Mat& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ParseError("cannot open " + path + " for writing");
    f << matrix_to_json(m).dump(2) << "\n";
}

json algebra_to_json(const VnAlgebra& a) {
    json doc;
    doc["dim"] = a.dim_space;
    json gens = json::array();
    for (const Mat& b : a.space.basis) gens.push_back(matrix_to_json(b));
    doc["generators"] = std::move(gens);
    return doc;
}

VnAlgebra algebra_from_json(const json& doc, const Tolerance& tol) {
    if (!doc.is_object() || !doc.contains("dim") || !doc.contains("generators"))
        throw ParseError("algebra document must have dim and generators");
    const int dim = doc.at("dim").get<int>();
    std::vector<Mat> gens;
    for (const json& g : doc.at("generators")) gens.push_back(matrix_from_json(g));
    return generate_algebra(gens, dim, tol);
}

json split_to_json(const SplittingMap& chi) {
    json doc;
    doc["d_H"] = chi.d_H;
    doc["d_L"] = chi.d_L;
    doc["d_R"] = chi.d_R;
    doc["isometry"] = matrix_to_json(chi.isometry);
    return doc;
}

SplittingMap split_from_json(const json& doc, const Tolerance& tol) {
    if (!doc.is_object() || !doc.contains("d_H") || !doc.contains("d_L") ||
        !doc.contains("d_R") || !doc.contains("isometry"))
        throw ParseError("splitting-map document must have d_H, d_L, d_R, isometry");
    const Mat v = matrix_from_json(doc.at("isometry"));
    SplittingMap chi =
        make_splitting_map(v, doc.at("d_L").get<int>(), doc.at("d_R").get<int>(), tol);
    if (chi.d_H != doc.at("d_H").get<int>())
        throw DimensionMismatch("splitting-map document: d_H does not match the isometry");
    return chi;
}

json channel_to_json(const Channel& e) {
    json doc;
    doc["d_in"] = e.d_in;
    doc["d_out"] = e.d_out;
    json kraus = json::array();
    for (const Mat& k : e.kraus) kraus.push_back(matrix_to_json(k));
    doc["kraus"] = std::move(kraus);
    return doc;
}

Channel channel_from_json(const json& doc, const Tolerance& tol) {
    if (!doc.is_object() || !doc.contains("d_in") || !doc.contains("d_out") ||
        !doc.contains("kraus"))
        throw ParseError("channel document must have d_in, d_out, kraus");
    std::vector<Mat> kraus;
    for (const json& k : doc.at("kraus")) kraus.push_back(matrix_from_json(k));
    return channel_from_kraus(kraus, doc.at("d_in").get<int>(), doc.at("d_out").get<int>(), tol);
}

json witness_to_json(const ComprehensionWitness& w) {
    json doc;
    doc["d_M"] = w.d_M;
    doc["black_dot"] = matrix_to_json(w.black_dot);
    doc["white_dot"] = matrix_to_json(w.white_dot);
    return doc;
}

ComprehensionWitness witness_from_json(const json& doc) {
    if (!doc.is_object() || !doc.contains("d_M") || !doc.contains("black_dot") ||
        !doc.contains("white_dot"))
        throw ParseError("witness document must have d_M, black_dot, white_dot");
    ComprehensionWitness w;
    w.d_M = doc.at("d_M").get<int>();
    w.black_dot = matrix_from_json(doc.at("black_dot"));
    w.white_dot = matrix_from_json(doc.at("white_dot"));
    return w;
}

json semilocalisation_to_json(const SemiLocalisation& s) {
    json doc;
    doc["zeta_B"] = split_to_json(s.zeta_B);
    doc["e1_isometry"] = matrix_to_json(s.e1_isometry);
    doc["T"] = matrix_to_json(s.t_connect);
    doc["d_U"] = s.d_U;
    return doc;
}

SemiLocalisation semilocalisation_from_json(const json& doc, const Tolerance& tol) {
    if (!doc.is_object() || !doc.contains("zeta_B") || !doc.contains("e1_isometry") ||
        !doc.contains("T") || !doc.contains("d_U"))
        throw ParseError("semi-localisation document must have zeta_B, e1_isometry, T, d_U");
    SemiLocalisation s{split_from_json(doc.at("zeta_B"), tol),
                       matrix_from_json(doc.at("e1_isometry")), matrix_from_json(doc.at("T")),
                       doc.at("d_U").get<int>()};
    return s;
}

// ---------------------------------------------------------------------------
// CLI
// ---------------------------------------------------------------------------

namespace {

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string digest(const std::string& text) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(text)));
    return buf;
}

struct CliContext {
    Tolerance tol;
    std::uint64_t seed = 17;
    std::string out_path;
    std::string in_path;
    bool json_report = false;
    std::istream* in = nullptr;
    std::ostream* out = nullptr;
    std::ostream* err = nullptr;
    json inputs = json::object();

    // Reads the primary input object (from --in or standard input). Accepts
    // either a plain document or a Report produced by a previous command, in
    // which case the "result" artifact is extracted.
    json read_input(const std::string& label = "stdin") {
        std::string text;
        std::string source = label;
        if (!in_path.empty()) {
            std::ifstream f(in_path);
            if (!f) throw ParseError("cannot open " + in_path);
            std::stringstream ss;
            ss << f.rdbuf();
            text = ss.str();
            source = in_path;
        } else {
            std::stringstream ss;
            ss << in->rdbuf();
            text = ss.str();
        }
        inputs[source] = digest(text);
        json doc;
        try {
            doc = json::parse(text);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("JSON parse error: ") + e.what());
        }
        if (doc.is_object() && doc.contains("artifacts") && doc.contains("command")) {
            const json& artifacts = doc.at("artifacts");
            if (artifacts.contains("result")) return artifacts.at("result");
            throw ParseError("piped report has no result artifact");
        }
        return doc;
    }

    json read_file(const std::string& path) {
        std::ifstream f(path);
        if (!f) throw ParseError("cannot open " + path);
        std::stringstream ss;
        ss << f.rdbuf();
        inputs[path] = digest(ss.str());
        json doc;
        try {
            doc = json::parse(ss.str());
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("JSON parse error in ") + path + ": " + e.what());
        }
        if (doc.is_object() && doc.contains("artifacts") && doc.contains("command")) {
            const json& artifacts = doc.at("artifacts");
            if (artifacts.contains("result")) return artifacts.at("result");
        }
        return doc;
    }

    int finish(const std::string& command, const json& verdicts, const json& artifacts) {
        json report;
        report["command"] = command;
        report["inputs"] = inputs;
        report["verdicts"] = verdicts;
        report["artifacts"] = artifacts;
        report["tolerance_used"] =
            json{{"absolute", tol.absolute}, {"relative_rank", tol.relative_rank}};
        if (json_report) {
            (*out) << report.dump(2) << "\n";
        } else {
            // Keep stdout pipeable: when a result artifact exists it owns
            // stdout and the verdict lines go to stderr.
            std::ostream& vstream = artifacts.contains("result") ? *err : *out;
            for (auto it = verdicts.begin(); it != verdicts.end(); ++it)
                vstream << it.key() << ": " << it.value().dump() << "\n";
            if (artifacts.contains("result")) (*out) << artifacts.at("result").dump() << "\n";
        }
        if (!out_path.empty()) {
            std::ofstream f(out_path);
            if (!f) throw ParseError("cannot open " + out_path + " for writing");
            f << (artifacts.contains("result") ? artifacts.at("result") : report).dump(2) << "\n";
        }
        for (auto it = verdicts.begin(); it != verdicts.end(); ++it)
            if (it.value().is_boolean() && !it.value().get<bool>()) return 1;
        return 0;
    }
};

Side side_from_string(const std::string& s) {
    if (s == "left") return Side::Left;
    if (s == "right") return Side::Right;
    throw ParseError("--side must be left or right");
}

} // namespace

int run_command(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
                std::ostream& err) {
    CliContext ctx;
    ctx.in = &in;
    ctx.out = &out;
    ctx.err = &err;
    if (const char* env = std::getenv("VNSPLIT_TOL")) ctx.tol.absolute = std::atof(env);

    CLI::App app{"vnsplit: Von Neumann algebra decompositions, splitting maps, and "
                 "semi-causality analysis"};
    app.fallthrough();
    double tol_flag = -1.0;
    app.add_option("--tol", tol_flag, "absolute tolerance (overrides VNSPLIT_TOL)");
    app.add_option("--seed", ctx.seed, "seed for randomized constructions");
    app.add_option("--out", ctx.out_path, "write the result artifact to this path");
    app.add_option("--in", ctx.in_path, "read the primary input from this path instead of stdin");
    app.add_flag("--json", ctx.json_report, "emit a full JSON report on stdout");
    app.require_subcommand(1);

    std::function<int()> action;

    // ----- algebra ---------------------------------------------------------
    auto* alg = app.add_subcommand("algebra", "Von Neumann algebra operations");
    alg->fallthrough();
    alg->require_subcommand(1);
    {
        auto* c = alg->add_subcommand("close", "close generators into an algebra; verdict keys: dim");
        c->fallthrough();
        c->callback([&, c] {
            action = [&] {
                VnAlgebra a = algebra_from_json(ctx.read_input(), ctx.tol);
                return ctx.finish("algebra close", json{{"dim", a.dim()}},
                                  json{{"result", algebra_to_json(a)}});
            };
        });
    }
    {
        auto* c = alg->add_subcommand("commutant", "commutant of an algebra; verdict keys: dim");
        c->fallthrough();
        c->callback([&] {
            action = [&] {
                VnAlgebra a = algebra_from_json(ctx.read_input(), ctx.tol);
                VnAlgebra cm = commutant(a, ctx.tol);
                return ctx.finish("algebra commutant", json{{"dim", cm.dim()}},
                                  json{{"result", algebra_to_json(cm)}});
            };
        });
    }
    {
        auto* c = alg->add_subcommand("center", "centre of an algebra; verdict keys: dim");
        c->fallthrough();
        c->callback([&] {
            action = [&] {
                VnAlgebra a = algebra_from_json(ctx.read_input(), ctx.tol);
                VnAlgebra z = center(a, ctx.tol);
                return ctx.finish("algebra center", json{{"dim", z.dim()}},
                                  json{{"result", algebra_to_json(z)}});
            };
        });
    }
    {
        auto* c = alg->add_subcommand(
            "atoms", "atomic projectors (of the centre when non-commutative); verdict keys: count");
        c->fallthrough();
        c->callback([&] {
            action = [&] {
                VnAlgebra a = algebra_from_json(ctx.read_input(), ctx.tol);
                VnAlgebra z = is_commutative(a, ctx.tol) ? a : center(a, ctx.tol);
                AtomicProjectorFamily fam = atomic_projectors(z, ctx.tol, ctx.seed);
                json projectors = json::array();
                for (const Mat& p : fam.projectors) projectors.push_back(matrix_to_json(p));
                return ctx.finish(
                    "algebra atoms", json{{"count", static_cast<int>(fam.projectors.size())}},
                    json{{"result", json{{"projectors", projectors}}}});
            };
        });
    }
    {
        auto* c = alg->add_subcommand(
            "aw", "block decomposition and representation unitary; verdict keys: n_blocks, dim");
        c->fallthrough();
        c->callback([&] {
            action = [&] {
                VnAlgebra a = algebra_from_json(ctx.read_input(), ctx.tol);
                AWDecomposition aw = aw_decomposition(a, ctx.tol, ctx.seed);
                json blocks = json::array();
                for (const AWBlock& b : aw.blocks)
                    blocks.push_back(json::array({b.d_left, b.d_right}));
                json atomic = json::array();
                for (const Mat& p : aw.atomic.projectors) atomic.push_back(matrix_to_json(p));
                json result{{"blocks", blocks},
                            {"unitary", matrix_to_json(aw.unitary)},
                            {"atomic", atomic}};
                return ctx.finish("algebra aw",
                                  json{{"n_blocks", static_cast<int>(aw.blocks.size())},
                                       {"dim", a.dim()}},
                                  json{{"result", result}});
            };
        });
    }
    {
        auto* c = alg->add_subcommand(
            "trace", "trace a matrix over the algebra; verdict keys: output_dim");
        c->fallthrough();
        auto matrix_path = std::make_shared<std::string>();
        c->add_option("--matrix", *matrix_path, "matrix document to trace")->required();
        c->callback([&, matrix_path] {
            action = [&, matrix_path] {
                VnAlgebra b = algebra_from_json(ctx.read_input(), ctx.tol);
                const Mat m = matrix_from_json(ctx.read_file(*matrix_path));
                AWDecomposition aw = aw_decomposition(commutant(b, ctx.tol), ctx.tol, ctx.seed);
                const Mat traced = trace_over_algebra(m, b, aw);
                return ctx.finish("algebra trace",
                                  json{{"output_dim", static_cast<int>(traced.rows())}},
                                  json{{"result", matrix_to_json(traced)}});
            };
        });
    }

    // ----- split -----------------------------------------------------------
    auto* spl = app.add_subcommand("split", "splitting-map operations");
    spl->fallthrough();
    spl->require_subcommand(1);
    {
        auto* c = spl->add_subcommand("make",
                                      "validate an isometry as a splitting map; verdict keys: "
                                      "is_isometry");
        c->fallthrough();
        auto dl = std::make_shared<int>(0);
        auto dr = std::make_shared<int>(0);
        c->add_option("--dl", *dl, "left leg dimension")->required();
        c->add_option("--dr", *dr, "right leg dimension")->required();
        c->callback([&, dl, dr] {
            action = [&, dl, dr] {
                const Mat v = matrix_from_json(ctx.read_input());
                SplittingMap chi = make_splitting_map(v, *dl, *dr, ctx.tol);
                return ctx.finish("split make", json{{"is_isometry", true}},
                                  json{{"result", split_to_json(chi)}});
            };
        });
    }
    auto add_rep_command = [&](const char* name, const char* help, bool strict) {
        auto* c = spl->add_subcommand(name, help);
        c->fallthrough();
        auto matrix_path = std::make_shared<std::string>();
        auto side = std::make_shared<std::string>("left");
        c->add_option("--matrix", *matrix_path, "operator on H to represent")->required();
        c->add_option("--side", *side, "left or right");
        c->callback([&, matrix_path, side, strict, name] {
            action = [&, matrix_path, side, strict, name] {
                SplittingMap chi = split_from_json(ctx.read_input(), ctx.tol);
                const Mat a = matrix_from_json(ctx.read_file(*matrix_path));
                const Side s = side_from_string(*side);
                auto rep = strict ? strictly_local_representative(chi, a, s, ctx.tol)
                                  : local_representative(chi, a, s, ctx.tol);
                json verdicts{{"found", rep.has_value()}};
                json artifacts = json::object();
                if (rep) {
                    artifacts["result"] = matrix_to_json(*rep);
                    if (strict) verdicts["consistent"] = is_consistent(chi, *rep, s, ctx.tol);
                }
                return ctx.finish(std::string("split ") + name, verdicts, artifacts);
            };
        });
    };
    add_rep_command("check-local", "on-site representative; verdict keys: found", false);
    add_rep_command("check-strict",
                    "strictly local representative; verdict keys: found, consistent", true);
    auto add_algebra_of_split = [&](const char* name, const char* help, bool strictly) {
        auto* c = spl->add_subcommand(name, help);
        c->fallthrough();
        auto side = std::make_shared<std::string>("left");
        c->add_option("--side", *side, "left or right");
        c->callback([&, side, strictly, name] {
            action = [&, side, strictly, name] {
                SplittingMap chi = split_from_json(ctx.read_input(), ctx.tol);
                const Side s = side_from_string(*side);
                VnAlgebra a = strictly ? strictly_local_algebra(chi, s, ctx.tol)
                                       : consistent_algebra(chi, s, ctx.tol);
                return ctx.finish(std::string("split ") + name, json{{"dim", a.dim()}},
                                  json{{"result", algebra_to_json(a)}});
            };
        });
    };
    add_algebra_of_split("cons", "algebra of consistent on-site operators; verdict keys: dim",
                         false);
    add_algebra_of_split("stloc", "strictly local algebra; verdict keys: dim", true);
    {
        auto* c = spl->add_subcommand("balanced", "balance check; verdict keys: balanced");
        c->fallthrough();
        c->callback([&] {
            action = [&] {
                SplittingMap chi = split_from_json(ctx.read_input(), ctx.tol);
                return ctx.finish("split balanced", json{{"balanced", is_balanced(chi, ctx.tol)}},
                                  json::object());
            };
        });
    }
    {
        auto* c = spl->add_subcommand("lean", "leanness check; verdict keys: lean");
        c->fallthrough();
        c->callback([&] {
            action = [&] {
                SplittingMap chi = split_from_json(ctx.read_input(), ctx.tol);
                return ctx.finish("split lean", json{{"lean", is_lean(chi, ctx.tol)}},
                                  json::object());
            };
        });
    }
    {
        auto* c = spl->add_subcommand(
            "canonical", "canonical splitting map of an algebra; verdict keys: d_L, d_R");
        c->fallthrough();
        c->callback([&] {
            action = [&] {
                VnAlgebra a = algebra_from_json(ctx.read_input(), ctx.tol);
                SplittingMap chi = canonical_splitting_map(a, ctx.tol, ctx.seed);
                return ctx.finish("split canonical", json{{"d_L", chi.d_L}, {"d_R", chi.d_R}},
                                  json{{"result", split_to_json(chi)}});
            };
        });
    }
    {
        auto* c = spl->add_subcommand("comprehend-verify",
                                      "verify a comprehension witness; verdict keys: verified");
        c->fallthrough();
        auto zeta_path = std::make_shared<std::string>();
        auto chi_path = std::make_shared<std::string>();
        c->add_option("--zeta", *zeta_path, "comprehended splitting map")->required();
        c->add_option("--chi", *chi_path, "comprehending splitting map")->required();
        c->callback([&, zeta_path, chi_path] {
            action = [&, zeta_path, chi_path] {
                ComprehensionWitness w = witness_from_json(ctx.read_input());
                SplittingMap zeta = split_from_json(ctx.read_file(*zeta_path), ctx.tol);
                SplittingMap chi = split_from_json(ctx.read_file(*chi_path), ctx.tol);
                const bool ok = verify_comprehension(zeta, chi, w, ctx.tol);
                return ctx.finish("split comprehend-verify", json{{"verified", ok}},
                                  json::object());
            };
        });
    }
    {
        auto* c = spl->add_subcommand(
            "comprehend-nested",
            "canonical maps and witness for nested algebras; verdict keys: verified, d_M");
        c->fallthrough();
        auto big_path = std::make_shared<std::string>();
        c->add_option("--big", *big_path, "enclosing algebra document")->required();
        c->callback([&, big_path] {
            action = [&, big_path] {
                VnAlgebra small = algebra_from_json(ctx.read_input(), ctx.tol);
                VnAlgebra big = algebra_from_json(ctx.read_file(*big_path), ctx.tol);
                NestedComprehension nc =
                    comprehension_nested_canonical(small, big, ctx.tol, ctx.seed);
                const bool ok = verify_comprehension(nc.zeta, nc.chi, nc.witness, ctx.tol);
                json result{{"zeta", split_to_json(nc.zeta)},
                            {"chi", split_to_json(nc.chi)},
                            {"witness", witness_to_json(nc.witness)}};
                return ctx.finish("split comprehend-nested",
                                  json{{"verified", ok}, {"d_M", nc.witness.d_M}},
                                  json{{"result", result}});
            };
        });
    }
    {
        auto* c = spl->add_subcommand("comprehend-balanced",
                                      "mutual comprehension with the canonical representative; "
                                      "verdict keys: forward_verified, backward_verified");
        c->fallthrough();
        c->callback([&] {
            action = [&] {
                SplittingMap chi = split_from_json(ctx.read_input(), ctx.tol);
                BalancedComprehension bc =
                    comprehension_balanced_canonical(chi, ctx.tol, ctx.seed);
                const bool fwd = verify_comprehension(bc.zeta, chi, bc.forward, ctx.tol);
                const bool bwd = verify_comprehension(chi, bc.zeta, bc.backward, ctx.tol);
                json result{{"zeta", split_to_json(bc.zeta)},
                            {"witness_forward", witness_to_json(bc.forward)},
                            {"witness_backward", witness_to_json(bc.backward)}};
                return ctx.finish("split comprehend-balanced",
                                  json{{"forward_verified", fwd}, {"backward_verified", bwd}},
                                  json{{"result", result}});
            };
        });
    }
    {
        auto* c = spl->add_subcommand("decompose",
                                      "balanced decomposition into canonical blocks; verdict "
                                      "keys: balanced, lean, reconstruction_error");
        c->fallthrough();
        c->callback([&] {
            action = [&] {
                SplittingMap chi = split_from_json(ctx.read_input(), ctx.tol);
                if (!is_balanced(chi, ctx.tol))
                    return ctx.finish("split decompose", json{{"balanced", false}},
                                      json::object());
                BalancedDecomposition bd = balanced_decomposition(chi, ctx.tol, ctx.seed);
                const Mat rebuilt = reconstruct_from_balanced(bd, chi.d_H, chi.d_L, chi.d_R);
                const double recon_err = (rebuilt - chi.isometry).norm();
                json blocks = json::array();
                for (const BalancedBlock& b : bd.blocks) {
                    json lambdas = json::array();
                    for (double l : b.lambdas) lambdas.push_back(l);
                    blocks.push_back(json{{"projector", matrix_to_json(b.projector)},
                                          {"zeta", split_to_json(b.zeta)},
                                          {"lambdas", lambdas},
                                          {"u_left", matrix_to_json(b.u_left)},
                                          {"u_right", matrix_to_json(b.u_right)}});
                }
                json result{{"blocks", blocks}};
                const bool lean = is_lean(chi, ctx.tol);
                if (lean) {
                    LeanDecomposition ld = lean_decomposition(chi, ctx.tol, ctx.seed);
                    result["lean"] = json{{"zeta", split_to_json(ld.zeta)},
                                          {"u_left", matrix_to_json(ld.u_left)},
                                          {"u_right", matrix_to_json(ld.u_right)}};
                }
                return ctx.finish("split decompose",
                                  json{{"balanced", true},
                                       {"lean", lean},
                                       {"reconstruction_error", recon_err}},
                                  json{{"result", result}});
            };
        });
    }

    // ----- channel ---------------------------------------------------------
    auto* chn = app.add_subcommand("channel", "quantum channel operations");
    chn->fallthrough();
    chn->require_subcommand(1);
    {
        auto* c = chn->add_subcommand("validate",
                                      "CPTP validation; verdict keys: trace_preserving, "
                                      "completely_positive, valid");
        c->fallthrough();
        c->callback([&] {
            action = [&] {
                const json doc = ctx.read_input();
                bool tp = true, cp = true;
                try {
                    channel_from_json(doc, ctx.tol);
                } catch (const NotTracePreserving&) {
                    tp = false;
                } catch (const NotCompletelyPositive&) {
                    cp = false;
                }
                return ctx.finish("channel validate",
                                  json{{"trace_preserving", tp},
                                       {"completely_positive", cp},
                                       {"valid", tp && cp}},
                                  json::object());
            };
        });
    }
    {
        auto* c = chn->add_subcommand("stinespring",
                                      "Stinespring dilation; verdict keys: d_env");
        c->fallthrough();
        auto full = std::make_shared<bool>(false);
        c->add_flag("--full", *full, "use the stored Kraus list instead of the minimal dilation");
        c->callback([&, full] {
            action = [&, full] {
                Channel e = channel_from_json(ctx.read_input(), ctx.tol);
                StinespringDilation sd = stinespring(e, !*full, ctx.tol);
                json result{{"isometry", matrix_to_json(sd.isometry)},
                            {"d_env", sd.d_env},
                            {"minimal", sd.minimal}};
                return ctx.finish("channel stinespring", json{{"d_env", sd.d_env}},
                                  json{{"result", result}});
            };
        });
    }
    {
        auto* c = chn->add_subcommand("chi-trace",
                                      "chi-trace of a state (splitting map on stdin); verdict "
                                      "keys: output_dim");
        c->fallthrough();
        auto matrix_path = std::make_shared<std::string>();
        c->add_option("--matrix", *matrix_path, "state document")->required();
        c->callback([&, matrix_path] {
            action = [&, matrix_path] {
                SplittingMap chi = split_from_json(ctx.read_input(), ctx.tol);
                const Mat rho = matrix_from_json(ctx.read_file(*matrix_path));
                const Mat traced = chi_trace(chi, rho);
                return ctx.finish("channel chi-trace", json{{"output_dim", chi.d_L}},
                                  json{{"result", matrix_to_json(traced)}});
            };
        });
    }
    {
        auto* c = chn->add_subcommand("semicausal",
                                      "Schroedinger semi-causality; verdict keys: semicausal");
        c->fallthrough();
        auto chia = std::make_shared<std::string>();
        auto chib = std::make_shared<std::string>();
        c->add_option("--chi-a", *chia, "lean splitting map representing A'")->required();
        c->add_option("--chi-b", *chib, "lean splitting map representing B")->required();
        c->callback([&, chia, chib] {
            action = [&, chia, chib] {
                Channel e = channel_from_json(ctx.read_input(), ctx.tol);
                SplittingMap ca = split_from_json(ctx.read_file(*chia), ctx.tol);
                SplittingMap cb = split_from_json(ctx.read_file(*chib), ctx.tol);
                auto witness = schroedinger_semicausal(e, ca, cb, ctx.tol, ctx.seed);
                json artifacts = json::object();
                if (witness) artifacts["result"] = channel_to_json(*witness);
                return ctx.finish("channel semicausal",
                                  json{{"semicausal", witness.has_value()}}, artifacts);
            };
        });
    }
    {
        auto* c = chn->add_subcommand(
            "semilocalise", "semi-localisation of a semi-causal channel; verdict keys: verified");
        c->fallthrough();
        auto chia = std::make_shared<std::string>();
        auto chib = std::make_shared<std::string>();
        c->add_option("--chi-a", *chia, "lean splitting map representing A'")->required();
        c->add_option("--chi-b", *chib, "lean splitting map representing B")->required();
        c->callback([&, chia, chib] {
            action = [&, chia, chib] {
                Channel e = channel_from_json(ctx.read_input(), ctx.tol);
                SplittingMap ca = split_from_json(ctx.read_file(*chia), ctx.tol);
                SplittingMap cb = split_from_json(ctx.read_file(*chib), ctx.tol);
                SemiLocalisation s = semi_localise(e, ca, cb, ctx.tol, ctx.seed);
                const bool ok = verify_semi_localisation(e, s, ca, ctx.tol);
                return ctx.finish("channel semilocalise", json{{"verified", ok}},
                                  json{{"result", semilocalisation_to_json(s)}});
            };
        });
    }
    {
        auto* c = chn->add_subcommand("verify-sl",
                                      "verify a semi-localisation; verdict keys: verified");
        c->fallthrough();
        auto sl_path = std::make_shared<std::string>();
        auto chia = std::make_shared<std::string>();
        c->add_option("--sl", *sl_path, "semi-localisation document")->required();
        c->add_option("--chi-a", *chia, "lean splitting map representing A'")->required();
        c->callback([&, sl_path, chia] {
            action = [&, sl_path, chia] {
                Channel e = channel_from_json(ctx.read_input(), ctx.tol);
                SemiLocalisation s = semilocalisation_from_json(ctx.read_file(*sl_path), ctx.tol);
                SplittingMap ca = split_from_json(ctx.read_file(*chia), ctx.tol);
                const bool ok = verify_semi_localisation(e, s, ca, ctx.tol);
                return ctx.finish("channel verify-sl", json{{"verified", ok}}, json::object());
            };
        });
    }

    // ----- fixture ---------------------------------------------------------
    {
        auto* c = app.add_subcommand("fixture", "emit a named construction from the catalogue");
        c->fallthrough();
        auto name = std::make_shared<std::string>();
        c->add_option("name", *name,
                      "one of: chi-tensor, chi-oplus, fg-counterexample, unbalanced-00-10, "
                      "algebra-otimes, algebra-oplus, entangled-balanced, swap-unitary, "
                      "product-channel")
            ->required();
        c->callback([&, name] {
            action = [&, name] {
                const json doc = fixture_json(*name);
                return ctx.finish("fixture " + *name, json::object(), json{{"result", doc}});
            };
        });
    }

    try {
        std::vector<const char*> argv;
        argv.push_back("vnsplit");
        for (const std::string& a : args) argv.push_back(a.c_str());
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        const CLI::App* node = &app;
        while (true) {
            const auto parsed = node->get_subcommands();
            if (parsed.empty()) break;
            node = parsed.front();
        }
        out << node->help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    }

    if (tol_flag >= 0) ctx.tol.absolute = tol_flag;
    if (!action) {
        err << "usage error: no command selected\n";
        return 2;
    }
    try {
        return action();
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace vnsplit::io
