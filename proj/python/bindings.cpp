#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "selmerforge/finfield.hpp"
#include "selmerforge/pipeline.hpp"
#include "selmerforge/rootnumber.hpp"

namespace py = pybind11;
using namespace sf;

namespace {

Int to_int(const py::handle& h) { return parse_int(py::str(h).cast<std::string>()); }

py::object from_int(const Int& n) { return py::module_::import("builtins").attr("int")(to_string(n)); }

py::object from_json(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Curve curve_from(const py::sequence& s)
{
    if (py::len(s) != 3) throw InvalidArgument("curve needs three integers");
    return new_curve(to_int(s[0]), to_int(s[1]), to_int(s[2]));
}

Rat to_rat(const py::handle& h)
{
    // int or fractions.Fraction
    if (py::hasattr(h, "numerator")) return Rat(to_int(h.attr("numerator")), to_int(h.attr("denominator")));
    return Rat(to_int(h));
}

}  // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Two-descent toolkit for elliptic curves with full rational 2-torsion";

    py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
    py::register_exception<SearchFailure>(m, "SearchFailure", PyExc_RuntimeError);
    py::register_exception<ConsistencyViolation>(m, "ConsistencyViolation", PyExc_AssertionError);

    m.def("jacobi", [](py::int_ a, py::int_ n) { return jacobi_symbol(to_int(a), to_int(n)); });
    m.def("hilbert", [](py::object a, py::object b, py::int_ p) {
        return hilbert_symbol(to_rat(a), to_rat(b), Place{to_int(p)});
    }, "Hilbert symbol at a prime p, or at the real place for p = 0");

    m.def("selmer_basis", [](py::sequence curve, py::int_ twist) {
        Curve e = curve_from(curve);
        Int t = to_int(twist);
        if (t != 1) e = quadratic_twist(e, t);
        py::list out;
        for (auto& z : sel2(e).basis) out.append(py::make_tuple(from_int(z.d1), from_int(z.d2)));
        return out;
    }, py::arg("curve"), py::arg("twist") = 1);

    m.def("selmer_rank", [](py::sequence curve, py::int_ twist) {
        Curve e = curve_from(curve);
        Int t = to_int(twist);
        if (t != 1) e = quadratic_twist(e, t);
        return sel2(e).dim();
    }, py::arg("curve"), py::arg("twist") = 1);

    m.def("chain_dims", [](py::sequence curve, std::vector<std::pair<py::int_, unsigned>> chain, bool ray) {
        StructureSpec s = default_spec(curve_from(curve));
        if (ray) s = as_ray(s);
        std::vector<size_t> dims = {structure_group(s).dim()};
        for (auto& [p, bit] : chain) {
            RankChange rc = rank_change(s, {to_int(p), bit});
            s = extend(s, {to_int(p), bit});
            dims.push_back(rc.dim_after);
        }
        return dims;
    }, py::arg("curve"), py::arg("chain"), py::arg("ray") = false);

    m.def("twist_parity_ratio", [](py::sequence curve, py::int_ q) { return twist_parity_ratio(curve_from(curve), to_int(q)); });

    m.def("is_n_generic", [](py::sequence curve, unsigned n) {
        GenericityWitness w = is_n_generic(curve_from(curve), n);
        py::dict d;
        d["generic"] = w.generic;
        d["failure"] = w.failure;
        py::list primes;
        for (auto& v : w.primes) {
            py::list l;
            for (auto& p : v) l.append(from_int(p));
            primes.append(l);
        }
        d["primes"] = primes;
        return d;
    });

    m.def("construct_3generic", [](uint64_t seed, py::int_ bound) {
        GenericConstruction g = construct_3generic(seed, to_int(bound));
        py::dict d;
        d["curve"] = py::make_tuple(from_int(g.curve.a1), from_int(g.curve.a2), from_int(g.curve.a3));
        py::list primes;
        for (auto& p : g.primes) primes.append(from_int(p));
        d["primes"] = primes;
        const auto& k = g.conic;
        d["conic"] = py::make_tuple(from_int(k.a), from_int(k.b), from_int(k.c), from_int(k.X), from_int(k.Y), from_int(k.Z));
        return d;
    }, py::arg("seed") = 0, py::arg("bound") = 100000000);

    m.def("solve_square_system", [](py::int_ q, std::vector<py::int_> c, std::vector<py::int_> delta,
                                     std::vector<py::int_> lam, uint64_t seed) {
        if (c.size() != 6 || delta.size() != 3 || lam.size() != 3) throw InvalidArgument("need 6 coefficients, 3 deltas, 3 lambdas");
        SquareSystem s;
        s.q = to_int(q);
        for (int i = 0; i < 6; ++i) s.c[i] = to_int(c[i]);
        for (int i = 0; i < 3; ++i) {
            s.delta[i] = to_int(delta[i]);
            s.lambda[i] = to_int(lam[i]);
        }
        SquareSolveOptions o;
        o.seed = seed;
        SquareSolution r = solve_square_system(s, o);
        return py::make_tuple(from_int(r.u), from_int(r.v), from_int(r.s1), from_int(r.s2), from_int(r.s3));
    }, py::arg("q"), py::arg("c"), py::arg("delta"), py::arg("lam") = std::vector<py::int_>{0, 0, 0}, py::arg("seed") = 0);

    m.def("certify_rank_one", [](py::sequence curve, py::int_ t, py::object x, py::object y) {
        Verdict v = certify_rank_one(curve_from(curve), to_int(t), Point::affine(to_rat(x), to_rat(y)));
        py::dict d;
        d["accepted"] = v.accepted;
        d["failure"] = v.failure;
        d["selmer_dim"] = v.selmer_dim;
        return d;
    });

    m.def("verify_certificate", [](const std::string& text, bool replay) {
        Verdict v = verify_certificate(Json::parse(text), replay);
        py::dict d;
        d["accepted"] = v.accepted;
        d["failure"] = v.failure;
        d["passed"] = v.passed;
        return d;
    }, py::arg("certificate"), py::arg("replay") = false);

    m.def("hunt_rank_one", [](uint64_t seed, uint64_t quadruple_box) {
        PipelineConfig cfg;
        cfg.seed = seed;
        cfg.quadruple_box = quadruple_box;
        HuntReport r;
        {
            py::gil_scoped_release release;
            r = hunt_rank_one(cfg);
        }
        Json j{{"complete", r.complete}, {"failedStage", r.failed_stage}, {"failure", r.failure}, {"artifacts", r.artifacts}};
        if (r.certificate) j["certificate"] = r.certificate->to_json();
        return from_json(j);
    }, py::arg("seed") = 0, py::arg("quadruple_box") = 64);
}
