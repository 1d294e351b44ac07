#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "selmerforge/finfield.hpp"
#include "selmerforge/genericity.hpp"
#include "selmerforge/pipeline.hpp"
#include "selmerforge/rootnumber.hpp"

using namespace sf;

namespace {

enum Exit { kOk = 0, kNegative = 1, kExhausted = 2, kInvalid = 3, kInconsistent = 4 };

struct Options {
    std::string curve, twist, chain, a, b, place = "0", q, c, delta, lambda = "0,0,0", format = "json", out;
    std::string cert;
    unsigned n = 1;
    uint64_t seed = 0;
    bool ray = false, replay = false;
    PipelineConfig cfg;
    std::string prime_bound = "1099511627776", construct_bound = "100000000";
    uint64_t factor_effort = 2000000;
};

std::vector<Int> int_list(const std::string& s, size_t expect, const char* what)
{
    std::vector<Int> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) v.push_back(parse_int(item));
    if (expect && v.size() != expect)
        throw InvalidArgument(std::string(what) + " needs " + std::to_string(expect) + " comma-separated integers");
    return v;
}

Curve curve_of(const Options& o)
{
    if (o.curve.empty()) throw InvalidArgument("--curve a1,a2,a3 is required");
    auto v = int_list(o.curve, 3, "--curve");
    return new_curve(v[0], v[1], v[2]);
}

Json curve_json(const Curve& e) { return Json::array({json_int(e.a1), json_int(e.a2), json_int(e.a3)}); }

Json ints(const std::vector<Int>& v)
{
    Json a = Json::array();
    for (auto& x : v) a.push_back(json_int(x));
    return a;
}

FactorOptions factor_opts(const Options& o)
{
    FactorOptions f;
    f.rho_iterations = o.factor_effort;
    return f;
}

void flatten(const Json& j, const std::string& prefix, std::ostream& os)
{
    if (j.is_object()) {
        for (auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, os);
        return;
    }
    os << prefix << '\t' << (j.is_string() ? j.get<std::string>() : j.dump()) << '\n';
}

void emit(const Options& o, Json j)
{
    j["seed"] = o.seed;
    std::ostringstream os;
    if (o.format == "tsv") flatten(j, "", os);
    else os << j.dump(2) << '\n';
    if (o.out.empty()) {
        std::cout << os.str();
        return;
    }
    std::ofstream f(o.out);
    if (!f) throw InvalidArgument("cannot write " + o.out);
    f << os.str();
}

int cmd_symbols(const Options& o)
{
    Int a = parse_int(o.a), b = parse_int(o.b), p = parse_int(o.place);
    if (a == 0 || b == 0) throw InvalidArgument("symbols need nonzero a and b");
    Json j{{"a", json_int(a)}, {"b", json_int(b)}, {"place", p == 0 ? "inf" : json_int(p)}};
    if (p != 0) {
        if (p < 2 || !is_probable_prime(p)) throw InvalidArgument("--place must be 0 or a prime");
        if (p != 2) j["legendre"] = jacobi_symbol(a, p);
    }
    j["hilbert"] = hilbert_symbol(Rat(a), Rat(b), Place{p});
    emit(o, j);
    return kOk;
}

int cmd_curve_reduce(const Options& o)
{
    Curve e = curve_of(o);
    if (!o.twist.empty()) e = quadratic_twist(e, parse_int(o.twist));
    Json places = Json::array();
    RootNumberReport rn = root_number_report(e, factor_opts(o));
    for (auto& f : rn.factors) {
        Json pj{{"place", f.place.is_infinite() ? "inf" : json_int(f.place.p)}, {"rootNumber", sign_name(f.value)}, {"rule", f.rule}};
        if (!f.place.is_infinite()) {
            ReductionInfo ri = reduction_info(e, f.place.p);
            pj["reduction"] = reduction_name(ri.type);
            pj["discValuation"] = ri.disc_valuation;
        }
        places.push_back(pj);
    }
    emit(o, Json{{"curve", curve_json(e)}, {"places", places}, {"rootNumber", sign_name(rn.global)}});
    return kOk;
}

int cmd_selmer_rank(const Options& o)
{
    Curve e = curve_of(o);
    if (!o.twist.empty()) e = quadratic_twist(e, parse_int(o.twist));
    SelmerGroup g = sel2(e, factor_opts(o));
    Json basis = Json::array();
    for (auto& z : g.basis) basis.push_back(Json::array({json_int(z.d1), json_int(z.d2)}));
    emit(o, Json{{"curve", curve_json(e)}, {"dim", g.dim()}, {"basis", basis}});
    return kOk;
}

int cmd_selmer_chain(const Options& o)
{
    Curve e = curve_of(o);
    if (!o.twist.empty()) {
        TwistIdentityReport r = twist_chain_identity(e, parse_int(o.twist), factor_opts(o));
        Json chain = Json::array();
        for (auto& l : r.chain) chain.push_back(Json::array({json_int(l.p), l.pi_bit}));
        emit(o, Json{{"curve", curve_json(e)}, {"twist", json_int(r.d)}, {"chain", chain},
                     {"sel2TwistDim", r.sel2_twist_dim}, {"chainDim", r.chain_dim}, {"holds", r.holds}});
        return r.holds ? kOk : kInconsistent;
    }
    StructureSpec s = default_spec(e, factor_opts(o));
    if (o.ray) s = as_ray(s);
    Json steps = Json::array();
    steps.push_back(Json{{"length", 0}, {"dim", structure_group(s).dim()}});
    std::stringstream ss(o.chain);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto colon = item.find(':');
        ChainLink l{parse_int(item.substr(0, colon)), colon == std::string::npos ? 0u : unsigned(std::stoul(item.substr(colon + 1)))};
        RankChange rc = rank_change(s, l);
        s = extend(s, l);
        steps.push_back(Json{{"p", json_int(l.p)}, {"piBit", l.pi_bit}, {"dim", rc.dim_after}, {"change", rc.n},
                             {"case", rc.change_case}});
    }
    emit(o, Json{{"curve", curve_json(e)}, {"mode", o.ray ? "ray" : "standard"}, {"steps", steps}});
    return kOk;
}

int cmd_parity(const Options& o)
{
    Curve e = curve_of(o);
    if (!o.twist.empty()) {
        TwistParityReport r = twist_parity_crosscheck(e, parse_int(o.twist), factor_opts(o));
        emit(o, Json{{"curve", curve_json(e)}, {"twist", o.twist}, {"dimBase", r.dim_base}, {"dimTwist", r.dim_twist},
                     {"ratio", r.ratio}, {"flips", r.flips}, {"agrees", r.agrees}});
        return r.agrees ? kOk : kInconsistent;
    }
    ParityReport r = parity_crosscheck(e, factor_opts(o));
    emit(o, Json{{"curve", curve_json(e)}, {"selmerDim", r.selmer_dim}, {"selmerParity", sign_name(r.selmer_parity)},
                 {"rootNumber", sign_name(r.root.global)}, {"verdict", sign_name(r.verdict)}});
    return r.verdict == Sign::Minus ? kInconsistent : kOk;
}

Json witness_json(const GenericityWitness& w)
{
    Json j{{"n", w.n}, {"generic", w.generic}};
    Json p = Json::object();
    for (int d = 0; d < 3; ++d) p[difference_name(Difference(d))] = ints(w.primes[d]);
    j["primes"] = p;
    if (!w.generic) j["failure"] = w.failure;
    return j;
}

int cmd_generic_check(const Options& o)
{
    Curve e = curve_of(o);
    GenericityWitness w = is_n_generic(e, o.n, factor_opts(o));
    Json j = witness_json(w);
    j["curve"] = curve_json(e);
    emit(o, j);
    if (!w.generic) std::cerr << "not " << o.n << "-generic: " << w.failure << '\n';
    return w.generic ? kOk : kNegative;
}

int cmd_generic_construct(const Options& o)
{
    GenericConstruction g = construct_3generic(o.seed, parse_int(o.construct_bound));
    const auto& k = g.conic;
    emit(o, Json{{"primes", ints({g.primes.begin(), g.primes.end()})},
                 {"conic", Json{{"a", json_int(k.a)}, {"b", json_int(k.b)}, {"c", json_int(k.c)},
                                {"X", json_int(k.X)}, {"Y", json_int(k.Y)}, {"Z", json_int(k.Z)}}},
                 {"curve", curve_json(g.curve)},
                 {"witness", witness_json(g.witness)}});
    return kOk;
}

int cmd_finfield(const Options& o)
{
    SquareSystem s;
    s.q = parse_int(o.q);
    auto c = int_list(o.c, 6, "--c");
    auto d = int_list(o.delta, 3, "--delta");
    auto l = int_list(o.lambda, 3, "--lambda");
    std::copy(c.begin(), c.end(), s.c.begin());
    std::copy(d.begin(), d.end(), s.delta.begin());
    std::copy(l.begin(), l.end(), s.lambda.begin());
    SquareSolveOptions so;
    so.seed = o.seed;
    SquareSolution r = solve_square_system(s, so);
    if (!check_square_solution(s, r)) throw ConsistencyViolation("solver returned a non-solution");
    emit(o, Json{{"q", json_int(s.q)}, {"u", json_int(r.u)}, {"v", json_int(r.v)},
                 {"s", ints({r.s1, r.s2, r.s3})}});
    return kOk;
}

PipelineConfig pipeline_config(const Options& o)
{
    PipelineConfig c = o.cfg;
    c.seed = o.seed;
    c.prime_bound = parse_int(o.prime_bound);
    c.construct_bound = parse_int(o.construct_bound);
    if (c.prime_bound <= 0 || c.construct_bound <= 0)
        throw InvalidArgument("bounds must be positive");
    return c;
}

int cmd_hunt(const Options& o)
{
    PipelineConfig cfg = pipeline_config(o);
    HuntReport r = hunt_rank_one(cfg);
    if (!r.complete) {
        std::cerr << "hunt stopped at stage " << r.failed_stage << ": " << r.failure << '\n';
        Options so = o;
        so.out.clear();
        emit(so, Json{{"complete", false}, {"failedStage", r.failed_stage}, {"failure", r.failure},
                      {"artifacts", r.artifacts}});
        return kExhausted;
    }
    Json cert = r.certificate->to_json();
    if (o.out.empty()) std::cout << cert.dump(2) << '\n';
    else {
        std::ofstream f(o.out);
        if (!f) throw InvalidArgument("cannot write " + o.out);
        f << cert.dump(2) << '\n';
    }
    return kOk;
}

int cmd_verify(const Options& o)
{
    std::ifstream f(o.cert);
    if (!f) throw InvalidArgument("cannot read " + o.cert);
    Json j;
    try {
        j = Json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("certificate is not JSON: ") + e.what());
    }
    Verdict v = verify_certificate(j, o.replay);
    Json out{{"accepted", v.accepted}, {"passed", v.passed}, {"selmerDim", v.selmer_dim}};
    if (!v.accepted) out["failure"] = v.failure;
    if (j.is_object() && j.contains("trustBase") && j["trustBase"].contains("seed")) out["certificateSeed"] = j["trustBase"]["seed"];
    emit(o, out);
    if (!v.accepted) std::cerr << "rejected: " << v.failure << '\n';
    return v.accepted ? kOk : kNegative;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Two-descent toolkit for elliptic curves with full rational 2-torsion"};
    app.require_subcommand(1);
    Options o;
    int (*action)(const Options&) = nullptr;

    auto common = [&](CLI::App* c) {
        c->add_option("--format", o.format, "json or tsv")->check(CLI::IsMember({"json", "tsv"}))->envname("SELMERFORGE_FORMAT");
        c->add_option("--out", o.out, "write output to this file")->envname("SELMERFORGE_OUT");
        c->add_option("--seed", o.seed, "seed for every randomized step")->envname("SELMERFORGE_SEED");
        c->add_option("--bound-factor", o.factor_effort, "rho iterations per factoring attempt")
            ->check(CLI::PositiveNumber)
            ->envname("SELMERFORGE_BOUND_FACTOR");
    };
    auto curve_opts = [&](CLI::App* c, bool twist) {
        c->add_option("--curve", o.curve, "a1,a2,a3")->envname("SELMERFORGE_CURVE");
        if (twist) c->add_option("--twist", o.twist, "quadratic twist parameter")->envname("SELMERFORGE_TWIST");
    };
    auto leaf = [&](CLI::App* parent, const std::string& name, const std::string& help, int (*fn)(const Options&)) {
        CLI::App* c = parent->add_subcommand(name, help);
        common(c);
        c->callback([&action, fn] { action = fn; });
        return c;
    };

    CLI::App* sym = leaf(&app, "symbols", "Legendre and Hilbert symbols", cmd_symbols);
    sym->add_option("--a", o.a)->required();
    sym->add_option("--b", o.b)->required();
    sym->add_option("--place", o.place, "prime, or 0 for the real place");

    CLI::App* curve = app.add_subcommand("curve", "curve data")->require_subcommand(1);
    curve_opts(leaf(curve, "reduce", "reduction types and local root numbers", cmd_curve_reduce), true);

    CLI::App* selmer = app.add_subcommand("selmer", "2-Selmer groups")->require_subcommand(1);
    curve_opts(leaf(selmer, "rank", "dimension and basis of sel2", cmd_selmer_rank), true);
    CLI::App* chain = leaf(selmer, "chain", "structure-group dimensions along a chain, or the twist identity", cmd_selmer_chain);
    curve_opts(chain, true);
    chain->add_option("--chain", o.chain, "p:bit,p:bit,...");
    chain->add_flag("--ray", o.ray, "ray structure instead of the standard one");

    CLI::App* parity = app.add_subcommand("parity", "Selmer parity against root numbers")->require_subcommand(1);
    curve_opts(leaf(parity, "check", "parity cross-check, or the ratio under a prime twist", cmd_parity), true);

    CLI::App* generic = app.add_subcommand("generic", "n-generic curves")->require_subcommand(1);
    CLI::App* gc = leaf(generic, "check", "test n-genericity", cmd_generic_check);
    curve_opts(gc, false);
    gc->add_option("--n", o.n)->envname("SELMERFORGE_N");
    leaf(generic, "construct", "build a 3-generic curve from the seed", cmd_generic_construct)
        ->add_option("--bound-construct", o.construct_bound)
        ->envname("SELMERFORGE_BOUND_CONSTRUCT");

    CLI::App* ff = app.add_subcommand("finfield", "square systems over F_q")->require_subcommand(1);
    CLI::App* fs = leaf(ff, "solve", "solve c u + c' v = delta s^2 + lambda, three rows", cmd_finfield);
    fs->add_option("--q", o.q)->required();
    fs->add_option("--c", o.c, "six coefficients")->required();
    fs->add_option("--delta", o.delta, "three deltas")->required();
    fs->add_option("--lambda", o.lambda, "three lambdas");

    CLI::App* hunt = app.add_subcommand("hunt", "search for rank-one twists")->require_subcommand(1);
    CLI::App* h1 = leaf(hunt, "rank1", "full pipeline to a certificate", cmd_hunt);
    h1->add_option("--bound-construct", o.construct_bound)->envname("SELMERFORGE_BOUND_CONSTRUCT");
    h1->add_option("--bound-prime", o.prime_bound)->envname("SELMERFORGE_BOUND_PRIME");
    h1->add_option("--bound-steps", o.cfg.progression_steps)->check(CLI::PositiveNumber)->envname("SELMERFORGE_BOUND_STEPS");
    h1->add_option("--bound-retries", o.cfg.retries)->check(CLI::PositiveNumber)->envname("SELMERFORGE_BOUND_RETRIES");
    h1->add_option("--bound-chain", o.cfg.max_chain)->check(CLI::PositiveNumber)->envname("SELMERFORGE_BOUND_CHAIN");
    h1->add_option("--bound-quadruple-box", o.cfg.quadruple_box)->check(CLI::PositiveNumber)->envname("SELMERFORGE_BOUND_QUADRUPLE_BOX");
    h1->add_option("--bound-sieve", o.cfg.sieve_primes)->check(CLI::PositiveNumber)->envname("SELMERFORGE_BOUND_SIEVE");
    h1->add_option("--bound-admissibility", o.cfg.admissibility_bound)->check(CLI::PositiveNumber)->envname("SELMERFORGE_BOUND_ADMISSIBILITY");

    CLI::App* ver = leaf(&app, "verify", "re-verify a certificate", cmd_verify);
    ver->add_option("cert", o.cert, "certificate file")->required();
    ver->add_flag("--replay", o.replay, "rebuild every stage from the trust base and compare");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kInvalid;
    }
    try {
        return action(o);
    } catch (const InvalidArgument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kInvalid;
    } catch (const NotLocallySolvable& e) {
        std::cerr << "no solution: " << e.what() << '\n';
        return kNegative;
    } catch (const SearchFailure& e) {
        std::cerr << "search exhausted: " << e.what() << '\n';
        return kExhausted;
    } catch (const ConsistencyViolation& e) {
        std::cerr << "consistency violation: " << e.what() << '\n';
        return kInconsistent;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kInvalid;
    }
}
