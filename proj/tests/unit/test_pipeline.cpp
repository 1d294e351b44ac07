#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "selmerforge/pipeline.hpp"
#include "selmerforge/rootnumber.hpp"

using namespace sf;

namespace {

const AuxiliaryTwist& seed0_aux()
{
    static const AuxiliaryTwist aux = [] {
        PipelineConfig cfg;
        auto g = construct_3generic(0, cfg.construct_bound);
        return build_auxiliary_twist(g.curve, g.witness, cfg);
    }();
    return aux;
}

bool naive_prime(const Int& n)
{
    if (n < 2) return false;
    for (Int d = 2; d * d <= n; ++d)
        if (n % d == 0) return false;
    return true;
}

}  // namespace

TEST_CASE("config round-trips through json")
{
    PipelineConfig c;
    c.seed = 17;
    c.prime_bound = Int("123456789012345678901");
    c.quadruple_box = 9;
    PipelineConfig d = PipelineConfig::from_json(Json::parse(c.to_json().dump()));
    CHECK(d.to_json() == c.to_json());
}

TEST_CASE("witness roles pick the two smallest per difference")
{
    GenericityWitness w;
    w.primes = {std::vector<Int>{89, 17, 257}, std::vector<Int>{10369, 4201}, std::vector<Int>{769, 1481, 1801}};
    auto r = witness_roles(w);
    CHECK(r == std::array<Int, 6>{17, 4201, 769, 10369, 89, 1481});
    w.primes[1] = {4201};
    CHECK_THROWS_AS(witness_roles(w), InvalidArgument);
}

TEST_CASE("rank one on the congruent number curve for 5")
{
    Curve e = new_curve(0, 1, -1);
    Point p = Point::affine(Rat(-4), Rat(6));
    Verdict v = certify_rank_one(e, 5, p);
    CHECK(v.accepted);
    CHECK(v.selmer_dim == 3);

    // non-integral multiple
    Curve e5 = quadratic_twist(e, 5);
    Point q = add_points(e5, p, p);
    CHECK(q.x.get_den() != 1);
    CHECK(certify_rank_one(e, 5, q).accepted);

    Verdict off = certify_rank_one(e, 5, Point::affine(Rat(-4), Rat(7)));
    CHECK_FALSE(off.accepted);
    CHECK(off.failure == "point not on curve");

    Verdict tors = certify_rank_one(e, 5, Point::affine(Rat(0), Rat(0)));
    CHECK_FALSE(tors.accepted);
    CHECK(tors.failure == "point is torsion");

    Verdict wrong_t = certify_rank_one(e, 1, p);
    CHECK_FALSE(wrong_t.accepted);
    CHECK(wrong_t.failure.find("is 2") != std::string::npos);
}

TEST_CASE("forms give a point on the twist by kappa times their product")
{
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<long> small(-40, 40);
    for (int trial = 0; trial < 200; ++trial) {
        long a1 = small(rng), a2 = small(rng), a3 = small(rng);
        if (a1 == a2 || a1 == a3 || a2 == a3) continue;
        Curve e = new_curve(a1, a2, a3);
        Int rho = 8 * (1 + std::abs(small(rng))), m = 1 + std::abs(small(rng)), kappa = 1 + std::abs(small(rng));
        auto f = forms_from_parameters(e, rho, m, small(rng), small(rng), small(rng), kappa);
        Int x = small(rng), y = small(rng);
        Int k = rho * rho * kappa;
        Int c = k * (m * x + f.mu1) + 1, d = k * f.eval(3, x, y);
        if (d == 0) continue;
        Int prod = kappa;
        for (int i = 0; i < 4; ++i) prod *= f.eval(i, x, y);
        if (prod == 0) continue;
        // t rho^2 = d (c - a1 d)(c - a2 d)(c - a3 d)
        CHECK(prod * rho * rho == d * (c - e.a1 * d) * (c - e.a2 * d) * (c - e.a3 * d));
        Rat X(prod * c, d), Y(rho * prod * prod, d * d);
        X.canonicalize();
        Y.canonicalize();
        CHECK(on_curve(quadratic_twist(e, prod), Point::affine(X, Y)));
    }
}

TEST_CASE("quadruple search returns the first admissible point in shell order")
{
    Curve e = new_curve(0, 1, -1);
    auto f = forms_from_parameters(e, 8, 1, 3, 0, 0, 1);
    PipelineConfig cfg;
    cfg.sieve_primes = 100;
    QuadrupleStats st;
    Quadruple q = find_prime_quadruple(f, 40, {}, cfg, &st);

    // oracle: all points ordered by (max norm, x, y), trial-division primality
    std::vector<std::pair<long, long>> pts;
    for (long x = -40; x <= 40; ++x)
        for (long y = -40; y <= 40; ++y) pts.push_back({x, y});
    std::stable_sort(pts.begin(), pts.end(), [](auto& a, auto& b) {
        long ra = std::max(std::abs(a.first), std::abs(a.second)), rb = std::max(std::abs(b.first), std::abs(b.second));
        return ra != rb ? ra < rb : a < b;
    });
    std::optional<std::pair<long, long>> first;
    for (auto& [x, y] : pts) {
        std::array<Int, 4> v;
        bool good = true;
        for (int i = 0; i < 4 && good; ++i) {
            v[i] = f.eval(i, x, y);
            good = naive_prime(v[i]);
        }
        for (int i = 0; i < 4 && good; ++i)
            for (int j = 0; j < i; ++j) good &= v[i] != v[j];
        if (good) {
            first = {x, y};
            break;
        }
    }
    REQUIRE(first);
    CHECK(q.x == first->first);
    CHECK(q.y == first->second);
    for (int i = 0; i < 4; ++i) CHECK(q.q[i] == f.eval(i, q.x, q.y));
    CHECK(st.prime_tests >= 4);

    std::set<Int> excl = {q.q[0]};
    Quadruple r = find_prime_quadruple(f, 40, excl, cfg);
    CHECK((r.x != q.x || r.y != q.y));
    CHECK_THROWS_AS(find_prime_quadruple(f, 0, excl, cfg), SearchFailure);
}

TEST_CASE("pretwist flips an even parity and keeps genericity")
{
    PipelineConfig cfg;
    auto g = construct_3generic(0, cfg.construct_bound);
    PretwistResult same = pretwist_odd_parity(g.curve, 3, cfg);
    CHECK(same.t0 == 1);
    CHECK(same.dim_after % 2 == 1);

    // an even twist of the same curve
    const Int v = g.witness.primes[0].back();
    SymbolConstraint c;
    c.residue = 1;
    c.modulus = 24;
    for (auto& p : bad_primes(g.curve))
        if (p > 3) c.demands.push_back({p, p == v ? -1 : 1});
    Int q = find_prime(c, {}, Int(1) << 40);
    Curve even = quadratic_twist(g.curve, q);
    REQUIRE(sel2(even).dim() % 2 == 0);
    PretwistResult r = pretwist_odd_parity(even, 2, cfg);
    CHECK(r.t0 > 1);
    CHECK(r.dim_after % 2 == 1);
    CHECK(twist_parity_ratio(even, r.t0) == -1);
    CHECK(r.curve == quadratic_twist(even, r.t0));
    CHECK(verify_witness(r.curve, r.witness));
    CHECK(r.witness.n == 1);
}

TEST_CASE("auxiliary twist meets K1 and K2 and fails them when tampered")
{
    const AuxiliaryTwist& aux = seed0_aux();
    CHECK(check_auxiliary_twist(aux).ok);
    CHECK(aux.chain.size() == aux.descent_length + 17);
    CHECK(structure_group(aux.spec()).dim() == 5);
    // ledger tiles the chain and keeps odd dimensions
    size_t next = 0;
    for (auto& st : aux.ledger) {
        CHECK(st.from == next);
        for (auto d : st.dims) CHECK(d % 2 == 1);
        next = st.to;
    }
    CHECK(next == aux.chain.size());

    AuxiliaryTwist bad = aux;
    bad.kappa += 8;
    CHECK_FALSE(check_auxiliary_twist(bad).ok);
    bad = aux;
    bad.chain.back().pi_bit ^= 1;
    CHECK_FALSE(check_auxiliary_twist(bad).ok);
    bad = aux;
    std::swap(bad.z_basis[0], bad.z_basis[1]);
    CHECK(check_auxiliary_twist(bad).failure.find("K2") == 0);
}

TEST_CASE("linear forms hit the symbol table and are admissible")
{
    const AuxiliaryTwist& aux = seed0_aux();
    PipelineConfig cfg;
    LinearFormSystem f = build_linear_forms(aux, cfg);
    AuxCheck ok = check_linear_forms(f, aux, cfg.admissibility_bound);
    CHECK(ok.ok);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 5; ++j) {
            // Euler's criterion, independent of the Jacobi routine
            Int w = aux.witnesses[j], r;
            Int base = f.coeff[i][2] % w;
            if (base < 0) base += w;
            mpz_powm(r.get_mpz_t(), base.get_mpz_t(), Int((w - 1) / 2).get_mpz_t(), w.get_mpz_t());
            CHECK((r == 1 ? 1 : -1) == kFormTable[i][j]);
        }
    LinearFormSystem bad = forms_from_parameters(aux.curve, f.rho, f.m, f.lambda, f.mu1 + 1, f.mu2, f.kappa);
    CHECK_FALSE(check_linear_forms(bad, aux, cfg.admissibility_bound).ok);
    bad = f;
    bad.coeff[3][2] += 1;
    CHECK_FALSE(check_linear_forms(bad, aux, cfg.admissibility_bound).ok);
}

TEST_CASE("verify rejects malformed certificates")
{
    CHECK(verify_certificate(Json::object()).failure.rfind("schema", 0) == 0);
    CHECK_FALSE(verify_certificate(Json::parse(R"({"conclusion": "rank=2"})")).accepted);
}

TEST_CASE("certificate round trip and clause order on a certificate with a composite quadruple")
{
    const AuxiliaryTwist& aux = seed0_aux();
    PipelineConfig cfg;
    Certificate c;
    c.curve = aux.curve;  // seed 0 needs no parity twist
    c.aux = aux;
    c.forms = build_linear_forms(aux, cfg);
    c.quad.x = 0;
    c.quad.y = 0;
    for (int i = 0; i < 4; ++i) c.quad.q[i] = c.forms.eval(i, 0, 0);
    c.t = aux.kappa * c.quad.q[0] * c.quad.q[1] * c.quad.q[2] * c.quad.q[3];
    c.chain_dims = {5, 3, 1, 1};
    c.point = Point::affine(Rat(1), Rat(1));
    c.selmer_dim = 3;
    c.config = cfg;

    Json j = c.to_json();
    CHECK(certificate_from_json(j).to_json() == j);
    CHECK(j["trustBase"]["seed"] == 0);
    CHECK(j["conclusion"] == "rank=1");

    Verdict v = verify_certificate(j);
    CHECK_FALSE(v.accepted);
    CHECK(v.failure.rfind("quadruple:", 0) == 0);
    for (const char* clause : {"schema", "construction", "pretwist", "stage ledger", "K1/K2", "linear forms"})
        CHECK(std::find(v.passed.begin(), v.passed.end(), clause) != v.passed.end());

    Json bad = j;
    bad["kappa"] = json_int(aux.kappa + 8);
    CHECK(verify_certificate(bad).failure.rfind("K1", 0) == 0);
    bad = j;
    bad["stageLedger"]["cutter"] = json_int(aux.closer);
    CHECK(verify_certificate(bad).failure.rfind("stage ledger", 0) == 0);
    bad = j;
    bad["trustBase"]["seed"] = 1;
    CHECK(verify_certificate(bad).failure.rfind("construction", 0) == 0);
    bad = j;
    bad["linearForms"]["mu1"] = json_int(c.forms.mu1 + 1);
    CHECK(verify_certificate(bad).failure.rfind("linear forms", 0) == 0);
}
