#include <algorithm>
#include <sstream>

#include "selmerforge/finfield.hpp"
#include "selmerforge/pipeline.hpp"
#include "selmerforge/rootnumber.hpp"

namespace sf {

const int kFormTable[4][5] = {{-1, -1, 1, 1, 1}, {-1, 1, -1, -1, 1}, {1, -1, -1, 1, -1}, {1, 1, 1, -1, -1}};

namespace {

Int mod_pos(const Int& a, const Int& m)
{
    Int r = a % m;
    if (r < 0) r += m;
    return r;
}

Int inverse_mod(const Int& a, const Int& m)
{
    Int r;
    Int am = mod_pos(a, m);
    if (!mpz_invert(r.get_mpz_t(), am.get_mpz_t(), m.get_mpz_t()))
        throw ConsistencyViolation("no inverse of " + to_string(a) + " modulo " + to_string(m));
    return r;
}

Json ints_json(const std::vector<Int>& v)
{
    Json a = Json::array();
    for (auto& x : v) a.push_back(json_int(x));
    return a;
}

Int odd_part_outside(const std::vector<Int>& t_primes, const std::array<Int, 6>& w)
{
    Int n = 1;
    for (auto& p : t_primes)
        if (p != 2 && std::find(w.begin(), w.begin() + 5, p) == w.begin() + 5) n *= p;
    return n;
}

}  // namespace

LinearFormSystem forms_from_parameters(const Curve& e, const Int& rho, const Int& m, const Int& lambda, const Int& mu1,
                                       const Int& mu2, const Int& kappa)
{
    LinearFormSystem s;
    s.rho = rho;
    s.m = m;
    s.lambda = lambda;
    s.mu1 = mu1;
    s.mu2 = mu2;
    s.kappa = kappa;
    s.roots = {e.a1, e.a2, e.a3};
    const Int k = rho * rho * kappa;
    for (int i = 0; i < 3; ++i) {
        const Int& a = s.roots[i];
        s.coeff[i] = {k * m, -a * k * k * m, k * mu1 - a * k * k * mu2 - a * k * lambda + 1};
    }
    s.coeff[3] = {Int(0), k * m, k * mu2 + lambda};
    return s;
}

Json LinearFormSystem::to_json() const
{
    return Json{{"rho", json_int(rho)},
                {"m", json_int(m)},
                {"lambda", json_int(lambda)},
                {"mu1", json_int(mu1)},
                {"mu2", json_int(mu2)}};
}

LinearFormSystem build_linear_forms(const AuxiliaryTwist& aux, const PipelineConfig& cfg)
{
    const Curve& e = aux.curve;
    const Int rho = 8 * odd_part_outside(aux.t_primes, aux.witnesses);
    Int m = 1;
    for (int i = 0; i < 5; ++i) m *= aux.witnesses[i];
    const Int& kappa = aux.kappa;

    // kappa * lambda has class pi_i at every chain prime; lambda = 1 mod rho.
    std::vector<std::pair<Int, Int>> cong = {{1, rho}};
    for (auto& c : aux.chain) {
        int want = (c.pi_bit ? -1 : 1) * jacobi_symbol(kappa / c.p, c.p);
        cong.push_back({want == 1 ? Int(1) : smallest_nonresidue(c.p), c.p});
    }
    const Int lambda = crt(cong).first;

    const Int k = rho * rho * kappa;
    std::vector<std::pair<Int, Int>> mu1s, mu2s;
    for (int j = 0; j < 5; ++j) {
        const Int& q = aux.witnesses[j];
        const Int kq = mod_pos(k, q), kinv = inverse_mod(kq, q);
        // u = k mu1 + 1, v = k mu2 + lambda: L_i(0,0) = u - a_i k v for i < 3 and L_4(0,0) = v.
        const std::array<Int, 3> roots = {e.a1, e.a2, e.a3};
        std::vector<int> rows;
        for (int i = 0; i < 3; ++i) {
            bool same = false;
            for (int r : rows) same |= mod_pos(roots[r] - roots[i], q) == 0;
            if (!same) rows.push_back(i);
        }
        rows.push_back(3);
        if (rows.size() != 3) throw ConsistencyViolation("forms: witness " + to_string(q) + " does not merge two roots");
        SquareSystem sys;
        sys.q = q;
        for (int r = 0; r < 3; ++r) {
            int i = rows[r];
            sys.c[2 * r] = i == 3 ? Int(0) : Int(1);
            sys.c[2 * r + 1] = i == 3 ? Int(1) : mod_pos(-roots[i] * kq, q);
            sys.delta[r] = kFormTable[i][j] == 1 ? Int(1) : smallest_nonresidue(q);
            sys.lambda[r] = 0;
        }
        SquareSolveOptions so;
        so.seed = cfg.seed;
        SquareSolution sol = solve_square_system(sys, so);
        mu1s.push_back({mod_pos((sol.u - 1) * kinv, q), q});
        mu2s.push_back({mod_pos((sol.v - lambda) * kinv, q), q});
    }
    LinearFormSystem s = forms_from_parameters(e, rho, m, lambda, crt(mu1s).first, crt(mu2s).first, kappa);
    AuxCheck chk = check_linear_forms(s, aux, cfg.admissibility_bound);
    if (!chk.ok) throw ConsistencyViolation("forms: " + chk.failure);
    return s;
}

AuxCheck check_linear_forms(const LinearFormSystem& sys, const AuxiliaryTwist& aux, uint64_t admissibility_bound)
{
    AuxCheck r;
    auto fail = [&](const std::string& s) {
        r.ok = false;
        r.failure = s;
        return r;
    };
    const Curve& e = aux.curve;
    if (sys.roots != std::array<Int, 3>{e.a1, e.a2, e.a3}) return fail("forms belong to another curve");
    if (sys.kappa != aux.kappa) return fail("kappa differs from the auxiliary twist");
    if (sys.rho != 8 * odd_part_outside(aux.t_primes, aux.witnesses)) return fail("rho is not 8N");
    Int m = 1;
    for (int i = 0; i < 5; ++i) m *= aux.witnesses[i];
    if (sys.m != m) return fail("m is not the product of w1..w5");
    LinearFormSystem again = forms_from_parameters(e, sys.rho, sys.m, sys.lambda, sys.mu1, sys.mu2, sys.kappa);
    if (again.coeff != sys.coeff) return fail("coefficients do not match the parameters");
    if (mod_pos(sys.lambda, sys.rho) != 1) return fail("lambda is not 1 mod rho");
    for (auto& c : aux.chain) {
        int want = c.pi_bit ? -1 : 1;
        if (jacobi_symbol(mod_pos(aux.kappa / c.p * sys.lambda, c.p), c.p) != want)
            return fail("kappa lambda has the wrong class at " + to_string(c.p));
    }
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 5; ++j)
            if (jacobi_symbol(mod_pos(sys.coeff[i][2], aux.witnesses[j]), aux.witnesses[j]) != kFormTable[i][j])
                return fail("L" + std::to_string(i + 1) + " has the wrong symbol at w" + std::to_string(j + 1));

    // Every prime dividing rho m kappa: the constant terms are units there.
    std::vector<Int> fixed = {2};
    for (auto& p : aux.t_primes)
        if (p != 2) fixed.push_back(p);
    for (auto& c : aux.chain) fixed.push_back(c.p);
    for (auto& p : fixed) {
        if (mod_pos(sys.rho * sys.m * sys.kappa, p) != 0) continue;
        for (int i = 0; i < 4; ++i)
            if (mod_pos(sys.coeff[i][2], p) == 0)
                return fail("L" + std::to_string(i + 1) + "(0,0) vanishes mod " + to_string(p));
    }
    // Small primes outside: some point where no form vanishes.
    for (uint32_t p : std::vector<uint32_t>(small_primes(uint32_t(admissibility_bound)))) {
        if (p > admissibility_bound) break;
        Int pi(p);
        if (mod_pos(sys.rho * sys.m * sys.kappa, pi) == 0) continue;
        std::array<std::array<uint64_t, 3>, 4> c;
        for (int i = 0; i < 4; ++i)
            for (int k = 0; k < 3; ++k) c[i][k] = mod_pos(sys.coeff[i][k], pi).get_ui();
        bool found = false;
        for (uint64_t x = 0; x < p && !found; ++x)
            for (uint64_t y = 0; y < p && !found; ++y) {
                bool all = true;
                for (int i = 0; i < 4 && all; ++i) all = (c[i][0] * x + c[i][1] * y + c[i][2]) % p != 0;
                found = all;
            }
        if (!found) return fail("local obstruction at " + std::to_string(p));
    }
    r.ok = true;
    return r;
}

Quadruple find_prime_quadruple(const LinearFormSystem& sys, uint64_t box, const std::set<Int>& exclusions,
                               const PipelineConfig& cfg, QuadrupleStats* stats)
{
    QuadrupleStats local;
    QuadrupleStats& st = stats ? *stats : local;
    st = QuadrupleStats{};
    std::vector<uint32_t> sieve;
    for (uint32_t p : std::vector<uint32_t>(small_primes(uint32_t(cfg.sieve_primes))))
        if (p <= cfg.sieve_primes) sieve.push_back(p);
    // residues of the coefficients per sieve prime
    std::vector<std::array<std::array<uint64_t, 3>, 4>> res(sieve.size());
    for (size_t k = 0; k < sieve.size(); ++k)
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 3; ++j) res[k][i][j] = mod_pos(sys.coeff[i][j], Int(sieve[k])).get_ui();

    auto try_point = [&](long x, long y) -> std::optional<Quadruple> {
        ++st.points;
        Quadruple qd{Int(x), Int(y), {}};
        for (int i = 0; i < 4; ++i) {
            qd.q[i] = sys.eval(i, qd.x, qd.y);
            if (qd.q[i] <= 1) return std::nullopt;
        }
        ++st.positive;
        for (size_t k = 0; k < sieve.size(); ++k) {
            const uint64_t p = sieve[k];
            const uint64_t xm = uint64_t(((x % long(p)) + long(p)) % long(p));
            const uint64_t ym = uint64_t(((y % long(p)) + long(p)) % long(p));
            for (int i = 0; i < 4; ++i)
                if ((res[k][i][0] * xm + res[k][i][1] * ym + res[k][i][2]) % p == 0 && qd.q[i] != p)
                    return std::nullopt;
        }
        ++st.sieved;
        for (int i = 0; i < 4; ++i) {
            if (exclusions.count(qd.q[i])) return std::nullopt;
            for (int j = 0; j < i; ++j)
                if (qd.q[i] == qd.q[j]) return std::nullopt;
        }
        for (int i : {3, 0, 1, 2}) {
            ++st.prime_tests;
            if (!is_probable_prime(qd.q[i])) return std::nullopt;
        }
        return qd;
    };

    for (uint64_t r = 0; r <= box; ++r) {
        st.radius = r;
        const long R = long(r);
        for (long x = -R; x <= R; ++x) {
            const bool edge = x == -R || x == R;
            for (long y = -R; y <= R; y += edge || R == 0 ? 1 : 2 * R) {
                if (auto q = try_point(x, y)) return *q;
            }
        }
    }
    std::ostringstream os;
    os << "no prime quadruple within shell radius " << box << ": " << st.points << " points, " << st.positive
       << " positive, " << st.sieved << " past the sieve, " << st.prime_tests << " primality tests";
    throw SearchFailure(os.str());
}

Verdict certify_rank_one(const Curve& e, const Int& t, const Point& p, const std::vector<Int>& hints)
{
    Verdict v;
    auto fail = [&](const std::string& s) {
        v.accepted = false;
        v.failure = s;
        return v;
    };
    if (e.alpha == 0 || e.beta == 0 || e.gamma == 0) return fail("roots are not distinct");
    v.passed.push_back("full 2-torsion");
    if (t == 0) return fail("t is zero");
    const Curve et = quadratic_twist(e, t);
    FactorOptions fo;
    fo.hints = hints;
    try {
        v.selmer_dim = sel2(et, fo).dim();
    } catch (const FactorizationFailure& ex) {
        return fail(std::string("could not factor the discriminant: ") + ex.what());
    }
    if (v.selmer_dim != 3)
        return fail("Selmer dimension of the twist is " + std::to_string(v.selmer_dim) + ", not 3");
    v.passed.push_back("dim sel2 = 3");
    if (p.infinity || !on_curve(et, p)) return fail("point not on curve");
    v.passed.push_back("point on curve");
    // A non-integral x-coordinate already rules out torsion on an integral model.
    const bool integral = p.x.get_den() == 1 && p.y.get_den() == 1;
    if (integral && !is_nontorsion(et, p)) return fail("point is torsion");
    v.passed.push_back("point of infinite order");
    v.accepted = true;
    return v;
}

namespace {

Json curve_json(const Curve& e) { return Json::array({json_int(e.a1), json_int(e.a2), json_int(e.a3)}); }

Curve curve_from(const Json& j)
{
    if (!j.is_array() || j.size() != 3) throw InvalidArgument("curve must be three integers");
    return new_curve(int_from_json(j[0]), int_from_json(j[1]), int_from_json(j[2]));
}

std::vector<Int> ints_from(const Json& j)
{
    if (!j.is_array()) throw InvalidArgument("expected an array of integers");
    std::vector<Int> v;
    for (auto& x : j) v.push_back(int_from_json(x));
    return v;
}

SelmerElement element_from(const Json& j)
{
    if (!j.is_array() || j.size() != 2) throw InvalidArgument("Selmer element must be a pair");
    return SelmerElement{int_from_json(j[0]), int_from_json(j[1])};
}

template <size_t N>
std::array<Int, N> fixed_ints(const Json& j, const char* what)
{
    auto v = ints_from(j);
    if (v.size() != N) throw InvalidArgument(std::string(what) + " has the wrong length");
    std::array<Int, N> a;
    std::copy(v.begin(), v.end(), a.begin());
    return a;
}

Json search_bounds(const PipelineConfig& cfg)
{
    Json j = cfg.to_json();
    j.erase("seed");
    return j;
}

// The point on E^t coming from a quadruple: (t c / d, rho t^2 / d^2).
Point twist_point(const LinearFormSystem& f, const Quadruple& qd, const Int& t)
{
    const Int k = f.rho * f.rho * f.kappa;
    const Int c = k * (f.m * qd.x + f.mu1) + 1;
    const Int d = k * f.eval(3, qd.x, qd.y);
    if (d == 0) throw InvalidArgument("degenerate quadruple");
    Rat x(t * c, d), y(f.rho * t * t, d * d);
    x.canonicalize();
    y.canonicalize();
    return Point::affine(x, y);
}

std::array<unsigned, 4> pi_bits_for(const Int& t, const std::vector<Int>& primes)
{
    std::array<unsigned, 4> b{};
    for (size_t i = 0; i < primes.size(); ++i) b[i] = jacobi_symbol(mod_pos(t / primes[i], primes[i]), primes[i]) == -1;
    return b;
}

struct Parts {
    std::string failure;
    std::vector<std::string> passed;
    size_t selmer_dim = 0;
};

// Every clause that needs only the certificate contents. Shared by assembly and verification.
Parts check_parts(const Certificate& c)
{
    Parts out;
    auto ok = [&](const std::string& s) { out.passed.push_back(s); };
    auto fail = [&](const std::string& s) {
        out.failure = s;
        return out;
    };
    const AuxiliaryTwist& aux = c.aux;
    const Curve twisted = quadratic_twist(c.curve, c.t0);
    if (!(twisted == aux.curve)) return fail("pretwist: the auxiliary curve is not the twist of the base curve by t0");
    if (c.t0 <= 0) return fail("pretwist: t0 must be positive");
    ok("pretwist");

    // chain and ledger bookkeeping
    std::set<Int> seen(aux.t_primes.begin(), aux.t_primes.end());
    for (auto& l : aux.chain) {
        if (!is_probable_prime(l.p)) return fail("chain: " + to_string(l.p) + " is not prime");
        if (!seen.insert(l.p).second) return fail("chain: " + to_string(l.p) + " repeats or lies in T");
        if (l.pi_bit > 1) return fail("chain: pi bit out of range");
    }
    const size_t s = aux.chain.size(), r = aux.descent_length;
    if (s != r + 17) return fail("stage ledger: chain length is not descent length + 17");
    auto at = [&](size_t i) { return aux.chain[i].p; };
    for (size_t i = 0; i < 6; ++i)
        if (aux.companions[i] != at(r + i)) return fail("stage ledger: companion " + std::to_string(i + 1) + " mismatch");
    if (aux.repair.size() != 6) return fail("stage ledger: repair stage must add six primes");
    for (size_t i = 0; i < 6; ++i)
        if (aux.repair[i] != at(r + 6 + i)) return fail("stage ledger: repair prime mismatch");
    for (size_t i = 0; i < 3; ++i)
        if (aux.lifters[i] != at(r + 12 + i)) return fail("stage ledger: lifter mismatch");
    if (aux.cutter != at(s - 2) || aux.closer != at(s - 1)) return fail("stage ledger: cutter or closer mismatch");
    size_t next = 0;
    for (auto& st : aux.ledger) {
        if (st.from != next || st.to < st.from || st.to > s || st.dims.size() != st.to - st.from)
            return fail("stage ledger: stage " + st.name + " does not tile the chain");
        next = st.to;
    }
    if (next != s) return fail("stage ledger: stages do not cover the chain");
    for (int i = 0; i < 6; ++i) {
        Difference d = i == 0 || i == 4 ? Difference::Alpha : (i == 1 || i == 3 ? Difference::Beta : Difference::Gamma);
        if (!check_generic_prime(aux.curve, d, aux.witnesses[i]).ok())
            return fail("stage ledger: w" + std::to_string(i + 1) + " is not a generic prime");
    }
    ok("stage ledger");

    AuxCheck k = check_auxiliary_twist(aux);
    if (!k.ok) return fail(k.failure);
    ok("K1/K2");

    k = check_linear_forms(c.forms, aux, c.config.admissibility_bound);
    if (!k.ok) return fail("linear forms: " + k.failure);
    ok("linear forms");

    const Quadruple& qd = c.quad;
    if (abs(qd.x) > Int(std::to_string(c.config.quadruple_box)) || abs(qd.y) > Int(std::to_string(c.config.quadruple_box)))
        return fail("quadruple: (x, y) outside the search box");
    for (int i = 0; i < 4; ++i) {
        if (qd.q[i] != c.forms.eval(i, qd.x, qd.y)) return fail("quadruple: q" + std::to_string(i + 1) + " != L(x, y)");
        if (qd.q[i] <= 0 || !is_probable_prime(qd.q[i])) return fail("quadruple: q" + std::to_string(i + 1) + " is not a prime");
        if (!seen.insert(qd.q[i]).second) return fail("quadruple: q" + std::to_string(i + 1) + " repeats a known prime");
    }
    ok("quadruple");

    if (c.t != aux.kappa * qd.q[0] * qd.q[1] * qd.q[2] * qd.q[3]) return fail("t is not kappa q1 q2 q3 q4");
    if (c.t <= 0) return fail("P1: t is negative");
    for (auto& v : aux.t_primes)
        if (!square_class_at(c.t, Place::finite(v)).trivial()) return fail("P1: t is not a square at " + to_string(v));
    ok("P1");

    // P3 two ways: Hilbert sums over T and the chain, against Legendre symbols at q_j.
    static const int expected[3][10] = {{1, 1, 1, 0, 0, 0, 0, 0, 0, 0},
                                        {-1, -1, -1, -1, 0, 1, 1, 0, 0, 0},
                                        {-1, -1, -1, -1, -1, -1, -1, -1, 1, 1}};
    std::vector<Place> places = {Place::infinity()};
    for (auto& v : aux.t_primes) places.push_back(Place::finite(v));
    for (auto& l : aux.chain) places.push_back(Place::finite(l.p));
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 10; ++i) {
            const Int& z = i % 2 == 0 ? aux.z_basis[i / 2].d1 : aux.z_basis[i / 2].d2;
            int sum = 0;
            for (auto& v : places) sum ^= hilbert_symbol(Rat(z), Rat(qd.q[j]), v) == -1;
            const int frob = jacobi_symbol(mod_pos(z, qd.q[j]), qd.q[j]) == -1;
            if (sum != frob)
                throw ConsistencyViolation("P3: Hilbert sum and Frobenius symbol disagree for z" + std::to_string(i + 1));
            if (expected[j][i] >= 0 && sum != expected[j][i])
                return fail("P3: invariant sum of z" + std::to_string(i + 1) + " at q" + std::to_string(j + 1) +
                            " is " + std::to_string(sum));
        }
    ok("P3");

    // Chain classes must be those of t; then q1, q2, q3 take 5 -> 3 -> 1 -> 1.
    StructureSpec spec = aux.spec();
    for (auto& l : aux.chain)
        if (l.pi_bit != (jacobi_symbol(mod_pos(c.t / l.p, l.p), l.p) == -1))
            return fail("chain dims: pi bit at " + to_string(l.p) + " is not the class of t");
    std::array<size_t, 4> dims{};
    dims[0] = structure_group(spec).dim();
    const auto bits = pi_bits_for(c.t, {qd.q[0], qd.q[1], qd.q[2]});
    for (int j = 0; j < 3; ++j) {
        spec = extend(spec, {qd.q[j], bits[j]});
        dims[j + 1] = structure_group(spec).dim();
    }
    if (dims != std::array<size_t, 4>{5, 3, 1, 1}) return fail("chain dims: recomputed dimensions are not 5, 3, 1, 1");
    if (dims != c.chain_dims) return fail("chain dims: recorded dimensions differ from recomputation");
    ok("chain dims");

    const Point pt = twist_point(c.forms, qd, c.t);
    if (!(pt == c.point)) return fail("point: not the point given by the quadruple");
    const Int d = c.forms.rho * c.forms.rho * c.forms.kappa * qd.q[3];
    const Int cc = d / qd.q[3] * (c.forms.m * qd.x + c.forms.mu1) + 1;
    Int prod = d;
    for (auto& a : c.forms.roots) prod *= cc - a * d;
    if (prod != c.t * c.forms.rho * c.forms.rho) return fail("point: the identity t rho^2 = d prod(c - a_i d) fails");
    ok("point");

    std::vector<Int> hints = aux.t_primes;
    for (auto& l : aux.chain) hints.push_back(l.p);
    for (auto& q : qd.q) hints.push_back(q);
    Verdict v = certify_rank_one(aux.curve, c.t, c.point, hints);
    if (!v.accepted) return fail("rank: " + v.failure);
    out.selmer_dim = v.selmer_dim;
    if (c.selmer_dim != v.selmer_dim) return fail("rank: recorded Selmer dimension differs");
    // twist identity: dim sel2(E^t) = 2 + standard dimension of the full chain with q1..q4
    spec = extend(spec, {qd.q[3], pi_bits_for(c.t, {qd.q[3]})[0]});
    if (structure_group(spec).dim() + 2 != v.selmer_dim) return fail("rank: twist identity fails");
    ok("rank = 1");
    return out;
}

}  // namespace

Json Certificate::to_json() const
{
    Json chain_j = Json::array();
    for (auto& c : aux.chain) chain_j.push_back(Json::array({json_int(c.p), c.pi_bit}));
    Json aj = aux.to_json();
    Json ledger = Json{{"T", aj["T"]},
                       {"witnesses", aj["witnesses"]},
                       {"descentLength", aj["descentLength"]},
                       {"companions", aj["companions"]},
                       {"repair", aj["repair"]},
                       {"lifters", aj["lifters"]},
                       {"cutter", aj["cutter"]},
                       {"closer", aj["closer"]},
                       {"ab", aj["ab"]},
                       {"stages", aj["stages"]}};
    Json dims = Json::array();
    for (auto d : chain_dims) dims.push_back(d);
    Json qs = Json::array();
    for (auto& q : quad.q) qs.push_back(json_int(q));
    return Json{{"curve", curve_json(curve)},
                {"t0", json_int(t0)},
                {"kappa", json_int(aux.kappa)},
                {"chain", chain_j},
                {"stageLedger", ledger},
                {"zBasis", aj["zBasis"]},
                {"linearForms", forms.to_json()},
                {"quadruple", Json{{"x", json_int(quad.x)}, {"y", json_int(quad.y)}, {"q", qs}}},
                {"t", json_int(t)},
                {"chainDims", dims},
                {"point", Json::array({json_int(Int(point.x.get_num())), json_int(Int(point.x.get_den())),
                                       json_int(Int(point.y.get_num())), json_int(Int(point.y.get_den()))})},
                {"selmerDim", selmer_dim},
                {"conclusion", "rank=1"},
                {"trustBase",
                 Json{{"primalityMode", primality_mode()}, {"searchBounds", search_bounds(config)}, {"seed", config.seed}}}};
}

Certificate certificate_from_json(const Json& j)
{
    try {
        Certificate c;
        if (j.at("conclusion") != "rank=1") throw InvalidArgument("conclusion must be rank=1");
        c.curve = curve_from(j.at("curve"));
        c.t0 = int_from_json(j.at("t0"));
        const Json& tb = j.at("trustBase");
        Json bounds = tb.at("searchBounds");
        bounds["seed"] = tb.at("seed");
        c.config = PipelineConfig::from_json(bounds);
        AuxiliaryTwist& a = c.aux;
        a.curve = quadratic_twist(c.curve, c.t0);
        a.kappa = int_from_json(j.at("kappa"));
        for (auto& l : j.at("chain")) {
            if (!l.is_array() || l.size() != 2) throw InvalidArgument("chain entries are [p, piBit]");
            a.chain.push_back({int_from_json(l[0]), l[1].get<unsigned>()});
        }
        const Json& sl = j.at("stageLedger");
        a.t_primes = ints_from(sl.at("T"));
        a.witnesses = fixed_ints<6>(sl.at("witnesses"), "witnesses");
        a.descent_length = sl.at("descentLength").get<size_t>();
        a.companions = fixed_ints<6>(sl.at("companions"), "companions");
        a.repair = ints_from(sl.at("repair"));
        a.lifters = fixed_ints<3>(sl.at("lifters"), "lifters");
        a.cutter = int_from_json(sl.at("cutter"));
        a.closer = int_from_json(sl.at("closer"));
        a.ab = element_from(sl.at("ab"));
        for (auto& st : sl.at("stages")) {
            StageRecord r;
            r.name = st.at("stage").get<std::string>();
            r.from = st.at("from").get<size_t>();
            r.to = st.at("to").get<size_t>();
            r.dims = st.at("dims").get<std::vector<size_t>>();
            r.detail = st.at("detail");
            a.ledger.push_back(r);
        }
        const Json& zb = j.at("zBasis");
        if (!zb.is_array() || zb.size() != 5) throw InvalidArgument("zBasis must hold five elements");
        for (size_t i = 0; i < 5; ++i) a.z_basis[i] = element_from(zb[i]);
        const Json& lf = j.at("linearForms");
        c.forms = forms_from_parameters(a.curve, int_from_json(lf.at("rho")), int_from_json(lf.at("m")),
                                        int_from_json(lf.at("lambda")), int_from_json(lf.at("mu1")),
                                        int_from_json(lf.at("mu2")), a.kappa);
        const Json& qj = j.at("quadruple");
        c.quad.x = int_from_json(qj.at("x"));
        c.quad.y = int_from_json(qj.at("y"));
        c.quad.q = fixed_ints<4>(qj.at("q"), "quadruple q");
        c.t = int_from_json(j.at("t"));
        auto dims = j.at("chainDims").get<std::vector<size_t>>();
        if (dims.size() != 4) throw InvalidArgument("chainDims must hold four entries");
        std::copy(dims.begin(), dims.end(), c.chain_dims.begin());
        auto pt = fixed_ints<4>(j.at("point"), "point");
        if (pt[1] <= 0 || pt[3] <= 0) throw InvalidArgument("point denominators must be positive");
        Rat x(pt[0], pt[1]), y(pt[2], pt[3]);
        x.canonicalize();
        y.canonicalize();
        if (x.get_num() != pt[0] || x.get_den() != pt[1] || y.get_num() != pt[2] || y.get_den() != pt[3])
            throw InvalidArgument("point coordinates are not reduced");
        c.point = Point::affine(x, y);
        c.selmer_dim = j.at("selmerDim").get<size_t>();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument(std::string("malformed certificate: ") + e.what());
    }
}

namespace {

struct Replay {
    GenericConstruction construction;
    PretwistResult pretwist;
    AuxiliaryTwist aux;
    LinearFormSystem forms;
};

Json construction_json(const GenericConstruction& g)
{
    const auto& k = g.conic;
    return Json{{"seed", g.seed},
                {"primes", ints_json({g.primes.begin(), g.primes.end()})},
                {"conic", Json{{"a", json_int(k.a)}, {"b", json_int(k.b)}, {"c", json_int(k.c)},
                               {"X", json_int(k.X)}, {"Y", json_int(k.Y)}, {"Z", json_int(k.Z)}}},
                {"curve", curve_json(g.curve)}};
}

Json pretwist_json(const PretwistResult& p)
{
    return Json{{"t0", json_int(p.t0)},
                {"place", json_int(p.place)},
                {"curve", curve_json(p.curve)},
                {"dimBefore", p.dim_before},
                {"dimAfter", p.dim_after}};
}

}  // namespace

Verdict verify_certificate(const Json& j, bool replay)
{
    Verdict v;
    Certificate c;
    try {
        c = certificate_from_json(j);
    } catch (const InvalidArgument& e) {
        v.failure = std::string("schema: ") + e.what();
        return v;
    }
    v.passed.push_back("schema");
    if (j.at("trustBase").at("primalityMode") != primality_mode()) {
        v.failure = "trust base: primality mode differs from this build";
        return v;
    }
    GenericConstruction g = construct_3generic(c.config.seed, c.config.construct_bound);
    if (!(g.curve == c.curve)) {
        v.failure = "construction: the seed and bound do not produce this curve";
        return v;
    }
    v.passed.push_back("construction");
    Parts p;
    try {
        p = check_parts(c);
    } catch (const InvalidArgument& e) {
        p.failure = e.what();
    }
    v.passed.insert(v.passed.end(), p.passed.begin(), p.passed.end());
    v.selmer_dim = p.selmer_dim;
    if (!p.failure.empty()) {
        v.failure = p.failure;
        return v;
    }
    if (replay) {
        PretwistResult pt = pretwist_odd_parity(g.curve, 3, c.config);
        AuxiliaryTwist aux = build_auxiliary_twist(pt.curve, pt.witness, c.config);
        LinearFormSystem forms = build_linear_forms(aux, c.config);
        Certificate again = c;
        again.t0 = pt.t0;
        again.aux = aux;
        again.forms = forms;
        Json a = again.to_json(), b = c.to_json();
        for (auto& [key, val] : b.items())
            if (a[key] != val) {
                v.failure = "replay: field " + key + " differs from the rebuilt value";
                return v;
            }
        v.passed.push_back("replay");
    }
    if (c.to_json() != j) {
        v.failure = "schema: certificate carries fields outside the canonical form";
        return v;
    }
    v.accepted = true;
    return v;
}

Certificate assemble_suitable_twist(const Curve& base, const Int& t0, const AuxiliaryTwist& aux,
                                    const LinearFormSystem& forms, const Quadruple& quad, const PipelineConfig& cfg)
{
    Certificate c;
    c.curve = base;
    c.t0 = t0;
    c.aux = aux;
    c.forms = forms;
    c.quad = quad;
    c.config = cfg;
    c.t = aux.kappa * quad.q[0] * quad.q[1] * quad.q[2] * quad.q[3];
    StructureSpec spec = aux.spec();
    c.chain_dims[0] = structure_group(spec).dim();
    const auto bits = pi_bits_for(c.t, {quad.q[0], quad.q[1], quad.q[2]});
    for (int j = 0; j < 3; ++j) {
        spec = extend(spec, {quad.q[j], bits[j]});
        c.chain_dims[j + 1] = structure_group(spec).dim();
    }
    c.point = twist_point(forms, quad, c.t);
    c.selmer_dim = 3;
    Parts p = check_parts(c);
    if (!p.failure.empty()) throw ConsistencyViolation("suitable twist refused: " + p.failure);
    return c;
}

HuntReport hunt_rank_one(const PipelineConfig& cfg)
{
    HuntReport rep;
    rep.artifacts = Json::object();
    rep.artifacts["config"] = cfg.to_json();
    std::string stage = "construction";
    try {
        GenericConstruction g = construct_3generic(cfg.seed, cfg.construct_bound);
        rep.artifacts["construction"] = construction_json(g);
        stage = "pretwist";
        PretwistResult pt = pretwist_odd_parity(g.curve, 3, cfg);
        rep.artifacts["pretwist"] = pretwist_json(pt);
        stage = "auxiliary";
        AuxiliaryTwist aux = build_auxiliary_twist(pt.curve, pt.witness, cfg);
        rep.artifacts["auxiliary"] = aux.to_json();
        stage = "forms";
        LinearFormSystem forms = build_linear_forms(aux, cfg);
        Json fj = forms.to_json();
        Json digits = Json::array();
        for (int i = 0; i < 4; ++i) digits.push_back(mpz_sizeinbase(forms.coeff[i][2].get_mpz_t(), 10));
        fj["constantDigits"] = digits;
        rep.artifacts["forms"] = fj;
        stage = "quadruple";
        std::set<Int> excl(aux.t_primes.begin(), aux.t_primes.end());
        for (auto& l : aux.chain) excl.insert(l.p);
        QuadrupleStats st;
        auto stats_json = [&] {
            return Json{{"points", st.points}, {"positive", st.positive}, {"sieved", st.sieved},
                        {"primeTests", st.prime_tests}, {"radius", st.radius}};
        };
        Quadruple qd;
        try {
            qd = find_prime_quadruple(forms, cfg.quadruple_box, excl, cfg, &st);
        } catch (const SearchFailure&) {
            rep.artifacts["quadrupleSearch"] = stats_json();
            throw;
        }
        rep.artifacts["quadrupleSearch"] = stats_json();
        stage = "assemble";
        rep.certificate = assemble_suitable_twist(g.curve, pt.t0, aux, forms, qd, cfg);
        rep.complete = true;
    } catch (const SearchFailure& e) {
        rep.failed_stage = stage;
        rep.failure = e.what();
    }
    return rep;
}

}  // namespace sf
