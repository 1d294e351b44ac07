#include "selmerforge/genericity.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <optional>
#include <set>

namespace sf {

const char* difference_name(Difference d)
{
    switch (d) {
    case Difference::Alpha: return "a1-a2";
    case Difference::Beta: return "a1-a3";
    case Difference::Gamma: return "a2-a3";
    }
    return "?";
}

namespace {

const Int& diff_of(const Curve& e, Difference d)
{
    return d == Difference::Alpha ? e.alpha : (d == Difference::Beta ? e.beta : e.gamma);
}

// a_k - a_i for the root a_k outside the pair.
Int complement_of(const Curve& e, Difference d)
{
    switch (d) {
    case Difference::Alpha: return e.a3 - e.a1;
    case Difference::Beta: return e.a2 - e.a1;
    case Difference::Gamma: return e.a1 - e.a2;
    }
    return 0;
}

}  // namespace

GenericPrimeCheck check_generic_prime(const Curve& e, Difference which, const Int& p)
{
    GenericPrimeCheck c;
    c.p = p;
    if (p < 2 || !is_probable_prime(p)) return c;
    c.one_mod_8 = mpz_fdiv_ui(p.get_mpz_t(), 8) == 1;
    c.above_5 = p > 5;
    const Int& d = diff_of(e, which);
    c.odd_multiplicity = d != 0 && valuation(d, p) % 2 == 1;
    Int comp = complement_of(e, which);
    c.complement_square = p != 2 && comp % p != 0 && jacobi_symbol(comp, p) == 1;
    return c;
}

GenericityWitness is_n_generic(const Curve& e, unsigned n, const FactorOptions& opt)
{
    GenericityWitness w;
    w.n = n;
    w.generic = true;
    for (int k = 0; k < 3; ++k) {
        auto which = Difference(k);
        for (auto& p : prime_divisors(diff_of(e, which), opt))
            if (check_generic_prime(e, which, p).ok()) w.primes[k].push_back(p);
        if (w.primes[k].size() < n && w.generic) {
            w.generic = false;
            w.failure = std::string(difference_name(which)) + " has " + std::to_string(w.primes[k].size()) +
                        " qualifying primes, " + std::to_string(n) + " needed";
        }
    }
    return w;
}

bool verify_witness(const Curve& e, const GenericityWitness& w)
{
    for (int k = 0; k < 3; ++k) {
        if (w.primes[k].size() < w.n) return false;
        std::vector<Int> seen;
        for (auto& p : w.primes[k]) {
            if (std::find(seen.begin(), seen.end(), p) != seen.end()) return false;
            seen.push_back(p);
            if (!check_generic_prime(e, Difference(k), p).ok()) return false;
        }
    }
    return true;
}

bool check_conic_solution(const ConicSolution& s)
{
    if (s.X == 0 || s.Y == 0 || s.Z == 0) return false;
    if (s.a * s.X * s.X + s.b * s.Y * s.Y != s.c * s.Z * s.Z) return false;
    Int g = gcd(gcd(s.X, s.Y), s.Z);
    if (abs(g) != 1) return false;
    return gcd(s.Y * s.Z, s.a) == 1 && gcd(s.X * s.Z, s.b) == 1 && gcd(s.X * s.Y, s.c) == 1;
}

namespace {

struct Triple {
    Int x, y, z;
};

bool is_square(const Int& n, Int* root = nullptr)
{
    if (n < 0) return false;
    if (!mpz_perfect_square_p(n.get_mpz_t())) return false;
    if (root) mpz_sqrt(root->get_mpz_t(), n.get_mpz_t());
    return true;
}

// x^2 = A y^2 + B z^2, A and B squarefree and nonzero. Lagrange descent on |B|.
Triple legendre_descent(const Int& A, const Int& B, const FactorOptions& opt, int depth = 0)
{
    if (depth > 200) throw SearchFailure("conic: descent did not terminate");
    Int r;
    if (is_square(A, &r)) return {r, 1, 0};
    if (is_square(B, &r)) return {r, 0, 1};
    if (abs(A) > abs(B)) {
        Triple t = legendre_descent(B, A, opt, depth + 1);
        return {t.x, t.z, t.y};
    }
    Int mB = abs(B);
    // t^2 = A mod |B|, lifted to the symmetric range
    Int t;
    try {
        t = sqrt_mod_squarefree(A, factor(mB, opt));
    } catch (const InvalidArgument&) {
        throw NotLocallySolvable("", "conic: " + to_string(A) + " is not a square modulo " + to_string(mB));
    }
    if (2 * t > mB) t -= mB;
    Int q = (t * t - A) / B;
    if (q == 0) return {t, 1, 0};
    Int core = squarefree_part(q, opt);
    Int rr;
    mpz_sqrt(rr.get_mpz_t(), Int(q / core).get_mpz_t());
    Triple s = legendre_descent(A, core, opt, depth + 1);
    return {s.x * t + A * s.y, s.x + t * s.y, core * rr * s.z};
}

void make_primitive(ConicSolution& s)
{
    Int g = gcd(gcd(s.X, s.Y), s.Z);
    if (g != 0 && g != 1) {
        s.X /= g;
        s.Y /= g;
        s.Z /= g;
    }
    s.X = abs(s.X);
    s.Y = abs(s.Y);
    s.Z = abs(s.Z);
}

std::string place_of_failure(const Int& a, const Int& b, const Int& c, const FactorOptions& opt)
{
    // Legendre's criterion for a X^2 + b Y^2 - c Z^2.
    for (auto& p : prime_divisors(a, opt))
        if (p != 2 && jacobi_symbol(b * c, p) != 1) return to_string(p);
    for (auto& p : prime_divisors(b, opt))
        if (p != 2 && jacobi_symbol(a * c, p) != 1) return to_string(p);
    for (auto& p : prime_divisors(c, opt))
        if (p != 2 && jacobi_symbol(-a * b, p) != 1) return to_string(p);
    // with all odd conditions met, reciprocity forces solvability at 2
    return "";
}


using Vec3 = std::array<Int, 3>;

// LLL (delta = 3/4) for a basis of Z^3 under the inner product a x x' + b y y' + c z z'.
void lll3(std::array<Vec3, 3>& B, const std::array<Int, 3>& w)
{
    auto gso = [&](std::array<std::array<Rat, 3>, 3>& mu, std::array<Rat, 3>& bn) {
        std::array<std::array<Rat, 3>, 3> bs;
        for (int i = 0; i < 3; ++i) {
            for (int k = 0; k < 3; ++k) bs[i][k] = Rat(B[i][k]);
            for (int j = 0; j < i; ++j) {
                Rat num = 0;
                for (int k = 0; k < 3; ++k) num += Rat(w[k]) * Rat(B[i][k]) * bs[j][k];
                mu[i][j] = num / bn[j];
                for (int k = 0; k < 3; ++k) bs[i][k] -= mu[i][j] * bs[j][k];
            }
            bn[i] = 0;
            for (int k = 0; k < 3; ++k) bn[i] += Rat(w[k]) * bs[i][k] * bs[i][k];
        }
    };
    int k = 1;
    for (int guard = 0; k < 3 && guard < 100000; ++guard) {
        std::array<std::array<Rat, 3>, 3> mu{};
        std::array<Rat, 3> bn{};
        gso(mu, bn);
        for (int j = k - 1; j >= 0; --j) {
            gso(mu, bn);
            Rat m = mu[k][j];
            if (abs(m) > Rat(1, 2)) {
                // nearest integer
                Int r;
                Rat shifted = m + Rat(1, 2);
                mpz_fdiv_q(r.get_mpz_t(), shifted.get_num_mpz_t(), shifted.get_den_mpz_t());
                for (int t = 0; t < 3; ++t) B[k][t] -= r * B[j][t];
            }
        }
        gso(mu, bn);
        if (bn[k] >= (Rat(3, 4) - mu[k][k - 1] * mu[k][k - 1]) * bn[k - 1]) {
            ++k;
        } else {
            std::swap(B[k], B[k - 1]);
            k = std::max(k - 1, 1);
        }
    }
}

Int sqrt_mod_of(const Int& value, const Int& m, const FactorOptions& opt)
{
    if (m == 1) return 0;
    Int v = value % m;
    if (v < 0) v += m;
    return sqrt_mod_squarefree(v, factor(m, opt));
}

Int inv_mod(const Int& x, const Int& m)
{
    if (m == 1) return 0;
    Int r, xm = x % m;
    if (xm < 0) xm += m;
    if (!mpz_invert(r.get_mpz_t(), xm.get_mpz_t(), m.get_mpz_t())) throw ConsistencyViolation("conic: non-invertible residue");
    return r;
}

// Short vectors of the lattice where a X^2 + b Y^2 - c Z^2 vanishes modulo abc.
std::optional<ConicSolution> lattice_solve(const Int& a, const Int& b, const Int& c, const FactorOptions& opt)
{
    Int ra = sqrt_mod_of(c * inv_mod(b, a), a, opt);   // Y = ra Z mod a
    Int rb = sqrt_mod_of(c * inv_mod(a, b), b, opt);   // X = rb Z mod b
    Int rc = sqrt_mod_of(-b * inv_mod(a, c), c, opt);  // X = rc Y mod c
    // v1 = (x1, y1, 1) with y1 = ra mod a, y1 = 0 mod c; v2 = (x2, a, 0); v3 = (bc, 0, 0)
    Int y1 = crt({{ra, a}, {0, c}}).first;
    Int x1 = crt({{rb, b}, {rc * y1, c}}).first;
    Int x2 = crt({{0, b}, {rc * a, c}}).first;
    std::array<Vec3, 3> B = {Vec3{x1, y1, 1}, Vec3{x2, a, 0}, Vec3{b * c, 0, 0}};
    lll3(B, {a, b, c});
    std::optional<ConicSolution> best;
    for (int i = -2; i <= 2; ++i)
        for (int j = -2; j <= 2; ++j)
            for (int k = -2; k <= 2; ++k) {
                Vec3 v;
                for (int t = 0; t < 3; ++t) v[t] = i * B[0][t] + j * B[1][t] + k * B[2][t];
                if (a * v[0] * v[0] + b * v[1] * v[1] != c * v[2] * v[2]) continue;
                if (v[0] == 0 && v[1] == 0 && v[2] == 0) continue;
                ConicSolution s{a, b, c, v[0], v[1], v[2]};
                make_primitive(s);
                if (!best || abs(s.Z) < abs(best->Z)) best = s;
            }
    return best;
}

}  // namespace

ConicSolution conic_solve(const Int& a, const Int& b, const Int& c, const FactorOptions& opt)
{
    if (a <= 0 || b <= 0 || c <= 0) throw InvalidArgument("conic: coefficients must be positive");
    if (squarefree_part(a, opt) != a || squarefree_part(b, opt) != b || squarefree_part(c, opt) != c)
        throw InvalidArgument("conic: coefficients must be squarefree");
    if (gcd(a, b) != 1 || gcd(a, c) != 1 || gcd(b, c) != 1) throw InvalidArgument("conic: coefficients must be pairwise coprime");

    std::string bad = place_of_failure(a, b, c, opt);
    if (!bad.empty()) throw NotLocallySolvable(bad, "conic " + to_string(a) + "X^2+" + to_string(b) + "Y^2=" + to_string(c) + "Z^2 has no point over Q_" + bad);

    ConicSolution s{a, b, c, 0, 0, 0};
    // tiny coefficients: square shells in (X, Y)
    if (a * b * c <= 1000) {
        for (long m = 1; m <= 200; ++m)
            for (long x = 1; x <= m; ++x)
                for (long y = 1; y <= m; ++y) {
                    if (x != m && y != m) continue;
                    Int rhs = a * x * x + b * y * y, z2, z;
                    if (rhs % c != 0) continue;
                    z2 = rhs / c;
                    if (!is_square(z2, &z)) continue;
                    ConicSolution cand{a, b, c, x, y, z};
                    make_primitive(cand);
                    if (check_conic_solution(cand)) return cand;
                }
    }
    if (auto l = lattice_solve(a, b, c, opt)) {
        s = *l;
    } else {
        // c w^2 = a y^2 + b z^2  <=>  (c w)^2 = (ac) y^2 + (bc) z^2
        Triple t = legendre_descent(a * c, b * c, opt);
        if (t.x % c != 0) throw ConsistencyViolation("conic: descent output not divisible by c");
        s.X = t.y;
        s.Y = t.z;
        s.Z = t.x / c;
        make_primitive(s);
    }
    // move off the coordinate lines by reflecting through a few directions
    auto Q = [&](const Int& x, const Int& y, const Int& z) { return a * x * x + b * y * y - c * z * z; };
    auto Bf = [&](const Int& x1, const Int& y1, const Int& z1, const Int& x2, const Int& y2, const Int& z2) {
        return a * x1 * x2 + b * y1 * y2 - c * z1 * z2;
    };
    for (long k = 1; k < 64 && !check_conic_solution(s); ++k) {
        Int wx = 1, wy = k, wz = k % 3;
        Int qw = Q(wx, wy, wz), bw = Bf(s.X, s.Y, s.Z, wx, wy, wz);
        ConicSolution n{a, b, c, qw * s.X - 2 * bw * wx, qw * s.Y - 2 * bw * wy, qw * s.Z - 2 * bw * wz};
        make_primitive(n);
        if (n.X != 0 || n.Y != 0 || n.Z != 0) {
            if (check_conic_solution(n)) s = n;
        }
    }
    if (!check_conic_solution(s))
        throw SearchFailure("conic: no solution with nonzero coordinates and coprimality found");
    return s;
}

GenericConstruction construct_3generic(uint64_t seed, const Int& prime_bound)
{
    GenericConstruction g;
    g.seed = seed;
    std::set<Int> used;
    // the seed picks the first prime: the seed-th prime = 1 mod 8 above 5
    SymbolConstraint first;
    first.residue = 1;
    first.modulus = 8;
    std::set<Int> skip;
    for (uint64_t i = 0; i <= seed; ++i) {
        Int p = find_prime(first, skip, prime_bound);
        if (p == 0) throw SearchFailure("construct: no prime = 1 mod 8 below the bound for seed " + std::to_string(seed));
        skip.insert(p);
        g.primes[0] = p;
    }
    used.insert(g.primes[0]);
    for (int i = 1; i < 9; ++i) {
        SymbolConstraint c;
        c.residue = 1;
        c.modulus = 8;
        for (int j = 0; j < i; ++j) c.demands.push_back({g.primes[j], 1});
        Int p = find_prime(c, used, prime_bound);
        if (p == 0) throw SearchFailure("construct: prime " + std::to_string(i + 1) + " of 9 not found below " + to_string(prime_bound) + "; constraint " + c.describe());
        g.primes[i] = p;
        used.insert(p);
    }
    Int a = g.primes[0] * g.primes[1] * g.primes[2];
    Int b = g.primes[3] * g.primes[4] * g.primes[5];
    Int c = g.primes[6] * g.primes[7] * g.primes[8];
    FactorOptions fo;
    fo.hints.assign(g.primes.begin(), g.primes.end());
    g.conic = conic_solve(a, b, c, fo);
    const auto& s = g.conic;
    g.curve = new_curve(0, -a * s.X * s.X, -c * s.Z * s.Z);
    FactorOptions wo = fo;
    for (const Int* v : {&s.X, &s.Y, &s.Z})
        for (auto& p : prime_divisors(*v)) wo.hints.push_back(p);
    g.witness = is_n_generic(g.curve, 3, wo);
    if (!g.witness.generic || !verify_witness(g.curve, g.witness))
        throw ConsistencyViolation("construct: curve " + g.curve.str() + " fails the 3-generic check: " + g.witness.failure);
    return g;
}

}  // namespace sf
