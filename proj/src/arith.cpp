#include "selmerforge/arith.hpp"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace sf {

std::string to_string(const Int& n) { return n.get_str(); }

std::string to_string(const Rat& x) { return x.get_str(); }

Int parse_int(const std::string& s)
{
    Int r;
    std::string t = s;
    if (!t.empty() && t[0] == '+') t = t.substr(1);
    if (t.empty() || r.set_str(t, 10) != 0) throw InvalidArgument("not an integer: '" + s + "'");
    return r;
}

bool fits_u64(const Int& n) { return n >= 0 && mpz_sizeinbase(n.get_mpz_t(), 2) <= 64; }

uint64_t to_u64(const Int& n)
{
    if (!fits_u64(n)) throw InvalidArgument("value does not fit in 64 bits: " + to_string(n));
    uint64_t v = 0;
    mpz_export(&v, nullptr, -1, sizeof(v), 0, 0, n.get_mpz_t());
    return v;
}

Int from_u64(uint64_t v)
{
    Int r;
    mpz_import(r.get_mpz_t(), 1, -1, sizeof(v), 0, 0, &v);
    return r;
}

const std::vector<uint32_t>& small_primes(uint32_t limit)
{
    static std::mutex mu;
    static std::vector<uint32_t> cache;
    static uint32_t cached_limit = 0;
    std::lock_guard<std::mutex> lock(mu);
    if (limit > cached_limit) {
        std::vector<bool> comp(limit + 1, false);
        cache.clear();
        for (uint64_t i = 2; i <= limit; ++i) {
            if (comp[i]) continue;
            cache.push_back(static_cast<uint32_t>(i));
            for (uint64_t j = i * i; j <= limit; j += i) comp[j] = true;
        }
        cached_limit = limit;
    }
    // Callers only iterate while p <= their own limit, so a longer list is harmless.
    return cache;
}

int jacobi_u64(uint64_t a, uint64_t n)
{
    if (n == 0 || (n & 1) == 0) throw InvalidArgument("jacobi: modulus must be odd and positive");
    a %= n;
    int t = 1;
    while (a != 0) {
        while ((a & 1) == 0) {
            a >>= 1;
            uint64_t r = n & 7;
            if (r == 3 || r == 5) t = -t;
        }
        std::swap(a, n);
        if ((a & 3) == 3 && (n & 3) == 3) t = -t;
        a %= n;
    }
    return n == 1 ? t : 0;
}

int jacobi_symbol(const Int& a, const Int& n)
{
    if (n <= 0 || mpz_even_p(n.get_mpz_t())) throw InvalidArgument("jacobi: modulus must be odd and positive");
    if (fits_u64(n)) {
        Int r = a % n;
        if (r < 0) r += n;
        return jacobi_u64(to_u64(r), to_u64(n));
    }
    return mpz_jacobi(a.get_mpz_t(), n.get_mpz_t());
}

uint64_t mulmod_u64(uint64_t a, uint64_t b, uint64_t m)
{
    return static_cast<uint64_t>((static_cast<unsigned __int128>(a) * b) % m);
}

uint64_t powmod_u64(uint64_t a, uint64_t e, uint64_t m)
{
    uint64_t r = 1 % m;
    a %= m;
    while (e) {
        if (e & 1) r = mulmod_u64(r, a, m);
        a = mulmod_u64(a, a, m);
        e >>= 1;
    }
    return r;
}

static bool mr_round_u64(uint64_t n, uint64_t a, uint64_t d, unsigned s)
{
    a %= n;
    if (a == 0) return true;
    uint64_t x = powmod_u64(a, d, n);
    if (x == 1 || x == n - 1) return true;
    for (unsigned i = 1; i < s; ++i) {
        x = mulmod_u64(x, x, n);
        if (x == n - 1) return true;
    }
    return false;
}

bool is_prime_u64(uint64_t n)
{
    if (n < 2) return false;
    static const uint32_t tiny[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    for (uint32_t p : tiny) {
        if (n == p) return true;
        if (n % p == 0) return false;
    }
    if (n < 41 * 41) return true;
    uint64_t d = n - 1;
    unsigned s = 0;
    while ((d & 1) == 0) {
        d >>= 1;
        ++s;
    }
    // Witness set that is exact for every n < 2^64.
    static const uint64_t witnesses[] = {2, 325, 9375, 28178, 450775, 9780504, 1795265022};
    for (uint64_t a : witnesses)
        if (!mr_round_u64(n, a, d, s)) return false;
    return true;
}

const char* primality_mode() { return "deterministic-mr-64bit;mr-64-rounds-fixed-bases"; }

bool is_probable_prime(const Int& n)
{
    if (n < 2) return false;
    if (fits_u64(n)) return is_prime_u64(to_u64(n));
    for (uint32_t p : small_primes(1000)) {
        if (p > 1000) break;
        if (mpz_divisible_ui_p(n.get_mpz_t(), p)) return false;
    }
    Int nm1 = n - 1, d = nm1;
    unsigned long s = mpz_scan1(d.get_mpz_t(), 0);
    mpz_tdiv_q_2exp(d.get_mpz_t(), d.get_mpz_t(), s);
    auto round = [&](const Int& a) {
        Int x;
        mpz_powm(x.get_mpz_t(), a.get_mpz_t(), d.get_mpz_t(), n.get_mpz_t());
        if (x == 1 || x == nm1) return true;
        for (unsigned long i = 1; i < s; ++i) {
            mpz_powm_ui(x.get_mpz_t(), x.get_mpz_t(), 2, n.get_mpz_t());
            if (x == nm1) return true;
        }
        return false;
    };
    if (!round(Int(2))) return false;
    // Bases derived from the low word of n, so the test is reproducible run to run.
    std::mt19937_64 gen(0x5e1f0f9eULL ^ mpz_getlimbn(n.get_mpz_t(), 0));
    Int range = n - 4, a;
    for (int i = 1; i < 64; ++i) {
        Int r = from_u64(gen()) * from_u64(gen()) * from_u64(gen());
        a = r % range + 2;
        if (!round(a)) return false;
    }
    return true;
}

unsigned valuation(const Int& n, const Int& p, Int* unit)
{
    if (n == 0) throw InvalidArgument("valuation of zero");
    Int u;
    unsigned v = static_cast<unsigned>(mpz_remove(u.get_mpz_t(), n.get_mpz_t(), p.get_mpz_t()));
    if (unit) *unit = u;
    return v;
}

Int Factorization::value() const
{
    Int r = sign;
    for (auto& [p, e] : factors) {
        Int pe;
        mpz_pow_ui(pe.get_mpz_t(), p.get_mpz_t(), e);
        r *= pe;
    }
    return r;
}

// Brent's variant of Pollard rho on a composite n; returns a nontrivial factor or 0.
static Int rho_brent(const Int& n, unsigned long c, uint64_t max_iter)
{
    Int y = 2, x, ys, q = 1, g = 1, t;
    uint64_t r = 1, iters = 0;
    const uint64_t m = 128;
    auto f = [&](Int& v) {
        v = v * v + c;
        mpz_mod(v.get_mpz_t(), v.get_mpz_t(), n.get_mpz_t());
    };
    do {
        x = y;
        for (uint64_t i = 0; i < r; ++i) f(y);
        uint64_t k = 0;
        do {
            ys = y;
            for (uint64_t i = 0; i < std::min(m, r - k); ++i) {
                f(y);
                t = abs(x - y);
                q = q * t % n;
            }
            g = gcd(q, n);
            k += m;
            iters += m;
        } while (k < r && g == 1 && iters < max_iter);
        r *= 2;
    } while (g == 1 && iters < max_iter);
    if (g == n) {
        do {
            f(ys);
            g = gcd(abs(x - ys), n);
        } while (g == 1);
    }
    if (g == 1 || g == n) return 0;
    return g;
}

static void split_into(const Int& n, const FactorOptions& opt, std::map<Int, unsigned>& out)
{
    if (n == 1) return;
    if (is_probable_prime(n)) {
        out[n] += 1;
        return;
    }
    for (unsigned attempt = 0; attempt < opt.rho_attempts; ++attempt) {
        Int d = rho_brent(n, 1 + attempt, opt.rho_iterations);
        if (d != 0) {
            split_into(d, opt, out);
            split_into(n / d, opt, out);
            return;
        }
    }
    throw FactorizationFailure("factor: composite cofactor " + to_string(n) + " survived the rho effort cap");
}

Factorization factor(const Int& n, const FactorOptions& opt)
{
    if (n == 0) throw InvalidArgument("factor: zero has no factorization");
    Factorization f;
    f.sign = n < 0 ? -1 : 1;
    Int m = abs(n);
    std::map<Int, unsigned> found;
    for (const Int& h : opt.hints) {
        if (h < 2 || !mpz_divisible_p(m.get_mpz_t(), h.get_mpz_t())) continue;
        if (!is_probable_prime(h)) continue;
        found[h] += valuation(m, h, &m);
    }
    const uint32_t trial_limit = 1000000;
    for (uint32_t p : small_primes(trial_limit)) {
        if (p > trial_limit) break;
        if (Int(p) * p > m) break;
        if (mpz_divisible_ui_p(m.get_mpz_t(), p)) {
            Int pp = p;
            found[pp] += valuation(m, pp, &m);
        }
    }
    if (m > 1) split_into(m, opt, found);
    for (auto& [p, e] : found) f.factors.emplace_back(p, e);
    return f;
}

std::vector<Int> prime_divisors(const Int& n, const FactorOptions& opt)
{
    std::vector<Int> r;
    for (auto& [p, e] : factor(n, opt).factors) r.push_back(p);
    return r;
}

Int squarefree_part(const Int& n, const FactorOptions& opt)
{
    Factorization f = factor(n, opt);
    Int r = f.sign;
    for (auto& [p, e] : f.factors)
        if (e & 1) r *= p;
    return r;
}

Place Place::finite(const Int& p)
{
    if (!is_probable_prime(p)) throw InvalidArgument("place: " + to_string(p) + " is not prime");
    return Place{p};
}

std::string Place::str() const { return is_infinite() ? std::string("inf") : to_string(p); }

unsigned LocalClass::unit_residue_mod8() const
{
    if (!place.is_two()) throw InvalidArgument("unit residue mod 8 only exists at 2");
    unsigned eps = (bits >> 1) & 1, omega = (bits >> 2) & 1;
    static const unsigned table[2][2] = {{1, 5}, {7, 3}};
    return table[eps][omega];
}

std::string LocalClass::str() const
{
    std::ostringstream os;
    os << "[" << place.str() << ":" << to_string(local_class_representative(*this)) << "]";
    return os.str();
}

LocalClass square_class_at(const Int& x, const Place& v)
{
    if (x == 0) throw InvalidArgument("square class of zero");
    LocalClass c{v, 0};
    if (v.is_infinite()) {
        c.bits = x < 0 ? 1u : 0u;
        return c;
    }
    Int u;
    unsigned val = valuation(x, v.p, &u);
    if (v.is_two()) {
        Int r = u % 8;
        if (r < 0) r += 8;
        unsigned res = static_cast<unsigned>(r.get_ui());
        unsigned eps = (res % 4 == 3) ? 1u : 0u;
        unsigned omega = (res == 3 || res == 5) ? 1u : 0u;
        c.bits = (val & 1u) | (eps << 1) | (omega << 2);
        return c;
    }
    c.bits = (val & 1u) | (jacobi_symbol(u, v.p) == -1 ? 2u : 0u);
    return c;
}

LocalClass square_class_at(const Rat& x, const Place& v)
{
    return square_class_at(Int(x.get_num() * x.get_den()), v);
}

LocalClass local_class_from(const Place& v, bool odd_valuation, unsigned unit_code)
{
    if (v.is_infinite()) return LocalClass{v, odd_valuation ? 1u : 0u};
    if (v.is_two()) {
        unsigned r = unit_code % 8;
        if (r % 2 == 0) throw InvalidArgument("unit residue mod 8 must be odd");
        return square_class_at(Int(odd_valuation ? 2 * r : r), v);
    }
    return LocalClass{v, (odd_valuation ? 1u : 0u) | (unit_code ? 2u : 0u)};
}

Int local_class_representative(const LocalClass& c)
{
    const Place& v = c.place;
    if (v.is_infinite()) return c.bits & 1 ? -1 : 1;
    Int r = 1;
    if (c.bits & 1) r = v.p;
    if (v.is_two()) return r * c.unit_residue_mod8();
    if (c.bits & 2) r *= smallest_nonresidue(v.p);
    return r;
}

int hilbert_symbol(const LocalClass& a, const LocalClass& b)
{
    if (a.place != b.place) throw InvalidArgument("hilbert symbol: classes live at different places");
    const Place& v = a.place;
    if (v.is_infinite()) return (a.bits & 1) && (b.bits & 1) ? -1 : 1;
    unsigned al = a.bits & 1, be = b.bits & 1;
    unsigned e;
    if (v.is_two()) {
        unsigned eu = (a.bits >> 1) & 1, wu = (a.bits >> 2) & 1;
        unsigned ev = (b.bits >> 1) & 1, wv = (b.bits >> 2) & 1;
        e = (eu & ev) ^ (al & wv) ^ (be & wu);
    } else {
        unsigned p_mod4_is3 = mpz_fdiv_ui(v.p.get_mpz_t(), 4) == 3 ? 1u : 0u;
        unsigned nu = (a.bits >> 1) & 1, nv = (b.bits >> 1) & 1;
        e = (al & be & p_mod4_is3) ^ (be & nu) ^ (al & nv);
    }
    return e ? -1 : 1;
}

int hilbert_symbol(const Rat& a, const Rat& b, const Place& v)
{
    return hilbert_symbol(square_class_at(a, v), square_class_at(b, v));
}

Int smallest_nonresidue(const Int& p)
{
    if (p < 3 || mpz_even_p(p.get_mpz_t())) throw InvalidArgument("smallest_nonresidue: p must be an odd prime");
    for (Int n = 2;; ++n)
        if (jacobi_symbol(n, p) == -1) return n;
}

Int sqrt_mod_prime(const Int& a_in, const Int& p)
{
    Int a = a_in % p;
    if (a < 0) a += p;
    if (a == 0) return 0;
    if (p == 2) return a;
    if (jacobi_symbol(a, p) != 1) throw InvalidArgument("sqrt_mod_prime: not a square");
    Int r;
    if (mpz_fdiv_ui(p.get_mpz_t(), 4) == 3) {
        Int e = (p + 1) / 4;
        mpz_powm(r.get_mpz_t(), a.get_mpz_t(), e.get_mpz_t(), p.get_mpz_t());
    } else {
        Int q = p - 1;
        unsigned long s = mpz_scan1(q.get_mpz_t(), 0);
        mpz_tdiv_q_2exp(q.get_mpz_t(), q.get_mpz_t(), s);
        Int z = smallest_nonresidue(p), c, t, b, e;
        mpz_powm(c.get_mpz_t(), z.get_mpz_t(), q.get_mpz_t(), p.get_mpz_t());
        e = (q + 1) / 2;
        mpz_powm(r.get_mpz_t(), a.get_mpz_t(), e.get_mpz_t(), p.get_mpz_t());
        mpz_powm(t.get_mpz_t(), a.get_mpz_t(), q.get_mpz_t(), p.get_mpz_t());
        unsigned long m = s;
        while (t != 1) {
            unsigned long i = 0;
            Int tt = t;
            while (tt != 1) {
                tt = tt * tt % p;
                ++i;
            }
            b = c;
            for (unsigned long j = 0; j + 1 < m - i; ++j) b = b * b % p;
            r = r * b % p;
            c = b * b % p;
            t = t * c % p;
            m = i;
        }
    }
    if (r > p - r) r = p - r;
    return r;
}

Int sqrt_mod_squarefree(const Int& a, const Factorization& n)
{
    std::vector<std::pair<Int, Int>> parts;
    for (auto& [p, e] : n.factors) {
        if (e != 1) throw InvalidArgument("sqrt_mod_squarefree: modulus not squarefree");
        parts.emplace_back(sqrt_mod_prime(a, p), p);
    }
    return crt(parts).first;
}

std::pair<Int, Int> crt(const std::vector<std::pair<Int, Int>>& residues)
{
    Int x = 0, M = 1;
    for (auto& [r_in, m] : residues) {
        if (m < 1) throw InvalidArgument("crt: moduli must be positive");
        Int r = r_in % m;
        if (r < 0) r += m;
        Int g = gcd(M, m);
        Int diff = r - x;
        if (diff % g != 0) throw InvalidArgument("crt: inconsistent residues for non-coprime moduli");
        Int mg = m / g, inv;
        Int Mg = M / g % mg;
        if (mg == 1) {
            inv = 0;
        } else if (mpz_invert(inv.get_mpz_t(), Mg.get_mpz_t(), mg.get_mpz_t()) == 0) {
            throw InvalidArgument("crt: internal inverse failure");
        }
        Int k = (diff / g) % mg * inv % mg;
        if (k < 0) k += mg;
        x += M * k;
        M *= mg;
        x %= M;
        if (x < 0) x += M;
    }
    return {x, M};
}

std::string SymbolConstraint::describe() const
{
    std::ostringstream os;
    os << "p = " << to_string(residue) << " mod " << to_string(modulus);
    for (auto& [c, e] : demands) os << "; (" << to_string(c) << "|p) = " << (e > 0 ? "+1" : "-1");
    return os.str();
}

bool satisfies(const SymbolConstraint& c, const Int& p)
{
    if (p < 2) return false;
    Int r = p % c.modulus;
    Int want = c.residue % c.modulus;
    if (want < 0) want += c.modulus;
    if (r != want) return false;
    if (c.demands.empty()) return true;
    if (p == 2) return false;
    for (auto& [val, eps] : c.demands)
        if (jacobi_symbol(val, p) != eps) return false;
    return true;
}

static void validate(const SymbolConstraint& c)
{
    if (c.modulus < 1) throw InvalidArgument("find_prime: modulus must be >= 1");
    if (gcd(c.residue, c.modulus) != 1 && c.modulus != 1)
        throw InvalidArgument("find_prime: residue and modulus are not coprime");
    for (auto& [val, eps] : c.demands) {
        if (val == 0) throw InvalidArgument("find_prime: demand value is zero");
        if (eps != 1 && eps != -1) throw InvalidArgument("find_prime: demand sign must be +1 or -1");
    }
}

static std::string exhausted(const SymbolConstraint& c, const Int& bound)
{
    return "find_prime: no prime <= " + to_string(bound) + " with " + c.describe();
}

Int find_prime_naive(const SymbolConstraint& c, const std::set<Int>& exclude, const Int& bound)
{
    validate(c);
    for (Int n = 2; n <= bound; ++n) {
        if (!is_probable_prime(n) || exclude.count(n)) continue;
        if (satisfies(c, n)) return n;
    }
    throw SearchFailure(exhausted(c, bound));
}

namespace {

// A demand rewritten through quadratic reciprocity: for an odd prime p not dividing c,
// (c|p) = sign(p mod 8) * prod (p mod l | l).
struct Prepared {
    bool neg = false, two = false;
    unsigned ell_3mod4 = 0;
    std::vector<uint64_t> ells;
    int eps = 1;

    int sign_part(unsigned p8) const
    {
        int s = 1;
        bool p3 = (p8 & 3) == 3;
        if (neg && p3) s = -s;
        if (two && (p8 == 3 || p8 == 5)) s = -s;
        if ((ell_3mod4 & 1) && p3) s = -s;
        return s;
    }
};

struct Tables {
    std::map<uint64_t, std::vector<int8_t>> legendre;
    int symbol(uint64_t pmod, uint64_t ell) const
    {
        auto it = legendre.find(ell);
        if (it != legendre.end()) return it->second[pmod];
        return jacobi_u64(pmod, ell);
    }
};

const uint64_t kTableLimit = 1u << 20;

std::vector<int8_t> legendre_table(uint64_t ell)
{
    std::vector<int8_t> t(ell, -1);
    t[0] = 0;
    for (uint64_t x = 1; x < ell; ++x) t[x * x % ell] = 1;
    return t;
}

}  // namespace

Int find_prime(const SymbolConstraint& c, const std::set<Int>& exclude, const Int& bound, unsigned workers)
{
    validate(c);
    Int m = c.modulus;
    Int r = c.residue % m;
    if (r < 0) r += m;

    // Small primes go through the reference path; the fast path assumes p exceeds every wheel prime.
    const uint64_t small_limit = 1 << 16;
    for (uint32_t p : small_primes(small_limit)) {
        if (p > small_limit) break;
        Int pp = p;
        if (pp > bound) throw SearchFailure(exhausted(c, bound));
        if (!exclude.count(pp) && satisfies(c, pp)) return pp;
    }
    if (bound <= small_limit) throw SearchFailure(exhausted(c, bound));

    FactorOptions fo;
    fo.hints = c.hints;
    std::vector<Prepared> demands;
    std::set<uint64_t> cond_primes;
    bool big_condition_prime = false;
    for (auto& [val, eps] : c.demands) {
        Prepared d;
        d.eps = eps;
        d.neg = val < 0;
        Factorization f = factor(val, fo);
        for (auto& [p, e] : f.factors) {
            if ((e & 1) == 0) continue;
            if (p == 2) {
                d.two = true;
                continue;
            }
            if (!fits_u64(p)) {
                big_condition_prime = true;
                continue;
            }
            uint64_t ell = to_u64(p);
            d.ells.push_back(ell);
            if (ell % 4 == 3) d.ell_3mod4 ^= 1;
            cond_primes.insert(ell);
        }
        demands.push_back(d);
    }
    // Odd prime squares inside a demand do not change (c|p) once p > small_limit.

    Int first = Int(small_limit) + 1;
    Int k0 = first <= r ? Int(0) : Int((first - r + m - 1) / m);
    Int kmax_i = bound < r ? Int(-1) : Int((bound - r) / m);
    if (kmax_i < k0) throw SearchFailure(exhausted(c, bound));

    const Int u64_cap = Int(1) << 62;
    bool fast = !big_condition_prime && bound < u64_cap;

    if (!fast) {
        for (Int k = k0; k <= kmax_i; ++k) {
            Int p = r + m * k;
            bool small_factor = false;
            for (uint32_t q : small_primes(small_limit)) {
                if (q > 1000) break;
                if (mpz_divisible_ui_p(p.get_mpz_t(), q)) {
                    small_factor = true;
                    break;
                }
            }
            if (small_factor) continue;
            bool ok = true;
            for (auto& [val, eps] : c.demands)
                if (jacobi_symbol(val, p) != eps) {
                    ok = false;
                    break;
                }
            if (!ok || exclude.count(p)) continue;
            if (is_probable_prime(p)) return p;
        }
        throw SearchFailure(exhausted(c, bound));
    }

    const uint64_t mu = to_u64(m), ru = to_u64(r);
    const uint64_t k_lo = to_u64(k0), k_hi = to_u64(kmax_i);

    Tables tables;
    for (uint64_t ell : cond_primes)
        if (ell < kTableLimit) tables.legendre.emplace(ell, legendre_table(ell));

    // Wheel over k (p = r + m k): fix k mod 8 and k mod a few small primes not dividing m.
    std::vector<uint64_t> wheel_primes;
    {
        std::vector<uint64_t> cands;
        for (uint64_t ell : cond_primes)
            if (ell < 200) cands.push_back(ell);
        for (uint32_t q : small_primes(small_limit)) {
            if (q > 40) break;
            if (q > 2) cands.push_back(q);
        }
        std::sort(cands.begin(), cands.end());
        cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
        double est = 8;
        unsigned __int128 K = 8;
        for (uint64_t ell : cands) {
            if (mu % ell == 0) continue;
            double keep = cond_primes.count(ell) ? (ell - 1) / 2.0 : double(ell - 1);
            if (est * keep > (1 << 21) || K * ell > (static_cast<unsigned __int128>(1) << 40)) continue;
            est *= keep;
            K *= ell;
            wheel_primes.push_back(ell);
        }
    }
    std::vector<const Prepared*> single_in_wheel;  // demands decided entirely by the wheel
    std::vector<const Prepared*> rest;
    {
        std::set<uint64_t> ws(wheel_primes.begin(), wheel_primes.end());
        for (auto& d : demands) {
            bool inside = true;
            for (uint64_t ell : d.ells)
                if (!ws.count(ell) && mu % ell != 0) inside = false;
            (inside ? single_in_wheel : rest).push_back(&d);
        }
        std::sort(rest.begin(), rest.end(), [](const Prepared* a, const Prepared* b) {
            uint64_t ca = 0, cb = 0;
            for (uint64_t e : a->ells) ca += e < kTableLimit ? 1 : 8;
            for (uint64_t e : b->ells) cb += e < kTableLimit ? 1 : 8;
            return ca < cb;
        });
    }

    // Residues k mod K, built prime by prime with the wheel-decidable demands checked at the end.
    uint64_t K = 8;
    std::vector<uint64_t> ks;
    for (uint64_t k = 0; k < 8; ++k) {
        uint64_t p8 = (ru + (mu % 8) * k) % 8;
        if (p8 % 2 == 1) ks.push_back(k);
    }
    for (uint64_t ell : wheel_primes) {
        std::vector<uint64_t> next;
        next.reserve(ks.size() * ell);
        uint64_t minv_ell = 0;  // K^{-1} mod ell
        for (uint64_t x = 1; x < ell; ++x)
            if ((K % ell) * x % ell == 1) minv_ell = x;
        uint64_t rl = ru % ell, ml = mu % ell;
        for (uint64_t k : ks) {
            for (uint64_t t = 0; t < ell; ++t) {
                // k' = k + K*j with k' = t mod ell
                uint64_t j = ((t + ell - k % ell) % ell) * minv_ell % ell;
                uint64_t kk = k + K * j;
                uint64_t pl = (rl + ml * (kk % ell)) % ell;
                if (pl == 0) continue;
                next.push_back(kk);
            }
        }
        K *= ell;
        ks.swap(next);
    }
    {
        std::vector<uint64_t> kept;
        for (uint64_t k : ks) {
            unsigned __int128 p = static_cast<unsigned __int128>(mu) * k + ru;
            unsigned p8 = static_cast<unsigned>(p % 8);
            bool ok = true;
            for (const Prepared* d : single_in_wheel) {
                int s = d->sign_part(p8);
                for (uint64_t ell : d->ells) s *= tables.symbol(static_cast<uint64_t>(p % ell), ell);
                if (s != d->eps) {
                    ok = false;
                    break;
                }
            }
            if (ok) kept.push_back(k);
        }
        ks.swap(kept);
        std::sort(ks.begin(), ks.end());
    }
    if (ks.empty()) throw SearchFailure(exhausted(c, bound));

    auto check_candidate = [&](uint64_t p) -> bool {
        unsigned p8 = static_cast<unsigned>(p & 7);
        for (const Prepared* d : rest) {
            int s = d->sign_part(p8);
            for (uint64_t ell : d->ells) {
                int v = tables.symbol(p % ell, ell);
                if (v == 0) return false;
                s *= v;
            }
            if (s != d->eps) return false;
        }
        if (!is_prime_u64(p)) return false;
        // Squared condition primes were dropped above; p equal to one of them still has to fail.
        Int pp = from_u64(p);
        return !exclude.count(pp) && satisfies(c, pp);
    };

    // Blocks of whole wheel periods; blocks are scanned in order so the first hit is the smallest.
    const uint64_t first_base = k_lo / K;
    const uint64_t last_base = k_hi / K;
    auto scan_block = [&](uint64_t b_lo, uint64_t b_hi) -> uint64_t {
        for (uint64_t b = b_lo; b <= b_hi; ++b) {
            uint64_t base = b * K;
            for (uint64_t kr : ks) {
                uint64_t k = base + kr;
                if (k < k_lo) continue;
                if (k > k_hi) return 0;
                uint64_t p = ru + mu * k;
                if (check_candidate(p)) return p;
            }
        }
        return 0;
    };

    if (workers <= 1) {
        uint64_t p = scan_block(first_base, last_base);
        if (p) return from_u64(p);
        throw SearchFailure(exhausted(c, bound));
    }
    const uint64_t chunk = 64;
    for (uint64_t wave = first_base; wave <= last_base; wave += chunk * workers) {
        std::vector<uint64_t> found(workers, 0);
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            uint64_t lo = wave + w * chunk;
            if (lo > last_base) break;
            uint64_t hi = std::min(last_base, lo + chunk - 1);
            pool.emplace_back([&, w, lo, hi] { found[w] = scan_block(lo, hi); });
        }
        for (auto& t : pool) t.join();
        for (uint64_t p : found)
            if (p) return from_u64(p);
    }
    throw SearchFailure(exhausted(c, bound));
}

}  // namespace sf
