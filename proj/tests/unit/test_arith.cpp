#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "selmerforge/arith.hpp"

using namespace sf;

namespace {

// Solvability of z^2 = a x^2 + b y^2 over Q_p by brute force on primitive triples mod p^k.
// Even powers of p are stripped first so a, b have valuation 0 or 1.
bool solvable_local_bruteforce(long a, long b, long p)
{
    auto strip = [p](long x) {
        while (x % (p * p) == 0) x /= p * p;
        return x;
    };
    a = strip(a);
    b = strip(b);
    long mod = p == 2 ? 64 : p * p * p;
    std::vector<char> sq(mod, 0), unit_sq(mod, 0);
    for (long z = 0; z < mod; ++z) {
        sq[z * z % mod] = 1;
        if (z % p) unit_sq[z * z % mod] = 1;
    }
    auto md = [mod](long v) { return ((v % mod) + mod) % mod; };
    long am = md(a), bm = md(b);
    for (long x = 0; x < mod; ++x)
        for (long y = 0; y < mod; ++y) {
            long v = (am * (x * x % mod) + bm * (y * y % mod)) % mod;
            bool xy_unit = (x % p) || (y % p);
            if (xy_unit ? sq[v] : unit_sq[v]) return true;
        }
    return false;
}

std::vector<long> primes_below(long n)
{
    std::vector<long> r;
    for (long i = 2; i < n; ++i) {
        bool ok = true;
        for (long d = 2; d * d <= i; ++d)
            if (i % d == 0) ok = false;
        if (ok) r.push_back(i);
    }
    return r;
}

}  // namespace

TEST_CASE("jacobi examples")
{
    CHECK(jacobi_symbol(1, 21) == 1);
    CHECK(jacobi_symbol(3, 7) == -1);
    CHECK(jacobi_symbol(2, 15) == 1);
    CHECK(jacobi_symbol(6, 15) == 0);
    CHECK_THROWS_AS(jacobi_symbol(3, 8), InvalidArgument);
    CHECK_THROWS_AS(jacobi_symbol(3, 0), InvalidArgument);
    CHECK_THROWS_AS(jacobi_symbol(3, -7), InvalidArgument);
}

TEST_CASE("jacobi agrees with square enumeration below 500")
{
    for (long p : primes_below(500)) {
        if (p == 2) continue;
        std::vector<int> is_sq(p, -1);
        is_sq[0] = 0;
        for (long x = 1; x < p; ++x) is_sq[x * x % p] = 1;
        for (long a = -p; a < 2 * p; ++a) {
            long r = ((a % p) + p) % p;
            CHECK(jacobi_symbol(a, p) == is_sq[r]);
        }
    }
}

TEST_CASE("jacobi multiplicative in both arguments")
{
    std::mt19937_64 rng(7);
    for (int i = 0; i < 2000; ++i) {
        uint64_t a = rng() % 100000, b = rng() % 100000, n = (rng() % 50000) * 2 + 1, m = (rng() % 50000) * 2 + 1;
        CHECK(jacobi_u64(a * b, n) == jacobi_u64(a, n) * jacobi_u64(b, n));
        CHECK(jacobi_u64(a, n * m) == jacobi_u64(a, n) * jacobi_u64(a, m));
        CHECK(jacobi_symbol(Int(a) * b, Int(n)) == jacobi_u64(a, n) * jacobi_u64(b, n));
    }
    // big modulus route
    Int big = (Int(1) << 127) - 1;
    CHECK(jacobi_symbol(3, big) == -jacobi_symbol(big, 3));
}

TEST_CASE("primality")
{
    std::vector<char> comp(200000, 0);
    for (size_t i = 2; i < comp.size(); ++i)
        if (!comp[i])
            for (size_t j = i * i; j < comp.size(); j += i) comp[j] = 1;
    for (uint64_t n = 0; n < comp.size(); ++n) CHECK(is_prime_u64(n) == (n >= 2 && !comp[n]));
    CHECK(is_prime_u64(18446744073709551557ULL));
    CHECK_FALSE(is_prime_u64(3215031751ULL));  // strong pseudoprime to 2,3,5,7
    CHECK(is_probable_prime((Int(1) << 89) - 1));
    CHECK(is_probable_prime((Int(1) << 127) - 1));
    CHECK_FALSE(is_probable_prime((Int(1) << 67) - 1));
    Int carmichael = Int("3825123056546413051");
    CHECK_FALSE(is_probable_prime(carmichael));
    CHECK_FALSE(is_probable_prime(((Int(1) << 89) - 1) * ((Int(1) << 61) - 1)));
    CHECK(std::string(primality_mode()).size() > 0);
}

TEST_CASE("factor examples")
{
    auto f = factor(64);
    CHECK(f.sign == 1);
    REQUIRE(f.factors.size() == 1);
    CHECK(f.factors[0] == std::make_pair(Int(2), 6u));

    f = factor(-680);
    CHECK(f.sign == -1);
    REQUIRE(f.factors.size() == 3);
    CHECK(f.factors[0] == std::make_pair(Int(2), 3u));
    CHECK(f.factors[1] == std::make_pair(Int(5), 1u));
    CHECK(f.factors[2] == std::make_pair(Int(17), 1u));

    f = factor(1);
    CHECK(f.sign == 1);
    CHECK(f.factors.empty());
    CHECK_THROWS_AS(factor(0), InvalidArgument);
}

TEST_CASE("factor reconstructs and handles large cofactors")
{
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        Int n = from_u64(rng() >> (rng() % 40));
        if (n == 0) continue;
        if (rng() & 1) n = -n;
        auto f = factor(n);
        CHECK(f.value() == n);
        for (size_t j = 0; j < f.factors.size(); ++j) {
            CHECK(is_probable_prime(f.factors[j].first));
            if (j) CHECK(f.factors[j - 1].first < f.factors[j].first);
        }
    }
    Int p1 = Int("1000000000039"), p2 = Int("1000000000061"), p3 = (Int(1) << 89) - 1;
    auto f = factor(p1 * p2 * p1);
    REQUIRE(f.factors.size() == 2);
    CHECK(f.factors[0] == std::make_pair(p1, 2u));
    FactorOptions opt;
    opt.hints = {p3};
    f = factor(p3 * p3 * 6 * p1, opt);
    CHECK(f.value() == p3 * p3 * 6 * p1);
    CHECK(f.factors.back() == std::make_pair(p3, 2u));
}

TEST_CASE("factor reports failure rather than guessing")
{
    FactorOptions opt;
    opt.rho_iterations = 10;
    opt.rho_attempts = 1;
    Int n = Int("1000000000039") * Int("1000000000061");
    CHECK_THROWS_AS(factor(n, opt), FactorizationFailure);
}

TEST_CASE("square classes")
{
    CHECK(square_class_at(Int(9), Place::finite(7)).trivial());
    auto c = square_class_at(Int(12), Place::finite(3));
    CHECK(c.odd_valuation());
    CHECK_FALSE(c.unit_nonsquare());
    CHECK(square_class_at(Int(-5), Place::infinity()).negative());
    CHECK(square_class_at(Rat(2, 9), Place::finite(3)).trivial() == false);
    CHECK(square_class_at(Rat(4, 9), Place::finite(3)).trivial());
    CHECK(square_class_at(Int(17), Place::finite(2)).trivial());
    CHECK(square_class_at(Int(3), Place::finite(2)).unit_residue_mod8() == 3);
    CHECK_THROWS_AS(Place::finite(15), InvalidArgument);

    std::mt19937_64 rng(3);
    std::vector<Place> places = {Place::infinity(), Place::finite(2), Place::finite(3), Place::finite(5),
                                 Place::finite(7), Place::finite(101)};
    for (int i = 0; i < 500; ++i) {
        Int x = Int(long(rng() % 20001) - 10000);
        Int y = Int(long(rng() % 2001) - 1000);
        if (x == 0 || y == 0) continue;
        for (auto& v : places) {
            CHECK(square_class_at(Int(x * y * y), v) == square_class_at(x, v));
            CHECK(square_class_at(Rat(x, y * y), v) == square_class_at(x, v));
            // representative round trip
            auto cl = square_class_at(x, v);
            CHECK(square_class_at(local_class_representative(cl), v) == cl);
        }
    }
}

TEST_CASE("hilbert examples")
{
    CHECK(hilbert_symbol(Rat(-1), Rat(-1), Place::infinity()) == -1);
    CHECK(hilbert_symbol(Rat(-1), Rat(-1), Place::finite(2)) == -1);
    CHECK(hilbert_symbol(Rat(2), Rat(3), Place::finite(7)) == 1);
    CHECK(hilbert_symbol(Rat(5), Rat(7), Place::finite(11)) == 1);
}

TEST_CASE("hilbert symbol agrees with brute-force solvability")
{
    for (long p : {2L, 3L, 5L, 7L}) {
        for (long a = -40; a <= 40; ++a)
            for (long b = -40; b <= 40; b += 3) {
                if (a == 0 || b == 0) continue;
                int expect = solvable_local_bruteforce(a, b, p) ? 1 : -1;
                CHECK_MESSAGE(hilbert_symbol(Rat(a), Rat(b), Place::finite(p)) == expect,
                              "a=" << a << " b=" << b << " p=" << p);
            }
    }
}

TEST_CASE("hilbert reciprocity on random pairs")
{
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 1000; ++i) {
        long a = long(rng() % 20001) - 10000, b = long(rng() % 20001) - 10000;
        if (a == 0 || b == 0) {
            --i;
            continue;
        }
        int prod = hilbert_symbol(Rat(a), Rat(b), Place::infinity()) * hilbert_symbol(Rat(a), Rat(b), Place::finite(2));
        for (const Int& p : prime_divisors(Int(a) * b))
            if (p != 2) prod *= hilbert_symbol(Rat(a), Rat(b), Place::finite(p));
        CHECK(prod == 1);
    }
}

TEST_CASE("square roots")
{
    for (long p : primes_below(400)) {
        for (long a = 0; a < p; ++a) {
            if (p > 2 && a && jacobi_symbol(a, p) != 1) {
                CHECK_THROWS_AS(sqrt_mod_prime(a, p), InvalidArgument);
                continue;
            }
            Int r = sqrt_mod_prime(a, p);
            CHECK((r * r - a) % p == 0);
        }
    }
    Int p = Int("1000000000000000003");  // not necessarily prime; use a known one
    p = (Int(1) << 61) - 1;
    Int r = sqrt_mod_prime(Int(4) * 12345 * 12345, p);
    CHECK((r * r - Int(4) * 12345 * 12345) % p == 0);
    Factorization f = factor(7 * 17 * 41);
    Int s = sqrt_mod_squarefree(2, f);
    CHECK((s * s - 2) % (7 * 17 * 41) == 0);
}

TEST_CASE("crt")
{
    auto r = crt({{1, 3}, {2, 5}});
    CHECK(r.first == 7);
    CHECK(r.second == 15);
    r = crt({{0, 1}});
    CHECK(r.first == 0);
    CHECK(r.second == 1);
    r = crt({{1, 8}, {1, 3}});
    CHECK(r.first == 1);
    CHECK(r.second == 24);
    r = crt({{3, 4}, {1, 6}});
    CHECK(r.first == 7);
    CHECK(r.second == 12);
    CHECK_THROWS_AS(crt({{1, 4}, {2, 6}}), InvalidArgument);
}

TEST_CASE("find_prime examples")
{
    SymbolConstraint c;
    c.residue = 1;
    c.modulus = 8;
    c.demands = {{5, -1}};
    CHECK(find_prime(c, {}, 1000000) == 17);
    c.demands = {{5, 1}};
    CHECK(find_prime(c, {}, 1000000) == 41);
    SymbolConstraint odd;
    odd.residue = 1;
    odd.modulus = 2;
    CHECK(find_prime(odd, {Int(2)}, 100) == 3);
    CHECK_THROWS_AS(find_prime(odd, {2, 3, 5, 7}, 10), SearchFailure);
    SymbolConstraint bad;
    bad.residue = 2;
    bad.modulus = 4;
    CHECK_THROWS_AS(find_prime(bad, {}, 100), InvalidArgument);
}

TEST_CASE("find_prime fast path agrees with the naive scan and ignores the worker split")
{
    std::mt19937_64 rng(99);
    const std::vector<long> pool = {-1, 2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 97, 101, 65537, 1000003};
    for (int iter = 0; iter < 60; ++iter) {
        SymbolConstraint c;
        long mod = std::vector<long>{1, 4, 8, 24, 40, 120, 7 * 8}[rng() % 7];
        long res;
        do res = long(rng() % mod); while (std::gcd(res, mod) != 1 && mod != 1);
        c.residue = res;
        c.modulus = mod;
        int nd = int(rng() % 6);
        for (int j = 0; j < nd; ++j) {
            Int v = 1;
            int parts = 1 + int(rng() % 3);
            for (int k = 0; k < parts; ++k) v *= pool[rng() % pool.size()];
            c.demands.push_back({v, (rng() & 1) ? 1 : -1});
        }
        std::set<Int> excl;
        Int bound = 3000000;
        Int naive;
        bool naive_fail = false;
        try {
            naive = find_prime_naive(c, excl, 70000);
        } catch (const SearchFailure&) {
            naive_fail = true;
        }
        if (!naive_fail) {
            CHECK(find_prime(c, excl, bound, 1) == naive);
            excl.insert(naive);
            Int second;
            bool nf2 = false;
            try {
                second = find_prime_naive(c, excl, 400000);
            } catch (const SearchFailure&) {
                nf2 = true;
            }
            if (!nf2) {
                CHECK(find_prime(c, excl, bound, 1) == second);
                CHECK(find_prime(c, excl, bound, 3) == second);
            }
        }
        // beyond the small-prime range
        Int lo = 70000;
        std::set<Int> big_excl;
        for (long q : primes_below(70000)) big_excl.insert(Int(q));
        try {
            Int seq = find_prime(c, big_excl, bound, 1);
            CHECK(seq > lo);
            CHECK(satisfies(c, seq));
            CHECK(find_prime(c, big_excl, bound, 4) == seq);
            // the naive scan from the same start must agree
            for (Int q = lo; q < seq; ++q)
                if (is_probable_prime(q)) CHECK_FALSE(satisfies(c, q));
        } catch (const SearchFailure&) {
        }
    }
}

TEST_CASE("find_prime above 2^62 uses the multiprecision path")
{
    SymbolConstraint c;
    c.modulus = (Int(1) << 70) * 3;
    c.residue = 1;
    c.demands = {{-1, 1}, {7, -1}};
    Int p = find_prime(c, {}, Int(1) << 80);
    CHECK(satisfies(c, p));
    CHECK(is_probable_prime(p));
}
