#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "selmerforge/errors.hpp"

namespace sf {

using Int = mpz_class;
using Rat = mpq_class;

std::string to_string(const Int& n);
std::string to_string(const Rat& x);
Int parse_int(const std::string& s);
bool fits_u64(const Int& n);
uint64_t to_u64(const Int& n);
Int from_u64(uint64_t v);

// Sorted primes up to limit, cached per process.
const std::vector<uint32_t>& small_primes(uint32_t limit = 1000000);

int jacobi_u64(uint64_t a, uint64_t n);
int jacobi_symbol(const Int& a, const Int& n);

uint64_t mulmod_u64(uint64_t a, uint64_t b, uint64_t m);
uint64_t powmod_u64(uint64_t a, uint64_t e, uint64_t m);
bool is_prime_u64(uint64_t n);
// Deterministic below 2^64; 64 Miller-Rabin rounds with fixed pseudo-random bases above.
bool is_probable_prime(const Int& n);
const char* primality_mode();

// v_p(n) for n != 0; strips the factor from n when given a pointer.
unsigned valuation(const Int& n, const Int& p, Int* unit = nullptr);

struct Factorization {
    int sign = 1;
    std::vector<std::pair<Int, unsigned>> factors;
    Int value() const;
};

struct FactorOptions {
    uint64_t rho_iterations = 2000000;  // per rho attempt
    unsigned rho_attempts = 8;
    std::vector<Int> hints;  // candidate prime divisors tried before anything else
};

Factorization factor(const Int& n, const FactorOptions& opt = {});
std::vector<Int> prime_divisors(const Int& n, const FactorOptions& opt = {});
// Squarefree representative of the class of n in Q*/Q*^2.
Int squarefree_part(const Int& n, const FactorOptions& opt = {});

struct Place {
    Int p;  // 0 encodes the real place
    static Place infinity() { return Place{Int(0)}; }
    static Place finite(const Int& p);
    bool is_infinite() const { return p == 0; }
    bool is_two() const { return p == 2; }
    std::string str() const;
    bool operator==(const Place& o) const { return p == o.p; }
    bool operator!=(const Place& o) const { return p != o.p; }
    bool operator<(const Place& o) const { return p < o.p; }
};

// Q_v*/Q_v*^2 as an F2 vector.
//   odd p : bit0 valuation parity, bit1 unit part is a non-square
//   p = 2 : bit0 valuation parity, bit1 eps(u) = (u-1)/2, bit2 omega(u) = (u^2-1)/8
//   real  : bit0 sign
struct LocalClass {
    Place place;
    unsigned bits = 0;

    static unsigned dim(const Place& v) { return v.is_infinite() ? 1 : (v.is_two() ? 3 : 2); }
    bool trivial() const { return bits == 0; }
    bool odd_valuation() const { return !place.is_infinite() && (bits & 1u); }
    bool unit_nonsquare() const { return !place.is_infinite() && !place.is_two() && (bits & 2u); }
    unsigned unit_residue_mod8() const;  // p = 2 only, one of 1,3,5,7
    bool negative() const { return place.is_infinite() && (bits & 1u); }
    LocalClass operator*(const LocalClass& o) const { return LocalClass{place, bits ^ o.bits}; }
    bool operator==(const LocalClass& o) const { return place == o.place && bits == o.bits; }
    std::string str() const;
};

LocalClass square_class_at(const Rat& x, const Place& v);
LocalClass square_class_at(const Int& x, const Place& v);
template <class U>
LocalClass square_class_at(const __gmp_expr<mpz_t, U>& x, const Place& v)
{
    return square_class_at(Int(x), v);
}
template <class U>
LocalClass square_class_at(const __gmp_expr<mpq_t, U>& x, const Place& v)
{
    return square_class_at(Rat(x), v);
}
// Class from its encoding; for p = 2 the unit is given as a residue mod 8.
LocalClass local_class_from(const Place& v, bool odd_valuation, unsigned unit_code);
// A rational representative of the class.
Int local_class_representative(const LocalClass& c);

int hilbert_symbol(const LocalClass& a, const LocalClass& b);
int hilbert_symbol(const Rat& a, const Rat& b, const Place& v);

// Smallest positive integer that is a non-square mod p (p odd prime).
Int smallest_nonresidue(const Int& p);
Int sqrt_mod_prime(const Int& a, const Int& p);
// Some t in [0, n) with t^2 = a mod n for squarefree n with known factorization.
// Per prime the smaller root is taken, so the result is deterministic. Throws if none exists.
Int sqrt_mod_squarefree(const Int& a, const Factorization& n);

std::pair<Int, Int> crt(const std::vector<std::pair<Int, Int>>& residues);

struct SymbolConstraint {
    Int residue = 1;
    Int modulus = 1;
    std::vector<std::pair<Int, int>> demands;  // Legendre(c | p) = eps
    std::vector<Int> hints;                    // known prime divisors of the demand values
    std::string describe() const;
};

// Smallest prime p <= bound, p not excluded, p = residue mod modulus, meeting every demand.
// The scan may be split over workers; the answer never depends on the split.
Int find_prime(const SymbolConstraint& c, const std::set<Int>& exclude, const Int& bound,
               unsigned workers = 1);
// Straight linear scan with full symbol evaluation at each prime. Test oracle.
Int find_prime_naive(const SymbolConstraint& c, const std::set<Int>& exclude, const Int& bound);
bool satisfies(const SymbolConstraint& c, const Int& p);

}  // namespace sf
