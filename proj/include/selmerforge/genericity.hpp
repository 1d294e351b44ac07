#pragma once

#include <array>
#include <string>
#include <vector>

#include "selmerforge/curve.hpp"

namespace sf {

// Differences indexed 0: a1 - a2 (alpha), 1: a1 - a3 (beta), 2: a2 - a3 (gamma).
enum class Difference { Alpha = 0, Beta = 1, Gamma = 2 };
const char* difference_name(Difference d);

struct GenericPrimeCheck {
    Int p;
    bool one_mod_8 = false;
    bool above_5 = false;
    bool odd_multiplicity = false;
    bool complement_square = false;
    bool ok() const { return one_mod_8 && above_5 && odd_multiplicity && complement_square; }
};

GenericPrimeCheck check_generic_prime(const Curve& e, Difference which, const Int& p);

struct GenericityWitness {
    unsigned n = 0;
    std::array<std::vector<Int>, 3> primes;  // qualifying primes per difference, ascending
    bool generic = false;
    std::string failure;  // first difference that falls short
};

GenericityWitness is_n_generic(const Curve& e, unsigned n, const FactorOptions& opt = {});
// Re-checks every recorded prime from scratch and the per-difference counts.
bool verify_witness(const Curve& e, const GenericityWitness& w);

struct ConicSolution {
    Int a, b, c, X, Y, Z;
};
bool check_conic_solution(const ConicSolution& s);
// Primitive solution of a X^2 + b Y^2 = c Z^2 with X Y Z != 0.
// a, b, c positive, squarefree, pairwise coprime.
ConicSolution conic_solve(const Int& a, const Int& b, const Int& c, const FactorOptions& opt = {});

struct GenericConstruction {
    uint64_t seed = 0;
    std::array<Int, 9> primes;
    ConicSolution conic;
    Curve curve;
    GenericityWitness witness;
};
// Nine primes = 1 mod 8 that are pairwise squares of each other, a conic point, the curve (0, -aX^2, -cZ^2).
GenericConstruction construct_3generic(uint64_t seed, const Int& prime_bound);

}  // namespace sf
