#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "selmerforge/rootnumber.hpp"

using namespace sf;

namespace {

// Smallest admissible twisting prime for E at the split multiplicative prime v, if any below the bound.
Int admissible_prime(const Curve& e, const Int& v)
{
    SymbolConstraint c;
    c.residue = 1;
    c.modulus = 24;
    for (auto& p : bad_primes(e)) {
        if (p == 2 || p == 3) continue;
        c.demands.push_back({p, p == v ? -1 : 1});
    }
    return find_prime(c, {}, Int(10000000));
}

}  // namespace

TEST_CASE("local root numbers by reduction type")
{
    auto e = new_curve(0, 1, -1);
    for (long p = 5; p < 200; p += 2)
        if (is_probable_prime(p) && e.disc % p != 0) CHECK(local_root_number(e, Place::finite(p)).value == Sign::Plus);
    auto split = new_curve(0, -17, -1);  // alpha = 17, beta = 1, gamma = -16
    REQUIRE(reduction_type(split, 17) == Reduction::SplitMultiplicative);
    CHECK(local_root_number(split, Place::finite(17)).value == Sign::Minus);
    auto nonsplit = new_curve(0, -17, -3);  // beta = 3, not a square mod 17
    REQUIRE(reduction_type(nonsplit, 17) == Reduction::NonsplitMultiplicative);
    CHECK(local_root_number(nonsplit, Place::finite(17)).value == Sign::Plus);
    auto additive = new_curve(0, 5, 10);
    REQUIRE(reduction_info(additive, 5).type == Reduction::AdditivePotentiallyGood);
    REQUIRE(reduction_info(additive, 5).disc_valuation == 6);
    CHECK(local_root_number(additive, Place::finite(5)).value == Sign::Plus);
    auto additive7 = new_curve(0, 7, 14);  // floor(6 * 7 / 12) = 3
    CHECK(local_root_number(additive7, Place::finite(7)).value == Sign::Minus);
    CHECK(local_root_number(e, Place::infinity()).value == Sign::Unknown);
    CHECK(local_root_number(e, Place::finite(2)).value == Sign::Unknown);
    CHECK(root_number_report(e).global == Sign::Unknown);
    CHECK(parity_crosscheck(e).verdict == Sign::Unknown);
}

TEST_CASE("twist ratio formula and preconditions")
{
    CHECK(twist_ratio_formula(13) == -1);
    CHECK(twist_ratio_formula(7) == 1);
    CHECK(twist_ratio_formula(11) == 1);
    auto e = new_curve(0, -17, -1);
    CHECK_THROWS_AS(twist_parity_ratio(e, 2), InvalidArgument);
    CHECK_THROWS_AS(twist_parity_ratio(e, 7), InvalidArgument);
    CHECK_FALSE(twist_admissibility(e, 3).ok);
}

TEST_CASE("Selmer parity flips exactly when the ratio is -1")
{
    std::mt19937_64 rng(2024);
    int pairs = 0;
    for (int tries = 0; tries < 400 && pairs < 20; ++tries) {
        long a = long(rng() % 301) - 150, b = long(rng() % 301) - 150;
        if (a == 0 || b == 0 || a == b) continue;
        auto e = new_curve(0, a, b);
        Int v = 0;
        for (auto& p : bad_primes(e))
            if (p > 3 && reduction_type(e, p) == Reduction::SplitMultiplicative) {
                v = p;
                break;
            }
        if (v == 0) continue;
        Int q = admissible_prime(e, v);
        REQUIRE(twist_admissibility(e, q).ok);
        auto r = twist_parity_crosscheck(e, q);
        CAPTURE(e.str());
        CAPTURE(to_string(q));
        CHECK(r.ratio == -1);
        CHECK(r.agrees);
        ++pairs;
    }
    CHECK(pairs >= 20);
}
