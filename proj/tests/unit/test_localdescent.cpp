#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "selmerforge/localdescent.hpp"

using namespace sf;

namespace {

std::vector<Place> places_of(const Curve& e)
{
    std::vector<Place> vs = {Place::infinity()};
    for (const Int& p : bad_primes(e)) vs.push_back(Place::finite(p));
    vs.push_back(Place::finite(3));
    vs.push_back(Place::finite(101));
    return vs;
}

Int random_unit_square(std::mt19937_64& rng, long p, long range)
{
    for (;;) {
        long x = long(rng() % (2 * range + 1)) - range;
        if (x % p != 0 && jacobi_symbol(x, p) == 1) return x;
    }
}

Int random_odd_valuation(std::mt19937_64& rng, long p)
{
    long k;
    do k = long(rng() % 61) - 30; while (k == 0 || k % p == 0);
    return (rng() & 1) ? Int(k * p) : Int(k) * p * p * p;
}

}  // namespace

TEST_CASE("local image example at a split multiplicative place")
{
    auto e = new_curve(0, 17, 1);
    Place v = Place::finite(17);
    auto img = local_image(e, v);
    LocalClass pi = uniformizer_class(17, 0), eps = local_class_from(v, false, 1);
    CHECK(img == span_of(v, {pair_vector(pi, pi), pair_vector(eps, eps)}));
    CHECK(local_class_representative(eps) == 3);
}

TEST_CASE("good odd place gives the unramified subgroup")
{
    auto e = new_curve(0, 1, -1);
    CHECK(local_image(e, Place::finite(5)) == unramified_space(Place::finite(5)));
    CHECK(local_condition({ConditionKind::Unramified, {}}, e, Place::finite(7)).dim() == 2);
    CHECK(local_condition({ConditionKind::Full, {}}, e, Place::finite(7)).dim() == 4);
    CHECK(full_space(Place::finite(2)).dim() == 6);
}

TEST_CASE("real image from the bounded component")
{
    auto e = new_curve(0, 1, -1);
    auto img = local_image(e, Place::infinity());
    CHECK(img.dim() == 1);
    auto reps = img.representatives();
    CHECK(reps[0] == std::make_pair(Int(-1), Int(-1)));
}

TEST_CASE("restriction examples")
{
    Place v17 = Place::finite(17);
    auto r = pair_classes(v17, restrict_pair(Int(17), Int(-17), v17));
    CHECK(r.first.odd_valuation());
    CHECK(r.second.odd_valuation());
    CHECK(r.second == r.first * square_class_at(Int(-1), v17));
    auto e = new_curve(3, -4, 10);
    for (auto& v : places_of(e)) {
        auto img = local_image(e, v);
        CHECK(member(img, 1, 1));
        CHECK(member(img, e.alpha * e.beta, e.alpha));
        CHECK(member(img, -e.alpha, -e.alpha * e.gamma));
    }
}

TEST_CASE("images are isotropic, of the right dimension, and maximal")
{
    std::mt19937_64 rng(41);
    int checked = 0;
    while (checked < 40) {
        long a = long(rng() % 401) - 200, b = long(rng() % 401) - 200, c = long(rng() % 401) - 200;
        if (a == b || a == c || b == c) continue;
        auto e = new_curve(a, b, c);
        ++checked;
        for (auto& v : places_of(e)) {
            auto img = local_image(e, v);
            CHECK(img.dim() == expected_image_dim(v));
            CHECK(is_isotropic(e, img));
            for (auto& t : torsion_images(e, v)) CHECK(img.contains(t));
            if (!v.is_infinite() && !v.is_two()) {
                // every unramified class orthogonal to the image already lies in it
                auto nr = unramified_space(v);
                for (unsigned m = 0; m < 4; ++m) {
                    F2Vec u(4);
                    if (m & 1) u ^= nr.basis[0];
                    if (m & 2) u ^= nr.basis[1];
                    bool orth = true;
                    for (auto& b : img.basis)
                        if (pairing(v, u, b)) orth = false;
                    if (orth && !quadratic_form(e, v, u)) CHECK(img.contains(u));
                }
            }
        }
    }
}

TEST_CASE("enumerated images match the split multiplicative closed forms")
{
    std::mt19937_64 rng(1234);
    const std::vector<long> primes = {5, 13, 17, 29, 37, 41, 53, 61, 73, 89, 97, 101, 109, 113};
    int per_case[3] = {0, 0, 0};
    while (per_case[0] < 30 || per_case[1] < 30 || per_case[2] < 30) {
        long p = primes[rng() % primes.size()];
        int which = int(rng() % 3);
        Int alpha, beta;
        if (which == 0) {
            alpha = random_odd_valuation(rng, p);
            beta = random_unit_square(rng, p, 500);
        } else if (which == 1) {
            beta = random_odd_valuation(rng, p);
            alpha = random_unit_square(rng, p, 500);
        } else {
            alpha = random_unit_square(rng, p, 500);
            beta = alpha + random_odd_valuation(rng, p);
        }
        if (alpha == 0 || beta == 0 || alpha == beta) continue;
        auto e = new_curve(0, -alpha, -beta);
        auto cf = closed_form_image(e, p);
        REQUIRE(cf.has_value());
        CHECK(reduction_type(e, p) == Reduction::SplitMultiplicative);
        CHECK(local_image(e, Place::finite(p)) == *cf);
        ++per_case[which];
    }
}

TEST_CASE("only (eps, eps) is an unramified class orthogonal to (pi, pi)")
{
    for (long p : {5L, 13L, 17L, 29L, 41L}) {
        Place v = Place::finite(p);
        LocalClass pi = uniformizer_class(p, 0);
        F2Vec pp = pair_vector(pi, pi);
        auto nr = unramified_space(v);
        std::vector<F2Vec> orth;
        for (unsigned m = 1; m < 4; ++m) {
            F2Vec u(4);
            if (m & 1) u ^= nr.basis[0];
            if (m & 2) u ^= nr.basis[1];
            if (!pairing(v, u, pp)) orth.push_back(u);
        }
        LocalClass eps = local_class_from(v, false, 1);
        REQUIRE(orth.size() == 1);
        CHECK(orth[0] == pair_vector(eps, eps));
    }
}

TEST_CASE("twisted pair spaces")
{
    auto e = new_curve(0, 1, -1);
    for (long p : {5L, 7L, 11L, 13L, 17L}) {
        for (unsigned bit : {0u, 1u}) {
            LocalClass pi = uniformizer_class(p, bit);
            auto s = local_condition({ConditionKind::TwistedPair, pi}, e, Place::finite(p));
            CHECK(s.dim() == 2);
            CHECK(s.contains(pair_vector(square_class_at(e.alpha * e.beta, pi.place),
                                         pi * square_class_at(e.alpha, pi.place))));
            for (auto& a : s.basis)
                for (auto& b : s.basis) CHECK_FALSE(pairing(pi.place, a, b));
        }
    }
    CHECK_THROWS_AS(twisted_pair_space(e, local_class_from(Place::finite(7), false, 1)), InvalidArgument);
}
