#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "selmerforge/finfield.hpp"

using namespace sf;

namespace {

SquareSystem make(long q, std::array<long, 6> c, std::array<long, 3> d, std::array<long, 3> l)
{
    SquareSystem s;
    s.q = q;
    for (int i = 0; i < 6; ++i) s.c[i] = c[i];
    for (int i = 0; i < 3; ++i) {
        s.delta[i] = d[i];
        s.lambda[i] = l[i];
    }
    return s;
}

}  // namespace

TEST_CASE("example over F7")
{
    auto sys = make(7, {1, 0, 0, 1, 1, 1}, {1, 1, 1}, {0, 0, 0});
    auto sol = solve_square_system(sys);
    CHECK(check_square_solution(sys, sol));
    // first (s1, s2) in lexicographic order
    CHECK(sol == SquareSolution{1, 1, 1, 1, 3});
    CHECK(check_square_solution(sys, SquareSolution{2, 2, 3, 3, 2}));
}

TEST_CASE("rejected instances")
{
    CHECK_THROWS_AS(solve_square_system(make(5, {1, 0, 0, 1, 1, 1}, {1, 1, 1}, {0, 0, 0})), InvalidArgument);
    CHECK_THROWS_AS(solve_square_system(make(9, {1, 0, 0, 1, 1, 1}, {1, 1, 1}, {0, 0, 0})), InvalidArgument);
    CHECK_THROWS_AS(solve_square_system(make(7, {1, 2, 2, 4, 1, 1}, {1, 1, 1}, {0, 0, 0})), InvalidArgument);
    CHECK_THROWS_AS(solve_square_system(make(7, {1, 0, 0, 1, 1, 0}, {1, 1, 1}, {0, 0, 0})), InvalidArgument);
    CHECK_THROWS_AS(solve_square_system(make(7, {1, 0, 0, 1, 1, 1}, {1, 0, 1}, {0, 0, 0})), InvalidArgument);
}

TEST_CASE("random valid instances for 7 <= q <= 31")
{
    std::mt19937_64 rng(77);
    for (long q : {7L, 11L, 13L, 17L, 19L, 23L, 29L, 31L}) {
        int done = 0;
        while (done < 200) {
            std::array<long, 6> c;
            std::array<long, 3> d, l;
            for (auto& x : c) x = long(rng() % q);
            for (auto& x : d) x = 1 + long(rng() % (q - 1));
            for (auto& x : l) x = long(rng() % q);
            auto sys = make(q, c, d, l);
            try {
                validate_square_system(sys);
            } catch (const InvalidArgument&) {
                continue;
            }
            auto sol = solve_square_system(sys);
            CHECK(check_square_solution(sys, sol));
            CHECK(solve_square_system(sys) == sol);
            ++done;
        }
    }
}

TEST_CASE("randomized path for a large prime is seeded and verified")
{
    auto sys = make(1000003, {3, 1, 5, 7, 2, 9}, {1, 2, 3}, {4, 5, 6});
    SquareSolveOptions o;
    o.seed = 11;
    auto a = solve_square_system(sys, o), b = solve_square_system(sys, o);
    CHECK(a == b);
    CHECK(check_square_solution(sys, a));
}

TEST_CASE("every valid instance over F7 is solvable")
{
    // An invertible change of (u, v) turns the first two rows into the identity; the third row then has
    // both entries nonzero exactly when the remaining two determinants are nonzero. So the instances
    // c = (1, 0, 0, 1, a, b) with a, b != 0, all deltas and all lambdas cover every valid instance.
    long count = 0;
    bool all = true;
    for (long a = 1; a < 7; ++a)
        for (long b = 1; b < 7; ++b)
            for (long d = 0; d < 216; ++d)
                for (long l = 0; l < 343; ++l) {
                    auto sys = make(7, {1, 0, 0, 1, a, b}, {1 + d % 6, 1 + d / 6 % 6, 1 + d / 36}, {l % 7, l / 7 % 7, l / 49});
                    all = all && check_square_solution(sys, solve_square_system(sys));
                    ++count;
                }
    CHECK(all);
    CHECK(count == 36L * 216 * 343);
}
