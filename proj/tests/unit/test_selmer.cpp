#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <set>

#include "selmerforge/selmer.hpp"

using namespace sf;

namespace {

// Every (d1, d2) built from the generators, filtered place by place.
std::set<SelmerElement> brute_force(const StructureSpec& s)
{
    auto gens = s.generators();
    const size_t n = gens.size();
    std::set<SelmerElement> out;
    for (uint64_t m = 0; m < (uint64_t(1) << (2 * n)); ++m) {
        SelmerElement z;
        for (size_t i = 0; i < n; ++i) {
            if (m >> i & 1) z.d1 *= gens[i];
            if (m >> (n + i) & 1) z.d2 *= gens[i];
        }
        if (satisfies_all(s, z)) out.insert(z);
    }
    return out;
}

Curve random_curve(std::mt19937_64& rng, long range)
{
    for (;;) {
        long a = long(rng() % (2 * range + 1)) - range, b = long(rng() % (2 * range + 1)) - range;
        long c = long(rng() % (2 * range + 1)) - range;
        if (a != b && a != c && b != c) return new_curve(a, b, c);
    }
}

Int next_fresh_prime(const StructureSpec& s, Int from)
{
    auto gens = s.generators();
    for (;;) {
        mpz_nextprime(from.get_mpz_t(), from.get_mpz_t());
        if (std::find(gens.begin(), gens.end(), from) == gens.end()) return from;
    }
}

}  // namespace

TEST_CASE("known 2-Selmer ranks")
{
    auto e1 = new_curve(0, 1, -1);
    CHECK(sel2(e1).dim() == 2);
    auto e2 = new_curve(0, 5, -5);
    CHECK(sel2(e2).dim() == 3);
    for (auto* e : {&e1, &e2}) {
        StructureSpec s;
        s.curve = *e;
        s.t_primes = bad_primes(*e);
        auto g = sel2(*e);
        auto all = g.all_elements();
        CHECK(std::set<SelmerElement>(all.begin(), all.end()) == brute_force(s));
    }
}

TEST_CASE("kernel agrees with candidate filtering and contains point images")
{
    std::mt19937_64 rng(7);
    for (int t = 0; t < 20; ++t) {
        auto e = random_curve(rng, 30);
        StructureSpec s = default_spec(e);
        if (s.generators().size() > 8) {
            --t;
            continue;
        }
        auto g = structure_group(s);
        CAPTURE(e.str());
        auto all = g.all_elements();
        CHECK(std::set<SelmerElement>(all.begin(), all.end()) == brute_force(s));
        CHECK(g.dim() >= 2);
        // Standard structure with the default T is the 2-Selmer group.
        CHECK(g.dim() == sel2(e).dim());
        for (auto& p : search_points(e, 6)) {
            if (p.infinity || p.y == 0) continue;
            SelmerElement z{squarefree_part(p.x.get_num() * p.x.get_den() - e.a1 * p.x.get_den() * p.x.get_den()),
                            squarefree_part(p.x.get_num() * p.x.get_den() - e.a2 * p.x.get_den() * p.x.get_den())};
            CHECK(g.contains(z));
        }
        SelmerElement t1{squarefree_part(e.alpha * e.beta), squarefree_part(e.alpha)};
        CHECK(g.contains(t1));
    }
}

TEST_CASE("chain steps change the dimension by -2, 0 or 2 and both routes agree")
{
    std::mt19937_64 rng(99);
    int seen[3] = {0, 0, 0};
    for (int t = 0; t < 25; ++t) {
        auto e = random_curve(rng, 40);
        StructureSpec s = default_spec(e);
        Int q = 3;
        for (int step = 0; step < 4; ++step) {
            q = next_fresh_prime(s, q + Int(rng() % 40));
            if (e.disc % q == 0) continue;
            ChainLink link{q, unsigned(rng() & 1)};
            RankChange rc;
            REQUIRE_NOTHROW(rc = rank_change(s, link));
            CHECK((rc.n == -2 || rc.n == 0 || rc.n == 2));
            ++seen[rc.change_case - 1];
            s = extend(s, link);
        }
    }
    CHECK(seen[0] > 0);
    CHECK(seen[1] > 0);
    CHECK(seen[2] > 0);
}

TEST_CASE("twist identity")
{
    std::mt19937_64 rng(5);
    int checked = 0;
    while (checked < 25) {
        auto e = random_curve(rng, 20);
        auto base = default_spec(e);
        // d = product of one to three primes, a square at every place of T
        Int d = 1;
        unsigned k = 1 + unsigned(rng() % 3);
        Int q = 100 + Int(rng() % 200);
        for (unsigned i = 0; i < k; ++i) {
            q = next_fresh_prime(base, q);
            d *= q;
        }
        bool ok = d > 0;
        for (auto& p : base.t_primes) ok = ok && square_class_at(d, Place::finite(p)).trivial();
        if (!ok) continue;
        auto r = twist_chain_identity(e, d);
        CAPTURE(e.str());
        CAPTURE(to_string(d));
        CHECK(r.holds);
        ++checked;
    }
    CHECK_THROWS_AS(twist_chain_identity(new_curve(0, 1, -1), Int(-7)), InvalidArgument);
}

TEST_CASE("ray structures and the diagonal subspaces")
{
    auto e = new_curve(0, 5, -5);
    auto s = as_ray(default_spec(e));
    auto g = structure_group(s);
    // no chain: every class supported on the generators
    CHECK(g.dim() == 2 * s.generators().size());
    auto d = diag_dims(s);
    CHECK(d.dim_v1 == s.generators().size());
    CHECK(d.dim_v2 == s.generators().size());
    CHECK(d.dim_v3 == s.generators().size());
    auto s2 = extend(s, {101, 0});
    auto d2 = diag_dims(s2);
    for (auto& z : d2.v1) CHECK(z.d2 == 1);
    for (auto& z : d2.v2) CHECK(z.d1 == 1);
    for (auto& z : d2.v3) CHECK(z.d1 == z.d2);
    for (auto& z : structure_group(s2).basis) CHECK(satisfies_all(s2, z));
}

TEST_CASE("validation and projection")
{
    auto e = new_curve(0, 5, -5);
    auto s = default_spec(e);
    CHECK_THROWS_AS(structure_group(extend(s, {5, 0})), InvalidArgument);
    CHECK_THROWS_AS(structure_group(extend(extend(s, {13, 0}), {13, 1})), InvalidArgument);
    StructureSpec bad = s;
    bad.t_primes = {2, 3};
    CHECK_THROWS_AS(structure_group(bad), InvalidArgument);
    SelmerElement z{Int(-13 * 7), Int(17)};
    auto p = project_away(z, {{13, 13 * 3}, {17, 17 * 5}});
    CHECK(p == SelmerElement{Int(-21), Int(5)});
    CHECK(squarefree_product(6, 10) == 15);
    CHECK(squarefree_product(-6, 6) == -1);
}
