#pragma once

#include <optional>
#include <string>
#include <vector>

#include "selmerforge/localdescent.hpp"

namespace sf {

struct SelmerElement {
    Int d1 = 1, d2 = 1;  // squarefree representatives
    bool trivial() const { return d1 == 1 && d2 == 1; }
    bool operator==(const SelmerElement& o) const { return d1 == o.d1 && d2 == o.d2; }
    bool operator<(const SelmerElement& o) const { return d1 != o.d1 ? d1 < o.d1 : d2 < o.d2; }
    SelmerElement operator*(const SelmerElement& o) const;
    std::string str() const;
};

struct ChainLink {
    Int p;
    unsigned pi_bit = 0;  // pi = p * eps^pi_bit with eps the smallest non-residue mod p
    bool operator==(const ChainLink& o) const { return p == o.p && pi_bit == o.pi_bit; }
};

enum class SelmerMode { Standard, Ray };

struct StructureSpec {
    Curve curve;
    std::vector<Int> t_primes;  // finite places of T, ascending; always contains 2
    std::vector<ChainLink> chain;
    SelmerMode mode = SelmerMode::Standard;
    std::optional<Int> relaxed;  // extra place carrying the whole local group
    LocalImageOptions image_opt;

    std::vector<Int> generators() const;  // -1, T primes, chain primes, relaxed place
    std::vector<Place> constrained_places() const;
};

// T = {inf, 2, 3} and every prime dividing the discriminant.
StructureSpec default_spec(const Curve& e, const FactorOptions& opt = {});
void validate_spec(const StructureSpec& s);
StructureSpec extend(const StructureSpec& s, const ChainLink& link);
StructureSpec truncate(const StructureSpec& s, size_t length);
StructureSpec as_ray(const StructureSpec& s);

struct SelmerGroup {
    StructureSpec spec;
    std::vector<Int> generators;
    std::vector<F2Vec> coords;  // rref, length 2 * generators.size(): [x exponents | y exponents]
    std::vector<SelmerElement> basis;

    size_t dim() const { return basis.size(); }
    bool contains(const SelmerElement& z) const;
    // Coordinates over the generators, if z is supported on them.
    std::optional<F2Vec> coordinates(const SelmerElement& z) const;
    SelmerElement element(const F2Vec& c) const;
    std::vector<SelmerElement> all_elements() const;  // small groups only
};

SelmerGroup structure_group(const StructureSpec& s);
// 2-Selmer group of E over Q: support {-1, 2} and primes of the discriminant.
SelmerGroup sel2(const Curve& e, const FactorOptions& opt = {});

// Does z satisfy the condition of s at place v? Independent of the kernel computation.
bool satisfies_place(const StructureSpec& s, const SelmerElement& z, const Place& v);
bool satisfies_all(const StructureSpec& s, const SelmerElement& z);

// dim of the image of the group in H^1(Q_p, E[2]).
size_t restriction_dim(const SelmerGroup& g, const Int& p);
std::vector<F2Vec> restriction_image(const SelmerGroup& g, const Place& v);

struct RankChange {
    int n = 0;           // dim after - dim before
    int change_case = 3;  // 1: +2, 2: -2, 3: 0
    size_t dim_before = 0, dim_after = 0;
    size_t restriction_dim = 0;
    bool relaxed_image_matches = false;  // A equals the new local condition
};

// Computes the change directly and through the restriction/relaxed-image case analysis; they must agree.
RankChange rank_change(const StructureSpec& s, const ChainLink& next);

struct DiagState {
    size_t dim_v1 = 0, dim_v2 = 0, dim_v3 = 0;
    std::vector<SelmerElement> v1, v2, v3;
    size_t diag() const { return dim_v1 + dim_v2 + dim_v3; }
};
DiagState diag_dims(const StructureSpec& ray_spec);

struct TwistIdentityReport {
    Int d;
    size_t sel2_twist_dim = 0;
    size_t chain_dim = 0;
    std::vector<ChainLink> chain;
    bool holds = false;
};
TwistIdentityReport twist_chain_identity(const Curve& e, const Int& d, const FactorOptions& opt = {});

struct Companion {
    Int p;          // prime whose valuation drives the projection
    Int companion;  // the class removed per unit of valuation
};
SelmerElement project_away(const SelmerElement& z, const std::vector<Companion>& companions);

Int squarefree_product(const Int& a, const Int& b);

}  // namespace sf
