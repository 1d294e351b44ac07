#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "selmerforge/curve.hpp"
#include "selmerforge/f2.hpp"

namespace sf {

// Subgroup of (Q_v*/Q_v*^2)^2. Vectors are [bits of x | bits of y], each block LocalClass::dim(place) wide.
struct LocalSpace {
    Place place;
    std::vector<F2Vec> basis;  // rref

    unsigned block() const { return LocalClass::dim(place); }
    unsigned ambient() const { return 2 * block(); }
    size_t dim() const { return basis.size(); }
    bool contains(const F2Vec& v) const { return in_span(basis, v); }
    bool operator==(const LocalSpace& o) const { return place == o.place && basis == o.basis; }
    // Pairs of integer representatives, one per basis vector.
    std::vector<std::pair<Int, Int>> representatives() const;
    std::string str() const;
};

F2Vec pair_vector(const LocalClass& x, const LocalClass& y);
std::pair<LocalClass, LocalClass> pair_classes(const Place& v, const F2Vec& vec);
F2Vec restrict_pair(const Int& d1, const Int& d2, const Place& v);
F2Vec restrict_pair(const Rat& d1, const Rat& d2, const Place& v);
LocalSpace span_of(const Place& v, const std::vector<F2Vec>& vecs);
bool member(const LocalSpace& space, const Int& d1, const Int& d2);

// ((x,y),(x',y')) -> (x,y')_v (x',y)_v, as 0/1 for +1/-1.
bool pairing(const Place& v, const F2Vec& a, const F2Vec& b);
// q(x,y) = (alpha beta x, -alpha gamma y)_v, as 0/1.
bool quadratic_form(const Curve& e, const Place& v, const F2Vec& a);
bool is_isotropic(const Curve& e, const LocalSpace& s);

struct LocalImageOptions {
    int window = -1;        // valuation window half-width; default 2 v(disc) + 8
    unsigned max_multiplier = 64;
};

// Images of the 2-torsion points, using the product rule at a root.
std::vector<F2Vec> torsion_images(const Curve& e, const Place& v);
// delta(E(Q_v)) by torsion seeds plus enumeration of rational points of E(Q_v).
LocalSpace local_image(const Curve& e, const Place& v, const LocalImageOptions& opt = {});
// The split-multiplicative closed forms when their hypotheses hold at p, otherwise empty.
std::optional<LocalSpace> closed_form_image(const Curve& e, const Int& p);
unsigned expected_image_dim(const Place& v);

enum class ConditionKind { Unramified, Full, ImageOfE, TwistedPair };

struct LocalCondition {
    ConditionKind kind = ConditionKind::Unramified;
    LocalClass pi;  // TwistedPair only
};

LocalSpace local_condition(const LocalCondition& c, const Curve& e, const Place& v,
                           const LocalImageOptions& opt = {});
LocalSpace unramified_space(const Place& v);
LocalSpace full_space(const Place& v);
// span{(alpha beta, pi alpha), (-pi alpha, -alpha gamma)} at the place of pi.
LocalSpace twisted_pair_space(const Curve& e, const LocalClass& pi);
// The two odd-valuation classes at an odd prime p: bit 0 gives p, bit 1 gives eps p.
LocalClass uniformizer_class(const Int& p, unsigned pi_bit);

}  // namespace sf
