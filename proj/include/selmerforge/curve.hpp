#pragma once

#include <optional>
#include <string>
#include <vector>

#include "selmerforge/arith.hpp"

namespace sf {

struct Curve {
    Int a1, a2, a3;
    Int alpha, beta, gamma;  // a1-a2, a1-a3, a2-a3
    Int disc;                // 16 (alpha beta gamma)^2

    Rat rhs(const Rat& x) const { return (x - a1) * (x - a2) * (x - a3); }
    std::string str() const;
    bool operator==(const Curve& o) const { return a1 == o.a1 && a2 == o.a2 && a3 == o.a3; }
};

Curve new_curve(const Int& a1, const Int& a2, const Int& a3);
Curve quadratic_twist(const Curve& e, const Int& t);
// Odd primes dividing the discriminant, plus 2, sorted.
std::vector<Int> bad_primes(const Curve& e, const FactorOptions& opt = {});

struct Point {
    bool infinity = true;
    Rat x, y;
    static Point at_infinity() { return Point{}; }
    static Point affine(const Rat& x, const Rat& y) { return Point{false, x, y}; }
    bool operator==(const Point& o) const
    {
        return infinity == o.infinity && (infinity || (x == o.x && y == o.y));
    }
    std::string str() const;
};

bool on_curve(const Curve& e, const Point& p);
Point negate(const Point& p);
Point add_points(const Curve& e, const Point& p, const Point& q);
Point scalar_multiple(const Curve& e, long k, const Point& p);
// No multiple kP with 1 <= k <= 12 is the identity (Mazur bound over Q).
bool is_nontorsion(const Curve& e, const Point& p);
// Affine points with |num(x)|, den(x) <= bound, ordered by (den, num, sign of y).
std::vector<Point> search_points(const Curve& e, long bound);

enum class Reduction { Good, SplitMultiplicative, NonsplitMultiplicative, AdditivePotentiallyGood, OutsideScope };
const char* reduction_name(Reduction r);

struct ReductionInfo {
    Reduction type = Reduction::OutsideScope;
    unsigned disc_valuation = 0;  // of the scaled (p-minimal) model
};

ReductionInfo reduction_info(const Curve& e, const Int& p);
Reduction reduction_type(const Curve& e, const Int& p);

}  // namespace sf
