#include "selmerforge/curve.hpp"

#include <algorithm>
#include <numeric>

namespace sf {

std::string Curve::str() const { return "[" + to_string(a1) + "," + to_string(a2) + "," + to_string(a3) + "]"; }

Curve new_curve(const Int& a1, const Int& a2, const Int& a3)
{
    if (a1 == a2 || a1 == a3 || a2 == a3)
        throw InvalidArgument("curve: roots must be pairwise distinct, got " + to_string(a1) + "," + to_string(a2) +
                              "," + to_string(a3));
    Curve e;
    e.a1 = a1;
    e.a2 = a2;
    e.a3 = a3;
    e.alpha = a1 - a2;
    e.beta = a1 - a3;
    e.gamma = a2 - a3;
    Int abc = e.alpha * e.beta * e.gamma;
    e.disc = 16 * abc * abc;
    return e;
}

Curve quadratic_twist(const Curve& e, const Int& t)
{
    if (t == 0) throw InvalidArgument("twist by zero");
    return new_curve(t * e.a1, t * e.a2, t * e.a3);
}

std::vector<Int> bad_primes(const Curve& e, const FactorOptions& opt)
{
    std::set<Int> s{Int(2)};
    for (const Int* d : {&e.alpha, &e.beta, &e.gamma})
        for (const Int& p : prime_divisors(*d, opt)) s.insert(p);
    return {s.begin(), s.end()};
}

std::string Point::str() const
{
    if (infinity) return "inf";
    return "(" + to_string(x) + "," + to_string(y) + ")";
}

bool on_curve(const Curve& e, const Point& p) { return p.infinity || p.y * p.y == e.rhs(p.x); }

Point negate(const Point& p) { return p.infinity ? p : Point::affine(p.x, -p.y); }

Point add_points(const Curve& e, const Point& p, const Point& q)
{
    if (!on_curve(e, p) || !on_curve(e, q)) throw InvalidArgument("add_points: point not on curve");
    if (p.infinity) return q;
    if (q.infinity) return p;
    // y^2 = x^3 + A x^2 + B x + C with A = -(a1+a2+a3)
    Rat A = -(Rat(e.a1) + e.a2 + e.a3);
    Rat B = Rat(e.a1 * e.a2 + e.a1 * e.a3 + e.a2 * e.a3);
    Rat slope;
    if (p.x == q.x) {
        if (p.y != q.y || p.y == 0) return Point::at_infinity();
        slope = (3 * p.x * p.x + 2 * A * p.x + B) / (2 * p.y);
    } else {
        slope = (q.y - p.y) / (q.x - p.x);
    }
    Rat x3 = slope * slope - A - p.x - q.x;
    Rat y3 = slope * (p.x - x3) - p.y;
    return Point::affine(x3, y3);
}

Point scalar_multiple(const Curve& e, long k, const Point& p)
{
    if (!on_curve(e, p)) throw InvalidArgument("scalar_multiple: point not on curve");
    Point base = k < 0 ? negate(p) : p;
    unsigned long n = k < 0 ? static_cast<unsigned long>(-k) : static_cast<unsigned long>(k);
    Point acc = Point::at_infinity();
    while (n) {
        if (n & 1) acc = add_points(e, acc, base);
        base = add_points(e, base, base);
        n >>= 1;
    }
    return acc;
}

bool is_nontorsion(const Curve& e, const Point& p)
{
    if (!on_curve(e, p)) throw InvalidArgument("is_nontorsion: point not on curve");
    if (p.infinity) return false;
    Point acc = p;
    for (int k = 2; k <= 12; ++k) {
        acc = add_points(e, acc, p);
        if (acc.infinity) return false;
    }
    return true;
}

std::vector<Point> search_points(const Curve& e, long bound)
{
    std::vector<Point> out;
    for (long s = 1; s * s <= bound; ++s) {
        long den = s * s;
        for (long num = -bound; num <= bound; ++num) {
            if (std::gcd(std::abs(num), den) != 1) continue;
            Int prod = (Int(num) - e.a1 * den) * (Int(num) - e.a2 * den) * (Int(num) - e.a3 * den);
            if (prod < 0 || !mpz_perfect_square_p(prod.get_mpz_t())) continue;
            Int r = sqrt(prod);
            Rat x{Int(num), Int(den)};
            Rat y{r, Int(s) * s * s};
            x.canonicalize();
            y.canonicalize();
            if (y == 0) {
                out.push_back(Point::affine(x, y));
            } else {
                out.push_back(Point::affine(x, -y));
                out.push_back(Point::affine(x, y));
            }
        }
    }
    return out;
}

const char* reduction_name(Reduction r)
{
    switch (r) {
    case Reduction::Good: return "good";
    case Reduction::SplitMultiplicative: return "split-multiplicative";
    case Reduction::NonsplitMultiplicative: return "nonsplit-multiplicative";
    case Reduction::AdditivePotentiallyGood: return "additive-potentially-good";
    case Reduction::OutsideScope: return "outside-scope";
    }
    return "?";
}

ReductionInfo reduction_info(const Curve& e, const Int& p)
{
    if (!is_probable_prime(p)) throw InvalidArgument("reduction_type: " + to_string(p) + " is not prime");
    ReductionInfo info;
    if (p == 2 || p == 3) return info;
    unsigned va = valuation(e.alpha, p), vb = valuation(e.beta, p), vg = valuation(e.gamma, p);
    unsigned m = std::min({va, vb, vg});
    // x -> p^2 x removes p^2 from every root difference while m >= 2.
    unsigned shift = 2 * (m / 2);
    va -= shift;
    vb -= shift;
    vg -= shift;
    info.disc_valuation = 2 * (va + vb + vg);
    unsigned divisible = (va > 0) + (vb > 0) + (vg > 0);
    if (divisible == 0) {
        info.type = Reduction::Good;
        return info;
    }
    if (divisible == 1) {
        // Node at the colliding pair; tangent slopes are the square roots of (node - third root).
        Int pk;
        mpz_pow_ui(pk.get_mpz_t(), p.get_mpz_t(), shift);
        Int slope_sq;
        if (va > 0) slope_sq = e.beta;
        else if (vb > 0) slope_sq = e.alpha;
        else slope_sq = -e.alpha;
        slope_sq /= pk;
        info.type = jacobi_symbol(slope_sq, p) == 1 ? Reduction::SplitMultiplicative
                                                    : Reduction::NonsplitMultiplicative;
        return info;
    }
    if (va == 1 && vb == 1 && vg == 1) info.type = Reduction::AdditivePotentiallyGood;
    return info;
}

Reduction reduction_type(const Curve& e, const Int& p) { return reduction_info(e, p).type; }

}  // namespace sf
