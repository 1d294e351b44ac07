#include "selmerforge/rootnumber.hpp"

#include "selmerforge/selmer.hpp"

namespace sf {

const char* sign_name(Sign s)
{
    switch (s) {
    case Sign::Plus: return "+1";
    case Sign::Minus: return "-1";
    case Sign::Unknown: return "unknown";
    }
    return "?";
}

Sign sign_of(int v) { return v > 0 ? Sign::Plus : Sign::Minus; }

int sign_value(Sign s)
{
    if (s == Sign::Unknown) throw InvalidArgument("sign_value: unknown sign");
    return s == Sign::Plus ? 1 : -1;
}

LocalRootNumber local_root_number(const Curve& e, const Place& v)
{
    LocalRootNumber r{v, Sign::Unknown, "outside scope"};
    if (v.is_infinite() || v.p == 2 || v.p == 3) {
        r.rule = "residue characteristic 2 or 3, or real place: not covered";
        return r;
    }
    ReductionInfo info = reduction_info(e, v.p);
    switch (info.type) {
    case Reduction::Good: r.value = Sign::Plus; r.rule = "good"; break;
    case Reduction::SplitMultiplicative: r.value = Sign::Minus; r.rule = "split multiplicative"; break;
    case Reduction::NonsplitMultiplicative: r.value = Sign::Plus; r.rule = "non-split multiplicative"; break;
    case Reduction::AdditivePotentiallyGood: {
        Int e12 = Int(info.disc_valuation) * v.p / 12;
        r.value = mpz_odd_p(e12.get_mpz_t()) ? Sign::Minus : Sign::Plus;
        r.rule = "additive potentially good: floor(v(disc) p / 12) = " + to_string(e12);
        break;
    }
    case Reduction::OutsideScope: r.rule = "additive reduction outside the covered cases"; break;
    }
    return r;
}

RootNumberReport root_number_report(const Curve& e, const FactorOptions& opt)
{
    RootNumberReport rep;
    rep.factors.push_back(local_root_number(e, Place::infinity()));
    for (auto& p : bad_primes(e, opt)) rep.factors.push_back(local_root_number(e, Place::finite(p)));
    int prod = 1;
    bool known = true;
    for (auto& f : rep.factors) {
        if (f.value == Sign::Unknown) known = false;
        else prod *= sign_value(f.value);
    }
    rep.global = known ? sign_of(prod) : Sign::Unknown;
    return rep;
}

int twist_ratio_formula(const Int& q)
{
    if (q <= 2) throw InvalidArgument("twist ratio: q must be an odd prime");
    return mpz_fdiv_ui(q.get_mpz_t(), 4) == 1 ? -1 : 1;
}

TwistAdmissibility twist_admissibility(const Curve& e, const Int& q, const FactorOptions& opt)
{
    TwistAdmissibility a;
    auto fail = [&](const std::string& why) {
        a.failure = why;
        return a;
    };
    if (q <= 0) return fail("q must be positive");
    if (!is_probable_prime(q)) return fail("q must be prime");
    if (q == 2 || q == 3) return fail("q must be prime to 6");
    if (!square_class_at(q, Place::finite(2)).trivial()) return fail("q must be a square at 2 (q = 1 mod 8)");
    if (!square_class_at(q, Place::finite(3)).trivial()) return fail("q must be a square at 3 (q = 1 mod 3)");
    if (e.disc % q == 0) return fail("q must not divide the discriminant");
    int nonsquare = 0;
    for (auto& p : bad_primes(e, opt)) {
        if (p == 2 || p == 3) continue;
        if (jacobi_symbol(q, p) == 1) continue;
        ++nonsquare;
        if (reduction_type(e, p) != Reduction::SplitMultiplicative)
            return fail("q is a non-square at " + to_string(p) + ", which is not split multiplicative");
        a.place = p;
    }
    if (nonsquare != 1) return fail("q must be a non-square at exactly one bad prime, found " + std::to_string(nonsquare));
    a.ok = true;
    return a;
}

int twist_parity_ratio(const Curve& e, const Int& q, const FactorOptions& opt)
{
    auto a = twist_admissibility(e, q, opt);
    if (!a.ok) throw InvalidArgument("twist_parity_ratio: " + a.failure);
    return twist_ratio_formula(q);
}

ParityReport parity_crosscheck(const Curve& e, const FactorOptions& opt)
{
    ParityReport r;
    r.selmer_dim = sel2(e, opt).dim();
    r.selmer_parity = r.selmer_dim % 2 ? Sign::Minus : Sign::Plus;
    r.root = root_number_report(e, opt);
    if (r.root.global != Sign::Unknown) r.verdict = r.root.global == r.selmer_parity ? Sign::Plus : Sign::Minus;
    return r;
}

TwistParityReport twist_parity_crosscheck(const Curve& e, const Int& q, const FactorOptions& opt)
{
    TwistParityReport r;
    r.ratio = twist_parity_ratio(e, q, opt);
    r.dim_base = sel2(e, opt).dim();
    r.dim_twist = sel2(quadratic_twist(e, q), opt).dim();
    r.flips = (r.dim_base + r.dim_twist) % 2 == 1;
    r.agrees = r.flips == (r.ratio == -1);
    return r;
}

}  // namespace sf
