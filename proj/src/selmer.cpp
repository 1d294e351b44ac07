#include "selmerforge/selmer.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace sf {

Int squarefree_product(const Int& a, const Int& b)
{
    Int g;
    mpz_gcd(g.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
    Int r = a * b;
    if (g != 0) r /= g * g;
    return r;
}

SelmerElement SelmerElement::operator*(const SelmerElement& o) const
{
    return {squarefree_product(d1, o.d1), squarefree_product(d2, o.d2)};
}

std::string SelmerElement::str() const { return "(" + to_string(d1) + "," + to_string(d2) + ")"; }

std::vector<Int> StructureSpec::generators() const
{
    std::vector<Int> g = {-1};
    for (auto& p : t_primes) g.push_back(p);
    for (auto& c : chain) g.push_back(c.p);
    if (relaxed) g.push_back(*relaxed);
    return g;
}

std::vector<Place> StructureSpec::constrained_places() const
{
    std::vector<Place> out;
    if (mode == SelmerMode::Standard) {
        out.push_back(Place::infinity());
        for (auto& p : t_primes) out.push_back(Place::finite(p));
    }
    for (auto& c : chain) out.push_back(Place::finite(c.p));
    return out;
}

StructureSpec default_spec(const Curve& e, const FactorOptions& opt)
{
    StructureSpec s;
    s.curve = e;
    std::set<Int> t;
    for (auto& p : bad_primes(e, opt)) t.insert(p);
    t.insert(2);
    t.insert(3);
    s.t_primes.assign(t.begin(), t.end());
    return s;
}

void validate_spec(const StructureSpec& s)
{
    std::set<Int> seen;
    bool has_two = false;
    for (auto& p : s.t_primes) {
        if (p < 2 || !is_probable_prime(p)) throw InvalidArgument("structure: T entry " + to_string(p) + " is not prime");
        if (!seen.insert(p).second) throw InvalidArgument("structure: T repeats " + to_string(p));
        has_two |= p == 2;
    }
    if (!has_two) throw InvalidArgument("structure: T must contain 2");
    // T must cover every bad prime; strip T from alpha beta gamma and look at what is left.
    for (const Int* a : {&s.curve.alpha, &s.curve.beta, &s.curve.gamma}) {
        Int rest = abs(*a);
        for (auto& p : s.t_primes) valuation(rest, p, &rest);
        if (rest != 1) throw InvalidArgument("structure: T misses a prime dividing the discriminant");
    }
    for (auto& c : s.chain) {
        if (c.p <= 2 || !is_probable_prime(c.p)) throw InvalidArgument("structure: chain place " + to_string(c.p) + " is not an odd prime");
        if (c.pi_bit > 1) throw InvalidArgument("structure: pi bit must be 0 or 1");
        if (!seen.insert(c.p).second) throw InvalidArgument("structure: chain place " + to_string(c.p) + " repeats or lies in T");
    }
    if (s.relaxed) {
        const Int& q = *s.relaxed;
        if (q <= 2 || !is_probable_prime(q)) throw InvalidArgument("structure: relaxed place must be an odd prime");
        if (seen.count(q)) throw InvalidArgument("structure: relaxed place already used");
    }
}

StructureSpec extend(const StructureSpec& s, const ChainLink& link)
{
    StructureSpec n = s;
    n.chain.push_back(link);
    return n;
}

StructureSpec truncate(const StructureSpec& s, size_t length)
{
    if (length > s.chain.size()) throw InvalidArgument("truncate: chain is shorter than requested");
    StructureSpec n = s;
    n.chain.resize(length);
    return n;
}

StructureSpec as_ray(const StructureSpec& s)
{
    StructureSpec n = s;
    n.mode = SelmerMode::Ray;
    return n;
}

namespace {

LocalSpace condition_at(const StructureSpec& s, const Place& v)
{
    for (auto& c : s.chain)
        if (Place::finite(c.p) == v)
            return local_condition({ConditionKind::TwistedPair, uniformizer_class(c.p, c.pi_bit)}, s.curve, v, s.image_opt);
    if (s.relaxed && Place::finite(*s.relaxed) == v) return full_space(v);
    if (v.is_infinite() || std::find(s.t_primes.begin(), s.t_primes.end(), v.p) != s.t_primes.end()) {
        if (s.mode == SelmerMode::Ray) return full_space(v);
        return local_image(s.curve, v, s.image_opt);
    }
    return unramified_space(v);
}

}  // namespace

SelmerGroup structure_group(const StructureSpec& s)
{
    validate_spec(s);
    SelmerGroup g;
    g.spec = s;
    g.generators = s.generators();
    const size_t ng = g.generators.size();

    // Each domain coordinate maps to the concatenation, over constrained places, of
    // the annihilator functionals of the local condition evaluated on its restriction.
    std::vector<F2Vec> images(2 * ng);
    std::vector<std::vector<F2Vec>> parts(2 * ng);
    for (const Place& v : s.constrained_places()) {
        LocalSpace cond = condition_at(s, v);
        auto ann = annihilator(cond.basis, cond.ambient());
        if (ann.empty()) continue;
        LocalClass one{v, 0};
        for (size_t i = 0; i < ng; ++i) {
            LocalClass c = square_class_at(g.generators[i], v);
            F2Vec rx = pair_vector(c, one), ry = pair_vector(one, c);
            F2Vec fx(ann.size()), fy(ann.size());
            for (size_t k = 0; k < ann.size(); ++k) {
                fx.set(k, ann[k].dot(rx));
                fy.set(k, ann[k].dot(ry));
            }
            parts[i].push_back(fx);
            parts[ng + i].push_back(fy);
        }
    }
    for (size_t i = 0; i < 2 * ng; ++i) {
        F2Vec acc(0);
        for (auto& p : parts[i]) acc = acc.concat(p);
        images[i] = acc;
    }
    g.coords = kernel(images, 2 * ng);
    for (auto& c : g.coords) g.basis.push_back(g.element(c));
    return g;
}

SelmerGroup sel2(const Curve& e, const FactorOptions& opt)
{
    StructureSpec s;
    s.curve = e;
    s.t_primes = bad_primes(e, opt);
    return structure_group(s);
}

SelmerElement SelmerGroup::element(const F2Vec& c) const
{
    const size_t ng = generators.size();
    if (c.size() != 2 * ng) throw InvalidArgument("element: coordinate length mismatch");
    SelmerElement z;
    for (size_t i = 0; i < ng; ++i) {
        if (c.get(i)) z.d1 *= generators[i];
        if (c.get(ng + i)) z.d2 *= generators[i];
    }
    return z;
}

std::optional<F2Vec> SelmerGroup::coordinates(const SelmerElement& z) const
{
    const size_t ng = generators.size();
    F2Vec c(2 * ng);
    auto fill = [&](Int x, size_t off) {
        if (x == 0) return false;
        if (x < 0) {
            c.set(off + 0);
            x = -x;
        }
        for (size_t i = 1; i < ng; ++i) {
            unsigned k = valuation(x, generators[i], &x);
            if (k & 1) c.set(off + i);
        }
        if (x == 1) return true;
        // a leftover square is harmless
        return mpz_perfect_square_p(x.get_mpz_t()) != 0;
    };
    if (!fill(z.d1, 0) || !fill(z.d2, ng)) return std::nullopt;
    return c;
}

bool SelmerGroup::contains(const SelmerElement& z) const
{
    auto c = coordinates(z);
    return c && in_span(coords, *c);
}

std::vector<SelmerElement> SelmerGroup::all_elements() const
{
    if (dim() > 20) throw InvalidArgument("all_elements: group too large to list");
    std::vector<SelmerElement> out;
    for (uint64_t m = 0; m < (uint64_t(1) << dim()); ++m) {
        F2Vec c(2 * generators.size());
        for (size_t i = 0; i < dim(); ++i)
            if (m >> i & 1) c ^= coords[i];
        out.push_back(element(c));
    }
    return out;
}

bool satisfies_place(const StructureSpec& s, const SelmerElement& z, const Place& v)
{
    return condition_at(s, v).contains(restrict_pair(z.d1, z.d2, v));
}

bool satisfies_all(const StructureSpec& s, const SelmerElement& z)
{
    if (z.d1 == 0 || z.d2 == 0) return false;
    // Outside the generator support every place is unramified: the valuation there must be even.
    auto gens = s.generators();
    for (const Int* d : {&z.d1, &z.d2}) {
        Int rest = abs(*d);
        for (size_t i = 1; i < gens.size(); ++i) valuation(rest, gens[i], &rest);
        if (!mpz_perfect_square_p(rest.get_mpz_t())) return false;
    }
    for (const Place& v : s.constrained_places())
        if (!satisfies_place(s, z, v)) return false;
    return true;
}

std::vector<F2Vec> restriction_image(const SelmerGroup& g, const Place& v)
{
    std::vector<F2Vec> rows;
    for (auto& z : g.basis) rows.push_back(restrict_pair(z.d1, z.d2, v));
    return rref(rows);
}

size_t restriction_dim(const SelmerGroup& g, const Int& p) { return restriction_image(g, Place::finite(p)).size(); }

RankChange rank_change(const StructureSpec& s, const ChainLink& next)
{
    StructureSpec after = extend(s, next);
    validate_spec(after);
    RankChange rc;
    SelmerGroup before = structure_group(s);
    rc.dim_before = before.dim();
    rc.dim_after = structure_group(after).dim();
    rc.n = int(rc.dim_after) - int(rc.dim_before);

    Place q = Place::finite(next.p);
    rc.restriction_dim = restriction_dim(before, next.p);
    StructureSpec relaxed = s;
    relaxed.relaxed = next.p;
    auto a = restriction_image(structure_group(relaxed), q);
    LocalSpace target = condition_at(after, q);
    rc.relaxed_image_matches = a == target.basis;

    int predicted;
    if (rc.restriction_dim == 2) {
        rc.change_case = 2;
        predicted = -2;
    } else if (rc.restriction_dim == 0 && rc.relaxed_image_matches) {
        rc.change_case = 1;
        predicted = 2;
    } else {
        rc.change_case = 3;
        predicted = 0;
    }
    if (predicted != rc.n) {
        std::ostringstream os;
        os << "rank_change: direct computation gives " << rc.n << " but the restriction analysis gives " << predicted
           << " at " << to_string(next.p) << " (restriction dim " << rc.restriction_dim << ")";
        throw ConsistencyViolation(os.str());
    }
    return rc;
}

DiagState diag_dims(const StructureSpec& ray_spec)
{
    StructureSpec s = ray_spec;
    s.mode = SelmerMode::Ray;
    SelmerGroup g = structure_group(s);
    const size_t ng = g.generators.size();
    std::vector<F2Vec> xs, ys, diag;
    for (size_t i = 0; i < ng; ++i) {
        F2Vec a(2 * ng), b(2 * ng);
        a.set(i);
        b.set(ng + i);
        xs.push_back(a);
        ys.push_back(b);
        diag.push_back(a ^ b);
    }
    DiagState d;
    auto fill = [&](const std::vector<F2Vec>& sub, std::vector<SelmerElement>& out) {
        for (auto& c : intersect(g.coords, rref(sub))) out.push_back(g.element(c));
        return out.size();
    };
    d.dim_v1 = fill(xs, d.v1);
    d.dim_v2 = fill(ys, d.v2);
    d.dim_v3 = fill(diag, d.v3);
    return d;
}

TwistIdentityReport twist_chain_identity(const Curve& e, const Int& d, const FactorOptions& opt)
{
    if (d == 0 || d == 1) throw InvalidArgument("twist identity: d must be a squarefree integer other than 1");
    if (squarefree_part(d, opt) != d) throw InvalidArgument("twist identity: d must be squarefree");
    StructureSpec base = default_spec(e, opt);
    if (d < 0) throw InvalidArgument("twist identity: d must be positive at the real place");
    for (auto& p : base.t_primes)
        if (!square_class_at(d, Place::finite(p)).trivial())
            throw InvalidArgument("twist identity: d is not a local square at " + to_string(p));

    TwistIdentityReport r;
    r.d = d;
    auto ram = prime_divisors(d, opt);
    if (ram.empty()) throw InvalidArgument("twist identity: d must be divisible by a prime outside T");
    for (size_t i = 0; i + 1 < ram.size(); ++i) {
        const Int& p = ram[i];
        Int unit = d / p;
        r.chain.push_back({p, jacobi_symbol(unit, p) == 1 ? 0u : 1u});
    }
    StructureSpec s = base;
    s.chain = r.chain;
    r.chain_dim = structure_group(s).dim();
    r.sel2_twist_dim = sel2(quadratic_twist(e, d), opt).dim();
    r.holds = r.sel2_twist_dim == 2 + r.chain_dim;
    return r;
}

SelmerElement project_away(const SelmerElement& z, const std::vector<Companion>& companions)
{
    auto strip = [&](const Int& x) {
        Int out = x;
        for (auto& c : companions)
            if (mpz_divisible_p(x.get_mpz_t(), c.p.get_mpz_t()) && valuation(x, c.p) % 2 == 1)
                out = squarefree_product(out, c.companion);
        return out;
    };
    return {strip(z.d1), strip(z.d2)};
}

}  // namespace sf
