#include "selmerforge/localdescent.hpp"

#include <map>
#include <mutex>
#include <sstream>

namespace sf {

F2Vec pair_vector(const LocalClass& x, const LocalClass& y)
{
    unsigned d = LocalClass::dim(x.place);
    F2Vec v(2 * d);
    for (unsigned i = 0; i < d; ++i) {
        if (x.bits >> i & 1) v.set(i);
        if (y.bits >> i & 1) v.set(d + i);
    }
    return v;
}

std::pair<LocalClass, LocalClass> pair_classes(const Place& v, const F2Vec& vec)
{
    unsigned d = LocalClass::dim(v);
    LocalClass x{v, 0}, y{v, 0};
    for (unsigned i = 0; i < d; ++i) {
        if (vec.get(i)) x.bits |= 1u << i;
        if (vec.get(d + i)) y.bits |= 1u << i;
    }
    return {x, y};
}

F2Vec restrict_pair(const Int& d1, const Int& d2, const Place& v)
{
    return pair_vector(square_class_at(d1, v), square_class_at(d2, v));
}

F2Vec restrict_pair(const Rat& d1, const Rat& d2, const Place& v)
{
    return pair_vector(square_class_at(d1, v), square_class_at(d2, v));
}

LocalSpace span_of(const Place& v, const std::vector<F2Vec>& vecs) { return LocalSpace{v, rref(vecs)}; }

bool member(const LocalSpace& space, const Int& d1, const Int& d2)
{
    return space.contains(restrict_pair(d1, d2, space.place));
}

std::vector<std::pair<Int, Int>> LocalSpace::representatives() const
{
    std::vector<std::pair<Int, Int>> out;
    for (auto& b : basis) {
        auto [x, y] = pair_classes(place, b);
        out.emplace_back(local_class_representative(x), local_class_representative(y));
    }
    return out;
}

std::string LocalSpace::str() const
{
    std::ostringstream os;
    os << place.str() << ":<";
    bool first = true;
    for (auto& [x, y] : representatives()) {
        if (!first) os << ",";
        first = false;
        os << "(" << to_string(x) << "," << to_string(y) << ")";
    }
    os << ">";
    return os.str();
}

bool pairing(const Place& v, const F2Vec& a, const F2Vec& b)
{
    auto [x, y] = pair_classes(v, a);
    auto [x2, y2] = pair_classes(v, b);
    return (hilbert_symbol(x, y2) * hilbert_symbol(x2, y)) == -1;
}

bool quadratic_form(const Curve& e, const Place& v, const F2Vec& a)
{
    auto [x, y] = pair_classes(v, a);
    LocalClass ab = square_class_at(Int(e.alpha * e.beta), v);
    LocalClass mag = square_class_at(Int(-e.alpha * e.gamma), v);
    return hilbert_symbol(ab * x, mag * y) == -1;
}

bool is_isotropic(const Curve& e, const LocalSpace& s)
{
    for (size_t i = 0; i < s.basis.size(); ++i) {
        if (quadratic_form(e, s.place, s.basis[i])) return false;
        for (size_t j = i + 1; j < s.basis.size(); ++j)
            if (pairing(s.place, s.basis[i], s.basis[j])) return false;
    }
    return true;
}

unsigned expected_image_dim(const Place& v) { return v.is_infinite() ? 1 : (v.is_two() ? 3 : 2); }

std::vector<F2Vec> torsion_images(const Curve& e, const Place& v)
{
    auto cl = [&v](const Int& x) { return square_class_at(x, v); };
    return {
        pair_vector(cl(e.alpha * e.beta), cl(e.alpha)),
        pair_vector(cl(-e.alpha), cl(-e.alpha * e.gamma)),
        pair_vector(cl(-e.beta), cl(-e.gamma)),
    };
}

namespace {

std::mutex image_cache_mu;
std::map<std::string, LocalSpace> image_cache;

std::string cache_key(const Curve& e, const Place& v, const LocalImageOptions& opt)
{
    return e.str() + "@" + v.str() + "/" + std::to_string(opt.window) + "/" + std::to_string(opt.max_multiplier);
}

LocalSpace compute_image(const Curve& e, const Place& v, const LocalImageOptions& opt)
{
    const unsigned target = expected_image_dim(v);
    std::vector<F2Vec> found = rref(torsion_images(e, v));
    auto add = [&](const Rat& x) {
        found = rref([&] {
            auto f = found;
            f.push_back(restrict_pair(Rat(x - e.a1), Rat(x - e.a2), v));
            return f;
        }());
    };

    if (v.is_infinite()) {
        Int lo = std::min({e.a1, e.a2, e.a3}), hi = std::max({e.a1, e.a2, e.a3});
        Int mid = e.a1 + e.a2 + e.a3 - lo - hi;
        add(Rat(lo + mid) / 2);
    } else if (!mpz_divisible_p(e.disc.get_mpz_t(), v.p.get_mpz_t()) && !v.is_two()) {
        // good odd place: the unramified subgroup, which has the right dimension
        return unramified_space(v);
    } else {
        int window = opt.window;
        if (window < 0) window = 2 * static_cast<int>(valuation(e.disc, v.p)) + 8;
        std::vector<Int> centers = {0, e.a1, e.a2, e.a3};
        for (unsigned n = 1; n <= opt.max_multiplier && found.size() < target; ++n) {
            for (int ex = -window; ex <= window && found.size() < target; ++ex) {
                Rat step;
                Int pe;
                mpz_pow_ui(pe.get_mpz_t(), v.p.get_mpz_t(), static_cast<unsigned long>(std::abs(ex)));
                step = ex >= 0 ? Rat(pe * n) : Rat(Int(n), pe);
                for (const Int& c : centers) {
                    for (int sgn : {1, -1}) {
                        Rat x = Rat(c) + sgn * step;
                        Rat fx = e.rhs(x);
                        if (fx == 0) continue;
                        if (!square_class_at(fx, v).trivial()) continue;
                        if (x == e.a1 || x == e.a2) continue;
                        F2Vec cls = restrict_pair(Rat(x - e.a1), Rat(x - e.a2), v);
                        if (!in_span(found, cls)) {
                            found.push_back(cls);
                            found = rref(found);
                        }
                    }
                }
            }
        }
    }
    if (found.size() > target)
        throw ConsistencyViolation("local_image: found " + std::to_string(found.size()) + " classes at " + v.str() +
                                   " for " + e.str() + ", more than the local dimension");
    if (found.size() < target)
        throw SearchFailure("local_image: enumeration at " + v.str() + " for " + e.str() + " reached only dimension " +
                            std::to_string(found.size()) + " of " + std::to_string(target) +
                            "; raise the lifting window or multiplier bound");
    LocalSpace s{v, found};
    if (!is_isotropic(e, s))
        throw ConsistencyViolation("local_image: image at " + v.str() + " for " + e.str() + " is not isotropic");
    return s;
}

}  // namespace

LocalSpace local_image(const Curve& e, const Place& v, const LocalImageOptions& opt)
{
    std::string key = cache_key(e, v, opt);
    {
        std::lock_guard<std::mutex> lock(image_cache_mu);
        auto it = image_cache.find(key);
        if (it != image_cache.end()) return it->second;
    }
    LocalSpace s = compute_image(e, v, opt);
    std::lock_guard<std::mutex> lock(image_cache_mu);
    return image_cache.emplace(key, s).first->second;
}

std::optional<LocalSpace> closed_form_image(const Curve& e, const Int& p)
{
    if (p <= 2 || mpz_fdiv_ui(p.get_mpz_t(), 4) != 1) return std::nullopt;
    Place v = Place::finite(p);
    auto unit_square = [&](const Int& x) { return x % p != 0 && jacobi_symbol(x, p) == 1; };
    LocalClass pi = uniformizer_class(p, 0);
    LocalClass eps = local_class_from(v, false, 1);
    LocalClass one{v, 0};
    auto odd = [&](const Int& x) { return x != 0 && valuation(x, p) % 2 == 1; };
    if (odd(e.alpha) && unit_square(e.beta) && unit_square(e.gamma))
        return span_of(v, {pair_vector(pi, pi), pair_vector(eps, eps)});
    if (odd(e.beta) && unit_square(e.alpha) && unit_square(e.gamma))
        return span_of(v, {pair_vector(pi, one), pair_vector(eps, one)});
    if (odd(e.gamma) && unit_square(e.alpha) && unit_square(e.beta))
        return span_of(v, {pair_vector(one, pi), pair_vector(one, eps)});
    return std::nullopt;
}

LocalClass uniformizer_class(const Int& p, unsigned pi_bit)
{
    if (p <= 2) throw InvalidArgument("uniformizer_class: odd prime required");
    return local_class_from(Place::finite(p), true, pi_bit ? 1 : 0);
}

LocalSpace unramified_space(const Place& v)
{
    if (v.is_infinite()) throw InvalidArgument("unramified_space: not defined at the real place");
    unsigned d = LocalClass::dim(v);
    // odd p: unit-class bit; p = 2: the class of 5, i.e. omega.
    unsigned bit = v.is_two() ? 2 : 1;
    F2Vec x(2 * d), y(2 * d);
    x.set(bit);
    y.set(d + bit);
    return span_of(v, {x, y});
}

LocalSpace full_space(const Place& v)
{
    unsigned d = LocalClass::dim(v);
    std::vector<F2Vec> vs;
    for (unsigned i = 0; i < 2 * d; ++i) {
        F2Vec e(2 * d);
        e.set(i);
        vs.push_back(e);
    }
    return span_of(v, vs);
}

LocalSpace twisted_pair_space(const Curve& e, const LocalClass& pi)
{
    const Place& v = pi.place;
    if (v.is_infinite() || v.is_two()) throw InvalidArgument("twisted pair: odd place required");
    if (!pi.odd_valuation()) throw InvalidArgument("twisted pair: pi must have odd valuation");
    auto cl = [&v](const Int& x) { return square_class_at(x, v); };
    LocalClass a = cl(e.alpha);
    return span_of(v, {pair_vector(cl(e.alpha * e.beta), pi * a), pair_vector(pi * cl(-e.alpha), cl(-e.alpha * e.gamma))});
}

LocalSpace local_condition(const LocalCondition& c, const Curve& e, const Place& v, const LocalImageOptions& opt)
{
    switch (c.kind) {
    case ConditionKind::Unramified: return unramified_space(v);
    case ConditionKind::Full: return full_space(v);
    case ConditionKind::ImageOfE: return local_image(e, v, opt);
    case ConditionKind::TwistedPair:
        if (c.pi.place != v) throw InvalidArgument("twisted pair: pi lives at another place");
        if (!v.is_infinite() && !v.is_two() && mpz_divisible_p(e.disc.get_mpz_t(), v.p.get_mpz_t()))
            throw InvalidArgument("twisted pair: place " + v.str() + " is bad for the curve");
        return twisted_pair_space(e, c.pi);
    }
    throw InvalidArgument("local_condition: unknown kind");
}

}  // namespace sf
