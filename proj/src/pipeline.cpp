#include "selmerforge/pipeline.hpp"

#include <algorithm>
#include <sstream>

#include "selmerforge/rootnumber.hpp"

namespace sf {

std::string json_int(const Int& n) { return to_string(n); }

Int int_from_json(const Json& j)
{
    if (j.is_string()) return parse_int(j.get<std::string>());
    if (j.is_number_integer()) return Int(std::to_string(j.get<long long>()));
    throw InvalidArgument("expected an integer, got " + j.dump());
}

Json PipelineConfig::to_json() const
{
    return Json{{"seed", seed},
                {"constructBound", json_int(construct_bound)},
                {"primeBound", json_int(prime_bound)},
                {"progressionSteps", progression_steps},
                {"retries", retries},
                {"maxChain", max_chain},
                {"quadrupleBox", quadruple_box},
                {"sievePrimes", sieve_primes},
                {"admissibilityBound", admissibility_bound}};
}

PipelineConfig PipelineConfig::from_json(const Json& j)
{
    PipelineConfig c;
    c.seed = j.at("seed").get<uint64_t>();
    c.construct_bound = int_from_json(j.at("constructBound"));
    c.prime_bound = int_from_json(j.at("primeBound"));
    c.progression_steps = j.at("progressionSteps").get<uint64_t>();
    c.retries = j.at("retries").get<uint64_t>();
    c.max_chain = j.at("maxChain").get<uint64_t>();
    c.quadruple_box = j.at("quadrupleBox").get<uint64_t>();
    c.sieve_primes = j.at("sievePrimes").get<uint64_t>();
    c.admissibility_bound = j.at("admissibilityBound").get<uint64_t>();
    return c;
}

namespace {

FactorOptions hinted(const std::vector<Int>& hints)
{
    FactorOptions fo;
    fo.hints = hints;
    return fo;
}

}  // namespace

PretwistResult pretwist_odd_parity(const Curve& e, unsigned n, const PipelineConfig& cfg)
{
    if (n < 1) throw InvalidArgument("pretwist: the curve must be at least 1-generic");
    GenericityWitness w = is_n_generic(e, n);
    if (!w.generic) throw InvalidArgument("pretwist: curve is not " + std::to_string(n) + "-generic: " + w.failure);
    PretwistResult r;
    r.dim_before = sel2(e).dim();
    if (r.dim_before % 2 == 1) {
        r.curve = e;
        r.dim_after = r.dim_before;
        r.witness = w;
        return r;
    }
    // The largest alpha witness is sacrificed so the smallest ones survive the twist.
    const Int v = w.primes[0].back();
    SymbolConstraint c;
    c.residue = 1;
    c.modulus = 24;
    for (auto& p : bad_primes(e)) {
        if (p == 2 || p == 3) continue;
        c.demands.push_back({p, p == v ? -1 : 1});
    }
    std::set<Int> exclude;
    for (auto& p : bad_primes(e)) exclude.insert(p);
    Int q = find_prime(c, exclude, cfg.prime_bound, cfg.workers);
    if (q == 0) throw SearchFailure("pretwist: no prime with " + c.describe());

    r.t0 = q;
    r.place = v;
    r.curve = quadratic_twist(e, q);
    FactorOptions fo = hinted({q});
    r.dim_after = sel2(r.curve, fo).dim();
    if (r.dim_after % 2 == 0)
        throw ConsistencyViolation("pretwist: Selmer parity did not flip under q = " + to_string(q));
    if (twist_parity_ratio(e, q) != -1)
        throw ConsistencyViolation("pretwist: root number ratio is not -1 for q = " + to_string(q));
    r.witness = is_n_generic(r.curve, n - 1, fo);
    if (!r.witness.generic)
        throw ConsistencyViolation("pretwist: twisted curve lost more than one level of genericity: " + r.witness.failure);
    return r;
}

std::array<Int, 6> witness_roles(const GenericityWitness& w)
{
    for (int d = 0; d < 3; ++d)
        if (w.primes[d].size() < 2)
            throw InvalidArgument(std::string("witness roles: fewer than two witnesses for ") +
                                  difference_name(Difference(d)));
    auto sorted = w.primes;
    for (auto& v : sorted) std::sort(v.begin(), v.end());
    return {sorted[0][0], sorted[1][0], sorted[2][0], sorted[1][1], sorted[0][1], sorted[2][1]};
}

StructureSpec AuxiliaryTwist::spec() const
{
    StructureSpec s;
    s.curve = curve;
    s.t_primes = t_primes;
    s.chain = chain;
    return s;
}

namespace {

Json element_json(const SelmerElement& z) { return Json::array({json_int(z.d1), json_int(z.d2)}); }

Json ints_json(const std::vector<Int>& v)
{
    Json a = Json::array();
    for (auto& x : v) a.push_back(json_int(x));
    return a;
}

}  // namespace

Json AuxiliaryTwist::to_json() const
{
    Json chain_j = Json::array();
    for (auto& c : chain) chain_j.push_back(Json::array({json_int(c.p), c.pi_bit}));
    Json ledger_j = Json::array();
    for (auto& st : ledger) {
        Json dims = Json::array();
        for (auto d : st.dims) dims.push_back(d);
        ledger_j.push_back(Json{{"stage", st.name}, {"from", st.from}, {"to", st.to}, {"dims", dims}, {"detail", st.detail}});
    }
    Json z = Json::array();
    for (auto& e : z_basis) z.push_back(element_json(e));
    return Json{{"curve", Json::array({json_int(curve.a1), json_int(curve.a2), json_int(curve.a3)})},
                {"T", ints_json(t_primes)},
                {"kappa", json_int(kappa)},
                {"chain", chain_j},
                {"witnesses", ints_json({witnesses.begin(), witnesses.end()})},
                {"descentLength", descent_length},
                {"companions", ints_json({companions.begin(), companions.end()})},
                {"repair", ints_json(repair)},
                {"lifters", ints_json({lifters.begin(), lifters.end()})},
                {"cutter", json_int(cutter)},
                {"closer", json_int(closer)},
                {"ab", element_json(ab)},
                {"zBasis", z},
                {"stages", ledger_j}};
}

namespace {

// Exponent vector of a square class over (-1, 2, odd atoms...); nullopt if other primes occur to odd powers.
std::optional<F2Vec> atom_vector(const Int& value, const std::vector<Int>& odd_atoms)
{
    F2Vec v(2 + odd_atoms.size());
    if (value == 0) return std::nullopt;
    Int x = value;
    if (x < 0) {
        v.set(0);
        x = -x;
    }
    if (valuation(x, 2, &x) & 1) v.set(1);
    for (size_t i = 0; i < odd_atoms.size(); ++i)
        if (mpz_divisible_p(x.get_mpz_t(), odd_atoms[i].get_mpz_t()) && (valuation(x, odd_atoms[i], &x) & 1))
            v.set(2 + i);
    if (!mpz_perfect_square_p(x.get_mpz_t())) return std::nullopt;
    return v;
}

using Demands = std::vector<std::pair<Int, int>>;

// Is there a prime p with (value | p) = eps for every demand? Symbols of distinct atoms are independent,
// except that atoms whose symbol is forced by p mod `modulus` are fixed.
bool demands_consistent(const Demands& d, const std::vector<Int>& odd_atoms, const Int& residue, const Int& modulus)
{
    const size_t na = 2 + odd_atoms.size();
    std::vector<bool> fixed(na, false), fixed_bit(na, false);
    auto fix = [&](size_t i, const Int& a, const Int& period) {
        if (modulus % period != 0) return;
        fixed[i] = true;
        fixed_bit[i] = jacobi_symbol(a, residue) == -1;
    };
    if (residue % 2 != 0) {
        fix(0, -1, 4);
        fix(1, 2, 8);
        for (size_t i = 0; i < odd_atoms.size(); ++i) fix(2 + i, odd_atoms[i], 4 * odd_atoms[i]);
    }
    std::vector<F2Vec> cols(na, F2Vec(d.size()));
    F2Vec target(d.size());
    for (size_t k = 0; k < d.size(); ++k) {
        auto v = atom_vector(d[k].first, odd_atoms);
        if (!v) throw InvalidArgument("demand value " + to_string(d[k].first) + " is not supported on known primes");
        bool b = d[k].second == -1;
        for (size_t i = 0; i < na; ++i) {
            if (!v->get(i)) continue;
            if (fixed[i]) b ^= fixed_bit[i];
            else cols[i].set(k);
        }
        target.set(k, b);
    }
    std::vector<F2Vec> free_cols;
    for (size_t i = 0; i < na; ++i)
        if (!fixed[i]) free_cols.push_back(cols[i]);
    return preimage(free_cols, target, free_cols.size()).has_value();
}

struct Request {
    Int residue = 1, modulus = 1;
    Demands demands;
    // Pin (v | p) for single odd primes v by a residue class mod v. Requires p = 1 mod 4 from the base class.
    bool pin = false;
};

const std::array<std::array<int, 4>, 6> kInvertible = {{{1, 0, 0, 1}, {0, 1, 1, 0}, {1, 1, 0, 1},
                                                         {1, 0, 1, 1}, {0, 1, 1, 1}, {1, 1, 1, 0}}};

class Builder {
public:
    Builder(const Curve& e, const PipelineConfig& cfg) : cfg_(cfg)
    {
        spec_ = default_spec(e);
        for (auto& p : spec_.t_primes) {
            used_.insert(p);
            known_.push_back(p);
        }
        dims_.push_back(structure_group(spec_).dim());
        if (dims_[0] % 2 == 0) throw InvalidArgument("auxiliary twist: dim sel2 must be odd");
        const Curve& c = spec_.curve;
        FactorOptions fo = hinted(known_);
        specials_ = {squarefree_part(c.alpha * c.beta, fo), squarefree_part(-c.alpha * c.gamma, fo),
                     squarefree_part(c.beta * c.gamma, fo)};
    }

    const StructureSpec& spec() const { return spec_; }
    const std::vector<size_t>& dims() const { return dims_; }
    size_t length() const { return spec_.chain.size(); }
    const Int& ab() const { return specials_[0]; }
    const Int& mag() const { return specials_[1]; }  // -alpha gamma
    const Int& bg() const { return specials_[2]; }
    const std::vector<Int>& known() const { return known_; }
    std::vector<Int> odd_atoms() const
    {
        std::vector<Int> a;
        for (auto& p : known_)
            if (p != 2) a.push_back(p);
        return a;
    }

    SelmerGroup group() const { return structure_group(spec_); }

    RankChange push(const ChainLink& link)
    {
        if (spec_.chain.size() >= cfg_.max_chain) throw SearchFailure("auxiliary twist: chain longer than maxChain");
        RankChange rc = rank_change(spec_, link);
        spec_ = extend(spec_, link);
        used_.insert(link.p);
        known_.push_back(link.p);
        dims_.push_back(rc.dim_after);
        if (rc.dim_after % 2 == 0)
            throw ConsistencyViolation("parity: even Selmer dimension after adding " + to_string(link.p));
        return rc;
    }

    // The pi bit giving n = 0 at p, preferring 0.
    std::optional<unsigned> neutral_bit(const Int& p) const
    {
        for (unsigned b : {0u, 1u})
            if (rank_change(spec_, {p, b}).n == 0) return b;
        return std::nullopt;
    }

    Int search(const std::string& stage, const Request& req, const std::set<Int>& rejected = {}) const
    {
        std::vector<std::pair<Int, Int>> congruences = {{req.residue, req.modulus}};
        SymbolConstraint c;
        for (auto& [val, eps] : req.demands) {
            if (val == 1) {
                if (eps == -1) throw SearchFailure(stage + ": demand (1|p) = -1 cannot hold");
                continue;
            }
            Int v = abs(val);
            bool single = req.pin && val > 0 && v != 2 && is_probable_prime(v) && fits_u64(v) &&
                          req.modulus % 4 == 0 && mpz_fdiv_ui(req.residue.get_mpz_t(), 4) == 1;
            if (single) {
                // (v | p) = (p | v) for p = 1 mod 4
                congruences.push_back({eps == 1 ? Int(1) : smallest_nonresidue(v), v});
                continue;
            }
            c.demands.push_back({val, eps});
        }
        auto [r, m] = crt(congruences);
        c.residue = r;
        c.modulus = m;
        c.hints = known_;
        Int bound = std::max<Int>(cfg_.prime_bound, Int(m * Int(std::to_string(cfg_.progression_steps))));
        std::set<Int> exclude = used_;
        exclude.insert(rejected.begin(), rejected.end());
        Int p;
        try {
            p = find_prime(c, exclude, bound, cfg_.workers);
        } catch (const SearchFailure& e) {
            throw SearchFailure(stage + ": " + e.what());
        }
        if (p == 0) throw SearchFailure(stage + ": no prime <= " + to_string(bound) + " with " + c.describe());
        return p;
    }

    void open(const std::string& name)
    {
        cur_ = StageRecord{};
        cur_.name = name;
        cur_.from = length();
        cur_.detail = Json::object();
    }
    StageRecord& cur() { return cur_; }
    void close()
    {
        cur_.to = length();
        for (size_t i = cur_.from; i < cur_.to; ++i) cur_.dims.push_back(dims_[i + 1]);
        ledger_.push_back(cur_);
    }
    std::vector<StageRecord>& ledger() { return ledger_; }

private:
    const PipelineConfig& cfg_;
    StructureSpec spec_;
    std::set<Int> used_;
    std::vector<Int> known_;
    std::vector<size_t> dims_;
    std::array<Int, 3> specials_;
    StageRecord cur_;
    std::vector<StageRecord> ledger_;
};

// The elements of S-unit support inside a standard group must vanish once Frobenius elements span.
void check_s_unit_implication(const SelmerGroup& g, size_t n_s)
{
    const size_t ng = g.generators.size();
    std::vector<F2Vec> sub;
    for (size_t i = 0; i < n_s; ++i) {
        F2Vec a(2 * ng), b(2 * ng);
        a.set(i);
        b.set(ng + i);
        sub.push_back(a);
        sub.push_back(b);
    }
    if (!intersect(g.coords, rref(sub)).empty())
        throw ConsistencyViolation("descent: a Selmer element supported on S survives the Frobenius span");
}

Json diag_json(const DiagState& d) { return Json::array({d.dim_v1, d.dim_v2, d.dim_v3}); }

void frobenius_span(Builder& b)
{
    b.open("frobenius-span");
    std::vector<Int> atoms = {-1};
    for (auto& p : b.spec().t_primes) atoms.push_back(p);
    const size_t target = atoms.size();
    std::vector<F2Vec> rows;
    Json picked = Json::array();
    for (uint32_t q : small_primes()) {
        if (rows.size() == target) break;
        Int p = q;
        if (p < 5 || std::find(b.known().begin(), b.known().end(), p) != b.known().end()) continue;
        F2Vec v(target);
        for (size_t i = 0; i < target; ++i) v.set(i, jacobi_symbol(atoms[i], p) == -1);
        if (in_span(rows, v)) continue;
        rows.push_back(v);
        rows = rref(rows);
        // pi minimizing the new dimension, 0 on ties
        RankChange r0 = rank_change(b.spec(), {p, 0}), r1 = rank_change(b.spec(), {p, 1});
        unsigned bit = r1.dim_after < r0.dim_after ? 1 : 0;
        b.push({p, bit});
        picked.push_back(json_int(p));
    }
    if (rows.size() != target) throw SearchFailure("frobenius-span: prime table too short to span the S-unit classes");
    check_s_unit_implication(b.group(), target);
    b.cur().detail["primes"] = picked;
    b.close();
}

// Picks two basis elements and an invertible symbol pattern; the new prime then kills both.
Demands frobenius_pair_demands(const SelmerElement& u, const SelmerElement& w, const std::array<int, 4>& m)
{
    auto s = [](int bit) { return bit ? -1 : 1; };
    return {{u.d1, s(m[0])}, {u.d2, s(m[1])}, {w.d1, s(m[2])}, {w.d2, s(m[3])}};
}

void reduce_to_one(Builder& b)
{
    b.open("reduce-rank");
    Json picked = Json::array();
    while (b.group().dim() > 1) {
        SelmerGroup g = b.group();
        std::optional<Demands> chosen;
        for (size_t i = 0; i < g.dim() && !chosen; ++i)
            for (size_t j = i + 1; j < g.dim() && !chosen; ++j)
                for (auto& m : kInvertible) {
                    Demands d = frobenius_pair_demands(g.basis[i], g.basis[j], m);
                    if (demands_consistent(d, b.odd_atoms(), 1, 1)) {
                        chosen = d;
                        break;
                    }
                }
        if (!chosen) throw ConsistencyViolation("reduce-rank: no consistent Frobenius pattern for two basis elements");
        Int p = b.search("reduce-rank", Request{1, 1, *chosen});
        RankChange rc = b.push({p, 0});
        if (rc.n != -2) throw ConsistencyViolation("reduce-rank: expected a drop of 2 at " + to_string(p));
        picked.push_back(json_int(p));
    }
    b.cur().detail["primes"] = picked;
    b.close();
}

// One prime with n = 0 meeting the demands; accepted when the Diag test passes.
template <class Accept>
bool diag_step(Builder& b, const std::string& stage, const Demands& d, Accept accept, const PipelineConfig& cfg,
               Json& log)
{
    std::set<Int> rejected;
    for (uint64_t attempt = 0; attempt < cfg.retries; ++attempt) {
        Int p = b.search(stage, Request{1, 1, d}, rejected);
        auto bit = b.neutral_bit(p);
        if (!bit) {
            rejected.insert(p);
            continue;
        }
        StructureSpec trial = extend(b.spec(), {p, *bit});
        DiagState after = diag_dims(trial);
        if (!accept(after)) {
            rejected.insert(p);
            continue;
        }
        b.push({p, *bit});
        log.push_back(Json{{"p", json_int(p)}, {"pi", *bit}, {"diag", diag_json(after)}, {"rejected", rejected.size()}});
        return true;
    }
    return false;
}

void reduce_diag(Builder& b, const PipelineConfig& cfg)
{
    b.open("reduce-diag");
    Json log = Json::array();
    const std::array<Int, 3> special = {b.ab(), b.mag(), b.bg()};
    for (;;) {
        if (b.group().dim() != 1) throw ConsistencyViolation("reduce-diag: dimension left 1");
        DiagState d = diag_dims(b.spec());
        if (d.diag() <= 1) break;
        std::array<size_t, 3> dims = {d.dim_v1, d.dim_v2, d.dim_v3};
        std::array<Int, 3> coord = {d.dim_v1 ? d.v1[0].d1 : Int(1), d.dim_v2 ? d.v2[0].d2 : Int(1),
                                    d.dim_v3 ? d.v3[0].d1 : Int(1)};
        std::vector<int> nz;
        for (int i = 0; i < 3; ++i)
            if (dims[i]) nz.push_back(i);
        const size_t before = d.diag();
        bool done = false;
        if (nz.size() >= 2) {
            for (size_t a = 0; a < nz.size() && !done; ++a)
                for (size_t c = a + 1; c < nz.size() && !done; ++c) {
                    Int cd = squarefree_product(coord[nz[a]], coord[nz[c]]);
                    for (int x = 0; x < 3 && !done; ++x)
                        for (int y = x + 1; y < 3 && !done; ++y) {
                            if (special[x] == cd || special[y] == cd) continue;
                            Demands dem = {{coord[nz[a]], -1}, {coord[nz[c]], -1}, {special[x], -1}, {special[y], -1}};
                            if (!demands_consistent(dem, b.odd_atoms(), 1, 1)) continue;
                            done = diag_step(b, "reduce-diag", dem,
                                             [&](const DiagState& s) { return s.diag() < before; }, cfg, log);
                        }
                }
        } else {
            // V1: alpha beta, -alpha gamma; V2: alpha beta, beta gamma; V3: -alpha gamma, beta gamma
            static const int pair_for[3][2] = {{0, 1}, {0, 2}, {1, 2}};
            int i = nz[0];
            Demands dem = {{coord[i], -1}, {special[pair_for[i][0]], -1}, {special[pair_for[i][1]], -1}};
            if (demands_consistent(dem, b.odd_atoms(), 1, 1))
                done = diag_step(b, "reduce-diag", dem,
                                 [&](const DiagState& s) {
                                     int nonzero = (s.dim_v1 > 0) + (s.dim_v2 > 0) + (s.dim_v3 > 0);
                                     return s.diag() < before || (s.diag() == before && nonzero >= 2);
                                 },
                                 cfg, log);
        }
        if (!done) throw SearchFailure("reduce-diag: no accepted prime within the retry budget at Diag " +
                                       std::to_string(before));
    }
    DiagState d = diag_dims(b.spec());
    if (d.dim_v2 > 0) {
        Demands dem = {{d.v2[0].d2, -1}, {b.ab(), -1}, {b.bg(), -1}};
        bool done = diag_step(b, "clear-v2", dem,
                              [](const DiagState& s) { return s.dim_v1 <= 1 && s.dim_v2 == 0 && s.dim_v3 == 0; }, cfg,
                              log);
        if (!done) throw SearchFailure("clear-v2: no accepted prime within the retry budget");
    }
    d = diag_dims(b.spec());
    if (b.group().dim() != 1 || d.diag() > 1 || d.dim_v2 != 0)
        throw ConsistencyViolation("descent: postcondition dim 1, Diag <= 1, V2 = 0 fails");
    b.cur().detail["steps"] = log;
    b.cur().detail["finalDiag"] = diag_json(d);
    b.close();
}

void check_witness_images(const Curve& e, const std::array<Int, 6>& w)
{
    // kind 0: (pi, pi); 1: (pi, 1); 2: (1, pi)
    static const int kind[6] = {0, 1, 2, 1, 0, 2};
    for (int i = 0; i < 6; ++i) {
        const Int& p = w[i];
        if (p % 8 != 1 || p <= 5) throw InvalidArgument("witness " + to_string(p) + " is not 1 mod 8 and above 5");
        Place v = Place::finite(p);
        LocalClass pi = uniformizer_class(p, 0), eps = local_class_from(v, false, 1), one{v, 0};
        LocalSpace expect;
        if (kind[i] == 0) expect = span_of(v, {pair_vector(pi, pi), pair_vector(eps, eps)});
        if (kind[i] == 1) expect = span_of(v, {pair_vector(pi, one), pair_vector(eps, one)});
        if (kind[i] == 2) expect = span_of(v, {pair_vector(one, pi), pair_vector(one, eps)});
        if (!(local_image(e, v) == expect))
            throw ConsistencyViolation("witness " + to_string(p) + ": local image differs from the expected shape");
    }
}

}  // namespace

AuxiliaryTwist build_auxiliary_twist(const Curve& e, const GenericityWitness& gw, const PipelineConfig& cfg)
{
    GenericityWitness w = gw;
    if (!w.generic || w.n < 2 || !verify_witness(e, w)) w = is_n_generic(e, 2);
    if (!w.generic) throw InvalidArgument("auxiliary twist: curve is not 2-generic: " + w.failure);
    AuxiliaryTwist aux;
    aux.curve = e;
    aux.witnesses = witness_roles(w);
    check_witness_images(e, aux.witnesses);
    const auto& lam = aux.witnesses;

    Builder b(e, cfg);
    aux.t_primes = b.spec().t_primes;

    frobenius_span(b);
    reduce_to_one(b);
    reduce_diag(b, cfg);
    const size_t rprime = b.length();
    aux.descent_length = rprime;
    const std::vector<ChainLink> descent = b.spec().chain;

    // Six companions: lambda_i P_i is a local square on T minus w_i and on the descent chain.
    b.open("companions");
    std::vector<Int> odd_t;
    for (auto& p : aux.t_primes)
        if (p != 2 && p != 3) odd_t.push_back(p);
    for (int i = 0; i < 6; ++i) {
        Request req;
        req.pin = true;
        auto [r, m] = crt({{1, 8}, {lam[i] % 3, 3}});
        req.residue = r;
        req.modulus = m;
        for (auto& v : odd_t) {
            if (v == lam[i]) req.demands.push_back({v, 1});
            else req.demands.push_back({v, jacobi_symbol(lam[i], v)});
        }
        for (auto& c : descent) req.demands.push_back({c.p, jacobi_symbol(lam[i], c.p)});
        for (int k = 0; k < i; ++k) {
            int target = (i == k + 1 && (k == 0 || k == 2 || k == 4)) ? -1 : 1;
            req.demands.push_back({aux.companions[k], target * jacobi_symbol(lam[i], aux.companions[k])});
        }
        Int p = b.search("companions", req);
        aux.companions[i] = p;
        b.push({p, 1});
    }
    b.cur().detail["primes"] = ints_json({aux.companions.begin(), aux.companions.end()});

    std::vector<Int> lp(6);
    for (int i = 0; i < 6; ++i) lp[i] = lam[i] * aux.companions[i];
    std::vector<Companion> comp;
    for (int i = 0; i < 6; ++i) comp.push_back({aux.companions[i], lp[i]});
    StructureSpec ray_descent = as_ray(truncate(b.spec(), rprime));
    SelmerGroup ray = structure_group(ray_descent);
    {
        SelmerGroup g = b.group();
        std::vector<F2Vec> vspace;
        for (auto& x : lp) {
            auto c = g.coordinates({x, 1});
            auto d = g.coordinates({1, x});
            if (!c || !d) throw ConsistencyViolation("companions: lambda P outside the generator support");
            vspace.push_back(*c);
            vspace.push_back(*d);
        }
        if (!intersect(g.coords, rref(vspace)).empty())
            throw ConsistencyViolation("companions: Selmer group meets the companion span");
        std::vector<F2Vec> images;
        for (auto& z : g.basis) {
            SelmerElement pz = project_away(z, comp);
            auto c = ray.coordinates(pz);
            if (!c || !ray.contains(pz))
                throw ConsistencyViolation("companions: projection leaves the ray group: " + pz.str());
            images.push_back(*c);
        }
        if (rank(images) != g.dim()) throw ConsistencyViolation("companions: projection is not injective");
        b.cur().detail["dim"] = g.dim();
    }
    b.close();

    // Six repair primes bring the dimension back to 1 without leaving the group.
    b.open("repair");
    Json log = Json::array();
    for (int step = 0; step < 6; ++step) {
        SelmerGroup g = b.group();
        Demands base;
        for (auto& x : lp) base.push_back({x, 1});
        if (g.dim() == 1) {
            Demands d = base;
            d.push_back({g.basis[0].d1, 1});
            d.push_back({g.basis[0].d2, 1});
            std::set<Int> rejected;
            bool done = false;
            for (uint64_t a = 0; a < cfg.retries && !done; ++a) {
                Int p = b.search("repair", Request{1, 1, d}, rejected);
                auto bit = b.neutral_bit(p);
                if (!bit) {
                    rejected.insert(p);
                    continue;
                }
                b.push({p, *bit});
                aux.repair.push_back(p);
                done = true;
            }
            if (!done) throw SearchFailure("repair: no neutral prime within the retry budget");
            if (!b.group().contains(g.basis[0])) throw ConsistencyViolation("repair: the generator left the group");
            log.push_back(Json{{"case", 1}, {"p", json_int(aux.repair.back())}});
            continue;
        }
        std::optional<Demands> chosen;
        for (size_t i = 0; i < g.dim() && !chosen; ++i)
            for (size_t j = i + 1; j < g.dim() && !chosen; ++j) {
                SelmerElement u = project_away(g.basis[i], comp), w2 = project_away(g.basis[j], comp);
                for (auto& m : kInvertible) {
                    Demands d = frobenius_pair_demands(u, w2, m);
                    d.insert(d.end(), base.begin(), base.end());
                    if (demands_consistent(d, b.odd_atoms(), 1, 1)) {
                        chosen = d;
                        break;
                    }
                }
            }
        if (!chosen) throw ConsistencyViolation("repair: no consistent Frobenius pattern");
        Int p = b.search("repair", Request{1, 1, *chosen});
        RankChange rc = b.push({p, 0});
        if (rc.n != -2) throw ConsistencyViolation("repair: expected a drop of 2 at " + to_string(p));
        SelmerGroup after = b.group();
        for (auto& z : after.basis)
            if (!g.contains(z)) throw ConsistencyViolation("repair: new group is not inside the old one");
        aux.repair.push_back(p);
        log.push_back(Json{{"case", 2}, {"p", json_int(p)}});
    }
    {
        SelmerGroup g = b.group();
        if (g.dim() != 1) throw ConsistencyViolation("repair: dimension is not 1 after six primes");
        aux.ab = g.basis[0];
        SelmerElement vw = project_away(aux.ab, comp);
        if (vw.d1 == 1) throw ConsistencyViolation("repair: projected generator has trivial first coordinate");
        b.cur().detail["steps"] = log;
        b.cur().detail["ab"] = element_json(aux.ab);
        b.cur().detail["proj"] = element_json(vw);
    }
    b.close();

    // Three lifters: squares at T, the descent chain and the repair primes, prescribed symbols at the companions.
    b.open("lifters");
    static const int lifter_of[6] = {0, 0, 1, 1, 2, 2};
    for (int j = 0; j < 3; ++j) {
        Request req;
        req.pin = true;
        req.residue = 1;
        req.modulus = 24;
        for (auto& v : odd_t) req.demands.push_back({v, 1});
        for (auto& c : descent) req.demands.push_back({c.p, 1});
        for (auto& p : aux.repair) req.demands.push_back({p, 1});
        for (int i = 0; i < 6; ++i) req.demands.push_back({aux.companions[i], lifter_of[i] == j ? -1 : 1});
        for (int k = 0; k < j; ++k) req.demands.push_back({aux.lifters[k], 1});
        Int p = b.search("lifters", req);
        aux.lifters[j] = p;
        RankChange rc = b.push({p, 1});
        if (rc.n != 2) throw ConsistencyViolation("lifters: expected a gain of 2 at " + to_string(p));
    }
    const auto& Q = aux.lifters;
    std::array<SelmerElement, 6> cls = {{
        {squarefree_product(lp[0], Q[0]), squarefree_product(lp[0], Q[0])},
        {squarefree_product(lp[1], Q[0]), 1},
        {1, squarefree_product(lp[2], Q[1])},
        {squarefree_product(lp[3], Q[1]), 1},
        {squarefree_product(lp[4], Q[2]), squarefree_product(lp[4], Q[2])},
        {1, squarefree_product(lp[5], Q[2])},
    }};
    {
        SelmerGroup g = b.group();
        std::vector<F2Vec> rows;
        for (auto* z : {&aux.ab, &cls[0], &cls[1], &cls[2], &cls[3], &cls[4], &cls[5]}) {
            if (!g.contains(*z)) throw ConsistencyViolation("lifters: " + z->str() + " is not a Selmer element");
            rows.push_back(*g.coordinates(*z));
        }
        if (g.dim() != 7 || rank(rows) != 7) throw ConsistencyViolation("lifters: the seven classes are not a basis");
        b.cur().detail["primes"] = ints_json({Q.begin(), Q.end()});
    }
    b.close();

    // Cut to the five-element basis, then close the product in the ray class group.
    b.open("final");
    std::array<Int, 5> bprod = {cls[0].d1, cls[1].d1, cls[2].d2, cls[3].d1, cls[4].d1};
    {
        Demands d = {{aux.ab.d1, -1}, {cls[5].d2, -1}};
        for (auto& x : bprod) d.push_back({x, 1});
        if (!demands_consistent(d, b.odd_atoms(), 1, 1)) throw ConsistencyViolation("final: cutter demands inconsistent");
        Int p = b.search("cutter", Request{1, 1, d});
        RankChange rc = b.push({p, 0});
        if (rc.n != -2) throw ConsistencyViolation("cutter: expected a drop of 2 at " + to_string(p));
        aux.cutter = p;
    }
    {
        Int modulus = 8;
        for (auto& v : aux.t_primes)
            if (v != 2) modulus *= v;
        Int prod = 1;
        for (auto& c : b.spec().chain) prod *= c.p;
        Int inv;
        if (!mpz_invert(inv.get_mpz_t(), prod.get_mpz_t(), modulus.get_mpz_t()))
            throw ConsistencyViolation("closer: chain product shares a factor with the modulus");
        Demands d;
        for (auto& x : bprod) d.push_back({x, 1});
        std::set<Int> rejected;
        bool done = false;
        for (uint64_t a = 0; a < cfg.retries && !done; ++a) {
            Int p = b.search("closer", Request{inv, modulus, d}, rejected);
            auto bit = b.neutral_bit(p);
            if (!bit) {
                rejected.insert(p);
                continue;
            }
            b.push({p, *bit});
            aux.closer = p;
            done = true;
        }
        if (!done) throw SearchFailure("closer: no neutral prime within the retry budget");
        aux.kappa = prod * aux.closer;
        if (aux.kappa % modulus != 1) throw ConsistencyViolation("closer: kappa is not 1 modulo the modulus");
    }
    aux.z_basis = {cls[0], cls[1], cls[2], cls[3], cls[4]};
    b.cur().detail["cutter"] = json_int(aux.cutter);
    b.cur().detail["closer"] = json_int(aux.closer);
    b.close();

    aux.chain = b.spec().chain;
    aux.ledger = b.ledger();
    AuxCheck chk = check_auxiliary_twist(aux);
    if (!chk.ok) throw ConsistencyViolation("auxiliary twist: " + chk.failure);
    return aux;
}

AuxCheck check_auxiliary_twist(const AuxiliaryTwist& aux)
{
    AuxCheck r;
    auto fail = [&](const std::string& s) {
        r.ok = false;
        r.failure = s;
        return r;
    };
    Int prod = 1;
    for (auto& c : aux.chain) prod *= c.p;
    if (prod != aux.kappa) return fail("K1: kappa is not the product of the chain primes");
    if (aux.kappa <= 0 || aux.kappa % 8 != 1) return fail("K1: kappa is not positive and 1 mod 8");
    const Curve& e = aux.curve;
    for (auto& v : aux.t_primes) {
        if (!square_class_at(aux.kappa, Place::finite(v)).trivial())
            return fail("K1: kappa is not a square at " + to_string(v));
    }
    for (const Int* d : {&e.alpha, &e.beta, &e.gamma}) {
        Int g;
        mpz_gcd(g.get_mpz_t(), d->get_mpz_t(), aux.kappa.get_mpz_t());
        if (g != 1) return fail("K1: kappa is not coprime to the root differences");
    }
    SelmerGroup g = structure_group(aux.spec());
    if (g.dim() != 5) return fail("K2: structure group has dimension " + std::to_string(g.dim()) + ", not 5");
    std::vector<F2Vec> rows;
    for (auto& z : aux.z_basis) {
        if (!g.contains(z)) return fail("K2: " + z.str() + " is not in the structure group");
        rows.push_back(*g.coordinates(z));
    }
    if (rank(rows) != 5) return fail("K2: the recorded basis is dependent");
    // valuation parities of z_1..z_10 at w_1..w_5
    static const int table[10][5] = {{1, 0, 0, 0, 0}, {1, 0, 0, 0, 0}, {0, 1, 0, 0, 0}, {0, 0, 0, 0, 0},
                                     {0, 0, 0, 0, 0}, {0, 0, 1, 0, 0}, {0, 0, 0, 1, 0}, {0, 0, 0, 0, 0},
                                     {0, 0, 0, 0, 1}, {0, 0, 0, 0, 1}};
    for (int k = 0; k < 10; ++k) {
        const Int& z = k % 2 == 0 ? aux.z_basis[k / 2].d1 : aux.z_basis[k / 2].d2;
        for (int i = 0; i < 5; ++i)
            if (int(valuation(z, aux.witnesses[i]) % 2) != table[k][i])
                return fail("K2: valuation of z" + std::to_string(k + 1) + " at w" + std::to_string(i + 1) +
                            " breaks the table");
    }
    r.ok = true;
    return r;
}

}  // namespace sf
