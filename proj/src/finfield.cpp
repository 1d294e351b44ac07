#include "selmerforge/finfield.hpp"

#include <optional>
#include <random>
#include <sstream>

namespace sf {

namespace {

Int mod(const Int& a, const Int& q)
{
    Int r;
    mpz_fdiv_r(r.get_mpz_t(), a.get_mpz_t(), q.get_mpz_t());
    return r;
}

Int inverse(const Int& a, const Int& q)
{
    Int r;
    if (!mpz_invert(r.get_mpz_t(), a.get_mpz_t(), q.get_mpz_t())) throw InvalidArgument("finfield: zero has no inverse");
    return r;
}

struct Eliminator {
    const SquareSystem& sys;
    Int det_inv;
    explicit Eliminator(const SquareSystem& s)
        : sys(s), det_inv(inverse(mod(s.c[0] * s.c[3] - s.c[1] * s.c[2], s.q), s.q))
    {
    }
    // u0, v0 from the first two equations, then the value d3 s3^2 must take.
    std::optional<SquareSolution> attempt(const Int& s1, const Int& s2) const
    {
        const Int& q = sys.q;
        Int r1 = mod(sys.delta[0] * s1 * s1 + sys.lambda[0], q);
        Int r2 = mod(sys.delta[1] * s2 * s2 + sys.lambda[1], q);
        Int u = mod((sys.c[3] * r1 - sys.c[1] * r2) * det_inv, q);
        Int v = mod((sys.c[0] * r2 - sys.c[2] * r1) * det_inv, q);
        Int target = mod((sys.c[4] * u + sys.c[5] * v - sys.lambda[2]) * inverse(mod(sys.delta[2], q), q), q);
        if (target == 0 || jacobi_symbol(target, q) != 1) return std::nullopt;
        return SquareSolution{u, v, s1, s2, sqrt_mod_prime(target, q)};
    }
};

}  // namespace

std::string SquareSystem::str() const
{
    std::ostringstream os;
    os << "q=" << to_string(q) << " c=(";
    for (int i = 0; i < 6; ++i) os << (i ? "," : "") << to_string(c[i]);
    os << ") delta=(" << to_string(delta[0]) << "," << to_string(delta[1]) << "," << to_string(delta[2]) << ") lambda=("
       << to_string(lambda[0]) << "," << to_string(lambda[1]) << "," << to_string(lambda[2]) << ")";
    return os.str();
}

void validate_square_system(const SquareSystem& s)
{
    if (s.q <= 5 || !is_probable_prime(s.q)) throw InvalidArgument("finfield: q must be a prime > 5");
    auto nz = [&](const Int& x) { return mod(x, s.q) != 0; };
    if (!nz(s.c[0] * s.c[3] - s.c[1] * s.c[2])) throw InvalidArgument("finfield: c1 c4 - c2 c3 vanishes");
    if (!nz(s.c[0] * s.c[5] - s.c[1] * s.c[4])) throw InvalidArgument("finfield: c1 c6 - c2 c5 vanishes");
    if (!nz(s.c[2] * s.c[5] - s.c[3] * s.c[4])) throw InvalidArgument("finfield: c3 c6 - c4 c5 vanishes");
    for (auto& d : s.delta)
        if (!nz(d)) throw InvalidArgument("finfield: delta must be nonzero");
}

bool check_square_solution(const SquareSystem& s, const SquareSolution& x)
{
    const Int& q = s.q;
    if (mod(x.s1, q) == 0 || mod(x.s2, q) == 0 || mod(x.s3, q) == 0) return false;
    return mod(s.c[0] * x.u + s.c[1] * x.v - s.delta[0] * x.s1 * x.s1 - s.lambda[0], q) == 0 &&
           mod(s.c[2] * x.u + s.c[3] * x.v - s.delta[1] * x.s2 * x.s2 - s.lambda[1], q) == 0 &&
           mod(s.c[4] * x.u + s.c[5] * x.v - s.delta[2] * x.s3 * x.s3 - s.lambda[2], q) == 0;
}

SquareSolution solve_square_system(const SquareSystem& sys, const SquareSolveOptions& opt)
{
    validate_square_system(sys);
    Eliminator el(sys);
    std::optional<SquareSolution> found;
    if (sys.q <= opt.scan_limit) {
        for (Int s1 = 1; s1 < sys.q && !found; ++s1)
            for (Int s2 = 1; s2 < sys.q && !found; ++s2) found = el.attempt(s1, s2);
        if (!found)
            throw ConsistencyViolation("finfield: exhaustive scan found no solution for " + sys.str() +
                                       ", which the existence argument rules out");
    } else {
        gmp_randclass gr(gmp_randinit_mt);
        gr.seed(opt.seed);
        Int span = sys.q - 1;
        for (uint64_t t = 0; t < opt.max_trials && !found; ++t) {
            Int s1 = gr.get_z_range(span) + 1, s2 = gr.get_z_range(span) + 1;
            found = el.attempt(s1, s2);
        }
        if (!found) throw SearchFailure("finfield: randomized search exhausted for " + sys.str());
    }
    if (!check_square_solution(sys, *found)) throw ConsistencyViolation("finfield: solution fails verification");
    return *found;
}

}  // namespace sf
