#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "selmerforge/genericity.hpp"
#include "selmerforge/selmer.hpp"

namespace sf {

using Json = nlohmann::ordered_json;

// Every bound used by the rank-one machine. Serialized into certificates.
struct PipelineConfig {
    uint64_t seed = 0;                      // construction seed
    Int construct_bound = 100000000;        // primes for the 3-generic construction
    Int prime_bound = Int(1) << 40;         // plain prime scans
    uint64_t progression_steps = 1u << 24;  // scans inside a pinned progression: bound = modulus * steps
    uint64_t retries = 64;                  // rejected candidates per chain step before giving up
    uint64_t max_chain = 400;
    uint64_t quadruple_box = 64;            // shell radius for (x, y)
    uint64_t sieve_primes = 2000;           // small primes used to pre-filter quadruple values
    uint64_t admissibility_bound = 1000;    // primes checked constructively for admissibility
    unsigned workers = 1;

    Json to_json() const;
    static PipelineConfig from_json(const Json& j);
};

struct PretwistResult {
    Int t0 = 1;
    Int place = 0;  // the split multiplicative prime left non-square, 0 when no twist was needed
    Curve curve;
    size_t dim_before = 0, dim_after = 0;
    GenericityWitness witness;  // of the twisted curve, one level lower
};

// Twists an n-generic curve (n >= 1) to odd Selmer parity. Verifies both the parity flip and the genericity drop.
PretwistResult pretwist_odd_parity(const Curve& e, unsigned n, const PipelineConfig& cfg);

// The six witness places: indices 0..5 hold w1..w6 (alpha: w1, w5; beta: w2, w4; gamma: w3, w6).
std::array<Int, 6> witness_roles(const GenericityWitness& w);

struct StageRecord {
    std::string name;
    size_t from = 0, to = 0;  // chain indices [from, to)
    std::vector<size_t> dims;  // standard dimension after each added place
    Json detail;
};

struct AuxiliaryTwist {
    Curve curve;
    std::vector<Int> t_primes;
    std::vector<ChainLink> chain;
    Int kappa;
    std::array<Int, 6> witnesses;   // w1..w6; the lambda_i are these primes
    size_t descent_length = 0;      // r'
    std::array<Int, 6> companions;  // p_{s-16} .. p_{s-11}
    std::vector<Int> repair;        // p_{s-10} .. p_{s-5}
    std::array<Int, 3> lifters;     // p_{s-4} .. p_{s-2}
    Int cutter, closer;             // p_{s-1}, p_s
    SelmerElement ab;               // generator after the repair stage
    std::array<SelmerElement, 5> z_basis;
    std::vector<StageRecord> ledger;

    StructureSpec spec() const;  // standard structure for the whole chain
    Json to_json() const;
};

AuxiliaryTwist build_auxiliary_twist(const Curve& e, const GenericityWitness& w, const PipelineConfig& cfg);

struct AuxCheck {
    bool ok = false;
    std::string failure;
};
// (K1) and (K2) from the recorded data alone.
AuxCheck check_auxiliary_twist(const AuxiliaryTwist& aux);

struct LinearFormSystem {
    Int rho, m, lambda, mu1, mu2, kappa;
    std::array<Int, 3> roots;  // a1, a2, a3 of the curve
    // L_i(X, Y) = coeff[i][0] X + coeff[i][1] Y + coeff[i][2]
    std::array<std::array<Int, 3>, 4> coeff;

    Int eval(size_t i, const Int& x, const Int& y) const { return coeff[i][0] * x + coeff[i][1] * y + coeff[i][2]; }
    Json to_json() const;
};

// Legendre targets of the four forms at w1..w5.
extern const int kFormTable[4][5];

LinearFormSystem build_linear_forms(const AuxiliaryTwist& aux, const PipelineConfig& cfg);
LinearFormSystem forms_from_parameters(const Curve& e, const Int& rho, const Int& m, const Int& lambda, const Int& mu1,
                                       const Int& mu2, const Int& kappa);
// Table entries, the exact shape of the forms, and the admissibility cases.
AuxCheck check_linear_forms(const LinearFormSystem& sys, const AuxiliaryTwist& aux, uint64_t admissibility_bound);

struct Quadruple {
    Int x, y;
    std::array<Int, 4> q;
};
struct QuadrupleStats {
    uint64_t points = 0, positive = 0, sieved = 0, prime_tests = 0;
    uint64_t radius = 0;
};
// Square shells around the origin, lexicographic inside a shell. Throws SearchFailure with statistics.
Quadruple find_prime_quadruple(const LinearFormSystem& sys, uint64_t box, const std::set<Int>& exclusions,
                               const PipelineConfig& cfg, QuadrupleStats* stats = nullptr);

struct Verdict {
    bool accepted = false;
    std::string failure;  // first failing clause
    size_t selmer_dim = 0;
    std::vector<std::string> passed;
};

// From scratch: full 2-torsion, dim sel2(E^t) = 3, the point lies on E^t and has infinite order.
// hints are candidate prime factors of t; they only speed up factoring.
Verdict certify_rank_one(const Curve& e, const Int& t, const Point& p, const std::vector<Int>& hints = {});

struct Certificate {
    Curve curve;  // the constructed curve before the parity twist
    Int t0 = 1;
    AuxiliaryTwist aux;
    LinearFormSystem forms;
    Quadruple quad;
    Int t;
    std::array<size_t, 4> chain_dims{};
    Point point;
    size_t selmer_dim = 0;
    PipelineConfig config;

    Json to_json() const;
};

Certificate assemble_suitable_twist(const Curve& base, const Int& t0, const AuxiliaryTwist& aux,
                                    const LinearFormSystem& forms, const Quadruple& quad, const PipelineConfig& cfg);

Certificate certificate_from_json(const Json& cert);
// Re-verifies a certificate from its JSON form alone. With replay, the construction, parity twist,
// auxiliary twist and forms are rebuilt from the trust base and must reproduce the recorded fields exactly.
Verdict verify_certificate(const Json& cert, bool replay = false);

struct HuntReport {
    bool complete = false;
    std::string failure;
    std::string failed_stage;
    Json artifacts;  // construction, pretwist, auxiliary twist, forms, search statistics
    std::optional<Certificate> certificate;
};

// Construction through certificate. Search exhaustion is reported, not thrown.
HuntReport hunt_rank_one(const PipelineConfig& cfg);

std::string json_int(const Int& n);
Int int_from_json(const Json& j);

}  // namespace sf
