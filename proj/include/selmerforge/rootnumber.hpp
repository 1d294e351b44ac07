#pragma once

#include <string>
#include <vector>

#include "selmerforge/curve.hpp"

namespace sf {

enum class Sign { Plus, Minus, Unknown };
const char* sign_name(Sign s);
Sign sign_of(int v);
int sign_value(Sign s);  // +1 / -1; throws for Unknown

struct LocalRootNumber {
    Place place;
    Sign value = Sign::Unknown;  // Unknown encodes a place outside the supported cases
    std::string rule;            // which reduction case produced it
};

LocalRootNumber local_root_number(const Curve& e, const Place& v);

struct RootNumberReport {
    std::vector<LocalRootNumber> factors;  // real place and every bad prime
    Sign global = Sign::Unknown;
};
RootNumberReport root_number_report(const Curve& e, const FactorOptions& opt = {});

// Sign relation between w(E) and w(E^q) from the residue of q mod 4, without checking admissibility.
int twist_ratio_formula(const Int& q);

struct TwistAdmissibility {
    bool ok = false;
    std::string failure;  // the first failing condition
    Int place;            // the distinguished split multiplicative prime when ok
};
// q positive prime, prime to 6, square at 2 and 3, square at every bad prime except one
// split multiplicative prime where it is a non-square.
TwistAdmissibility twist_admissibility(const Curve& e, const Int& q, const FactorOptions& opt = {});
// w(E^q) w(E) for an admissible q; InvalidArgument naming the failed condition otherwise.
int twist_parity_ratio(const Curve& e, const Int& q, const FactorOptions& opt = {});

struct ParityReport {
    size_t selmer_dim = 0;
    Sign selmer_parity = Sign::Plus;  // (-1)^dim
    RootNumberReport root;
    Sign verdict = Sign::Unknown;  // Plus: agree, Minus: disagree, Unknown: some factor outside scope
};
ParityReport parity_crosscheck(const Curve& e, const FactorOptions& opt = {});

struct TwistParityReport {
    size_t dim_base = 0, dim_twist = 0;
    int ratio = 0;
    bool flips = false;
    bool agrees = false;
};
// dim sel2 changes parity under the twist iff the ratio is -1.
TwistParityReport twist_parity_crosscheck(const Curve& e, const Int& q, const FactorOptions& opt = {});

}  // namespace sf
