#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "selmerforge/arith.hpp"

namespace sf {

// c1 u + c2 v = d1 s1^2 + l1, c3 u + c4 v = d2 s2^2 + l2, c5 u + c6 v = d3 s3^2 + l3 over F_q.
struct SquareSystem {
    Int q;
    std::array<Int, 6> c;
    std::array<Int, 3> delta;
    std::array<Int, 3> lambda;
    std::string str() const;
};

struct SquareSolution {
    Int u, v, s1, s2, s3;
    bool operator==(const SquareSolution& o) const
    {
        return u == o.u && v == o.v && s1 == o.s1 && s2 == o.s2 && s3 == o.s3;
    }
};

void validate_square_system(const SquareSystem& sys);
bool check_square_solution(const SquareSystem& sys, const SquareSolution& sol);

struct SquareSolveOptions {
    Int scan_limit = 4096;  // q above this uses the randomized path
    uint64_t seed = 0;
    uint64_t max_trials = 1u << 22;
};

// Deterministic: lexicographically first (s1, s2) for q <= scan_limit, seeded random trials above.
SquareSolution solve_square_system(const SquareSystem& sys, const SquareSolveOptions& opt = {});

}  // namespace sf
