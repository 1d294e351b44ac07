import json
from fractions import Fraction

import pytest

import selmerforge as sf


def test_symbols():
    # Euler's criterion as the oracle
    for p in (3, 5, 7, 11, 13, 101):
        for a in range(1, p):
            euler = pow(a, (p - 1) // 2, p)
            assert sf.jacobi(a, p) == (1 if euler == 1 else -1)
    assert sf.hilbert(-1, -1, 0) == -1
    assert sf.hilbert(-1, -1, 2) == -1
    assert sf.hilbert(2, 3, 3) == -1


def test_selmer_dims():
    assert sf.selmer_rank((0, 1, -1)) == 2
    assert sf.selmer_rank((0, 5, -5)) == 3
    assert sf.selmer_rank((0, 1, -1), twist=5) == 3
    assert len(sf.selmer_basis((0, 5, -5))) == 3


def test_chain_dims_move_by_two():
    dims = sf.chain_dims((0, 1, -1), [(5, 0), (13, 1), (17, 0), (29, 1)])
    assert all(abs(b - a) in (0, 2) for a, b in zip(dims, dims[1:]))
    assert len({d % 2 for d in dims}) == 1


def test_rank_one_verdicts():
    assert sf.certify_rank_one((0, 1, -1), 5, -4, 6)["accepted"]
    r = sf.certify_rank_one((0, 1, -1), 5, -4, 7)
    assert not r["accepted"] and r["failure"] == "point not on curve"
    assert sf.certify_rank_one((0, 1, -1), 5, Fraction(1681, 144), Fraction(62279, 1728))["accepted"]


def test_generic_and_finfield():
    assert not sf.is_n_generic((0, 1, -1), 1)["generic"]
    g = sf.construct_3generic(0)
    assert sf.is_n_generic(g["curve"], 3)["generic"]
    a, b, c, X, Y, Z = g["conic"]
    assert a * X * X + b * Y * Y == c * Z * Z
    u, v, s1, s2, s3 = sf.solve_square_system(7, [1, 0, 0, 1, 1, 1], [1, 1, 3])
    assert (u - s1 * s1) % 7 == 0
    assert (v - s2 * s2) % 7 == 0
    assert (u + v - 3 * s3 * s3) % 7 == 0


def test_errors_map_to_exceptions():
    with pytest.raises(ValueError):
        sf.selmer_rank((0, 1, 1))
    assert not sf.verify_certificate(json.dumps({}))["accepted"]
