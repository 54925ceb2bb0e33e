"""Smoke test for the simpell extension module.

Build and install first:
    pip install --no-build-isolation ./crates/python
"""

import json
import math
import os
import tempfile

import simpell


def main():
    eps = simpell.fundamental_unit(24)
    assert (eps.u, eps.v, eps.radicand, eps.denom) == (5, 2, 6, 1), eps
    assert eps.norm() == 1
    assert (eps * eps.conj()).norm() == 1
    assert (eps ** 3).coords_over(24) == (485, 99, 1)

    phi = simpell.QuadElem(1, 1, 5, denom=2)
    assert phi.norm() == -1 and phi.trace() == 1
    assert simpell.fundamental_unit(5) == phi
    try:
        simpell.QuadElem(1, 1, 3, denom=2)
    except ValueError:
        pass
    else:
        raise AssertionError("(1+sqrt3)/2 is not an algebraic integer")

    assert simpell.pell_fundamental_solution(24) == (5, 1)
    assert [simpell.candidate_x(2, n) for n in range(1, 7)] == [None, 2, None, 12, None, 70]
    assert [x for _, x in simpell.brute_force_oracle(2, 100)] == [2, 12, 70]

    assert simpell.is_prime(2**61 - 1)
    factors, cofactor = simpell.factorize(9800)
    assert cofactor == 1
    assert math.prod(p**e for p, e in factors) == 9800

    r = simpell.verify(24)
    assert r.status == "unique_certified", r.text()
    assert r.pairs == []
    assert {10, 99} <= set(r.kept_x)
    rec = r.to_dict()
    assert rec["schema"] == 1 and abs(int(rec["c_m"]) / 3.345e14 - 1) < 0.05
    assert json.loads(r.to_json())["b"] == 24

    sq = simpell.verify(49)
    assert sq.status == "unique_certified" and "square" in sq.reason

    with tempfile.TemporaryDirectory() as d:
        out = os.path.join(d, "s.jsonl")
        s = simpell.sweep(1, 30, out, jobs=4)
        assert s["records"] == 30 and s["exit_code"] == 0, s
        with open(out) as f:
            assert [json.loads(line)["b"] for line in f] == list(range(1, 31))
        again = simpell.sweep(1, 30, out)
        assert again["computed"] == 0

    print(r.text(), end="")
    print("smoke test passed")


if __name__ == "__main__":
    main()
