"""Smoke test for the `dhj` extension.

Build and install it first, for example:

    cd crates/python && maturin develop --release
    python python/smoke_test.py
"""

import json
from fractions import Fraction
from itertools import product

import dhj


def brute_line_free(points, k, n):
    pts = set(points)
    for pattern in product(range(k + 1), repeat=n):
        if 0 not in pattern:
            continue
        line = ["".join(str(v) if d == 0 else str(d) for d in pattern) for v in range(1, k + 1)]
        if all(p in pts for p in line):
            return False
    return True


def main():
    middle = dhj.CubeSet(2, 4, ["1122", "1212", "1221", "2112", "2121", "2211"])
    assert len(middle) == 6 and "1212" in middle
    assert middle.density() == "3/8"
    assert middle.equal_slices_measure() == "1/5"
    assert middle.is_antichain()
    assert middle.is_line_free()
    assert middle.sperner_line_density()["holds"]

    full = dhj.CubeSet.full(3, 2)
    assert full.find_line() is not None
    assert full.count_lines() == 4**2 - 3**2
    assert len(dhj.lines(3, 2)) == 7
    assert full.partition(1)["valid"]
    assert dhj.CubeSet.from_json(full.to_json()) == full

    res = dhj.max_linefree(3, 2)
    assert res["best_size"] == 6 and res["optimal"] and res["witness_valid"]
    witness = dhj.CubeSet.from_json(json.dumps(res["witness"]))
    assert brute_line_free(witness.points(), 3, 2)

    b = dhj.bounds(3, "1")
    assert b["tower_height"] == 20000

    pts = dhj.sample(3, 5, 20, law="nondegenerate", seed=4)
    assert pts == dhj.sample(3, 5, 20, law="nondegenerate", seed=4)
    assert all(set(p) == {"1", "2", "3"} for p in pts)

    ids = [i for i, _ in dhj.registry()]
    assert "missing-top-value" in ids
    r = dhj.verify("missing-top-value", json.dumps({"n": 4, "k": 3}))
    assert r["verdict"] == "pass" and Fraction(r["computed"]["enumerated"]) == Fraction(1, 3)
    reports = dhj.verify_all("fast", seed=1)
    assert all(r["verdict"] != "fail" for r in reports)

    try:
        dhj.CubeSet.full(3, 12).find_line(work_budget=10)
    except dhj.BudgetExceeded:
        pass
    else:
        raise AssertionError("expected BudgetExceeded")

    out = dhj.CubeSet(3, 3, ["111", "222", "333"]).run_driver()
    assert out["line"] == "***" and out["line_valid"]

    print(f"ok: {len(ids)} registry entries, {len(reports)} fast reports")


if __name__ == "__main__":
    main()
