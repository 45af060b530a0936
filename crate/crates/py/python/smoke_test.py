"""Smoke test for the stratint_py extension.

Build and run from the workspace root:

    cargo build --release -p stratint-py --features extension-module
    cp target/release/libstratint_py.so crates/py/python/stratint_py.so
    python3 crates/py/python/smoke_test.py
"""

import json
import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import stratint_py as si  # noqa: E402


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b}"


def main():
    close(si.legendre(3, 0.5), -0.4375, 1e-15)
    nodes, weights = si.gauss_legendre(5)
    close(sum(w * x**8 for x, w in zip(nodes, weights)), 2 / 9, 1e-14)
    close(si.phi(0, 0.3, (0.0, 4.0)), 0.5, 1e-15)

    t = si.CoefficientTable([1.0, 1.0], [1, 1])
    close(t.get([0, 0]), 0.5, 1e-14)
    close(t.get([0, 1]), 1 / (2 * math.sqrt(3)), 1e-14)
    close(t.get([1, 0]), -1 / (2 * math.sqrt(3)), 1e-14)
    close(t.trace_sum(1), 0.5, 1e-14)
    assert t.shape == [2, 2] and len(t) == 4

    again = si.CoefficientTable.from_json(t.to_json())
    assert again.values == t.values

    # "m:1" is (t - s) with t the interval start, so -s on [0, 1]
    lin = si.CoefficientTable([lambda s: -s, "1"], [4, 4], quad_points=24)
    tok = si.CoefficientTable(["m:1", "1"], [4, 4], quad_points=24)
    assert max(abs(a - b) for a, b in zip(lin.values, tok.values)) < 1e-14

    pool = si.GaussianPool.sample(7, 2, 40)
    assert (pool.m, pool.p_max) == (2, 40)
    w = pool.zeta(1, 0)
    close(si.expand(si.CoefficientTable([1.0], [3]), pool, [1]), w, 1e-14)
    # Stratonovich same-component double integral is W²/2 for any order
    strat = si.expand(si.CoefficientTable([1.0, 1.0], [6, 6]), pool, [1, 1], kind="strat")
    close(strat, 0.5 * w * w, 1e-13)

    v = si.catalog_value("I00", pool, 10, indices=[1, 1])
    close(v, 0.5 * w * w, 1e-13)  # catalog forms are Stratonovich
    close(si.catalog_moment("I1"), 1 / 3, 1e-15)
    close(si.catalog_moment("I10", 30, trig=True), si.catalog_moment("I10", 30), 1e-2 / 3)

    report = si.mc_validate(5, [1, 2], n_paths=200, n_steps=2000, seed=3)
    assert set(report) >= {"config", "mean_sq_diff", "std_err"}
    close(report["mean_sq_diff"], 1 / 44, 4 * report["std_err"])

    conv = si.strong_order("milstein", [0.25, 0.125, 0.0625], n_paths=200, seed=1)
    assert 0.6 < conv["slope"] < 1.5, conv["slope"]

    for bad in (lambda: si.legendre(2, 1.5), lambda: si.catalog_moment("I9"), lambda: t.get([5, 0])):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print(json.dumps({"ok": True, "I10_q30_moment": si.catalog_moment("I10", 30)}))


if __name__ == "__main__":
    main()
