"""Smoke test for the vfc_sim extension.

Build and install first:
    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/vfc_sim-*.whl
"""

import math
import sys

import vfc_sim


def main() -> int:
    assert set(vfc_sim.policies()) >= {"alo", "nro", "jcratoa"}

    sc = vfc_sim.Scenario.from_toml("n_tvs = 8\nn_fvs = 5\nhorizon_slots = 6\n")
    print(sc)
    m = sc.run("jcratoa", seed=3)
    for key in vfc_sim.METRICS:
        assert math.isfinite(m[key]), key
    assert 0.0 <= m["completion_ratio"] <= 1.0
    assert m == sc.run("jcratoa", seed=3), "runs must be reproducible"
    print("jcratoa:", {k: round(m[k], 4) for k in vfc_sim.METRICS})

    rows = sc.sweep("n_tvs", [4, 8], policies=["alo", "nso"], seeds=2)
    assert len(rows) == 2 * 2 * 2
    assert [r["seed"] for r in rows[:2]] == [sc.rng_seed, sc.rng_seed + 1]

    alloc, mult = vfc_sim.solve_sp1([(1e9, 0.5, 100.0), (2e9, 0.5, 100.0)], 3e10, 1e-28)
    assert all(f is not None for f in alloc) and sum(alloc) <= 3e10 * (1 + 1e-9)
    print("sp1:", alloc, mult)

    menu = vfc_sim.solve_contract([(0.5, 5e9, 4), (1.0, 5e9, 4), (1.5, 5e9, 4)], price=1e-9)
    fs = [f for f, _ in menu]
    assert fs == sorted(fs), "menu must be monotone in type"
    print("contract:", menu)

    assert vfc_sim.jain_fairness([1.0, 1.0, 1.0]) == 1.0

    try:
        vfc_sim.Scenario.from_toml("n_rsus = 0")
    except ValueError as e:
        assert "n_rsus" in str(e)
    else:
        raise AssertionError("invalid config accepted")

    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
