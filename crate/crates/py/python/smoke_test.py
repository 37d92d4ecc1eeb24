"""Smoke test for the splitlab_py extension.

Build and install first, e.g. `maturin develop -m crates/py/Cargo.toml`.
"""
import json
import math

import splitlab_py as sl


def main():
    s = sl.silver_schedule(3)
    assert len(s) == 7 and s[3] == 2 + math.sqrt(2), s

    assert abs(sl.evaluate_bound("km-sublinear-l1:N=2") - 0.25) < 1e-15
    assert abs(sl.evaluate_bound("rsm-eb:gamma=1,beta=1,mu_f=1,lambda=1") - 3.0) < 1e-15

    inst = sl.Instance("two-subspace", {"N": "5"})
    trace = inst.run(gamma=1.0, iters=5)
    assert len(trace) == 5
    expected = 4**4 / 5**5
    assert abs(trace.residual_sq[-1] - expected) / expected < 1e-9

    report = inst.check("km-sublinear-l1", gamma=1.0, lam=1.0, iters=5)
    assert report["pass"], report

    csv = sl.run_experiment(json.dumps({
        "instance": "two-subspace", "params": {"N": "2"},
        "gamma": 1.0, "lambda": 1.0, "iters": 2, "w1": [1.0, 0.0],
    }))
    assert csv.splitlines()[0] == "iter,residual_sq,dist_sq,obj_gap,w_coords"

    certs = sl.certify("lemma51-base", trials=20, seed=1)
    assert all(c["pass"] for c in certs)

    found = sl.search("conj-composite", budget=50, seed=3, dim=3)
    print("conj-composite best ratio", found["best_ratio"], "violations", len(found["violations"]))

    try:
        sl.Instance("no-such-instance")
    except ValueError as e:
        print("error surfaced:", e)
    else:
        raise AssertionError("expected ValueError")

    print("smoke test ok")


if __name__ == "__main__":
    main()
