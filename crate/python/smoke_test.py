"""Smoke test for the pyqbilateral extension.

Build and install first, e.g.
    maturin build --release -m crates/py/Cargo.toml && pip install target/wheels/pyqbilateral-*.whl
then run  python python/smoke_test.py
"""

from fractions import Fraction

import pyqbilateral as qb


def poch_oracle(a, k, q):
    v = Fraction(1)
    for j in range(k):
        v *= 1 - a * q**j
    return v


def main():
    q = Fraction(1, 2)
    assert qb.poch("1/2", 2, q) == "3/8"
    assert qb.poch(Fraction(2, 3), 5, q) == str(poch_oracle(Fraction(2, 3), 5, q))
    assert qb.poch("1/2", -1, q) == "pole"
    value, err = qb.poch(0, "inf", q).split(" ± ")
    assert float(value) == 1.0 and float(err) == 0.0

    # q-binomial theorem: 1phi0(a; -; q, z) = (az; q)_inf / (z; q)_inf
    r = qb.eval_series("uni", ["3/5"], [], "1/3", q)
    assert not r["exact"] and float(r["err"]) <= 1e-30
    lhs = float(r["value"])
    num = float(qb.poch(Fraction(1, 5), "inf", q).split(" ± ")[0])
    den = float(qb.poch(Fraction(1, 3), "inf", q).split(" ± ")[0])
    assert abs(lhs - num / den) < 1e-12, (lhs, num / den)

    r = qb.eval_series("uni", ["4"], [], "1/3", q)
    assert r["exact"] and r["value"] == str(poch_oracle(Fraction(4, 3), 2, q))

    r = qb.eval_vwp("1/3", ["2", "3", "5", "7"], "1/50", q)
    assert float(r["err"]) <= 1e-30

    i3 = qb.Instance("I3", {"a": 2, "b": 3, "c": 7}, q, n=2)
    rep = i3.verify()
    assert rep.passed and rep.mode == "Exact", rep
    assert rep.to_dict()["verdict"] == "Pass"

    for seed in range(5):
        inst = qb.Instance.sample("I1", seed, Fraction(1, 10))
        assert inst.verify().passed, inst

    bad = qb.Instance("I1", {"a": 2, "b": "1/4", "z": 2}, Fraction(1, 10)).verify()
    assert bad.verdict == "Invalid" and bad.reason

    assert qb.check_display("F_qps_shifted", 3, {"a": "2/3", "b": "-5/7", "c": "3/11"}, q) == "0"

    t = qb.replay("1psi1", {"a": 2, "b": "1/4", "z": "1/2"}, Fraction(1, 10))
    assert t.verdict == "Pass" and len(t.steps) == 3, t
    t = qb.replay("6psi6", {"a": 4, "c": 2, "d": 2, "e": 2, "f": 2}, Fraction(1, 10))
    assert t.verdict == "Pass" and "terminal series = 1" in t.steps[-1]["description"], t

    try:
        qb.Instance("I1", {"a": 2}, q)
    except qb.QSeriesError:
        pass
    else:
        raise AssertionError("missing parameters accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
