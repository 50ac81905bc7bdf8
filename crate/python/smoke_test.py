"""Smoke test for the `rssl` extension module.

Build and install first, e.g.:
    cd crates/py && maturin build --release -o dist && pip install dist/rssl-*.whl
"""

import json
import sys

import rssl


def check(cond, msg):
    if not cond:
        print(f"FAIL: {msg}")
        sys.exit(1)
    print(f"ok   {msg}")


def main():
    inst, meta = rssl.gen_gap(4)
    check(inst.size == 12 and inst.n_hypotheses == 16, "gap(4) has 12 points and 16 rows")
    check(meta["family"] == "gap", "construction metadata is a dict")

    d = inst.dims()
    check((d["vc_u"], d["rs_u"]) == (0, 4), "gap(4) dimensions (vc_u, rs_u) = (0, 4)")
    check(inst.partial_vc() == d["vc_u"], "partial VC equals vc_u")

    again = rssl.Instance.from_json(inst.to_json())
    check(again.hypotheses == inst.hypotheses, "instance JSON round trip")

    s_l = inst.sample(30, 7)
    s_u = inst.sample_marginal(400, 8)
    check(s_u[:5] == [x for x, _ in inst.sample(5, 8)], "marginal sample drops labels of the same draws")

    pred = rssl.learn("grass", inst, s_l, unlabeled=s_u, seed=7)
    check(len(pred) == inst.size and pred.learner == "grass", "grass returns a full labeling")
    check(inst.robust_risk(pred.outputs) <= 0.1, "grass robust risk at most 0.1")
    check(json.loads(pred.to_json())["provenance"]["learner"] == "grass", "predictor JSON")

    sup = rssl.learn("robust-supervised", inst, s_l, seed=1)
    check(inst.robust_risk(sup.outputs) >= 0.0, "supervised learner runs")
    ks = rssl.learn("known-support", inst, s_l, support=sorted({x for x, _ in s_l}))
    check(ks.outputs in inst.hypotheses, "known-support output is a row of the class")

    tiny = rssl.Instance(
        hypotheses=[[0, 0], [1, 1]],
        perturbation=[[0, 1], [1]],
        distribution=[(0, 1, 1.0)],
    )
    check(tiny.oig_predict([(0, True)], 1) is True, "one-inclusion prediction on a tiny class")

    check(
        rssl.bernstein_bound(4, 64, 0.05, 0.0) < rssl.graepel_bound(4, 64, 0.05),
        "Bernstein-type bound below the square-root bound at m = 64",
    )

    fam = rssl.gen_improper(1)
    check(len(fam) == 3, "improper(1) has three members")

    runs = rssl.run_experiment(json.dumps({
        "construction": {"family": "gap", "n": 2},
        "learner": "grass", "epsilon": 0.2, "delta": 0.2, "trials": 20, "seed": 1,
        "search": {"doubling": {"axis": "labeled", "fixed": 100, "max": 16}},
    }))
    check(runs[0]["minimal"] is not None, "experiment config search finds a budget")

    try:
        rssl.learn("nope", inst, s_l)
    except ValueError:
        check(True, "unknown learner raises ValueError")
    else:
        check(False, "unknown learner raises ValueError")
    print("all smoke checks passed")


if __name__ == "__main__":
    main()
