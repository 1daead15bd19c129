"""Smoke test for the banditlab Python extension.

Build and install first:
    pip install --no-build-isolation -e crates/banditlab-py
"""

import math
import pathlib
import tempfile

import banditlab

ROOT = pathlib.Path(__file__).resolve().parent.parent

basis = [[1.0 if i == j else 0.0 for j in range(3)] for i in range(3)]
inst = banditlab.Instance(basis, [-0.1, 0.1, 0.3])
assert inst.optimal_index == 0
assert all(abs(g - e) < 1e-12 for g, e in zip(inst.gaps, [0.0, 0.2, 0.4]))

# Orthonormal oracle: c = sum over suboptimal arms of 2/gap.
c, alloc = banditlab.instance_constant_c(inst)
assert abs(c - 15.0) / 15.0 < 0.02, c

beta = banditlab.beta_t(1024, 3, 0.1, 1.0 / 32768)
assert abs(beta - math.log(1024 * 3 / 0.1)) < 1e-12
op = banditlab.solve_op(1024.0, inst.gaps, basis, beta)
assert abs(sum(op["p"]) - 1.0) < 1e-9 and op["max_violation"] <= 1e-6

q = banditlab.exploration_design(basis, [0, 1, 2], 0.1)
assert abs(sum(q) - 1.0) < 1e-12

assert banditlab.catoni([0.5] * 10, 1.0) == 0.5
assert abs(banditlab.kl_bernoulli(0.0, 0.5) - 0.143841) < 1e-6

trace = banditlab.simulate("reolb", inst, 256, seed=7)
assert len(trace) == 256
again = banditlab.simulate("reolb", inst, 256, seed=7)
assert trace.to_csv() == again.to_csv()
assert banditlab.Trace.from_csv(trace.to_csv()).to_csv() == trace.to_csv()

adv = banditlab.simulate("botw", inst, 512, seed=3, env='kind = "adversarial"\ngenerator = "switch"')
assert adv.pseudo_regret_cum[-1] is None
assert set(adv.phase) <= {1, 2}

exp = banditlab.Experiment.load(ROOT / "configs" / "reolb_stochastic.toml")
with tempfile.TemporaryDirectory() as out:
    rows = exp.sweep(out, jobs=2)
    assert len(rows) == 4 and all(r["seed_count"] == 5 for r in rows)
    assert (pathlib.Path(out) / "summary.csv").exists()

try:
    banditlab.simulate("linucb", inst, 8, seed=1)
except ValueError:
    pass
else:
    raise AssertionError("unknown algorithm accepted")

print("banditlab smoke test: ok")
