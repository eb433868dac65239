"""
Posture changes and the third snapshot
======================================

In the realistic recordings each posture change is captured at five
timestamps. The middle one is where the subject has fully moved, so it
carries the cleanest signal.
"""

from sitgrid.experiment import ExperimentSpec, run_experiment
from sitgrid.synth import GeneratorConfig, generate_realistic

ds = generate_realistic(GeneratorConfig.realistic())
print(len(ds), "records")

# left vs right at t3, a small forest to keep this quick
base = {"variant": "realistic", "recurrent": "t3", "importance": False,
        "classifiers": [{"family": "rf", "params": {"n_trees": 25}}]}

res = run_experiment(ExperimentSpec.from_dict({**base, "class_subset": ["left", "right"]}), ds)
print(res.classifiers[0].report.to_text())

# adding classes makes the problem harder
for extra in (["front"], ["front", "back"], ["front", "back", "still"]):
    spec = ExperimentSpec.from_dict({**base, "class_subset": ["left", "right", *extra]})
    acc = run_experiment(spec, ds).accuracy("rf")
    print(f"{2 + len(extra)} classes: {acc:.3f}")

# the seat center of mass separates left from right
rows = res.plot_rows
for label in ("left", "right"):
    cols = [c for l, _, c in rows if l == label]
    print(label, "mean CoM column", round(sum(cols) / len(cols), 2))
