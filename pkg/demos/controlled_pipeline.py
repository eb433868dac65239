"""
Held postures, end to end
=========================

Synthesize the held-posture dataset, subtract each participant's still
baseline, build features and cross-validate two classifiers.
"""

import warnings

from sitgrid.classifiers import ClassifierSpec
from sitgrid.errors import ConvergenceWarning
from sitgrid.evaluation import cross_validate, kfold_split
from sitgrid.features import FeatureSpec, build_feature_matrix, feature_importance
from sitgrid.preprocess import OutlierPolicy, preprocess_pipeline
from sitgrid.synth import generate_controlled

# 11 participants x 6 postures x 30 snapshots
ds = generate_controlled()
print(len(ds), "records,", len(ds.participants()), "participants")

# outliers above mean + 4 sd are reset to the still mean, then the
# baseline is subtracted per participant
clean = preprocess_pipeline(ds, OutlierPolicy.sigma(4.0))

# seat features: raw sensors, CoM, quadrants and edges
fm = build_feature_matrix(clean, FeatureSpec(mats="seat"))
print(fm.X.shape[1], "features")

ranked = feature_importance(fm, {"n_trees": 30}, seed=0)
print("most informative:", [name for name, _ in ranked[:5]])

plan = kfold_split(len(fm), fm.labels, k=10, seed=0)
with warnings.catch_warnings():
    warnings.simplefilter("ignore", ConvergenceWarning)
    for family, params in (("gnb", {}), ("lr", {"max_iter": 500})):
        cv = cross_validate(fm, ClassifierSpec(family, params), plan)
        print(f"{family}: pooled accuracy {cv.pooled_accuracy:.3f}")

print(cv.report().to_text())
