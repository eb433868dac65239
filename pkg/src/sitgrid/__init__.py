"""Sitting-posture classification from smart-chair pressure mats.

Modules:

- ``sitgrid.data``        frames, records, the 8x8 grid projection, CSV I/O
- ``sitgrid.synth``       seeded synthetic datasets
- ``sitgrid.preprocess``  baselines, outlier replacement, normalization
- ``sitgrid.features``    center of mass, quadrant/edge sums, feature matrices
- ``sitgrid.classifiers`` RF, Gaussian NB, logistic regression, linear SVM, MLP
- ``sitgrid.evaluation``  K-fold plans, cross-validation, reports
- ``sitgrid.experiment``  declarative experiments and the experiment matrix
"""

__version__ = "0.1.0"
