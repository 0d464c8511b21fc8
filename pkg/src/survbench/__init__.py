"""survbench: a document-classification benchmarking toolkit with
prevalence-oriented evaluation.

Pipeline pieces: text preprocessing into sparse document-term matrices
(`textprep`), eight classifiers behind one fit/score/predict contract
(`models`), hyperparameter search (`tuning`), evaluation statistics
(`stats`), experiment orchestration over seeded splits (`harness`), and
rendering (`reporting`, `figures`). The `cli` module binds it all for
batch use.
"""

__version__ = "0.1.0"
