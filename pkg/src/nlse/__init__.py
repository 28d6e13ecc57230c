"""Random subspace embeddings under entrywise nonlinear maps.

Modules: ``catalog`` (activation fixtures and their constants), ``pwl``
(piecewise-linear interpolants), ``sketch`` (Gaussian embeddings and
dimension formulas), ``subspace`` (random subspaces and samples),
``distortion`` (empirical distortion trials), ``regions`` (activation-pattern
counts), ``csrecover`` (compressed sensing with generative priors) and
``cli``.
"""
__version__ = "0.1.0"
